"""segtopics-encode: transcript or WAV in, EMB1 embedding file out."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .encode import AdapterJob, encode_speech, encode_text
from .encoders import EncoderLoadError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="segtopics-encode",
        description="Embed a transcript (one row per line) or a 16 kHz mono WAV "
        "(one row per block window) into an EMB1 file.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--mode", required=True, choices=["text", "speech"], help="input kind")
    parser.add_argument("--lang", required=True, help="ISO 639 language tag")
    parser.add_argument("--in", dest="input", required=True, help="input file")
    parser.add_argument("--out", required=True, help="output .emb path")
    parser.add_argument("--window-sec", type=float, default=10.0, help="speech block window length")
    parser.add_argument(
        "--encoder",
        default="auto",
        help="backend: auto (hash for text, spectral for speech) or sonar",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("SEGTOPICS_LOG", "error").strip().lower(), logging.ERROR
    )
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 1
    if not Path(args.input).is_file():
        sys.stderr.write(f"error: input file not found: {args.input}\n")
        return 1
    job = AdapterJob(
        mode=args.mode,
        input_path=args.input,
        language=args.lang,
        output_path=args.out,
        window_sec=args.window_sec,
        encoder=args.encoder,
    )
    try:
        written = encode_text(job) if args.mode == "text" else encode_speech(job)
    except (ValueError, EncoderLoadError, OSError, EOFError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 1
    except Exception as e:
        sys.stderr.write(f"runtime failure: {e.__class__.__name__}: {e}\n")
        return 2
    sys.stdout.write(f'{{"out": "{args.out}", "bytes": {written}}}\n')
    return 0


if __name__ == "__main__":
    sys.exit(main())
