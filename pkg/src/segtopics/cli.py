"""segtopics command line: one verb per pipeline stage.

Subcommands: prepare (manifests -> corpus index + labels), tile (TextTiling a
transcript), train, segment (infer on an EMB1 file), eval (label or timed
segmentation files -> metric report), synth (oracle corpora), sweep
(inference-threshold grid search). All primary outputs are written atomically
and are byte-identical across runs for a fixed --seed.

Exit codes: 0 success, 1 validation error, 2 runtime failure.
`SEGTOPICS_LOG` in {error, info, debug} controls stderr logging.
"""

from __future__ import annotations

import argparse
import datetime
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .corpus import (
    ManifestError,
    RecordingManifest,
    Segmentation,
    derive_labels,
    make_blocks,
    parse_manifest,
    parse_segmentation,
    segmentation_to_json,
    split_corpus,
)
from .embedio import (
    BlockEmbeddingSequence,
    EmbeddingFormatError,
    read_embeddings_file,
    write_embeddings,
)
from .metrics import TimedSegmentation, evaluate, purity_coverage, spcf
from .seghead import (
    HeadConfig,
    ModelFormatError,
    TrainConfig,
    infer,
    load_model_file,
    save_model,
    sweep_threshold,
    train,
)
from .synth import SynthSpec, synth_embeddings, synth_text
from .texttiling import texttile

log = logging.getLogger("segtopics")


class CliError(Exception):
    """Validation problem; reported as a one-line message with exit code 1."""


# ---------------------------------------------------------------------------
# small IO helpers

def _atomic_write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_text(path: Path, text: str) -> None:
    _atomic_write_bytes(path, text.encode("utf-8"))


def _dump(doc) -> str:
    return json.dumps(doc, ensure_ascii=False)


def _emit(doc, out: str | None) -> None:
    text = _dump(doc) + "\n"
    if out:
        _atomic_write_text(Path(out), text)
    else:
        sys.stdout.write(text)


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"{what} not found: {path}")
    return p


def _load_manifests(path: str) -> list[RecordingManifest]:
    p = Path(path)
    manifests: list[RecordingManifest] = []
    if p.is_dir():
        files = sorted(p.glob("*.json"))
        if not files:
            raise CliError(f"no *.json manifests in directory: {path}")
        for f in files:
            manifests.append(parse_manifest(f.read_text(encoding="utf-8")))
        return manifests
    if not p.is_file():
        raise CliError(f"manifest path not found: {path}")
    text = p.read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{") and "\n{" not in text:
        return [parse_manifest(text)]
    for i, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        try:
            manifests.append(parse_manifest(line))
        except ManifestError as e:
            raise ManifestError(f"{p.name}:{i + 1}: {e}") from None
    if not manifests:
        raise CliError(f"no manifests found in {path}")
    return manifests


def _read_corpus_index(path: str) -> list[dict]:
    p = _require_file(path, "corpus index")
    rows = []
    for line in p.read_text(encoding="utf-8").splitlines():
        if line.strip():
            rows.append(json.loads(line))
    if not rows:
        raise CliError(f"empty corpus index: {path}")
    return rows


def _load_examples(
    rows: list[dict], emb_dir: str, labels_dir: str
) -> list[tuple[BlockEmbeddingSequence, Segmentation]]:
    examples = []
    for row in rows:
        rec_id = row["id"]
        emb_path = Path(emb_dir) / f"{rec_id}.emb"
        label_path = Path(labels_dir) / f"{rec_id}.json"
        if not emb_path.is_file():
            raise CliError(f"embedding file not found: {emb_path}")
        if not label_path.is_file():
            raise CliError(f"label file not found: {label_path}")
        z = read_embeddings_file(emb_path)
        seg = parse_segmentation(label_path.read_text(encoding="utf-8"))
        examples.append((z, seg))
    return examples


# ---------------------------------------------------------------------------
# prepare

def _prepare_outputs(
    manifests: list[RecordingManifest],
    out_dir: Path,
    window_sec: float,
    min_tail_sec: float,
    ratios: tuple[float, float, float],
) -> dict:
    split = split_corpus(manifests, ratios=ratios)
    split_of = {rid: "train" for rid in split.train}
    split_of.update({rid: "dev" for rid in split.dev})
    split_of.update({rid: "test" for rid in split.test})

    ordered = sorted(manifests, key=lambda m: (m.date, m.id))
    index_lines = []
    for m in ordered:
        timeline = make_blocks(m.duration_sec, window_sec=window_sec, min_tail_sec=min_tail_sec)
        labels = derive_labels(timeline, m)
        _atomic_write_text(
            out_dir / "labels" / f"{m.id}.json",
            _dump(segmentation_to_json(labels)) + "\n",
        )
        index_lines.append(
            _dump(
                {
                    "id": m.id,
                    "language": m.language,
                    "date": m.date,
                    "duration_sec": m.duration_sec,
                    "audio_path": m.audio_path,
                    "n_blocks": timeline.n_blocks,
                    "window_sec": window_sec,
                    "split": split_of[m.id],
                }
            )
        )
    _atomic_write_text(out_dir / "corpus.jsonl", "\n".join(index_lines) + "\n")
    return {
        "recordings": len(ordered),
        "train": len(split.train),
        "dev": len(split.dev),
        "test": len(split.test),
        "out": str(out_dir),
    }


def _cmd_prepare(args) -> int:
    manifests = _load_manifests(args.manifest)
    ratios = tuple(args.ratios)
    summary = _prepare_outputs(
        manifests, Path(args.out), args.window_sec, args.min_tail_sec, ratios
    )
    sys.stdout.write(_dump(summary) + "\n")
    return 0


# ---------------------------------------------------------------------------
# tile

def _cmd_tile(args) -> int:
    p = _require_file(args.input, "transcript")
    seg = texttile(
        p.read_text(encoding="utf-8"),
        w=args.w,
        blocksize=args.blocksize,
        smooth_width=args.smooth_width,
        smooth_rounds=args.smooth_rounds,
    )
    _emit(segmentation_to_json(seg), args.out)
    return 0


# ---------------------------------------------------------------------------
# train

def _cmd_train(args) -> int:
    rows = _read_corpus_index(args.manifest)
    labels_dir = args.labels_dir or str(Path(args.manifest).parent / "labels")
    train_rows = [r for r in rows if r.get("split") == "train"]
    dev_rows = [r for r in rows if r.get("split") == "dev"]
    if not train_rows or not dev_rows:
        raise CliError(
            f"corpus index needs train and dev rows, got {len(train_rows)} train / "
            f"{len(dev_rows)} dev"
        )
    train_set = _load_examples(train_rows, args.emb_dir, labels_dir)
    dev_set = _load_examples(dev_rows, args.emb_dir, labels_dir)

    head = HeadConfig(
        d=train_set[0][0].d,
        h=args.hidden,
        layers=args.layers,
        heads=args.heads,
        dropout=args.dropout,
    )
    cfg = TrainConfig(
        lr0=args.lr,
        max_epochs=args.epochs,
        seed=args.seed,
        inference_threshold=args.threshold,
    )
    log.info("training on %d recordings (%d dev)", len(train_set), len(dev_set))
    model, history = train(train_set, dev_set, cfg, head=head)

    buf = io.BytesIO()
    save_model(model, buf)
    _atomic_write_bytes(Path(args.out), buf.getvalue())
    log_path = Path(args.log_file) if args.log_file else Path(args.out + ".log.jsonl")
    _atomic_write_text(log_path, "".join(_dump(r) + "\n" for r in history))

    best = min(history, key=lambda r: r["dev_pk"])
    sys.stdout.write(
        _dump(
            {
                "model": args.out,
                "log": str(log_path),
                "epochs_run": len(history),
                "best_epoch": best["epoch"],
                "best_dev_pk": best["dev_pk"],
            }
        )
        + "\n"
    )
    return 0


# ---------------------------------------------------------------------------
# segment

def _cmd_segment(args) -> int:
    model = load_model_file(_require_file(args.model, "model file"))
    z = read_embeddings_file(_require_file(args.emb, "embedding file"))
    seg, scores = infer(z, model, threshold=args.threshold)
    doc = segmentation_to_json(seg)
    doc["scores"] = [float(v) for v in scores.values]
    _emit(doc, args.out)
    return 0


# ---------------------------------------------------------------------------
# eval

def _read_seg_file(path: Path):
    doc = json.loads(path.read_text(encoding="utf-8"))
    if isinstance(doc, dict) and "segments" in doc:
        return TimedSegmentation(
            segments=tuple((float(s), float(e)) for s, e in doc["segments"])
        )
    return parse_segmentation(json.dumps(doc))


def _eval_pair(ref_path: Path, hyp_path: Path, k: int | None) -> dict:
    ref = _read_seg_file(ref_path)
    hyp = _read_seg_file(hyp_path)
    if isinstance(ref, TimedSegmentation) != isinstance(hyp, TimedSegmentation):
        raise CliError(
            f"cannot mix timed and label segmentations: {ref_path} vs {hyp_path}"
        )
    if isinstance(ref, TimedSegmentation):
        p, c = purity_coverage(ref, hyp)
        return {"purity": p, "coverage": c, "spcf": spcf(p, c)}
    return evaluate(ref, hyp, k=k).to_json()


def _cmd_eval(args) -> int:
    ref = Path(args.ref)
    hyp = Path(args.hyp)
    if ref.is_file() and hyp.is_file():
        _emit(_eval_pair(ref, hyp, args.k), args.out)
        return 0
    if not (ref.is_dir() and hyp.is_dir()):
        raise CliError(f"ref and hyp must both be files or both directories: {args.ref} / {args.hyp}")
    ref_ids = {p.stem for p in ref.glob("*.json")}
    hyp_ids = {p.stem for p in hyp.glob("*.json")}
    common = sorted(ref_ids & hyp_ids)
    if not common:
        raise CliError(f"no matching *.json stems between {args.ref} and {args.hyp}")
    rows = []
    for rec_id in common:
        row = {"id": rec_id}
        row.update(_eval_pair(ref / f"{rec_id}.json", hyp / f"{rec_id}.json", args.k))
        rows.append(row)
    if args.out:
        _atomic_write_text(Path(args.out), "".join(_dump(r) + "\n" for r in rows))
    aggregate = {"recordings": len(rows)}
    for key in rows[0]:
        if key == "id":
            continue
        aggregate[key] = float(np.mean([r[key] for r in rows]))
    sys.stdout.write(_dump(aggregate) + "\n")
    return 0


# ---------------------------------------------------------------------------
# synth

_PRESETS = {
    "head-oracle": {
        "n_recordings": 250,
        "blocks": (30, 70),
        "topics": (2, 5),
        "d": 32,
        "separation": 4.0,
        "sigma": 1.0,
        "ratios": (0.80, 0.16, 0.04),
    },
    "head-oracle-small": {
        "n_recordings": 15,
        "blocks": (8, 16),
        "topics": (2, 3),
        "d": 16,
        "separation": 4.0,
        "sigma": 1.0,
        "ratios": (0.60, 0.20, 0.20),
    },
}


def _cmd_synth(args) -> int:
    out_dir = Path(args.out)
    if args.preset == "text-oracle":
        rng = np.random.default_rng(args.seed)
        index_lines = []
        for i in range(args.n_texts):
            text, truth = synth_text(
                seed=int(rng.integers(2**63)),
                tokens_per_topic=args.tokens_per_topic,
                n_topics=args.n_topics,
                vocab_size_per_topic=args.vocab_size,
            )
            rec_id = f"text-{i:04d}"
            _atomic_write_text(out_dir / "texts" / f"{rec_id}.txt", text + "\n")
            _atomic_write_text(
                out_dir / "labels" / f"{rec_id}.json",
                _dump(segmentation_to_json(truth)) + "\n",
            )
            index_lines.append(_dump({"id": rec_id, "n_units": truth.n_units}))
        _atomic_write_text(out_dir / "texts.jsonl", "\n".join(index_lines) + "\n")
        sys.stdout.write(_dump({"texts": args.n_texts, "out": str(out_dir)}) + "\n")
        return 0

    preset = _PRESETS[args.preset]
    spec = SynthSpec(
        seed=args.seed,
        n_recordings=args.n_recordings or preset["n_recordings"],
        blocks_per_recording=tuple(args.blocks) if args.blocks else preset["blocks"],
        topics_per_recording=tuple(args.topics) if args.topics else preset["topics"],
        d=args.d or preset["d"],
        cluster_separation=args.separation or preset["separation"],
        noise_sigma=args.sigma or preset["sigma"],
        window_sec=args.window_sec,
    )
    records = synth_embeddings(spec)
    start_date = datetime.date(2024, 1, 1)
    manifests = []
    manifest_lines = []
    for i, (z, seg, timeline) in enumerate(records):
        rec_id = f"synth-{i:04d}"
        chapter_starts = [0.0] + [g * spec.window_sec for g in sorted(seg.boundaries)]
        doc = {
            "id": rec_id,
            "language": "xx",
            "date": (start_date + datetime.timedelta(days=i)).isoformat(),
            "duration_sec": timeline.end_sec,
            "audio_path": None,
            "chapters": [
                {"start_sec": s, "title": f"topic {j}"}
                for j, s in enumerate(chapter_starts)
            ],
        }
        manifests.append(parse_manifest(_dump(doc)))
        manifest_lines.append(_dump(doc))

        buf = io.BytesIO()
        write_embeddings(z, buf)
        _atomic_write_bytes(out_dir / "emb" / f"{rec_id}.emb", buf.getvalue())

    _atomic_write_text(out_dir / "manifests.jsonl", "\n".join(manifest_lines) + "\n")
    summary = _prepare_outputs(
        manifests, out_dir, spec.window_sec, min_tail_sec=2.0, ratios=preset["ratios"]
    )
    summary["preset"] = args.preset
    sys.stdout.write(_dump(summary) + "\n")
    return 0


# ---------------------------------------------------------------------------
# sweep

def _cmd_sweep(args) -> int:
    rows = _read_corpus_index(args.manifest)
    labels_dir = args.labels_dir or str(Path(args.manifest).parent / "labels")
    dev_rows = [r for r in rows if r.get("split") == "dev"]
    if not dev_rows:
        raise CliError("corpus index has no dev rows")
    dev_set = _load_examples(dev_rows, args.emb_dir, labels_dir)
    model = load_model_file(_require_file(args.model, "model file"))
    best = sweep_threshold(dev_set, model)
    _emit({"threshold": best, "grid_size": 19, "dev_recordings": len(dev_set)}, args.out)
    return 0


# ---------------------------------------------------------------------------
# parser / dispatch

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="segtopics",
        description="Topic segmentation engine and evaluation harness.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def cmd(name, help_text):
        p = sub.add_parser(
            name, help=help_text, formatter_class=argparse.ArgumentDefaultsHelpFormatter
        )
        return p

    p = cmd("prepare", "derive block labels and chronological splits from manifests")
    p.add_argument("--manifest", required=True, help="manifest JSON-lines file or directory of *.json")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--window-sec", type=float, default=10.0, help="block window length in seconds")
    p.add_argument("--min-tail-sec", type=float, default=2.0, help="minimum kept tail window")
    p.add_argument("--ratios", type=float, nargs=3, default=[0.90, 0.05, 0.05],
                   metavar=("TRAIN", "DEV", "TEST"), help="split ratios")
    p.set_defaults(func=_cmd_prepare)

    p = cmd("tile", "TextTiling baseline over a transcript")
    p.add_argument("--input", required=True, help="UTF-8 transcript file")
    p.add_argument("--out", default=None, help="output segmentation JSON (default stdout)")
    p.add_argument("--w", type=int, default=20, help="tokens per token sequence")
    p.add_argument("--blocksize", type=int, default=10, help="token sequences per comparison block")
    p.add_argument("--smooth-width", type=int, default=2, help="smoothing neighbors per side")
    p.add_argument("--smooth-rounds", type=int, default=1, help="smoothing passes")
    p.set_defaults(func=_cmd_tile)

    p = cmd("train", "train the segmentation head on EMB1 recordings")
    p.add_argument("--manifest", required=True, help="corpus.jsonl from prepare/synth")
    p.add_argument("--emb-dir", required=True, help="directory of <id>.emb files")
    p.add_argument("--labels-dir", default=None, help="directory of <id>.json labels (default: labels/ next to the corpus index)")
    p.add_argument("--out", required=True, help="output model file (SGH1)")
    p.add_argument("--log-file", default=None, help="training log JSONL (default: <out>.log.jsonl)")
    p.add_argument("--epochs", type=int, default=30, help="maximum epochs")
    p.add_argument("--lr", type=float, default=0.001, help="initial learning rate")
    p.add_argument("--seed", type=int, default=0, help="training seed")
    p.add_argument("--threshold", type=float, default=0.5, help="inference threshold for dev Pk")
    p.add_argument("--hidden", type=int, default=256, help="model width")
    p.add_argument("--layers", type=int, default=2, help="encoder layers")
    p.add_argument("--heads", type=int, default=4, help="attention heads")
    p.add_argument("--dropout", type=float, default=0.1, help="dropout rate")
    p.set_defaults(func=_cmd_train)

    p = cmd("segment", "infer boundaries for one EMB1 file")
    p.add_argument("--model", required=True, help="SGH1 model file")
    p.add_argument("--emb", required=True, help="EMB1 embedding file")
    p.add_argument("--threshold", type=float, default=0.5, help="boundary probability threshold")
    p.add_argument("--out", default=None, help="output segmentation JSON (default stdout)")
    p.set_defaults(func=_cmd_segment)

    p = cmd("eval", "score hypothesis segmentations against references")
    p.add_argument("--ref", required=True, help="reference file or directory")
    p.add_argument("--hyp", required=True, help="hypothesis file or directory")
    p.add_argument("--k", type=int, default=None, help="window size override (default: derived from each reference)")
    p.add_argument("--out", default=None, help="report JSON / per-recording JSONL destination")
    p.set_defaults(func=_cmd_eval)

    p = cmd("synth", "generate planted-boundary oracle corpora")
    p.add_argument("--preset", choices=["head-oracle", "head-oracle-small", "text-oracle"],
                   default="head-oracle", help="corpus preset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=1234, help="generator seed")
    p.add_argument("--n-recordings", type=int, default=None, help="override preset recording count")
    p.add_argument("--d", type=int, default=None, help="override embedding width")
    p.add_argument("--separation", type=float, default=None, help="override centroid separation")
    p.add_argument("--sigma", type=float, default=None, help="override noise sigma")
    p.add_argument("--blocks", type=int, nargs=2, default=None, metavar=("LO", "HI"), help="override blocks-per-recording range")
    p.add_argument("--topics", type=int, nargs=2, default=None, metavar=("LO", "HI"), help="override topics-per-recording range")
    p.add_argument("--window-sec", type=float, default=10.0, help="block window length in seconds")
    p.add_argument("--n-texts", type=int, default=100, help="text-oracle: number of texts")
    p.add_argument("--n-topics", type=int, default=2, help="text-oracle: topics per text")
    p.add_argument("--tokens-per-topic", type=int, default=400, help="text-oracle: tokens per topic")
    p.add_argument("--vocab-size", type=int, default=50, help="text-oracle: words per topic vocabulary")
    p.set_defaults(func=_cmd_synth)

    p = cmd("sweep", "choose the inference threshold on the dev split")
    p.add_argument("--model", required=True, help="SGH1 model file")
    p.add_argument("--manifest", required=True, help="corpus.jsonl from prepare/synth")
    p.add_argument("--emb-dir", required=True, help="directory of <id>.emb files")
    p.add_argument("--labels-dir", default=None, help="directory of <id>.json labels (default: labels/ next to the corpus index)")
    p.add_argument("--out", default=None, help="output JSON (default stdout)")
    p.set_defaults(func=_cmd_sweep)

    return parser


def _setup_logging() -> None:
    level_name = os.environ.get("SEGTOPICS_LOG", "error").strip().lower()
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        level_name, logging.ERROR
    )
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 1
    if not getattr(args, "func", None):
        parser.print_help()
        return 1
    try:
        return args.func(args) or 0
    except (
        CliError,
        ManifestError,
        EmbeddingFormatError,
        ModelFormatError,
        FileNotFoundError,
        NotADirectoryError,
        json.JSONDecodeError,
        ValueError,
    ) as e:
        sys.stderr.write(f"error: {e}\n")
        return 1
    except Exception as e:  # anything else is a runtime failure
        sys.stderr.write(f"runtime failure: {e.__class__.__name__}: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
