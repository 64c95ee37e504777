import json
import shutil
import subprocess
import wave
from pathlib import Path

import numpy as np
import pytest

from segtopics_encode.cli import main
from segtopics_encode.emb1 import read_emb1
from segtopics_encode.encode import AdapterJob, encode_speech, encode_text
from segtopics_encode.encoders import EncoderLoadError, TextHashEncoder
from segtopics_encode.windows import sample_spans


def _write_wav(path: Path, seconds: float, rate=16000, channels=1, seed=0):
    rng = np.random.default_rng(seed)
    n = int(round(seconds * rate))
    samples = (rng.normal(scale=3000, size=n * channels)).astype("<i2")
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(channels)
        wav.setsampwidth(2)
        wav.setframerate(rate)
        wav.writeframes(samples.tobytes())
    return path


@pytest.fixture
def transcript(tmp_path):
    p = tmp_path / "t.txt"
    p.write_text("\n".join(f"sentence number {i} about topic" for i in range(7)) + "\n")
    return p


class TestEncodeText:
    def test_seven_lines_gives_seven_rows(self, tmp_path, transcript):
        out = tmp_path / "t.emb"
        job = AdapterJob("text", str(transcript), "en", str(out))
        written = encode_text(job)
        with open(out, "rb") as f:
            rows = read_emb1(f)
        assert rows.shape == (7, 1024)
        assert written == 16 + 4 * 7 * 1024
        assert out.stat().st_size == written

    def test_identical_lines_cosine_one(self, tmp_path):
        src = tmp_path / "two.txt"
        src.write_text("the same sentence twice\nthe same sentence twice\n")
        out = tmp_path / "two.emb"
        encode_text(AdapterJob("text", str(src), "de", str(out)))
        with open(out, "rb") as f:
            rows = read_emb1(f)
        a, b = rows[0].astype(np.float64), rows[1].astype(np.float64)
        cos = float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
        assert abs(cos - 1.0) < 1e-6

    def test_language_changes_embedding(self):
        en = TextHashEncoder("en").encode_line("hello broadcast news")
        fr = TextHashEncoder("fr").encode_line("hello broadcast news")
        assert not np.allclose(en, fr)

    def test_empty_file_errors(self, tmp_path):
        src = tmp_path / "empty.txt"
        src.write_text("")
        with pytest.raises(ValueError, match="empty transcript"):
            encode_text(AdapterJob("text", str(src), "en", str(tmp_path / "e.emb")))

    def test_bad_language_tag(self, tmp_path, transcript):
        with pytest.raises(ValueError, match="language tag"):
            encode_text(AdapterJob("text", str(transcript), "ENGLISH", str(tmp_path / "x.emb")))

    def test_sonar_backend_reports_load_failure(self, tmp_path, transcript):
        job = AdapterJob("text", str(transcript), "en", str(tmp_path / "x.emb"), encoder="sonar")
        with pytest.raises(EncoderLoadError, match="encoder load failure"):
            encode_text(job)

    def test_loads_in_primary_engine(self, tmp_path, transcript):
        from segtopics.embedio import read_embeddings_file

        out = tmp_path / "t.emb"
        encode_text(AdapterJob("text", str(transcript), "en", str(out)))
        seq = read_embeddings_file(out)
        assert (seq.n, seq.d) == (7, 1024)
        assert np.isfinite(seq.data).all()


class TestEncodeSpeech:
    def test_95s_wav_gives_ten_blocks(self, tmp_path):
        wav = _write_wav(tmp_path / "a.wav", 95.0)
        out = tmp_path / "a.emb"
        encode_speech(AdapterJob("speech", str(wav), "en", str(out)))
        with open(out, "rb") as f:
            rows = read_emb1(f)
        assert rows.shape == (10, 1024)

    def test_10s_wav_single_block(self, tmp_path):
        wav = _write_wav(tmp_path / "b.wav", 10.0)
        out = tmp_path / "b.emb"
        encode_speech(AdapterJob("speech", str(wav), "en", str(out)))
        with open(out, "rb") as f:
            assert read_emb1(f).shape == (1, 1024)

    def test_short_tail_dropped(self, tmp_path):
        wav = _write_wav(tmp_path / "c.wav", 91.0)
        out = tmp_path / "c.emb"
        encode_speech(AdapterJob("speech", str(wav), "en", str(out)))
        with open(out, "rb") as f:
            assert read_emb1(f).shape[0] == 9

    def test_stereo_rejected(self, tmp_path):
        wav = _write_wav(tmp_path / "s.wav", 12.0, channels=2)
        with pytest.raises(ValueError, match="single-channel"):
            encode_speech(AdapterJob("speech", str(wav), "en", str(tmp_path / "s.emb")))

    def test_wrong_rate_rejected(self, tmp_path):
        wav = _write_wav(tmp_path / "r.wav", 12.0, rate=8000)
        with pytest.raises(ValueError, match="16000 Hz"):
            encode_speech(AdapterJob("speech", str(wav), "en", str(tmp_path / "r.emb")))

    def test_too_short_rejected(self, tmp_path):
        wav = _write_wav(tmp_path / "t.wav", 1.0)
        with pytest.raises(ValueError, match="too short"):
            encode_speech(AdapterJob("speech", str(wav), "en", str(tmp_path / "t.emb")))

    def test_deterministic(self, tmp_path):
        wav = _write_wav(tmp_path / "d.wav", 25.0)
        outs = []
        for name in ("d1.emb", "d2.emb"):
            out = tmp_path / name
            encode_speech(AdapterJob("speech", str(wav), "en", str(out)))
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestWindowRuleMatchesEngine:
    @pytest.mark.parametrize("seconds,expected", [(95.0, 10), (10.0, 1), (91.0, 9), (102.0, 11)])
    def test_span_counts(self, seconds, expected):
        assert len(sample_spans(int(seconds * 16000), 16000)) == expected

    def test_against_engine_prepare(self, tmp_path):
        # the engine's external interface is the source of truth for block
        # counts: run `segtopics prepare` on a manifest of the same duration
        segtopics = shutil.which("segtopics")
        if segtopics is None:
            pytest.skip("segtopics CLI not installed")
        duration = 95.0
        manifest = tmp_path / "m.jsonl"
        rows = [
            {
                "id": f"rec-{i}",
                "language": "en",
                "date": f"2024-01-0{i + 1}",
                "duration_sec": duration,
                "audio_path": None,
                "chapters": [{"start_sec": 0.0, "title": ""}],
            }
            for i in range(3)
        ]
        manifest.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        out_dir = tmp_path / "corpus"
        proc = subprocess.run(
            [segtopics, "prepare", "--manifest", str(manifest), "--out", str(out_dir)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        labels = json.loads((out_dir / "labels" / "rec-0.json").read_text())
        wav = _write_wav(tmp_path / "x.wav", duration)
        out = tmp_path / "x.emb"
        encode_speech(AdapterJob("speech", str(wav), "en", str(out)))
        with open(out, "rb") as f:
            assert read_emb1(f).shape[0] == labels["n_units"]


class TestCli:
    def test_text_mode(self, tmp_path, transcript, capsys):
        out = tmp_path / "o.emb"
        code = main(["--mode", "text", "--lang", "en", "--in", str(transcript), "--out", str(out)])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["bytes"] == out.stat().st_size

    def test_speech_mode(self, tmp_path, capsys):
        # 33 s = 3 full windows + a 3 s tail, which the >= 2 s rule keeps
        wav = _write_wav(tmp_path / "w.wav", 33.0)
        out = tmp_path / "w.emb"
        code = main(["--mode", "speech", "--lang", "de", "--in", str(wav), "--out", str(out)])
        assert code == 0
        with open(out, "rb") as f:
            assert read_emb1(f).shape == (4, 1024)

    def test_missing_input(self, tmp_path, capsys):
        code = main(["--mode", "text", "--lang", "en", "--in", str(tmp_path / "nope.txt"), "--out", str(tmp_path / "o.emb")])
        assert code == 1
        assert "nope.txt" in capsys.readouterr().err

    def test_stereo_exit_code(self, tmp_path, capsys):
        wav = _write_wav(tmp_path / "s.wav", 12.0, channels=2)
        code = main(["--mode", "speech", "--lang", "en", "--in", str(wav), "--out", str(tmp_path / "s.emb")])
        assert code == 1
        assert "single-channel" in capsys.readouterr().err

    def test_help_lists_flags(self, capsys):
        code = main(["--help"])
        assert code == 0
        out = capsys.readouterr().out
        for flag in ("--mode", "--lang", "--in", "--out", "--window-sec"):
            assert flag in out
