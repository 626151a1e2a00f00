import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from atcsrd.acoustics import write_wav
from atcsrd.cli import main
from atcsrd.ctc import PosteriorMatrix, Vocabulary, save_posteriors
from atcsrd.synthetic import bundled_manifest
from atcsrd.transcript import read_manifest, read_transcripts
from gen import mix_at_snr, modulated_laplacian


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_chunk(tmp_path, capsys):
    out, text = tmp_path / "c.jsonl", tmp_path / "c.txt"
    assert main(["chunk", "--manifest", str(bundled_manifest("alpha")), "--out", str(out), "--text", str(text), "--json"]) == 0
    summary = json.loads(capsys.readouterr().out)
    m = read_manifest(out)
    assert summary["entries"] == len(m) == len(read_transcripts(text))
    assert all(2 <= e.span <= 19 for e in m)


def test_eval_text_json_and_record(tmp_path, capsys):
    ref = _write(tmp_path / "ref.txt", "ATCOTAG w1 w2 PILOTTAG w3\nPILOTTAG a b\n")
    hyp = _write(tmp_path / "hyp.txt", "ATCOTAG w1 w2 ATCOTAG w3\n\n")
    assert main(["eval", "--ref", str(ref), "--hyp", str(hyp)]) == 0
    assert "WDER" in capsys.readouterr().out
    rec = tmp_path / "r.json"
    assert main(["eval", "--ref", str(ref), "--hyp", str(hyp), "--json", "--macro", "--record", str(rec),
                 "--train-dataset", "a", "--test-dataset", "b", "--architecture", "Joint", "--asr-model", "xlsr"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["wder"]["role_errors"] == 3 and d["wder"]["attributed_words"] == 5
    assert d["per"]["t_p"] == 3 and d["per"]["t_c"] == 2
    assert "macro" in d
    assert json.loads(rec.read_text())["train_dataset"] == "a"


def test_eval_errors(tmp_path, capsys):
    ref = _write(tmp_path / "ref.txt", "ATCOTAG a\nPILOTTAG b\n")
    hyp = _write(tmp_path / "hyp.txt", "ATCOTAG a\n")
    assert main(["eval", "--ref", str(ref), "--hyp", str(hyp)]) == 2
    assert "error" in capsys.readouterr().err
    assert main(["eval", "--ref", str(ref), "--hyp", str(ref), "--record", str(tmp_path / "r.json")]) == 2
    bad = _write(tmp_path / "bad.txt", "roger ATCOTAG a\n")
    assert main(["eval", "--ref", str(bad), "--hyp", str(ref)]) == 2
    assert main(["eval", "--ref", str(ref), "--hyp", str(tmp_path / "missing.txt")]) == 2


def test_custom_scoring_flags(tmp_path, capsys):
    ref = _write(tmp_path / "ref.txt", "ATCOTAG a b c\n")
    assert main(["eval", "--ref", str(ref), "--hyp", str(ref), "--json", "--match", "2", "--gap", "-3"]) == 0
    assert json.loads(capsys.readouterr().out)["wder"]["wder"] == 0
    assert main(["eval", "--ref", str(ref), "--hyp", str(ref), "--match", "-1"]) == 2
    assert "mismatch" in capsys.readouterr().err


def test_lm(tmp_path, capsys):
    train = _write(tmp_path / "train.txt", "a\n")
    test = _write(tmp_path / "test.txt", "b\n")
    model = tmp_path / "lm.json"
    assert main(["lm", "--train", str(train), "--test", str(test), "--json", "--save-model", str(model)]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["perplexity"] == pytest.approx(1 / np.sqrt(0.75**3 * 0.25 * 0.375), abs=1e-6)
    assert d["oov_rate"] == 1.0
    assert json.loads(model.read_text())["format"] == "atcsrd-kn-windows"
    assert main(["lm", "--train", str(train), "--test", str(train)]) == 0
    assert "perplexity" in capsys.readouterr().out


def test_snr(tmp_path, capsys):
    rng = np.random.default_rng(0)
    x = mix_at_snr(modulated_laplacian(rng, 300), rng.normal(0, 1, 300 * 320), 10)
    write_wav(tmp_path / "a.wav", 0.5 * x / np.abs(x).max(), 16000)
    m = _write(tmp_path / "m.jsonl", json.dumps(
        {"id": "a", "audio_path": "a.wav", "turns": [{"role": "ATCO", "words": "w", "start_s": 0, "end_s": 6}]}) + "\n")
    assert main(["snr", "--manifest", str(m), "--json"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["entries"]["a"] == pytest.approx(10, abs=3)
    assert main(["snr", "--manifest", str(m)]) == 0
    assert capsys.readouterr().out.startswith("a\t")


def test_centroids_and_classify(tmp_path, capsys):
    rng = np.random.default_rng(0)
    lines = []
    for k in range(60):
        lines.append({"id": f"a{k}", "label": "ATCO", "vector": (np.array([5.0, 0, 0]) + rng.normal(0, 1, 3)).tolist()})
        lines.append({"id": f"p{k}", "label": "PILOT", "vector": (np.array([0, 5.0, 0]) + rng.normal(0, 1, 3)).tolist()})
    emb = _write(tmp_path / "e.jsonl", "".join(json.dumps(d) + "\n" for d in lines))
    cen = tmp_path / "c.json"
    assert main(["fit-centroids", "--input", str(emb), "--out", str(cen), "--seed", "3"]) == 0
    probe = _write(tmp_path / "q.jsonl", json.dumps({"id": "q", "vector": [0.1, 3, 0]}) + "\n")
    assert main(["classify-role", "--centroids", str(cen), "--input", str(probe), "--json"]) == 0
    (row,) = json.loads(capsys.readouterr().out)
    assert row["role"] == "PILOT" and row["cos_pilot"] > row["cos_atco"]
    assert main(["fit-centroids", "--input", str(probe), "--out", str(cen)]) == 2


def test_decode(tmp_path, capsys):
    v = Vocabulary.build(["a", "b"])
    refs = _write(tmp_path / "refs.txt", "ATCOTAG a PILOTTAG b\nPILOTTAG b b\n")
    paths = []
    for i, toks in enumerate([["ATCOTAG", "a", "PILOTTAG", "b"], ["PILOTTAG", "b", "b"]]):
        seq = []
        for t in toks:
            seq += [v.index(t), 0]
        logits = np.full((len(seq), len(v)), -4.0)
        logits[np.arange(len(seq)), seq] = 4.0
        p = PosteriorMatrix.from_logits(logits, v)
        path = tmp_path / f"p{i}.{'bin' if i else 'json'}"
        save_posteriors(path, p, binary=bool(i))
        paths.append(str(path))
    _write(tmp_path / "v.json", json.dumps(v.to_json()))
    # the JSON file carries its own vocabulary; the binary one needs --vocab
    assert main(["decode", "--posteriors", paths[0], "--refs", str(tmp_path / "one.txt")]) == 2
    capsys.readouterr()
    _write(tmp_path / "one.txt", "ATCOTAG a PILOTTAG b\n")
    assert main(["decode", "--posteriors", paths[0], "--refs", str(tmp_path / "one.txt")]) == 0
    assert json.loads(capsys.readouterr().out)["wder"]["wder"] == 0
    hyp = tmp_path / "hyp.txt"
    assert main(["decode", "--posteriors", *paths, "--refs", str(refs), "--vocab", str(tmp_path / "v.json"),
                 "--decoder", "beam", "--beam-width", "4", "--hyp-out", str(hyp)]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["wer"]["wer"] == 0 and d["per"]["per"] == 0
    assert hyp.read_text().splitlines() == ["ATCOTAG a PILOTTAG b", "PILOTTAG b b"]


def test_simulate_is_seeded(tmp_path):
    ref = tmp_path / "ref.txt"
    main(["chunk", "--manifest", str(bundled_manifest("bravo")), "--out", str(tmp_path / "c.jsonl"), "--text", str(ref)])
    outs = []
    for name, seed in (("h1", 4), ("h2", 4), ("h3", 5)):
        out = tmp_path / f"{name}.txt"
        assert main(["simulate", "--ref", str(ref), "--out", str(out), "--architecture", "Joint",
                     "--asr-model", "w2v2", "--seed", str(seed), "--salt", "x"]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] != outs[2]
    assert len(outs[0].decode().splitlines()) == len(read_transcripts(ref))


def test_report_errors(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    assert main(["report", "--records", str(tmp_path / "empty"), "--metric", "wer"]) == 2
    with pytest.raises(SystemExit):
        main(["report", "--records", str(tmp_path), "--metric", "cer"])


@pytest.mark.skipif(shutil.which("atcsrd") is None, reason="console script not installed")
def test_console_script(tmp_path):
    ref = _write(tmp_path / "ref.txt", "ATCOTAG w1 w2 PILOTTAG w3\n")
    hyp = _write(tmp_path / "hyp.txt", "ATCOTAG w1 w2 ATCOTAG w3\n")
    r = subprocess.run(["atcsrd", "eval", "--ref", str(ref), "--hyp", str(hyp), "--json"], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert json.loads(r.stdout)["wder"]["wder"] == pytest.approx(1 / 3)


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "atcsrd.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "classify-role" in r.stdout
