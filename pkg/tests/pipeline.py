"""Full command-line pipeline over the bundled synthetic corpus.

chunk every dataset, simulate system outputs for every train/test pair,
architecture, ASR model and seed, score them into run records, then emit
confusion matrices and summary tables. Commands go through ``cli.main`` so
the argument parsing and file writing are the ones a shell user gets.
"""

from __future__ import annotations

import itertools
from pathlib import Path

from atcsrd.cli import main
from atcsrd.synthetic import PROFILES, bundled_manifest

DATASETS = ("alpha", "bravo", "charlie")
SEEDS = (1, 2, 3)


def run(*argv) -> None:
    code = main([str(a) for a in argv])
    if code != 0:
        raise RuntimeError(f"atcsrd {' '.join(map(str, argv))} exited with {code}")


def full_pipeline(workdir: Path) -> list[Path]:
    """Run everything inside ``workdir``; return the emitted report files."""
    workdir = Path(workdir)
    runs = workdir / "runs"
    out = workdir / "out"
    for d in (runs, out, workdir / "hyp"):
        d.mkdir(parents=True, exist_ok=True)
    for ds in DATASETS:
        run("chunk", "--manifest", bundled_manifest(ds), "--out", workdir / f"{ds}.chunks.jsonl",
            "--text", workdir / f"{ds}.ref.txt")
    for train, test, (arch, model), seed in itertools.product(DATASETS, DATASETS, sorted(PROFILES), SEEDS):
        tag = f"{arch}_{model}_{train}_{test}_{seed}"
        hyp = workdir / "hyp" / f"{tag}.txt"
        ref = workdir / f"{test}.ref.txt"
        sim = ["simulate", "--ref", ref, "--out", hyp, "--architecture", arch, "--asr-model", model,
               "--seed", seed, "--salt", f"{train}>{test}"]
        if train != test:
            sim.append("--inter")
        run(*sim)
        run("eval", "--ref", ref, "--hyp", hyp, "--json", "--out", workdir / "hyp" / f"{tag}.json",
            "--record", runs / f"{tag}.json", "--train-dataset", train, "--test-dataset", test,
            "--architecture", arch, "--asr-model", model, "--seed", seed)
    emitted = []
    for metric in ("wer", "wder", "per"):
        for arch, model in sorted(PROFILES):
            for fmt in ("csv", "json"):
                path = out / f"{metric}_{arch}_{model}.{fmt}"
                run("report", "--records", runs, "--metric", metric, "--format", fmt, "--out", path,
                    "--architecture", arch, "--asr-model", model)
                emitted.append(path)
        for scenario in ("intra", "inter"):
            path = out / f"{metric}_table_{scenario}.csv"
            run("report", "--records", runs, "--metric", metric, "--table", "architecture,asr_model",
                "--scenario", scenario, "--out", path)
            emitted.append(path)
    return emitted


def tree_bytes(root: Path) -> dict[str, bytes]:
    root = Path(root)
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}
