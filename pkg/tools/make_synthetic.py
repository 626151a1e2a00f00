"""Regenerate the bundled synthetic corpora under src/atcsrd/data/synthetic."""

from pathlib import Path

from atcsrd.synthetic import make_corpus
from atcsrd.transcript import write_manifest

SEEDS = {"alpha": 11, "bravo": 23, "charlie": 37}

if __name__ == "__main__":
    out = Path(__file__).resolve().parents[1] / "src" / "atcsrd" / "data" / "synthetic"
    out.mkdir(parents=True, exist_ok=True)
    for name, seed in SEEDS.items():
        write_manifest(make_corpus(name, 16, seed), out / f"{name}.jsonl")
        print(out / f"{name}.jsonl")
