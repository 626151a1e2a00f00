"""Synthetic ATC-style corpora and simulated system outputs.

Nothing here comes from real recordings. The generator produces timed,
role-labelled controller/pilot exchanges from a small phraseology grammar so
the toolkit can be exercised end to end; the simulator perturbs reference
transcripts the way ASR and role-detection errors would.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .transcript import (
    CorpusManifest,
    ManifestEntry,
    SpeakerRole,
    TaggedTranscript,
    Turn,
)

__all__ = [
    "DATASETS",
    "make_corpus",
    "SystemProfile",
    "PROFILES",
    "simulate_hypothesis",
    "posteriors_for",
    "bundled_corpus_dir",
    "bundled_manifest",
    "corpus_vocabulary",
]

_DIGITS = ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "niner"]

# per synthetic dataset: callsigns, facilities, runways
DATASETS = {
    "alpha": {
        "callsigns": ["lufthansa", "swiss", "czech", "edelweiss", "austrian"],
        "facilities": ["ruzyne tower", "zurich approach", "prague radar", "sion tower"],
        "runways": ["two four", "one four", "three two", "zero six"],
        "words_per_s": 3.0,
    },
    "bravo": {
        "callsigns": ["american", "delta", "united", "jetblue", "southwest"],
        "facilities": ["boston tower", "regional departure", "dallas approach", "national ground"],
        "runways": ["one seven left", "three one right", "two two left", "one niner"],
        "words_per_s": 3.6,
    },
    "charlie": {
        "callsigns": ["scandinavian", "ryanair", "klm", "aer lingus", "norwegian"],
        "facilities": ["schiphol approach", "dublin tower", "landvetter ground", "stockholm control"],
        "runways": ["one eight", "two eight", "zero three", "two one"],
        "words_per_s": 3.3,
    },
}


def _num(rng, n):
    return " ".join(_DIGITS[int(d)] for d in rng.integers(0, 10, size=n))


def _exchange(rng, ds) -> list[tuple[SpeakerRole, str]]:
    cs = f"{ds['callsigns'][rng.integers(len(ds['callsigns']))]} {_num(rng, 3)}"
    fac = ds["facilities"][rng.integers(len(ds["facilities"]))]
    rwy = ds["runways"][rng.integers(len(ds["runways"]))]
    kind = int(rng.integers(7))
    if kind == 0:
        instr = f"contact {fac} one {_num(rng, 2)} decimal {_num(rng, 1)}"
    elif kind == 1:
        instr = f"climb flight level {_num(rng, 3)}"
    elif kind == 2:
        instr = f"turn {'left' if rng.random() < 0.5 else 'right'} heading {_num(rng, 3)}"
    elif kind == 3:
        instr = f"cleared to land runway {rwy}"
    elif kind == 4:
        instr = f"hold short runway {rwy}"
    elif kind == 5:
        instr = f"descend altitude {_num(rng, 1)} thousand feet"
    else:
        instr = f"squawk {_num(rng, 4)}"
    atco = f"{cs} {instr}"
    r = rng.random()
    if r < 0.6:
        pilot = f"{instr} {cs}"
    elif r < 0.8:
        pilot = f"wilco {cs}"
    else:
        pilot = f"roger {instr} {cs}"
    turns = [(SpeakerRole.ATCO, atco), (SpeakerRole.PILOT, pilot)]
    if rng.random() < 0.2:
        # pilot-initiated call before the instruction
        turns.insert(0, (SpeakerRole.PILOT, f"{fac} {cs} request {'taxi' if rng.random() < 0.5 else 'descent'}"))
    return turns


def make_corpus(name: str, n_entries: int, seed: int) -> CorpusManifest:
    """Long recordings of several exchanges each, with word-rate timing."""
    ds = DATASETS[name]
    rng = np.random.default_rng(seed)
    entries = []
    for e in range(n_entries):
        t = round(float(rng.uniform(0.2, 1.0)), 2)
        turns = []
        for _ in range(int(rng.integers(2, 5))):
            for role, text in _exchange(rng, ds):
                words = text.split()
                dur = round(len(words) / ds["words_per_s"] * float(rng.uniform(0.85, 1.2)), 2)
                turns.append(Turn(role, tuple(words), t, round(t + dur, 2)))
                t = round(t + dur + float(rng.uniform(0.3, 1.5)), 2)
        entries.append(ManifestEntry(f"{name}-{e:04d}", tuple(turns)))
    return CorpusManifest(tuple(entries))


@dataclass(frozen=True)
class SystemProfile:
    """Error rates of a simulated ASR + role-detection system."""

    word_error: float
    role_flip: float
    tag_drop: float
    tag_shift: float
    inter_penalty: float = 1.6


PROFILES = {
    ("SRD-ASR", "w2v2"): SystemProfile(0.30, 0.22, 0.10, 0.25),
    ("SRD-ASR", "xlsr"): SystemProfile(0.26, 0.22, 0.10, 0.25),
    ("ASR-SRD", "w2v2"): SystemProfile(0.20, 0.10, 0.20, 0.30, 2.2),
    ("ASR-SRD", "xlsr"): SystemProfile(0.17, 0.09, 0.20, 0.30, 2.2),
    ("Joint", "w2v2"): SystemProfile(0.22, 0.06, 0.03, 0.05, 2.6),
    ("Joint", "xlsr"): SystemProfile(0.19, 0.05, 0.03, 0.04, 2.6),
}


def simulate_hypothesis(
    ref: TaggedTranscript,
    rng: np.random.Generator,
    profile: SystemProfile,
    vocabulary: list[str],
    inter: bool = False,
) -> str:
    """Perturb a reference into a plausible system output line.

    The result may not parse as a tagged transcript (for instance when every
    word of a turn was deleted); that is deliberate, such outputs occur in
    practice.
    """
    scale = profile.inter_penalty if inter else 1.0
    p_word = min(0.9, profile.word_error * scale)
    turns = []
    for turn in ref.turns:
        role = turn.role.other if rng.random() < min(0.9, profile.role_flip * scale) else turn.role
        words = []
        for w in turn.words:
            r = rng.random()
            if r >= p_word:
                words.append(w)
                continue
            kind = rng.random()
            if kind < 0.5:
                words.append(vocabulary[rng.integers(len(vocabulary))])
            elif kind < 0.8:
                continue
            else:
                words.extend([w, vocabulary[rng.integers(len(vocabulary))]])
        turns.append([role, words])
    # tag errors on turn boundaries after the first
    for i in range(len(turns) - 1, 0, -1):
        r = rng.random()
        if r < profile.tag_drop:
            turns[i - 1][1].extend(turns[i][1])
            del turns[i]
        elif r < profile.tag_drop + profile.tag_shift:
            prev, cur = turns[i - 1][1], turns[i][1]
            if rng.random() < 0.5 and len(prev) > 1:
                cur.insert(0, prev.pop())
            elif len(cur) > 1:
                prev.append(cur.pop(0))
    tokens = []
    for role, words in turns:
        tokens.append(role.tag)
        tokens.extend(words)
    return " ".join(tokens)


def posteriors_for(
    tokens: list[str],
    vocab_tokens: tuple[str, ...],
    rng: np.random.Generator,
    frames_per_token: int = 2,
    peak: float = 6.0,
    noise: float = 1.0,
) -> np.ndarray:
    """Log-posterior rows whose best path spells ``tokens``.

    Every token gets ``frames_per_token`` peaked frames followed by a blank
    frame, so repeated tokens survive the collapse.
    """
    index = {t: i for i, t in enumerate(vocab_tokens)}
    path = []
    for t in tokens:
        path.extend([index[t]] * frames_per_token + [0])
    if not path:
        path = [0]
    logits = rng.normal(0.0, noise, size=(len(path), len(vocab_tokens)))
    logits[np.arange(len(path)), path] += peak
    m = logits.max(axis=1, keepdims=True)
    return logits - (m + np.log(np.exp(logits - m).sum(axis=1, keepdims=True)))


def bundled_corpus_dir() -> Path:
    return Path(str(resources.files("atcsrd") / "data" / "synthetic"))


def bundled_manifest(name: str) -> Path:
    return bundled_corpus_dir() / f"{name}.jsonl"


def corpus_vocabulary(manifests) -> list[str]:
    return sorted({w for m in manifests for e in m for t in e.turns for w in t.words})

