"""Nearest-centroid speaker-role classification of speaker embeddings.

A fixed number of labelled embeddings is drawn at random per role, the role
centroids are their means, and a new embedding is assigned to the role whose
centroid has the larger cosine similarity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InsufficientSamples, ZeroVector
from .transcript import SpeakerRole

__all__ = [
    "Embedding",
    "RoleCentroids",
    "fit_centroids",
    "cosine",
    "classify",
    "classify_many",
    "read_embeddings",
]


@dataclass(frozen=True, eq=False)
class Embedding:
    values: np.ndarray
    label: SpeakerRole | None = None
    id: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("embedding must be a non-empty vector")
        if not np.any(v):
            raise ZeroVector(f"embedding {self.id!r} has zero norm")
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.size


@dataclass(frozen=True, eq=False)
class RoleCentroids:
    atco: np.ndarray
    pilot: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.atco, dtype=np.float64)
        p = np.asarray(self.pilot, dtype=np.float64)
        if a.shape != p.shape or a.ndim != 1:
            raise DimensionMismatch("centroids must be vectors of equal size")
        if not np.any(a) or not np.any(p):
            raise ZeroVector("zero centroid")
        object.__setattr__(self, "atco", a)
        object.__setattr__(self, "pilot", p)

    @property
    def dim(self) -> int:
        return self.atco.size

    def to_json(self) -> dict:
        return {"atco": self.atco.tolist(), "pilot": self.pilot.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "RoleCentroids":
        return cls(np.asarray(d["atco"]), np.asarray(d["pilot"]))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json(), f)

    @classmethod
    def load(cls, path) -> "RoleCentroids":
        with open(path, encoding="utf-8") as f:
            return cls.from_json(json.load(f))


def fit_centroids(
    samples: Sequence[Embedding],
    per_class: int = 50,
    seed: int = 0,
    normalize: bool = False,
) -> RoleCentroids:
    """Role centroids from ``per_class`` randomly drawn samples per role.

    Samples are sorted by id before drawing, so the result depends only on
    the sample set and the seed. With ``normalize`` each embedding is scaled
    to unit length before averaging.

    Raises:
        InsufficientSamples: fewer than ``per_class`` samples for a role.
        DimensionMismatch: embeddings of different sizes.
    """
    if per_class < 1:
        raise ValueError("per_class must be positive")
    dims = {s.dim for s in samples}
    if len(dims) > 1:
        raise DimensionMismatch(f"embedding sizes {sorted(dims)}")
    rng = np.random.default_rng(seed)
    centroids = {}
    for role in SpeakerRole:
        pool = sorted((s for s in samples if s.label is role), key=lambda s: s.id)
        if len(pool) < per_class:
            raise InsufficientSamples(
                f"{role.name}: {len(pool)} samples, need {per_class}"
            )
        pick = rng.choice(len(pool), size=per_class, replace=False)
        X = np.stack([pool[i].values for i in np.sort(pick)])
        if normalize:
            X = X / np.linalg.norm(X, axis=1, keepdims=True)
        centroids[role] = X.mean(axis=0)
    return RoleCentroids(centroids[SpeakerRole.ATCO], centroids[SpeakerRole.PILOT])


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


def classify(
    e: Embedding | np.ndarray, c: RoleCentroids
) -> tuple[SpeakerRole, dict[SpeakerRole, float]]:
    """Role with the higher cosine similarity; exact ties go to ATCO."""
    v = e.values if isinstance(e, Embedding) else np.asarray(e, dtype=np.float64)
    if v.shape != (c.dim,):
        raise DimensionMismatch(f"embedding size {v.size}, centroids {c.dim}")
    if not np.any(v):
        raise ZeroVector("cannot classify a zero vector")
    scores = {SpeakerRole.ATCO: cosine(v, c.atco), SpeakerRole.PILOT: cosine(v, c.pilot)}
    role = (
        SpeakerRole.ATCO
        if scores[SpeakerRole.ATCO] >= scores[SpeakerRole.PILOT]
        else SpeakerRole.PILOT
    )
    return role, scores


def classify_many(X: np.ndarray, c: RoleCentroids) -> np.ndarray:
    """Vectorised :func:`classify` over rows; returns True where ATCO wins."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != c.dim:
        raise DimensionMismatch("rows must match the centroid size")
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0):
        raise ZeroVector("zero row")
    sa = X @ c.atco / (norms * np.linalg.norm(c.atco))
    sp = X @ c.pilot / (norms * np.linalg.norm(c.pilot))
    return sa >= sp


def read_embeddings(path) -> list[Embedding]:
    """Load JSON Lines records ``{"id", "label"?, "vector"}``."""
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            d = json.loads(line)
            label = d.get("label")
            out.append(
                Embedding(
                    np.asarray(d["vector"], dtype=np.float64),
                    SpeakerRole.from_name(label) if label else None,
                    str(d.get("id", "")),
                )
            )
    return out

