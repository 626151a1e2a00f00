"""Needleman-Wunsch global alignment of token sequences.

Tokens are compared for equality only, so any hashable token works; tag tokens
are aligned like any other token. The DP fill and traceback run in a small
numba kernel over integer-coded sequences.

Traceback tie-break, applied from the end of both sequences: diagonal
(match/substitute) first, then delete (up), then insert (left). Among equally
scoring alignments this picks the one whose reversed op sequence is
lexicographically smallest under that order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Hashable, NamedTuple, Sequence

import numpy as np
from numba import njit

from .errors import PlaceholderCollision

__all__ = [
    "PLACEHOLDER",
    "OpKind",
    "EditOp",
    "Alignment",
    "ScoringScheme",
    "DEFAULT_SCHEME",
    "LEVENSHTEIN_SCHEME",
    "needleman_wunsch",
    "score_matrix",
    "PaddedHypothesis",
    "pad_hypothesis",
    "insert_placeholders",
]

PLACEHOLDER = "<del>"


class OpKind(enum.IntEnum):
    MATCH = 0
    SUBSTITUTE = 1
    DELETE = 2
    INSERT = 3


class EditOp(NamedTuple):
    kind: OpKind
    ref_idx: int | None
    hyp_idx: int | None


@dataclass(frozen=True)
class ScoringScheme:
    match_score: int = 1
    mismatch_score: int = -1
    gap_score: int = -1

    def __post_init__(self):
        if not self.match_score > self.mismatch_score:
            raise ValueError("match_score must exceed mismatch_score")
        if not self.gap_score < self.match_score:
            raise ValueError("gap_score must be below match_score")

    def op_score(self, kind: OpKind) -> int:
        if kind == OpKind.MATCH:
            return self.match_score
        if kind == OpKind.SUBSTITUTE:
            return self.mismatch_score
        return self.gap_score


DEFAULT_SCHEME = ScoringScheme(1, -1, -1)
# with this scheme -score is the Levenshtein distance
LEVENSHTEIN_SCHEME = ScoringScheme(0, -1, -1)


@dataclass(frozen=True)
class Alignment:
    ops: tuple[EditOp, ...]
    score: int

    def counts(self) -> dict[OpKind, int]:
        out = {k: 0 for k in OpKind}
        for op in self.ops:
            out[op.kind] += 1
        return out


@njit(cache=True)
def _nw_fill(ref, hyp, match, mismatch, gap):
    n = ref.shape[0]
    m = hyp.shape[0]
    H = np.empty((n + 1, m + 1), np.int64)
    for j in range(m + 1):
        H[0, j] = j * gap
    for i in range(1, n + 1):
        H[i, 0] = i * gap
        r = ref[i - 1]
        for j in range(1, m + 1):
            best = H[i - 1, j - 1] + (match if r == hyp[j - 1] else mismatch)
            up = H[i - 1, j] + gap
            if up > best:
                best = up
            left = H[i, j - 1] + gap
            if left > best:
                best = left
            H[i, j] = best
    return H


@njit(cache=True)
def _nw_traceback(H, ref, hyp, match, mismatch, gap):
    # rows of (kind, ref_idx, hyp_idx), built back to front; -1 marks "none"
    i = ref.shape[0]
    j = hyp.shape[0]
    ops = np.empty((i + j, 3), np.int64)
    k = 0
    while i > 0 or j > 0:
        h = H[i, j]
        if i > 0 and j > 0:
            same = ref[i - 1] == hyp[j - 1]
            if H[i - 1, j - 1] + (match if same else mismatch) == h:
                ops[k, 0] = 0 if same else 1
                ops[k, 1] = i - 1
                ops[k, 2] = j - 1
                i -= 1
                j -= 1
                k += 1
                continue
        if i > 0 and H[i - 1, j] + gap == h:
            ops[k, 0] = 2
            ops[k, 1] = i - 1
            ops[k, 2] = -1
            i -= 1
        else:
            ops[k, 0] = 3
            ops[k, 1] = -1
            ops[k, 2] = j - 1
            j -= 1
        k += 1
    return ops[:k][::-1].copy()


@njit(cache=True)
def _nw_score_matrix(ref_codes, ref_off, hyp_codes, hyp_off, match, mismatch, gap):
    nr = ref_off.shape[0] - 1
    nh = hyp_off.shape[0] - 1
    out = np.empty((nr, nh), np.int64)
    for a in range(nr):
        r = ref_codes[ref_off[a]:ref_off[a + 1]]
        for b in range(nh):
            h = hyp_codes[hyp_off[b]:hyp_off[b + 1]]
            H = _nw_fill(r, h, match, mismatch, gap)
            out[a, b] = H[r.shape[0], h.shape[0]]
    return out


def _encode(seqs: Sequence[Sequence[Hashable]], codes: dict) -> list[np.ndarray]:
    return [
        np.fromiter(
            (codes.setdefault(t, len(codes)) for t in s), dtype=np.int64, count=len(s)
        )
        for s in seqs
    ]


def needleman_wunsch(
    ref: Sequence[Hashable],
    hyp: Sequence[Hashable],
    s: ScoringScheme = DEFAULT_SCHEME,
) -> Alignment:
    """Maximum-score global alignment of ``ref`` against ``hyp``.

    Either sequence may be empty. The result is deterministic; see the module
    docstring for the tie-break order.
    """
    r, h = _encode([ref, hyp], {})
    H = _nw_fill(r, h, s.match_score, s.mismatch_score, s.gap_score)
    raw = _nw_traceback(H, r, h, s.match_score, s.mismatch_score, s.gap_score)
    ops = tuple(
        EditOp(
            OpKind(kind),
            None if ri < 0 else int(ri),
            None if hi < 0 else int(hi),
        )
        for kind, ri, hi in raw.tolist()
    )
    return Alignment(ops, int(H[len(ref), len(hyp)]))


def score_matrix(
    refs: Sequence[Sequence[Hashable]],
    hyps: Sequence[Sequence[Hashable]],
    s: ScoringScheme = DEFAULT_SCHEME,
) -> np.ndarray:
    """Optimal global alignment score of every ref against every hyp.

    Returns an integer array of shape ``(len(refs), len(hyps))``. Uses the same
    DP fill as :func:`needleman_wunsch` without building tracebacks, which
    makes it suitable for n-best scoring and large sweeps.
    """
    codes: dict = {}
    r = _encode(refs, codes)
    h = _encode(hyps, codes)

    def flat(parts):
        off = np.zeros(len(parts) + 1, np.int64)
        off[1:] = np.cumsum([len(p) for p in parts])
        data = np.concatenate(parts) if parts else np.zeros(0, np.int64)
        return data.astype(np.int64), off

    rc, ro = flat(r)
    hc, ho = flat(h)
    return _nw_score_matrix(rc, ro, hc, ho, s.match_score, s.mismatch_score, s.gap_score)


@dataclass(frozen=True)
class PaddedHypothesis:
    """Hypothesis stream with placeholders at deleted reference positions.

    ``ref_index[i]`` is the position in ``tokens`` aligned to reference token
    ``i``; hypothesis insertions occupy positions no reference token maps to.
    """

    tokens: tuple[str, ...]
    ref_index: tuple[int, ...]


def pad_hypothesis(
    ref_tokens: Sequence[str], hyp_tokens: Sequence[str], a: Alignment
) -> PaddedHypothesis:
    if PLACEHOLDER in ref_tokens or PLACEHOLDER in hyp_tokens:
        raise PlaceholderCollision(f"{PLACEHOLDER!r} is reserved")
    tokens: list[str] = []
    ref_index = [-1] * len(ref_tokens)
    for op in a.ops:
        if op.kind == OpKind.DELETE:
            ref_index[op.ref_idx] = len(tokens)
            tokens.append(PLACEHOLDER)
        elif op.kind == OpKind.INSERT:
            tokens.append(hyp_tokens[op.hyp_idx])
        else:
            ref_index[op.ref_idx] = len(tokens)
            tokens.append(hyp_tokens[op.hyp_idx])
    if -1 in ref_index or len(tokens) - a.counts()[OpKind.DELETE] != len(hyp_tokens):
        raise ValueError("alignment does not cover both token sequences")
    return PaddedHypothesis(tuple(tokens), tuple(ref_index))


def insert_placeholders(
    ref_tokens: Sequence[str], hyp_tokens: Sequence[str], a: Alignment
) -> list[str]:
    """Hypothesis tokens with ``"<del>"`` wherever a reference token was deleted."""
    return list(pad_hypothesis(ref_tokens, hyp_tokens, a).tokens)
