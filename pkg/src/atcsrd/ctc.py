"""CTC loss and decoding over vocabularies that contain role-tag tokens.

The joint ASR + role detection system needs no special machinery: the tags
``ATCOTAG`` and ``PILOTTAG`` are two more output symbols. This module
provides the standard pieces at desk scale:

* :func:`ctc_loss`: negative log-likelihood of a target under a posterior
  matrix, with its gradient, via the forward-backward recursions in log space.
* :func:`ctc_greedy_decode` and :func:`ctc_beam_decode` (prefix beam search).
* :func:`joint_decode_eval`: decode a batch of matrices and score them
  against tagged references with WER / WDER / PER.

Posterior matrices are stored either as JSON ``{"vocab": [...],
"log_probs": [[...], ...]}`` or in a binary layout: the magic ``b"CTCP"``,
little-endian ``uint32`` T and V, then ``T * V`` little-endian ``float32``
natural-log probabilities, row major. Binary files need a vocabulary JSON
sidecar (a token list or ``{"tokens": [...], "word_delimiter": ...}``).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import CtcError, InfeasibleTarget, PosteriorFormatError
from .metrics import MetricsReport, corpus_metrics, hypothesis_tokens
from .transcript import TAG_LITERALS, TaggedTranscript

__all__ = [
    "BLANK",
    "ROW_TOLERANCE",
    "Vocabulary",
    "PosteriorMatrix",
    "CtcResult",
    "ctc_loss",
    "ctc_log_likelihood",
    "ctc_greedy_decode",
    "ctc_beam_decode",
    "tokens_to_text",
    "joint_decode_eval",
    "load_posteriors",
    "save_posteriors",
    "load_vocabulary",
]

BLANK = "<blank>"
ROW_TOLERANCE = 1e-6
_MAGIC = b"CTCP"
_NEG_INF = -np.inf


@dataclass(frozen=True)
class Vocabulary:
    """Output symbols; index 0 is the blank.

    ``word_delimiter`` marks character-level vocabularies: consecutive
    non-delimiter tokens are joined into one word when rendering text.
    """

    tokens: tuple[str, ...]
    word_delimiter: str | None = None

    def __post_init__(self):
        tokens = tuple(self.tokens)
        object.__setattr__(self, "tokens", tokens)
        if len(tokens) < 2:
            raise CtcError("vocabulary needs the blank and at least one symbol")
        if len(set(tokens)) != len(tokens):
            raise CtcError("vocabulary tokens must be unique")
        if self.word_delimiter is not None and self.word_delimiter not in tokens[1:]:
            raise CtcError("word delimiter is not a vocabulary token")

    @classmethod
    def build(cls, symbols: Sequence[str], tags: bool = True, blank: str = BLANK, **kw):
        extra = [t for t in sorted(TAG_LITERALS) if tags and t not in symbols]
        return cls((blank, *symbols, *extra), **kw)

    @property
    def blank(self) -> str:
        return self.tokens[0]

    def __len__(self):
        return len(self.tokens)

    def index(self, token: str) -> int:
        try:
            return self.tokens.index(token)
        except ValueError:
            raise CtcError(f"token {token!r} not in vocabulary") from None

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self.index(t) for t in tokens]

    def to_json(self) -> dict:
        d = {"tokens": list(self.tokens)}
        if self.word_delimiter is not None:
            d["word_delimiter"] = self.word_delimiter
        return d


@dataclass(frozen=True, eq=False)
class PosteriorMatrix:
    """T x V natural-log posteriors; rows must normalise to one."""

    log_probs: np.ndarray
    vocab: Vocabulary | None = None

    def __post_init__(self):
        lp = np.array(self.log_probs, dtype=np.float64)
        if lp.ndim != 2 or lp.shape[0] < 1 or lp.shape[1] < 2:
            raise PosteriorFormatError(f"bad posterior shape {lp.shape}")
        if np.isnan(lp).any() or (lp == np.inf).any():
            raise PosteriorFormatError("posteriors contain NaN or +inf")
        if self.vocab is not None and len(self.vocab) != lp.shape[1]:
            raise PosteriorFormatError(
                f"vocabulary has {len(self.vocab)} tokens, matrix {lp.shape[1]} columns"
            )
        drift = np.abs(_logsumexp_rows(lp)).max()
        if drift > ROW_TOLERANCE:
            raise PosteriorFormatError(f"rows are not normalised (drift {drift:.2e})")
        lp.setflags(write=False)
        object.__setattr__(self, "log_probs", lp)

    @classmethod
    def from_logits(cls, logits, vocab: Vocabulary | None = None) -> "PosteriorMatrix":
        x = np.asarray(logits, dtype=np.float64)
        return cls(x - _logsumexp_rows(x)[:, None], vocab)

    @property
    def frames(self) -> int:
        return self.log_probs.shape[0]

    @property
    def size(self) -> int:
        return self.log_probs.shape[1]


@dataclass(frozen=True, eq=False)
class CtcResult:
    """Loss plus gradients.

    ``gradient`` is taken with respect to pre-softmax activations whose
    log-softmax is the posterior matrix, so each row sums to zero.
    ``occupancy[t, k]`` is the posterior probability of emitting symbol ``k``
    at frame ``t``; the gradient with respect to the log posteriors
    themselves is ``-occupancy``.
    """

    loss: float
    gradient: np.ndarray
    occupancy: np.ndarray


def _logsumexp_rows(x: np.ndarray) -> np.ndarray:
    m = x.max(axis=1)
    safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        return safe + np.log(np.exp(x - safe[:, None]).sum(axis=1))


def _lse(*xs: np.ndarray) -> np.ndarray:
    stacked = np.stack(xs)
    m = stacked.max(axis=0)
    safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        return safe + np.log(np.exp(stacked - safe).sum(axis=0))


def _expand(target: Sequence[int], vocab_size: int, frames: int) -> np.ndarray:
    target = [int(k) for k in target]
    for k in target:
        if not 0 < k < vocab_size:
            raise CtcError(f"target index {k} is the blank or out of range")
    repeats = sum(a == b for a, b in zip(target, target[1:]))
    if frames < len(target) + repeats:
        raise InfeasibleTarget(
            f"{frames} frames cannot emit {len(target)} labels with {repeats} repeats"
        )
    ext = np.zeros(2 * len(target) + 1, dtype=np.int64)
    ext[1::2] = target
    return ext


def _skip_mask(ext: np.ndarray) -> np.ndarray:
    # state s may be entered from s - 2 when it is a label differing from s - 2
    skip = np.zeros(ext.size, dtype=bool)
    skip[2:] = (ext[2:] != 0) & (ext[2:] != ext[:-2])
    return skip


def _forward(lp: np.ndarray, ext: np.ndarray, skip: np.ndarray) -> np.ndarray:
    T, S = lp.shape[0], ext.size
    alpha = np.full((T, S), _NEG_INF)
    alpha[0, 0] = lp[0, ext[0]]
    if S > 1:
        alpha[0, 1] = lp[0, ext[1]]
    emit = lp[:, ext]
    for t in range(1, T):
        prev = alpha[t - 1]
        one = np.concatenate(([_NEG_INF], prev[:-1]))
        two = np.where(skip, np.concatenate(([_NEG_INF, _NEG_INF], prev[:-2]))[:S], _NEG_INF)
        alpha[t] = _lse(prev, one, two) + emit[t]
    return alpha


def _backward(lp: np.ndarray, ext: np.ndarray, skip: np.ndarray) -> np.ndarray:
    # beta[t, s]: log probability of the frames after t given state s at t
    T, S = lp.shape[0], ext.size
    beta = np.full((T, S), _NEG_INF)
    beta[T - 1, S - 1] = 0.0
    if S > 1:
        beta[T - 1, S - 2] = 0.0
    emit = lp[:, ext]
    skip_from = np.concatenate((skip[2:], [False, False]))[:S]
    for t in range(T - 2, -1, -1):
        nxt = beta[t + 1] + emit[t + 1]
        one = np.concatenate((nxt[1:], [_NEG_INF]))
        two = np.where(skip_from, np.concatenate((nxt[2:], [_NEG_INF, _NEG_INF]))[:S], _NEG_INF)
        beta[t] = _lse(nxt, one, two)
    return beta


def _log_likelihood(alpha: np.ndarray) -> float:
    last = alpha[-1]
    if last.size == 1:
        return float(last[0])
    return float(np.logaddexp(last[-1], last[-2]))


def ctc_log_likelihood(p: PosteriorMatrix, target: Sequence[int]) -> float:
    """``log P(target | p)`` summed over all alignments (forward pass only)."""
    ext = _expand(target, p.size, p.frames)
    return _log_likelihood(_forward(p.log_probs, ext, _skip_mask(ext)))


def ctc_loss(p: PosteriorMatrix, target: Sequence[int]) -> CtcResult:
    """CTC negative log-likelihood of ``target`` (vocabulary indices) and its gradient.

    Raises:
        InfeasibleTarget: too few frames for the target and its repeats.
        CtcError: a target index is the blank or out of range.
    """
    lp = p.log_probs
    ext = _expand(target, p.size, p.frames)
    skip = _skip_mask(ext)
    alpha = _forward(lp, ext, skip)
    beta = _backward(lp, ext, skip)
    ll = _log_likelihood(alpha)
    occupancy = np.zeros_like(lp)
    if np.isfinite(ll):
        gamma = np.exp(alpha + beta - ll)
        for s, k in enumerate(ext):
            occupancy[:, k] += gamma[:, s]
    gradient = np.exp(lp) - occupancy
    return CtcResult(-ll, gradient, occupancy)


def _symbols(p: PosteriorMatrix, v: Vocabulary | None) -> Vocabulary:
    v = v or p.vocab
    if v is None:
        raise CtcError("a vocabulary is required for decoding")
    if len(v) != p.size:
        raise CtcError("vocabulary size does not match the posterior matrix")
    return v


def ctc_greedy_decode(p: PosteriorMatrix, v: Vocabulary | None = None) -> list[str]:
    """Best-path decoding: frame argmax, merge repeats, drop blanks."""
    v = _symbols(p, v)
    best = np.argmax(p.log_probs, axis=1)
    out = []
    prev = -1
    for k in best.tolist():
        if k != prev and k != 0:
            out.append(v.tokens[k])
        prev = k
    return out


def ctc_beam_decode(
    p: PosteriorMatrix, v: Vocabulary | None = None, beam_width: int = 8
) -> list[tuple[list[str], float]]:
    """Prefix beam search.

    Each prefix keeps separate log probabilities for paths ending in blank
    and in its last label, so paths that collapse to the same label sequence
    are merged. Returns up to ``beam_width`` hypotheses ordered by decreasing
    log probability (ties by token indices). With a beam at least as large as
    the number of distinct prefixes the scores are exact label-sequence
    probabilities.
    """
    v = _symbols(p, v)
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    lp = p.log_probs
    V = p.size
    beams: dict[tuple[int, ...], tuple[float, float]] = {(): (0.0, _NEG_INF)}
    for t in range(p.frames):
        row = lp[t]
        nxt: dict[tuple[int, ...], list[float]] = {}

        def add(prefix, b, nb):
            cur = nxt.get(prefix)
            if cur is None:
                nxt[prefix] = [b, nb]
            else:
                cur[0] = np.logaddexp(cur[0], b)
                cur[1] = np.logaddexp(cur[1], nb)

        for prefix, (pb, pnb) in beams.items():
            total = np.logaddexp(pb, pnb)
            add(prefix, total + row[0], _NEG_INF)
            last = prefix[-1] if prefix else None
            for k in range(1, V):
                if k == last:
                    # repeat without a blank stays on the same prefix
                    add(prefix, _NEG_INF, pnb + row[k])
                    add(prefix + (k,), _NEG_INF, pb + row[k])
                else:
                    add(prefix + (k,), _NEG_INF, total + row[k])
        # prefixes reached only through impossible paths carry -inf; drop them
        live = [kv for kv in nxt.items() if np.logaddexp(*kv[1]) > _NEG_INF]
        ranked = sorted(live, key=lambda kv: (-np.logaddexp(*kv[1]), kv[0]))[:beam_width]
        beams = {k: (b, nb) for k, (b, nb) in ranked}
    out = [
        ([v.tokens[k] for k in prefix], float(np.logaddexp(b, nb)))
        for prefix, (b, nb) in beams.items()
    ]
    out.sort(key=lambda x: (-x[1], v.encode(x[0])))
    return out


def tokens_to_text(tokens: Sequence[str], v: Vocabulary) -> str:
    """Render decoded tokens as a whitespace-separated line.

    Tag tokens always stand alone. For character vocabularies, characters
    between delimiters (or tags) form one word.
    """
    if v.word_delimiter is None:
        return " ".join(tokens)
    words: list[str] = []
    cur = ""
    for tok in tokens:
        if tok in TAG_LITERALS or tok == v.word_delimiter:
            if cur:
                words.append(cur)
                cur = ""
            if tok in TAG_LITERALS:
                words.append(tok)
        else:
            cur += tok
    if cur:
        words.append(cur)
    return " ".join(words)


def decode_text(
    p: PosteriorMatrix,
    v: Vocabulary | None = None,
    decoder: str = "greedy",
    beam_width: int = 8,
) -> str:
    v = _symbols(p, v)
    if decoder == "greedy":
        tokens = ctc_greedy_decode(p, v)
    elif decoder == "beam":
        tokens = ctc_beam_decode(p, v, beam_width)[0][0]
    else:
        raise ValueError(f"unknown decoder {decoder!r}")
    return tokens_to_text(tokens, v)


def joint_decode_eval(
    matrices: Sequence[PosteriorMatrix],
    refs: Sequence[TaggedTranscript],
    v: Vocabulary | None = None,
    decoder: str = "greedy",
    beam_width: int = 8,
    macro: bool = False,
) -> MetricsReport:
    """Decode every matrix and score the outputs against the references.

    Outputs that do not parse as tagged transcripts are scored as tag-free
    word sequences (all their words count as role errors); nothing is dropped.
    """
    if len(matrices) != len(refs):
        raise ValueError("need one reference per posterior matrix")
    hyps = [hypothesis_tokens(decode_text(p, v, decoder, beam_width)) for p in matrices]
    return corpus_metrics(list(zip(refs, hyps)), macro=macro)


# --------------------------------------------------------------------------
# file formats


def load_vocabulary(path) -> Vocabulary:
    with open(path, encoding="utf-8") as f:
        d = json.load(f)
    if isinstance(d, list):
        return Vocabulary(tuple(d))
    return Vocabulary(tuple(d["tokens"]), d.get("word_delimiter"))


def load_posteriors(path, vocab_path=None) -> PosteriorMatrix:
    """Read a posterior matrix in the JSON or binary layout (detected by magic)."""
    raw = Path(path).read_bytes()
    if raw[:4] == _MAGIC:
        if len(raw) < 12:
            raise PosteriorFormatError(f"{path}: truncated header")
        T, V = struct.unpack_from("<II", raw, 4)
        if len(raw) != 12 + 4 * T * V:
            raise PosteriorFormatError(f"{path}: expected {T}x{V} float32 values")
        if vocab_path is None:
            raise PosteriorFormatError(f"{path}: binary posteriors need a vocabulary file")
        data = np.frombuffer(raw, dtype="<f4", offset=12).reshape(T, V)
        return PosteriorMatrix(data.astype(np.float64), load_vocabulary(vocab_path))
    try:
        d = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise PosteriorFormatError(f"{path}: {e}") from None
    if vocab_path is not None:
        vocab = load_vocabulary(vocab_path)
    elif isinstance(d.get("vocab"), dict):
        vocab = Vocabulary(tuple(d["vocab"]["tokens"]), d["vocab"].get("word_delimiter"))
    else:
        vocab = Vocabulary(tuple(d["vocab"]), d.get("word_delimiter"))
    return PosteriorMatrix(np.asarray(d["log_probs"], dtype=np.float64), vocab)


def save_posteriors(path, p: PosteriorMatrix, binary: bool = False) -> None:
    if binary:
        T, V = p.log_probs.shape
        with open(path, "wb") as f:
            f.write(_MAGIC + struct.pack("<II", T, V))
            f.write(p.log_probs.astype("<f4").tobytes())
        return
    if p.vocab is None:
        raise CtcError("JSON posteriors need a vocabulary")
    d = {"vocab": list(p.vocab.tokens), "log_probs": p.log_probs.tolist()}
    if p.vocab.word_delimiter is not None:
        d["word_delimiter"] = p.vocab.word_delimiter
    with open(path, "w", encoding="utf-8") as f:
        json.dump(d, f)
