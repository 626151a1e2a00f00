"""WER, WDER and PER for speaker-role tagged transcripts.

WER is the usual word-level edit distance on tag-free word sequences.

WDER and PER share one alignment of the full token streams (tags included).
Reference and hypothesis are aligned with Needleman-Wunsch, then a ``<del>``
placeholder is put into the hypothesis wherever a reference token was
deleted, so that every reference token has exactly one counterpart:

* WDER: fraction of reference words whose counterpart carries a different
  role. A hypothesis token's role is the role of the latest tag at or before
  it in the padded hypothesis; a placeholder inherits the role active where it
  was inserted; a tag token carries its own role. Tokens before any tag have
  no role and always count as errors. Hypothesis insertions are ignored.
* PER: ``1 - t_c / t_p`` where ``t_p`` is the number of reference tags and
  ``t_c`` the number of reference tags whose counterpart is a tag of either
  class. Spurious hypothesis tags are reported but not penalised.

By default the two tag literals compare equal during alignment, which keeps
PER independent of tag classes and stops a role swap from moving the word
alignment. Pass ``class_blind_tags=False`` to align tags as plain tokens.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence, Union

from .align import DEFAULT_SCHEME, ScoringScheme, needleman_wunsch, pad_hypothesis
from .errors import TranscriptError
from .transcript import (
    SpeakerRole,
    TaggedTranscript,
    is_tag,
    parse_tagged,
    strip_tags,
    to_token_stream,
)

__all__ = [
    "WerBreakdown",
    "WderBreakdown",
    "PerBreakdown",
    "PairMetrics",
    "MetricsReport",
    "edit_counts",
    "wer",
    "wder",
    "per",
    "score_pair",
    "corpus_metrics",
    "hypothesis_tokens",
]

Hypothesis = Union[TaggedTranscript, Sequence[str]]

_TAG_KEY = ("tag",)


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


@dataclass(frozen=True)
class WerBreakdown:
    substitutions: int
    deletions: int
    insertions: int
    ref_len: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def wer(self) -> float:
        return _ratio(self.errors, self.ref_len)

    def __add__(self, other: "WerBreakdown") -> "WerBreakdown":
        return WerBreakdown(
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
            self.ref_len + other.ref_len,
        )

    def to_json(self) -> dict:
        return {**asdict(self), "wer": self.wer}


@dataclass(frozen=True)
class WderBreakdown:
    attributed_words: int
    role_errors: int
    unassigned_words: int = 0

    @property
    def wder(self) -> float:
        return _ratio(self.role_errors, self.attributed_words)

    def __add__(self, other: "WderBreakdown") -> "WderBreakdown":
        return WderBreakdown(
            self.attributed_words + other.attributed_words,
            self.role_errors + other.role_errors,
            self.unassigned_words + other.unassigned_words,
        )

    def to_json(self) -> dict:
        return {**asdict(self), "wder": self.wder}


@dataclass(frozen=True)
class PerBreakdown:
    t_p: int
    t_c: int
    # informational: hypothesis tags with no reference tag counterpart
    spurious_tags: int = 0

    @property
    def per(self) -> float:
        return 1.0 - _ratio(self.t_c, self.t_p) if self.t_p else 0.0

    def __add__(self, other: "PerBreakdown") -> "PerBreakdown":
        return PerBreakdown(
            self.t_p + other.t_p,
            self.t_c + other.t_c,
            self.spurious_tags + other.spurious_tags,
        )

    def to_json(self) -> dict:
        return {**asdict(self), "per": self.per}


def edit_counts(ref: Sequence[str], hyp: Sequence[str]) -> WerBreakdown:
    """Minimum edit distance between word sequences, split into S, D and I.

    On the traceback, substitution/match is preferred over deletion, and
    deletion over insertion, so the split is deterministic.
    """
    n, m = len(ref), len(hyp)
    prev = list(range(m + 1))
    rows = [prev]
    for i in range(1, n + 1):
        cur = [i] + [0] * m
        r = ref[i - 1]
        for j in range(1, m + 1):
            cur[j] = min(
                prev[j - 1] + (r != hyp[j - 1]),
                prev[j] + 1,
                cur[j - 1] + 1,
            )
        rows.append(cur)
        prev = cur
    s = d = ins = 0
    i, j = n, m
    while i or j:
        here = rows[i][j]
        if i and j and rows[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]) == here:
            s += ref[i - 1] != hyp[j - 1]
            i, j = i - 1, j - 1
        elif i and rows[i - 1][j] + 1 == here:
            d += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return WerBreakdown(s, d, ins, n)


def wer(ref_words: Sequence[str], hyp_words: Sequence[str]) -> WerBreakdown:
    if not ref_words:
        raise ValueError("WER needs a non-empty reference")
    return edit_counts(list(ref_words), list(hyp_words))


def hypothesis_tokens(text: str) -> list[str]:
    """Token stream for a system output line.

    Parseable lines give their canonical token stream. A line that does not
    form a valid tagged transcript is scored as tag-free words, so that every
    one of its words counts as a role error.
    """
    try:
        return to_token_stream(parse_tagged(text))
    except TranscriptError:
        return [tok.lower() for tok in text.split() if not is_tag(tok)]


def _hyp_tokens(hyp: Hypothesis) -> list[str]:
    if isinstance(hyp, TaggedTranscript):
        return to_token_stream(hyp)
    return list(hyp)


def _role_counts(
    ref: TaggedTranscript,
    hyp_tokens: list[str],
    s: ScoringScheme,
    class_blind_tags: bool,
) -> tuple[WderBreakdown, PerBreakdown]:
    ref_tokens = to_token_stream(ref)
    if class_blind_tags:
        key_ref = [_TAG_KEY if is_tag(t) else t for t in ref_tokens]
        key_hyp = [_TAG_KEY if is_tag(t) else t for t in hyp_tokens]
    else:
        key_ref, key_hyp = ref_tokens, hyp_tokens
    alignment = needleman_wunsch(key_ref, key_hyp, s)
    padded = pad_hypothesis(ref_tokens, hyp_tokens, alignment)

    roles: list[SpeakerRole | None] = []
    active = None
    for tok in padded.tokens:
        if is_tag(tok):
            active = SpeakerRole(tok)
        roles.append(active)

    words = errors = unassigned = 0
    t_p = t_c = 0
    ref_role = None
    for i, tok in enumerate(ref_tokens):
        pos = padded.ref_index[i]
        if is_tag(tok):
            ref_role = SpeakerRole(tok)
            t_p += 1
            t_c += is_tag(padded.tokens[pos])
            continue
        words += 1
        if roles[pos] is None:
            unassigned += 1
            errors += 1
        elif roles[pos] is not ref_role:
            errors += 1
    hyp_tags = sum(map(is_tag, hyp_tokens))
    return (
        WderBreakdown(words, errors, unassigned),
        PerBreakdown(t_p, t_c, hyp_tags - t_c),
    )


def wder(
    ref: TaggedTranscript,
    hyp: Hypothesis,
    s: ScoringScheme = DEFAULT_SCHEME,
    class_blind_tags: bool = True,
) -> WderBreakdown:
    return _role_counts(ref, _hyp_tokens(hyp), s, class_blind_tags)[0]


def per(
    ref: TaggedTranscript,
    hyp: Hypothesis,
    s: ScoringScheme = DEFAULT_SCHEME,
    class_blind_tags: bool = True,
) -> PerBreakdown:
    return _role_counts(ref, _hyp_tokens(hyp), s, class_blind_tags)[1]


@dataclass(frozen=True)
class PairMetrics:
    wer: WerBreakdown
    wder: WderBreakdown
    per: PerBreakdown


def score_pair(
    ref: TaggedTranscript,
    hyp: Hypothesis,
    s: ScoringScheme = DEFAULT_SCHEME,
    class_blind_tags: bool = True,
) -> PairMetrics:
    """WER, WDER and PER for one reference/hypothesis pair."""
    tokens = _hyp_tokens(hyp)
    w = wer(strip_tags(ref), [t for t in tokens if not is_tag(t)])
    d, p = _role_counts(ref, tokens, s, class_blind_tags)
    return PairMetrics(w, d, p)


@dataclass(frozen=True)
class MetricsReport:
    """Corpus metrics pooled over pairs (micro-average).

    ``macro`` holds per-pair averaged ratios when requested.
    """

    wer: WerBreakdown
    wder: WderBreakdown
    per: PerBreakdown
    n_pairs: int
    macro: dict | None = field(default=None)

    def value(self, metric: str) -> float:
        if metric == "wer":
            return self.wer.wer
        if metric == "wder":
            return self.wder.wder
        if metric == "per":
            return self.per.per
        raise KeyError(f"unknown metric {metric!r}")

    def to_json(self) -> dict:
        d = {
            "n_pairs": self.n_pairs,
            "wer": self.wer.to_json(),
            "wder": self.wder.to_json(),
            "per": self.per.to_json(),
        }
        if self.macro is not None:
            d["macro"] = dict(self.macro)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "MetricsReport":
        def pick(sub, keys):
            return {k: sub[k] for k in keys if k in sub}

        return cls(
            WerBreakdown(**pick(d["wer"], ("substitutions", "deletions", "insertions", "ref_len"))),
            WderBreakdown(**pick(d["wder"], ("attributed_words", "role_errors", "unassigned_words"))),
            PerBreakdown(**pick(d["per"], ("t_p", "t_c", "spurious_tags"))),
            int(d["n_pairs"]),
            d.get("macro"),
        )


def corpus_metrics(
    pairs: Iterable[tuple[TaggedTranscript, Hypothesis]],
    s: ScoringScheme = DEFAULT_SCHEME,
    macro: bool = False,
    class_blind_tags: bool = True,
) -> MetricsReport:
    results = [score_pair(r, h, s, class_blind_tags) for r, h in pairs]
    if not results:
        raise ValueError("no pairs to score")
    w, d, p = results[0].wer, results[0].wder, results[0].per
    for res in results[1:]:
        w, d, p = w + res.wer, d + res.wder, p + res.per
    macro_vals = None
    if macro:
        n = len(results)
        macro_vals = {
            "wer": sum(r.wer.wer for r in results) / n,
            "wder": sum(r.wder.wder for r in results) / n,
            "per": sum(r.per.per for r in results) / n,
        }
    return MetricsReport(w, d, p, len(results), macro_vals)
