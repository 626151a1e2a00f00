"""Lexical dataset diagnostics: Kneser-Ney n-gram LM, perplexity and OOV rate.

The language model is interpolated Kneser-Ney with one absolute discount for
all orders. Each sentence is padded with ``order - 1`` start symbols and one
end symbol, and every position from the first word up to ``</s>`` yields one
full-order n-gram window. The highest order uses raw window counts; a lower
order k-gram ``v`` uses its continuation count, the number of distinct tokens
``x`` for which ``x v`` is a suffix of some window. The unigram level is
interpolated with a uniform distribution over the predictable vocabulary
(training words, ``</s>`` and ``<unk>``), so unseen words get a share of
the discounted mass.
"""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import EmptyCorpus
from .transcript import is_tag

__all__ = [
    "BOS",
    "EOS",
    "UNK",
    "NGramModel",
    "LexReport",
    "train_lm",
    "perplexity",
    "oov_rate",
    "lex_report",
]

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"


def _clean(sentences: Iterable[Sequence[str]]) -> list[list[str]]:
    return [[w for w in s if not is_tag(w)] for s in sentences]


class NGramModel:
    """Interpolated Kneser-Ney model built from full-order window counts.

    Instances are immutable after construction and safe to share between
    threads.
    """

    def __init__(
        self,
        windows: Counter,
        words: Iterable[str],
        order: int = 4,
        discount: float = 0.75,
    ):
        if order < 1:
            raise ValueError("order must be >= 1")
        if not 0 < discount < 1:
            raise ValueError("discount must be in (0, 1)")
        self.order = order
        self.discount = discount
        self.windows = Counter(windows)
        # predictable symbols, in a fixed order
        self.vocab = tuple(sorted(set(words) - {BOS, EOS, UNK})) + (EOS, UNK)
        self._vocab_set = frozenset(self.vocab)

        # counts[k][ngram] for k = 1..order
        counts: list[dict] = [dict() for _ in range(order + 1)]
        counts[order] = dict(self.windows)
        for k in range(order - 1, 0, -1):
            left = defaultdict(set)
            for gram in counts[k + 1]:
                left[gram[1:]].add(gram[0])
            counts[k] = {g: len(xs) for g, xs in left.items()}
        self._counts = counts

        # per context: total count and number of distinct continuations
        self._ctx_total: list[dict] = [dict() for _ in range(order + 1)]
        self._ctx_types: list[dict] = [dict() for _ in range(order + 1)]
        for k in range(1, order + 1):
            tot = defaultdict(int)
            typ = defaultdict(int)
            for gram, c in counts[k].items():
                tot[gram[:-1]] += c
                typ[gram[:-1]] += 1
            self._ctx_total[k] = dict(tot)
            self._ctx_types[k] = dict(typ)

    @property
    def vocabulary(self) -> frozenset[str]:
        """All known symbols including ``<s>``."""
        return self._vocab_set | {BOS}

    @property
    def words(self) -> frozenset[str]:
        return self._vocab_set - {EOS, UNK}

    def counts(self, k: int) -> dict:
        """n-gram counts at level ``k`` (continuation counts below the top)."""
        return dict(self._counts[k])

    def contexts(self) -> list[tuple[str, ...]]:
        """Every context that has statistics at some order."""
        out = set()
        for k in range(1, self.order + 1):
            out.update(self._ctx_total[k])
        return sorted(out, key=lambda h: (len(h), h))

    def map_token(self, w: str) -> str:
        return w if w in self._vocab_set or w == BOS else UNK

    def prob(self, word: str, context: Sequence[str] = ()) -> float:
        """p(word | context) with out-of-vocabulary symbols mapped to ``<unk>``."""
        word = self.map_token(word)
        if word == BOS:
            return 0.0
        hist = tuple(self.map_token(w) for w in context)
        hist = hist[max(0, len(hist) - self.order + 1) :]
        d = self.discount
        p = 1.0 / len(self.vocab)
        for k in range(1, self.order + 1):
            if k - 1 > len(hist):
                break
            h = hist[len(hist) - k + 1 :] if k > 1 else ()
            total = self._ctx_total[k].get(h, 0)
            if not total:
                continue
            c = self._counts[k].get(h + (word,), 0)
            p = max(c - d, 0.0) / total + d * self._ctx_types[k][h] / total * p
        return p

    def logprob_sentence(self, sentence: Sequence[str]) -> tuple[float, int]:
        """Natural-log probability of a sentence and its token count (with ``</s>``)."""
        hist = [BOS] * (self.order - 1)
        total = 0.0
        words = [w for w in sentence if not is_tag(w)] + [EOS]
        for w in words:
            total += math.log(self.prob(w, hist))
            hist.append(self.map_token(w))
        return total, len(words)

    # serialization: only the top-order windows are stored, everything else
    # is derived on load
    def to_json(self) -> dict:
        return {
            "format": "atcsrd-kn-windows",
            "order": self.order,
            "discount": self.discount,
            "vocab": list(self.vocab[:-2]),
            "windows": [[list(g), c] for g, c in sorted(self.windows.items())],
        }

    @classmethod
    def from_json(cls, d: dict) -> "NGramModel":
        if d.get("format") != "atcsrd-kn-windows":
            raise ValueError("not an atcsrd n-gram model")
        windows = Counter({tuple(g): int(c) for g, c in d["windows"]})
        return cls(windows, d["vocab"], int(d["order"]), float(d["discount"]))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json(), f, sort_keys=True)

    @classmethod
    def load(cls, path) -> "NGramModel":
        with open(path, encoding="utf-8") as f:
            return cls.from_json(json.load(f))


def train_lm(
    train_sentences: Iterable[Sequence[str]],
    order: int = 4,
    discount: float = 0.75,
    unk_hapax: bool = False,
) -> NGramModel:
    """Build an interpolated Kneser-Ney model; tags are removed first.

    With ``unk_hapax`` words seen once in training are replaced by ``<unk>``
    so that the unknown-word probability is estimated from real contexts.
    """
    sentences = [s for s in _clean(train_sentences) if s]
    if not sentences:
        raise EmptyCorpus("no training sentences")
    if unk_hapax:
        freq = Counter(w for s in sentences for w in s)
        sentences = [[w if freq[w] > 1 else UNK for w in s] for s in sentences]
    windows: Counter = Counter()
    for s in sentences:
        padded = [BOS] * (order - 1) + s + [EOS]
        for i in range(order - 1, len(padded)):
            windows[tuple(padded[i - order + 1 : i + 1])] += 1
    words = {w for s in sentences for w in s}
    return NGramModel(windows, words, order, discount)


def perplexity(m: NGramModel, test_sentences: Iterable[Sequence[str]]) -> float:
    total = 0.0
    n = 0
    for s in test_sentences:
        lp, k = m.logprob_sentence(s)
        total += lp
        n += k
    if n == 0:
        raise EmptyCorpus("no test sentences")
    return math.exp(-total / n)


@dataclass(frozen=True)
class LexReport:
    token_count: int
    oov_token_count: int
    perplexity: float | None = None

    @property
    def oov_rate(self) -> float:
        return self.oov_token_count / self.token_count

    def to_json(self) -> dict:
        return {
            "token_count": self.token_count,
            "oov_token_count": self.oov_token_count,
            "oov_rate": self.oov_rate,
            "perplexity": self.perplexity,
        }


def oov_rate(train_vocab: Iterable[str], test_sentences: Iterable[Sequence[str]]) -> LexReport:
    """Token-level OOV rate of the test sentences; tags are not counted."""
    vocab = set(train_vocab)
    tokens = [w for s in _clean(test_sentences) for w in s]
    if not tokens:
        raise EmptyCorpus("no test tokens")
    return LexReport(len(tokens), sum(w not in vocab for w in tokens))


def lex_report(
    m: NGramModel,
    test_sentences: Iterable[Sequence[str]],
    train_vocab: Iterable[str] | None = None,
) -> LexReport:
    """Perplexity and OOV rate of a test split.

    OOV is measured against ``train_vocab`` when given, otherwise against the
    model's words (which lack the hapaxes of a ``unk_hapax`` model).
    """
    test = _clean(test_sentences)
    oov = oov_rate(m.words if train_vocab is None else train_vocab, test)
    return LexReport(oov.token_count, oov.oov_token_count, perplexity(m, test))
