"""Kneser-Ney perplexity and OOV rates between two synthetic corpora.

Run with ``python3 demos/language_model_and_oov.py``.
"""

from atcsrd.lexstats import lex_report, perplexity, train_lm
from atcsrd.synthetic import bundled_manifest
from atcsrd.transcript import read_manifest, strip_tags


def sentences(name):
    return [strip_tags(e.transcript) for e in read_manifest(bundled_manifest(name))]

train, same, other = sentences("alpha"), sentences("alpha"), sentences("charlie")
m = train_lm(train)
vocab = {w for s in train for w in s}
print("training words:", len(vocab))
print("intra:", lex_report(m, same, vocab).to_json())
print("inter:", lex_report(m, other, vocab).to_json())

# a lower order is smoother but less sharp on seen text
for order in (1, 2, 3, 4):
    print(f"order {order}: ppl {perplexity(train_lm(train, order=order), other):.2f}")

# the smallest corpus, where the numbers can be checked by hand
tiny = train_lm([["a"]])
print("p(a | <s> <s> <s>) =", tiny.prob("a", ["<s>"] * 3))
print("ppl on itself:", perplexity(tiny, [["a"]]))
