"""Word alignment, WER, WDER and PER on a handful of hand-made lines.

Run with ``python3 demos/alignment_and_role_metrics.py``.
"""

from atcsrd.align import insert_placeholders, needleman_wunsch
from atcsrd.metrics import corpus_metrics, hypothesis_tokens, per, wder, wer
from atcsrd.transcript import parse_tagged, strip_tags

ref = parse_tagged("ATCOTAG lufthansa one two climb flight level three PILOTTAG climb three lufthansa one two")
hyp_text = "ATCOTAG lufthansa one two climb flight level three climb three PILOTTAG lufthansa one two"
hyp = hypothesis_tokens(hyp_text)

ref_tokens = str(ref).split()
a = needleman_wunsch(ref_tokens, hyp)
print("alignment score:", a.score)
for op in a.ops:
    r = ref_tokens[op.ref_idx] if op.ref_idx is not None else "-"
    h = hyp[op.hyp_idx] if op.hyp_idx is not None else "-"
    print(f"  {op.kind.name:<10} {r:<10} {h}")

# deleted reference words get a placeholder so every word has a counterpart
short = hypothesis_tokens("ATCOTAG lufthansa two climb level three PILOTTAG climb three lufthansa one two")
print("padded:", " ".join(insert_placeholders(ref_tokens, short, needleman_wunsch(ref_tokens, short))))

# WER ignores the tags entirely
print("WER :", wer(strip_tags(ref), [t for t in hyp if not t.endswith("TAG")]))
# the pilot tag arrives two words late: "climb three" goes to the controller
# and the tag itself no longer lines up with the reference tag
print("WDER:", wder(ref, hyp))
print("PER :", per(ref, hyp))

# the smallest case worth memorising: one wrong tag class, no missing tag
small = parse_tagged("ATCOTAG w1 w2 PILOTTAG w3")
wrong_class = parse_tagged("ATCOTAG w1 w2 ATCOTAG w3")
print("small case:", wder(small, wrong_class).wder, per(small, wrong_class).per)

# corpus scores are micro-averaged over all pairs
pairs = [(small, wrong_class), (ref, hyp), (small, hypothesis_tokens("roger w1 w3"))]
report = corpus_metrics(pairs, macro=True)
print("corpus:", report.to_json())
