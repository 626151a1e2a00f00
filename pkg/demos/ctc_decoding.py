"""CTC loss, gradients and decoding on small posterior matrices.

Run with ``python3 demos/ctc_decoding.py``.
"""

import numpy as np

from atcsrd.ctc import PosteriorMatrix, Vocabulary, ctc_beam_decode, ctc_greedy_decode, ctc_loss, decode_text

rng = np.random.default_rng(3)
v = Vocabulary.build(["climb", "descend", "roger"])
print("vocabulary:", v.tokens)

# peaked frames spelling "ATCOTAG climb PILOTTAG roger", with a blank after each token
path = [v.index(t) for t in ("ATCOTAG", "climb", "PILOTTAG", "roger")]
frames = [k for t in path for k in (t, t, 0)]
logits = rng.normal(0, 1, (len(frames), len(v)))
logits[np.arange(len(frames)), frames] += 5
p = PosteriorMatrix.from_logits(logits, v)

target = v.encode(["ATCOTAG", "climb", "PILOTTAG", "roger"])
res = ctc_loss(p, target)
print("loss:", round(res.loss, 4))
# gradient with respect to the logits: each row sums to zero
print("gradient row sums:", np.round(res.gradient.sum(axis=1), 12))

print("greedy:", ctc_greedy_decode(p))
for tokens, logp in ctc_beam_decode(p, beam_width=4):
    print(f"beam  {logp:8.3f}  {' '.join(tokens)}")
print("as text:", decode_text(p, decoder="beam"))

# where greedy and beam disagree: blank wins every frame, but the three
# frame paths that collapse to "climb" together outweigh the all-blank one
row = np.full(len(v), 0.25 / (len(v) - 2))
row[0], row[v.index("climb")] = 0.4, 0.35
flat = PosteriorMatrix(np.log(np.tile(row, (2, 1))), v)
print("greedy:", ctc_greedy_decode(flat), " beam:", ctc_beam_decode(flat, beam_width=8)[0][0])
