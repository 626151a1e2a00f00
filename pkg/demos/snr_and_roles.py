"""Blind SNR estimation and nearest-centroid role classification.

Run with ``python3 demos/snr_and_roles.py``.
"""

import numpy as np

from atcsrd.acoustics import Waveform, snr_ratio, wada_snr
from atcsrd.rolecluster import Embedding, classify, classify_many, fit_centroids
from atcsrd.transcript import SpeakerRole


rng = np.random.default_rng(0)

def speechlike(n_frames=800, frame=320):
    # Laplacian samples under a slowly varying Gamma envelope
    env = np.repeat(rng.gamma(0.7, 1.0, n_frames), frame)
    x = rng.laplace(0, 1, n_frames * frame) * env
    return x / np.sqrt(np.mean(x**2))

print("true   estimated")
estimates = []
for snr in (-5, 0, 5, 10, 20, 30):
    s = speechlike()
    noise = rng.normal(0, 1, s.size) * 10 ** (-snr / 20)
    est = wada_snr(Waveform(s + noise, 16000)).snr_db
    estimates.append(est)
    print(f"{snr:4d}   {est:6.2f}")

# the estimate does not depend on recording gain
x = speechlike() + rng.normal(0, 0.3, 800 * 320)
print("gain x1 / x100:", wada_snr(Waveform(x, 16000)).snr_db, wada_snr(Waveform(100 * x, 16000)).snr_db)
# comparing a clean training set with a noisy test set
print("train/test mean SNR ratio:", snr_ratio(np.mean(estimates[3:]), np.mean(estimates[1:3])))

# roles from embeddings: one centroid per role from 50 random samples each
dim = 32
mu = {SpeakerRole.ATCO: rng.normal(0, 1, dim), SpeakerRole.PILOT: rng.normal(0, 1, dim)}
samples = [Embedding(mu[r] + rng.normal(0, 0.8, dim), r, f"{r.name}{k}") for r in mu for k in range(120)]
c = fit_centroids(samples, per_class=50, seed=1)
probe = mu[SpeakerRole.PILOT] + rng.normal(0, 0.8, dim)
role, scores = classify(probe, c)
print("probe:", role.name, {k.name: round(v, 3) for k, v in scores.items()})

held_out = np.stack([mu[r] + rng.normal(0, 0.8, dim) for r in mu for _ in range(500)])
truth = np.array([True] * 500 + [False] * 500)  # True means ATCO
print("held-out accuracy:", np.mean(classify_many(held_out, c) == truth))
