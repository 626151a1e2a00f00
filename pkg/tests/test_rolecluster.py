import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from atcsrd.errors import DimensionMismatch, InsufficientSamples, ZeroVector
from atcsrd.rolecluster import (
    Embedding,
    RoleCentroids,
    classify,
    classify_many,
    cosine,
    fit_centroids,
    read_embeddings,
)
from atcsrd.transcript import SpeakerRole

A, P = SpeakerRole.ATCO, SpeakerRole.PILOT


def _samples(rng, n_per, dim=8, sep=3.0):
    mu_a = rng.normal(0, 1, dim) * sep
    mu_p = rng.normal(0, 1, dim) * sep
    out = []
    for k in range(n_per):
        out.append(Embedding(mu_a + rng.normal(0, 1, dim), A, f"a{k:03d}"))
        out.append(Embedding(mu_p + rng.normal(0, 1, dim), P, f"p{k:03d}"))
    return out


def test_constant_classes():
    s = [Embedding([1.0, 2.0], A, f"a{i}") for i in range(3)] + [Embedding([0.0, 5.0], P, f"p{i}") for i in range(3)]
    c = fit_centroids(s, per_class=3)
    np.testing.assert_array_equal(c.atco, [1.0, 2.0])
    np.testing.assert_array_equal(c.pilot, [0.0, 5.0])


def test_mean_of_two():
    s = [Embedding([1.0, 0.0], A, "a1"), Embedding([0.0, 1.0], A, "a2"), Embedding([1.0, 1.0], P, "p1"), Embedding([2.0, 2.0], P, "p2")]
    c = fit_centroids(s, per_class=2)
    np.testing.assert_allclose(c.atco, [0.5, 0.5])


def test_insufficient_and_mismatch():
    rng = np.random.default_rng(0)
    s = _samples(rng, 50)
    short = [e for e in s if e.label is A] + [e for e in s if e.label is P][:49]
    with pytest.raises(InsufficientSamples):
        fit_centroids(short, per_class=50)
    with pytest.raises(DimensionMismatch):
        fit_centroids(s + [Embedding(np.ones(3), A, "odd")], per_class=5)


def test_seeded_and_order_independent():
    rng = np.random.default_rng(1)
    s = _samples(rng, 80)
    c1 = fit_centroids(s, per_class=50, seed=9)
    c2 = fit_centroids(list(reversed(s)), per_class=50, seed=9)
    assert c1.atco.tobytes() == c2.atco.tobytes() and c1.pilot.tobytes() == c2.pilot.tobytes()
    c3 = fit_centroids(s, per_class=50, seed=10)
    assert not np.array_equal(c1.atco, c3.atco)


def test_normalize_flag():
    s = [
        Embedding([10.0, 0.0], A, "a1"),
        Embedding([0.0, 1.0], A, "a2"),
        Embedding([1.0, 1.0], P, "p1"),
        Embedding([2.0, 2.0], P, "p2"),
    ]
    np.testing.assert_allclose(fit_centroids(s, per_class=2).atco, [5.0, 0.5])
    np.testing.assert_allclose(fit_centroids(s, per_class=2, normalize=True).atco, [0.5, 0.5])


def test_classify_examples():
    c = RoleCentroids(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    role, scores = classify(Embedding([1.0, 0.0]), c)
    assert role is A and scores[A] == pytest.approx(1.0)
    assert classify(np.array([0.0, 3.0]), c)[0] is P
    # exact tie goes to ATCO
    assert classify(np.array([1.0, 1.0]), c)[0] is A


def test_classify_errors():
    c = RoleCentroids(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    with pytest.raises(ZeroVector):
        classify(np.zeros(2), c)
    with pytest.raises(ZeroVector):
        Embedding([0.0, 0.0])
    with pytest.raises(DimensionMismatch):
        classify(np.ones(3), c)
    with pytest.raises(DimensionMismatch):
        RoleCentroids(np.ones(2), np.ones(3))
    with pytest.raises(ZeroVector):
        RoleCentroids(np.zeros(2), np.ones(2))
    with pytest.raises(ZeroVector):
        classify_many(np.array([[1.0, 0.0], [0.0, 0.0]]), c)


def test_brute_force_agreement_100_points():
    rng = np.random.default_rng(2)
    s = _samples(rng, 60)
    c = fit_centroids(s, per_class=50)
    pts = np.stack([e.values for e in s[:100]])
    fast = classify_many(pts, c)
    for x, f in zip(pts, fast):
        ca = sum(a * b for a, b in zip(x, c.atco)) / (sum(a * a for a in x) ** 0.5 * sum(a * a for a in c.atco) ** 0.5)
        cp = sum(a * b for a, b in zip(x, c.pilot)) / (sum(a * a for a in x) ** 0.5 * sum(a * a for a in c.pilot) ** 0.5)
        assert classify(x, c)[0] is (A if ca >= cp else P)
        assert bool(f) == (ca >= cp)


@given(
    st.lists(st.floats(-10, 10), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 1e-3),
    st.floats(1e-3, 1e3),
)
def test_scale_invariance(v, k):
    c = RoleCentroids(np.array([1.0, 2.0, -1.0]), np.array([-0.5, 1.0, 2.0]))
    v = np.array(v)
    assert classify(v, c)[0] is classify(k * v, c)[0]


def test_cosine():
    assert cosine(np.array([1.0, 0.0]), np.array([2.0, 0.0])) == pytest.approx(1.0)
    assert cosine(np.array([1.0, 0.0]), np.array([0.0, 2.0])) == pytest.approx(0.0)


def test_io(tmp_path):
    p = tmp_path / "e.jsonl"
    p.write_text(
        json.dumps({"id": "x", "label": "ATCO", "vector": [1, 2]}) + "\n\n"
        + json.dumps({"id": "y", "vector": [0, 1]}) + "\n"
    )
    es = read_embeddings(p)
    assert [(e.id, e.label) for e in es] == [("x", A), ("y", None)]
    c = RoleCentroids(np.array([1.0, 0.5]), np.array([0.25, 1.0]))
    c.save(tmp_path / "c.json")
    c2 = RoleCentroids.load(tmp_path / "c.json")
    assert np.array_equal(c2.atco, c.atco) and np.array_equal(c2.pilot, c.pilot)
