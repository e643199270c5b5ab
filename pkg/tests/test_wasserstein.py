import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from regime_lab.errors import EmptyMeasure, InstanceTooLarge, UnequalAtomCounts, UnsupportedOrder
from regime_lab.measures import EmpiricalMeasure
from regime_lab.wasserstein import (
    barycenter_atoms,
    ot_oracle,
    wasserstein_barycenter,
    wasserstein_distance,
)

atoms = lambda n: arrays(float, n, elements=st.floats(-50, 50))


def test_examples():
    mu = EmpiricalMeasure([0.3, -1.0, 2.0])
    assert wasserstein_distance(mu, mu, 1) == 0
    assert wasserstein_distance([0], [1], 1) == 1
    assert wasserstein_distance([0, 2], [1, 3], 2) == pytest.approx(1.0, abs=1e-15)
    assert ot_oracle([0, 2], [1, 3], 2) == pytest.approx(1.0, abs=1e-15)


def test_errors():
    with pytest.raises(EmptyMeasure):
        wasserstein_distance([], [1.0])
    with pytest.raises(UnsupportedOrder):
        wasserstein_distance([0.0], [1.0], 0.5)
    with pytest.raises(InstanceTooLarge):
        ot_oracle(np.zeros(9), np.zeros(9))


def test_matches_oracle_equal_counts(rng):
    for _ in range(100):
        n = rng.integers(1, 7)
        a, b = rng.normal(size=n), rng.normal(size=n)
        p = rng.choice([1, 2, 3])
        assert abs(wasserstein_distance(a, b, p) - ot_oracle(a, b, p)) < 1e-9


def test_unequal_counts_match_oracle_and_scipy(rng):
    for _ in range(100):
        n, m = rng.integers(1, 7, size=2)
        a, b = rng.normal(size=n), rng.normal(size=m)
        for p in (1, 2):
            assert abs(wasserstein_distance(a, b, p) - ot_oracle(a, b, p)) < 1e-9
        assert abs(wasserstein_distance(a, b, 1) - stats.wasserstein_distance(a, b)) < 1e-9


@settings(max_examples=200)
@given(st.integers(1, 8).flatmap(lambda n: st.tuples(atoms(n), atoms(n), atoms(n))), st.sampled_from([1, 2, 3]))
def test_metric_axioms(abc, p):
    a, b, c = abc
    dab = wasserstein_distance(a, b, p)
    assert dab == wasserstein_distance(b, a, p)
    assert wasserstein_distance(a, a, p) == 0
    assert dab <= wasserstein_distance(a, c, p) + wasserstein_distance(c, b, p) + 1e-12 * (1 + dab)


@given(st.integers(1, 8).flatmap(lambda n: st.tuples(atoms(n), atoms(n))), st.floats(-100, 100), st.floats(-5, 5))
def test_translation_and_scaling(ab, c, s):
    a, b = ab
    for p in (1, 2):
        d = wasserstein_distance(a, b, p)
        assert wasserstein_distance(a + c, b + c, p) == pytest.approx(d, abs=1e-12 * (1 + abs(c)) * 1e3)
        assert wasserstein_distance(s * a, s * b, p) == pytest.approx(abs(s) * d, rel=1e-12, abs=1e-12)


def test_barycenter_examples():
    mu = EmpiricalMeasure([1.0, 2.0, 5.0])
    assert np.array_equal(wasserstein_barycenter([mu], 1).atoms, mu.atoms)
    assert wasserstein_barycenter([EmpiricalMeasure([0.0]), EmpiricalMeasure([1.0])], 2).atoms.tolist() == [0.5]
    fam = [EmpiricalMeasure([v]) for v in (0.0, 1.0, 10.0)]
    bary = wasserstein_barycenter(fam, 1)
    assert bary.atoms.tolist() == [1.0]
    cost = lambda x: sum(wasserstein_distance(m, [x], 1) for m in fam)
    assert cost(1.0) == 10.0
    grid = np.linspace(0, 10, 1001)
    assert all(cost(1.0) <= cost(x) + 1e-12 for x in grid)
    # even count: midpoint of the two central values
    assert barycenter_atoms(np.array([[0.0], [1.0]]), 1).tolist() == [0.5]


def test_barycenter_errors():
    with pytest.raises(UnequalAtomCounts):
        wasserstein_barycenter([EmpiricalMeasure([0.0]), EmpiricalMeasure([0.0, 1.0])])
    with pytest.raises(UnsupportedOrder):
        wasserstein_barycenter([EmpiricalMeasure([0.0])], 3)
    with pytest.raises(EmptyMeasure):
        wasserstein_barycenter([])


def _objective(fam, cand, p):
    return sum(wasserstein_distance(f, cand, p) ** p for f in fam)


@pytest.mark.parametrize("p", [1, 2])
def test_barycenter_local_optimality(rng, p):
    for _ in range(30):
        M, N = rng.integers(1, 10), rng.integers(1, 6)
        fam = rng.normal(size=(M, N))
        b = barycenter_atoms(np.sort(fam, axis=1), p)
        best = _objective(fam, b, p)
        for _ in range(50):
            cand = b + rng.normal(scale=0.3, size=N) * rng.integers(0, 2, size=N)
            assert best <= _objective(fam, cand, p) + 1e-10


def test_barycenter_p1_exhaustive_single_atom(rng):
    # single-atom measures: the p=1 objective is piecewise linear with kinks at the data
    for _ in range(20):
        v = rng.normal(size=rng.integers(1, 8))
        fam = [[x] for x in v]
        b = barycenter_atoms(np.array(fam), 1)[0]
        assert _objective(fam, [b], 1) <= min(_objective(fam, [x], 1) for x in v) + 1e-12
