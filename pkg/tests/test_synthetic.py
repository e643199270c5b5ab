import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from regime_lab import synthetic as syn
from regime_lab.errors import ConfigError, Infeasible

DT = 1 / 1764


def test_schedule_examples():
    s = syn.build_schedule(20, 0)
    assert s.intervals == () and not s.mask().any() and s.total_steps == 35280
    s = syn.build_schedule(20, 10, 882, seed=4)
    assert len(s.intervals) == 10 and all(l == 882 for _, l in s.intervals)
    starts = [a for a, _ in s.intervals]
    assert all(a + 882 + 2 < b for a, b in zip(starts, starts[1:]))
    assert s.mask().sum() == 8820


def test_schedule_infeasible():
    with pytest.raises(Infeasible):
        syn.build_schedule(1, 2, 900)
    with pytest.raises(ConfigError):
        syn.RegimeSchedule(100, ((0, 10), (12, 5)))


@settings(max_examples=1000, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 12), st.sampled_from(["fixed", "random"]))
def test_schedule_fuzz(seed, r, policy):
    s = syn.build_schedule(3, r, 200, policy, seed)
    s.validate()
    assert len(s.intervals) == r
    if policy == "random":
        assert all(100 <= l <= 300 for _, l in s.intervals)


def test_true_moments_examples():
    m, v = syn.true_moments("gbm", syn.GBM_BULL, DT)
    assert abs(m) < 1e-20 and v == pytest.approx(2.268e-5, rel=1e-3)
    assert round(v, 7) == 2.27e-5
    m, v = syn.true_moments("gbm", syn.GBM_BEAR, DT)
    assert m == pytest.approx(-3.68e-5, rel=2e-3) and v == pytest.approx(5.1e-5, rel=1e-3)
    m, v = syn.true_moments("merton", syn.MERTON_BULL, DT)
    assert m == pytest.approx(0.13 / 1764, rel=1e-12) and v == pytest.approx(2.428e-5, rel=2e-3)
    m, v = syn.true_moments("merton", syn.MERTON_BEAR, DT)
    assert m == pytest.approx(-0.53 / 1764, rel=1e-12) and v == pytest.approx(0.276 / 1764, rel=1e-12)
    # lam = 0 reduces to gBm; build with the dataclass bypassing validation
    p = syn.MertonParams.__new__(syn.MertonParams)
    object.__setattr__(p, "mu", 0.02), object.__setattr__(p, "sigma", 0.2)
    object.__setattr__(p, "lam", 0.0), object.__setattr__(p, "gamma", 0.3), object.__setattr__(p, "delta", 0.1)
    assert syn.true_moments("merton", p, DT) == syn.true_moments("gbm", syn.GBM_BULL, DT)


def test_param_validation():
    with pytest.raises(ConfigError):
        syn.GbmParams(0.0, 0.0)
    with pytest.raises(ConfigError):
        syn.MertonParams(0, 0.2, 0.0, 0, 0.1)


def test_gbm_tiny_sigma():
    sch = syn.build_schedule(1, 0)
    p = syn.simulate_gbm(sch, syn.GbmParams(0, 1e-12), syn.GbmParams(0, 1e-12), seed=1)
    assert np.allclose(p.prices.prices, 100.0, rtol=1e-6)
    assert len(p.prices) == sch.total_steps + 1


def test_determinism_and_regime_isolation():
    sch = syn.build_schedule(2, 2, 300, seed=1)
    a = syn.simulate_merton(sch, syn.MERTON_BULL, syn.MERTON_BEAR, seed=5)
    b = syn.simulate_merton(sch, syn.MERTON_BULL, syn.MERTON_BEAR, seed=5)
    assert np.array_equal(a.prices.prices, b.prices.prices)
    other = syn.MertonParams(0.3, 0.1, 3.0, 0.05, 0.02)
    m = sch.mask()
    ra, _ = syn.merton_increments(m, syn.MERTON_BULL, syn.MERTON_BEAR, DT, 5)
    rc, _ = syn.merton_increments(m, syn.MERTON_BULL, other, DT, 5)
    assert np.array_equal(ra[~m], rc[~m]) and np.all(ra[m] != rc[m])
    assert np.allclose(np.diff(np.log(a.prices.prices)), ra, rtol=0, atol=1e-12)
    g1 = syn.gbm_increments(m, syn.GBM_BULL, syn.GBM_BEAR, DT, 5)
    g2 = syn.gbm_increments(m, syn.GBM_BULL, syn.GbmParams(0.5, 0.9), DT, 5)
    assert np.array_equal(g1[~m], g2[~m]) and np.all(g1[m] != g2[m])


def test_increments_slice_independent():
    mask = np.zeros(1000, dtype=bool)
    mask[300:600] = True
    full = syn.gbm_increments(mask, syn.GBM_BULL, syn.GBM_BEAR, DT, 7)
    part = syn.gbm_increments(mask[401:777], syn.GBM_BULL, syn.GBM_BEAR, DT, 7, start=401)
    assert np.array_equal(full[401:777], part)


def test_merton_small_lambda_matches_gbm():
    n = 100_000
    mask = np.zeros(n, dtype=bool)
    tiny = syn.MertonParams(0.02, 0.2, 1e-12, 0.05, 0.1)
    inc, counts = syn.merton_increments(mask, tiny, tiny, DT, 11)
    assert counts.sum() == 0
    ref = syn.gbm_increments(mask, syn.GBM_BULL, syn.GBM_BULL, DT, 99)
    assert stats.ks_2samp(inc, ref).pvalue > 0.01


def test_jump_counts_poisson():
    sch = syn.build_schedule(20, 0)
    p = syn.simulate_merton(sch, syn.MERTON_BULL, syn.MERTON_BEAR, seed=2)
    lam_t = 5.0 * 20
    assert abs(p.jump_counts.sum() - lam_t) < 3 * np.sqrt(lam_t)


def test_metadata_round_trip():
    sch = syn.build_schedule(1, 1, 100, seed=0)
    p = syn.simulate_gbm(sch, syn.GBM_BULL, syn.GBM_BEAR, seed=0)
    meta = p.metadata()
    assert syn.RegimeSchedule.from_dict(meta["schedule"]) == sch
    assert meta["bull"] == {"mu": 0.02, "sigma": 0.2}
