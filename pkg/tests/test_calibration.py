import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from scerlab.calibration import (
    FingerprintMismatch,
    ThresholdSet,
    binomial_estimate,
    calibrate,
    empirical_threshold,
    rayleigh_scale_for,
    rayleigh_scale_r3,
    rayleigh_threshold,
    verify_pfa,
    with_rayleigh_r3,
)
from scerlab.config import Hypothesis
from scerlab.detector import DETECTORS
from scerlab.engine import run_trials


def test_order_statistic_oracle():
    values = np.arange(1, 101)
    gamma = empirical_threshold(values, 0.02, min_exceedances=1)
    assert gamma == 98
    assert np.sum(values > gamma) == 2


def test_pfa_near_one_gives_minimum():
    values = np.random.default_rng(0).standard_normal(100)
    assert empirical_threshold(values, 0.999999, min_exceedances=1) == values.min()


def test_constant_sample():
    gamma = empirical_threshold(np.full(5000, 3.0), 0.02)
    assert gamma == 3.0
    assert np.mean(np.full(5000, 3.0) > gamma) == 0


def test_too_few_samples_rejected():
    with pytest.raises(ValueError, match="too few"):
        empirical_threshold(np.arange(100), 0.02)
    for pfa in (0.0, 1.0):
        with pytest.raises(ValueError):
            empirical_threshold(np.arange(100), pfa, min_exceedances=1)


@given(st.integers(0, 2**32 - 1), st.integers(50, 3000), st.floats(0.001, 0.5))
def test_exceedance_fraction_at_most_pfa(seed, m, pfa):
    values = np.random.default_rng(seed).standard_normal(m)
    gamma = empirical_threshold(values, pfa, min_exceedances=0)
    frac = np.mean(values > gamma)
    assert frac <= pfa + 1e-12
    assert frac > pfa - 1 / m - 1e-12


@given(st.integers(0, 2**32 - 1), st.floats(0.001, 0.5), st.floats(0.001, 0.5))
def test_threshold_monotone_in_pfa(seed, p1, p2):
    values = np.random.default_rng(seed).exponential(size=1000)
    lo, hi = sorted((p1, p2))
    assert empirical_threshold(values, lo, 0) >= empirical_threshold(values, hi, 0)


def test_rayleigh_closed_forms():
    assert rayleigh_scale_r3(4.092e6, 1023, 400) == pytest.approx(rayleigh_scale_r3(4.092e6, 1023, 100) / 2)
    assert rayleigh_threshold(2.0, math.exp(-0.5)) == pytest.approx(2.0)
    assert rayleigh_threshold(1.0, 0.02) == pytest.approx(2.797149623, rel=1e-9)
    with pytest.raises(ValueError):
        rayleigh_threshold(0.0, 0.02)
    with pytest.raises(ValueError):
        rayleigh_scale_r3(1.0, 0, 1)


def test_r3_h0_matches_rayleigh(small_config):
    trials = 20_000
    r3 = run_trials(small_config, Hypothesis.H0, trials, stream="calibration")[:, 2]
    s = rayleigh_scale_for(small_config)
    assert r3.mean() == pytest.approx(s * math.sqrt(math.pi / 2), rel=0.02)
    assert stats.kstest(r3, stats.rayleigh(scale=s).cdf).pvalue > 0.01
    for pfa in (0.05, 0.02, 0.01):
        emp = empirical_threshold(r3, pfa)
        assert rayleigh_threshold(s, pfa) == pytest.approx(emp, rel=0.03)


@pytest.fixture(scope="module")
def thresholds_and_config():
    from scerlab.config import ScenarioConfig
    cfg = ScenarioConfig(window_begin_s=50e-6, window_end_s=50e-6, n_symbols=20, master_seed=11)
    return calibrate(cfg, pfa=0.02, trials=5000), cfg


def test_calibrate_structure(thresholds_and_config):
    ts, cfg = thresholds_and_config
    assert set(ts.thresholds) == set(DETECTORS)
    assert all(ts[d] > 0 for d in DETECTORS)
    assert ts.methods == {d: "empirical" for d in DETECTORS}
    assert ts.fingerprint == cfg.fingerprint()
    assert ts.rayleigh_r3 == pytest.approx(ts["R3"], rel=0.05)


def test_calibrate_reproducible(thresholds_and_config):
    ts, cfg = thresholds_and_config
    assert calibrate(cfg, pfa=0.02, trials=5000).to_json() == ts.to_json()


def test_pfa_closure(thresholds_and_config):
    ts, cfg = thresholds_and_config
    for d, est in verify_pfa(ts, cfg, trials=5000).items():
        assert abs(est.rate - 0.02) < 3 * math.sqrt(0.02 * 0.98 / 5000) + 0.002, d


def test_extreme_thresholds(thresholds_and_config):
    ts, cfg = thresholds_and_config
    inf = ThresholdSet(0.02, {d: math.inf for d in DETECTORS}, {}, 0, cfg.fingerprint(), 0)
    zero = ThresholdSet(0.02, {d: 0.0 for d in DETECTORS}, {}, 0, cfg.fingerprint(), 0)
    assert all(e.rate == 0 for e in verify_pfa(inf, cfg, 1000).values())
    assert all(e.rate == 1 for e in verify_pfa(zero, cfg, 1000).values())


def test_json_round_trip(tmp_path, thresholds_and_config):
    ts, cfg = thresholds_and_config
    odd = ThresholdSet(0.02, dict(ts.thresholds, R2=math.nan, R4=math.inf), ts.methods, 10, ts.fingerprint, 3)
    path = tmp_path / "t.json"
    odd.save(path)
    back = ThresholdSet.load(path, cfg)
    assert math.isnan(back["R2"]) and back["R4"] == math.inf
    assert back.to_json() == odd.to_json()


def test_fingerprint_mismatch(tmp_path, thresholds_and_config):
    ts, cfg = thresholds_and_config
    ts.save(tmp_path / "t.json")
    with pytest.raises(FingerprintMismatch):
        ThresholdSet.load(tmp_path / "t.json", cfg.replace(n_symbols=21))
    # the seed and the attack do not change the H0 statistics
    ThresholdSet.load(tmp_path / "t.json", cfg.replace(master_seed=99, cn0_detector_spoof_dbhz=45.0))


def test_bad_file(tmp_path):
    (tmp_path / "x.json").write_text('{"format": "other"}')
    with pytest.raises(ValueError):
        ThresholdSet.load(tmp_path / "x.json")


def test_with_rayleigh(thresholds_and_config):
    ts, _ = thresholds_and_config
    r = with_rayleigh_r3(ts)
    assert r["R3"] == ts.rayleigh_r3 and r.methods["R3"] == "rayleigh"


def test_binomial_estimate():
    est = binomial_estimate(90, 100)
    assert est.rate == 0.9
    assert est.ci_low < 0.9 < est.ci_high
    assert est.ci_low == pytest.approx(0.8256, abs=1e-3)


def test_verify_needs_enough_trials(thresholds_and_config):
    ts, cfg = thresholds_and_config
    with pytest.raises(ValueError):
        verify_pfa(ts, cfg, trials=999)
