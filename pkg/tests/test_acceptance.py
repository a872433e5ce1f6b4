"""Acceptance criteria, one PASS/FAIL line each.

Run with ``pytest -v tests/test_acceptance.py`` or ``python3 tests/test_acceptance.py``.
The lines are printed even when pytest captures output. The Monte Carlo
criteria run at their full trial counts and take a while on one core.
"""
from __future__ import annotations

import functools
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from scerlab.analysis import (
    KeyAssumption,
    OsnmaConfig,
    clock_masking_time,
    osnma_symbol_budget,
    spoofer_decision_time,
)
from scerlab.attack import spoofer_estimate_stream
from scerlab.calibration import calibrate, empirical_threshold, rayleigh_scale_for, rayleigh_threshold, verify_pfa
from scerlab.campaign import CalibrationCache, estimate_pd, required_symbols
from scerlab.channel import coherence_time
from scerlab.config import Hypothesis
from scerlab.engine import run_trials
from scerlab.reference import reference_cases
from scerlab.waveform import generate_code

pytestmark = pytest.mark.acceptance

TRIALS_PER_POINT = 2000
CALIBRATION_TRIALS = 10_000
_CACHE = CalibrationCache()


def _case(label: str):
    """Reference case by its C/N0 triple and window, e.g. ``"40/40/40 awgn 250"``."""
    triple, channel, window = label.split()
    want = tuple(float(x) for x in triple.split("/"))
    for c in reference_cases():
        cfg = c.config
        got = (cfg.cn0_detector_real_dbhz, cfg.cn0_detector_spoof_dbhz, cfg.cn0_spoofer_real_dbhz)
        if got == want and cfg.channel.kind.value == channel and round(cfg.window_begin_s * 1e6) == int(window):
            return c
    raise KeyError(label)


@functools.lru_cache(maxsize=None)
def _required(label: str):
    return required_symbols(_case(label).config, "R3", 0.9, trials_per_point=TRIALS_PER_POINT,
                            calibration_trials=CALIBRATION_TRIALS, cache=_CACHE)


def _fmt_required(res) -> str:
    if not res.reached:
        return "not reached"
    return f"{res.n_b} (crossing {res.crossing:.0f})"


def criterion_1():
    t45 = spoofer_decision_time(45, 0.1) * 1e6
    t40 = spoofer_decision_time(40, 0.01) * 1e6
    m1, m2 = clock_masking_time(26e-6, 1e-7), clock_masking_time(271e-6, 1e-7)
    tc = coherence_time(100 / 3.6, 1.57542e9) * 1e3
    ok = (abs(t45 - 25.97) <= 0.05 and abs(t40 - 271) <= 1 and math.isclose(m1, 260, rel_tol=1e-12)
          and math.isclose(m2, 2710, rel_tol=1e-12) and abs(tc - 6.85) <= 0.2)
    return ok, f"T_spof={t45:.3f} us / {t40:.2f} us, masking={m1:g} s / {m2:g} s, T_c={tc:.3f} ms"


def criterion_2():
    pred = OsnmaConfig()
    key64 = OsnmaConfig(key_assumption=KeyAssumption.FIRST_64_UNPREDICTABLE)
    got = [osnma_symbol_budget(pred, 15), osnma_symbol_budget(pred, 45), osnma_symbol_budget(pred, 60),
           osnma_symbol_budget(key64, 15), osnma_symbol_budget(key64, 60)]
    return got == [80, 240, 320, 144, 576], f"budgets {got} (expected [80, 240, 320, 144, 576])"


def criterion_3():
    fs, traces = 4.092e6, 100_000
    m = round(spoofer_decision_time(45, 0.1) * fs)
    code = generate_code(1)
    rng = np.random.default_rng(20240)
    wrong = 0
    for i in range(traces):
        symbol = 1 if i % 2 else -1
        wrong += spoofer_estimate_stream(symbol, 45, m, code, rng, fs).decisions[-1] != symbol
    rate = wrong / traces
    return abs(rate - 0.10) <= 0.01, f"error rate {rate:.4f} at m={m} samples over {traces} traces"


def criterion_4():
    cfg = _case("40/40/40 awgn 250").config
    ts = calibrate(cfg, pfa=0.02, trials=CALIBRATION_TRIALS)
    est = verify_pfa(ts, cfg, trials=10_000)
    ok = all(abs(e.rate - 0.02) <= 0.004 for e in est.values())
    return ok, "Pfa " + ", ".join(f"{d}={e.rate:.4f}" for d, e in est.items())


def criterion_5():
    cfg = _case("40/40/40 awgn 250").config
    r3 = run_trials(cfg, Hypothesis.H0, 100_000, stream="calibration")[:, 2]
    s = rayleigh_scale_for(cfg)
    emp = empirical_threshold(r3, 0.02)
    ray = rayleigh_threshold(s, 0.02)
    rel = abs(ray / emp - 1)
    p = stats.kstest(r3, stats.rayleigh(scale=s).cdf).pvalue
    return rel <= 0.03 and p >= 0.01, f"gamma rayleigh/empirical differ by {100 * rel:.2f} %, KS p={p:.3f}"


REFERENCE_TARGETS = {
    "40/40/40 awgn 250": 110,
    "37/37/40 awgn 250": 200,
    "37/40/40 awgn 250": 70,
    "40/40/45 awgn 125": 380,
    "40/40/43 awgn 125": 210,
}


def criterion_6():
    parts, ok = [], True
    for label, ref in REFERENCE_TARGETS.items():
        res = _required(label)
        hit = res.reached and abs(res.crossing / ref - 1) <= 0.25
        ok &= hit
        parts.append(f"{label}: {_fmt_required(res)} vs {ref}{'' if hit else ' (off)'}")
    return ok, "; ".join(parts)


def criterion_7():
    res = [_required(f"37/37/40 awgn {w}") for w in (125, 250, 500)]
    if not all(r.reached for r in res):
        return False, "target not reached for every window"
    vals = [r.crossing for r in res]
    spread = max(vals) / min(vals) - 1
    return spread <= 0.10, f"R3 crossings {[round(v) for v in vals]} for 125/250/500 us, spread {100 * spread:.1f} %"


def criterion_8():
    cfg = _case("40/40/40 awgn 250").config.replace(n_symbols=125)
    ts = _CACHE.get(cfg, 0.02, CALIBRATION_TRIALS)
    pd = estimate_pd(cfg, 125, ts, trials=TRIALS_PER_POINT)
    r3, r1 = pd["R3"], pd["R1"]
    half = (r3.ci_high - r3.ci_low) / 2 + (r1.ci_high - r1.ci_low) / 2
    ok = r3.pd >= 0.85 and r3.pd - r1.pd > half
    return ok, f"N_b=125: Pd(R3)={r3.pd:.3f}, Pd(R1)={r1.pd:.3f}, gap {r3.pd - r1.pd:.3f} vs CI {half:.3f}"


def criterion_9():
    awgn, lms = _required("40/43/45 awgn 125"), _required("40/43/45 lms 125")
    if not (awgn.reached and lms.reached):
        return False, f"AWGN {_fmt_required(awgn)}, LMS {_fmt_required(lms)}"
    rel = abs(lms.crossing / awgn.crossing - 1)
    return rel <= 0.15, f"AWGN {_fmt_required(awgn)}, LMS {_fmt_required(lms)}, difference {100 * rel:.1f} %"


PROPERTY_TESTS = [
    "tests/test_detector.py::test_common_rotation_invariance",
    "tests/test_detector.py::test_positive_scaling",
    "tests/test_detector.py::test_noiseless_h0_identity",
    "tests/test_detector.py::test_cauchy_schwarz",
    "tests/test_detector.py::test_cauchy_schwarz_equality",
    "tests/test_attack.py::test_causality",
    "tests/test_attack.py::test_symmetry",
    "tests/test_campaign.py::test_results_independent_of_workers",
]


def criterion_10():
    root = Path(__file__).resolve().parent.parent
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *PROPERTY_TESTS],
                          cwd=root, capture_output=True, text=True)
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr.strip()
    return proc.returncode == 0, summary


CRITERIA = {
    1: ("timing formulas", criterion_1),
    2: ("OSNMA budgets", criterion_2),
    3: ("spoofer estimator oracle", criterion_3),
    4: ("Pfa calibration closure", criterion_4),
    5: ("Rayleigh threshold for R3", criterion_5),
    6: ("reference required-symbol counts", criterion_6),
    7: ("window insensitivity", criterion_7),
    8: ("detector ordering at N_b=125", criterion_8),
    9: ("LMS parity", criterion_9),
    10: ("property suite", criterion_10),
}


def _report(number: int) -> tuple[bool, str]:
    name, fn = CRITERIA[number]
    ok, detail = fn()
    return ok, f"{'PASS' if ok else 'FAIL'} criterion {number} ({name}): {detail}"


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    ok, line = _report(number)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = []
    for n in sorted(CRITERIA):
        ok, line = _report(n)
        print(line, flush=True)
        results.append(ok)
    sys.exit(0 if all(results) else 1)
