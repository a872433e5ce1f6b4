import math

import pytest
from hypothesis import given, strategies as st

from scerlab.analysis import (
    KeyAssumption,
    OsnmaConfig,
    clock_masking_time,
    cn0_linear,
    erfc_inv,
    osnma_symbol_budget,
    spoofer_decision_time,
    symbol_error_prob,
    time_to_detect,
    timing_analysis,
)

# erfc^{-1}(y) evaluated with mpmath at 60 digits.
ERFC_INV_REFERENCE = {
    1e-6: 3.4589107372795,
    0.02: 1.644976357133187,
    0.2: 0.90619380243682,
    0.5: 0.4769362762044699,
}


@pytest.mark.parametrize("y,expected", sorted(ERFC_INV_REFERENCE.items()))
def test_erfc_inv_reference_table(y, expected):
    assert erfc_inv(y) == pytest.approx(expected, rel=1e-7)


def test_erfc_inv_against_mpmath():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 60
    for y in [1e-6, 3e-6, 1e-5, 1e-4, 1e-3, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5]:
        ref = float(mpmath.erfinv(1 - mpmath.mpf(y)))
        assert abs(erfc_inv(y) / ref - 1) < 1e-7


@given(st.floats(min_value=1e-12, max_value=1.999999))
def test_erfc_inv_inverts_erfc(y):
    x = erfc_inv(y)
    assert math.erfc(x) == pytest.approx(y, rel=1e-9, abs=1e-15)


def test_erfc_inv_domain():
    assert erfc_inv(1.0) == 0.0
    assert erfc_inv(0.0) == math.inf
    assert erfc_inv(2.0) == -math.inf
    for bad in (-0.1, 2.5, math.nan):
        with pytest.raises(ValueError):
            erfc_inv(bad)


def test_cn0_linear():
    assert cn0_linear(40) == pytest.approx(1e4)


@pytest.mark.parametrize("cn0,pe,expected_us,tol_us", [
    (45, 0.1, 25.97, 0.05),
    (40, 0.01, 271.0, 1.0),
])
def test_spoofer_decision_time(cn0, pe, expected_us, tol_us):
    assert spoofer_decision_time(cn0, pe) * 1e6 == pytest.approx(expected_us, abs=tol_us)


def test_spoofer_decision_time_tends_to_zero():
    assert spoofer_decision_time(40, 0.5 - 1e-12) < 1e-12
    with pytest.raises(ValueError):
        spoofer_decision_time(40, 0.5)
    with pytest.raises(ValueError):
        spoofer_decision_time(40, 0.0)


@pytest.mark.parametrize("pe", [0.3, 0.1, 0.01, 1e-4])
@pytest.mark.parametrize("cn0", [35.0, 40.0, 45.0])
def test_round_trip(cn0, pe):
    t = spoofer_decision_time(cn0, pe)
    assert symbol_error_prob(cn0, t) == pytest.approx(pe, rel=5e-7)


def test_symbol_error_prob_properties():
    assert symbol_error_prob(40, 0.0) == 0.5
    assert symbol_error_prob(45, 25.97e-6) == pytest.approx(0.1, abs=1e-3)
    ts = [0, 1e-6, 1e-5, 1e-4, 1e-3]
    pes = [symbol_error_prob(40, t) for t in ts]
    assert all(a > b for a, b in zip(pes, pes[1:]))


@pytest.mark.parametrize("delay,stability,expected", [
    (26e-6, 1e-7, 260.0),
    (271e-6, 1e-7, 2710.0),
    (26e-6, 1e-10, 2.6e5),
])
def test_clock_masking_time(delay, stability, expected):
    assert clock_masking_time(delay, stability) == pytest.approx(expected, rel=1e-12)


def test_timing_analysis():
    t = timing_analysis(45, 0.1, 1e-7)
    assert t.t_spof == pytest.approx(25.9682e-6, rel=1e-4)
    assert t.masking_time == pytest.approx(t.t_spof / 1e-7)


@pytest.mark.parametrize("key,duration,expected", [
    (KeyAssumption.PREDICTABLE, 15, 80),
    (KeyAssumption.PREDICTABLE, 30, 160),
    (KeyAssumption.PREDICTABLE, 45, 240),
    (KeyAssumption.PREDICTABLE, 60, 320),
    (KeyAssumption.FIRST_64_UNPREDICTABLE, 15, 144),
    (KeyAssumption.FIRST_64_UNPREDICTABLE, 60, 576),
])
def test_osnma_budget(key, duration, expected):
    assert osnma_symbol_budget(OsnmaConfig(key_assumption=key), duration) == expected


@given(st.integers(0, 40), st.integers(0, 40))
def test_budget_additive(a, b):
    cfg = OsnmaConfig()
    assert osnma_symbol_budget(cfg, 15 * (a + b)) == osnma_symbol_budget(cfg, 15 * a) + osnma_symbol_budget(cfg, 15 * b)


def test_budget_rejects_partial_block():
    with pytest.raises(ValueError):
        osnma_symbol_budget(OsnmaConfig(), 20)


@pytest.mark.parametrize("required,key,seconds", [
    (110, KeyAssumption.PREDICTABLE, 30),
    (70, KeyAssumption.FIRST_64_UNPREDICTABLE, 15),
    (380, KeyAssumption.PREDICTABLE, 75),
])
def test_time_to_detect(required, key, seconds):
    ttd = time_to_detect(required, OsnmaConfig(key_assumption=key))
    assert ttd.seconds == seconds
    assert ttd.symbols_available >= required


def test_time_to_detect_margin():
    ttd = time_to_detect(380, OsnmaConfig(), timing_analysis(45, 0.1))
    assert ttd.margin_s == pytest.approx(ttd.masking_time - 75)
    assert ttd.margin_s > 0
