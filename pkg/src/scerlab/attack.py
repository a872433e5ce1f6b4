"""Spoofer side of a zero-delay SCER attack.

The spoofer tracks the authentic signal with perfect code and carrier
wipe-off and no processing latency, and re-broadcasts its running estimate of
each unpredictable symbol.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import spoofer_decision_time, symbol_error_prob
from .config import AttackKind, AttackModel
from .waveform import ComplexSampleBlock, SpreadingCode, Window, amplitude_from_cn0

DEFAULT_GUESS_PE = 0.1


@dataclass(frozen=True, eq=False)
class SpooferDecisionTrace:
    """Hard decisions ``decisions[m-1]`` made after ``m`` received samples."""

    decisions: np.ndarray
    true_symbol: int
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.decisions)


def guess_duration(attack: AttackModel, cn0_spoofer_real_dbhz: float) -> float:
    """Length of the blind segment for random/zero value attacks."""
    if attack.guess_duration_s is not None:
        return attack.guess_duration_s
    if math.isinf(cn0_spoofer_real_dbhz):
        return 0.0
    return spoofer_decision_time(cn0_spoofer_real_dbhz, DEFAULT_GUESS_PE)


def decisions_from_samples(received: np.ndarray, replica: np.ndarray) -> np.ndarray:
    """Running sign of ``Re{sum_{n<=m} y(n) x*(n)}`` for every ``m``; sign(0) is +1."""
    acc = np.cumsum((received * np.conj(replica)).real)
    return np.where(acc >= 0, 1, -1).astype(np.int8)


def spoofer_estimate_stream(true_symbol: int, cn0_spoofer_real_dbhz: float, window_samples: int,
                            code: SpreadingCode, rng: np.random.Generator,
                            sample_rate_hz: float, start_sample: int = 0) -> SpooferDecisionTrace:
    """Simulate what the spoofer receives and the sample-by-sample symbol estimate it forms.

    ``cn0_spoofer_real_dbhz = inf`` gives a noiseless spoofer.
    """
    if window_samples < 1:
        raise ValueError("window_samples must be >= 1")
    if true_symbol not in (-1, 1):
        raise ValueError("true_symbol must be +1 or -1")
    replica = code.samples(start_sample, window_samples, sample_rate_hz)
    if math.isinf(cn0_spoofer_real_dbhz) and cn0_spoofer_real_dbhz > 0:
        return SpooferDecisionTrace(np.full(window_samples, true_symbol, dtype=np.int8), true_symbol)
    amp = amplitude_from_cn0(cn0_spoofer_real_dbhz)
    sigma = math.sqrt(sample_rate_hz / 2.0)
    noise = sigma * (rng.standard_normal(window_samples) + 1j * rng.standard_normal(window_samples))
    received = amp * true_symbol * replica + noise
    return SpooferDecisionTrace(decisions_from_samples(received, replica), true_symbol)


def spoofed_begin_window(attack: AttackModel, trace: SpooferDecisionTrace, beta: float, delta_phi: float,
                         code: SpreadingCode, window: Window, sample_rate_hz: float,
                         guess_samples: int = 0, guess_value: int = 1,
                         symbol_index: int = 0) -> ComplexSampleBlock:
    """Spoofer's transmitted begin-window samples as seen by the victim.

    ``guess_samples`` is the blind segment of the random/zero value attacks;
    after it the spoofer holds the decision it had reached at the boundary.
    ``guess_value`` is the per-symbol coin flip of the random value attack.
    """
    if attack.kind is AttackKind.NONE:
        raise ValueError("no spoofed component exists under H0 (attack kind 'none')")
    start, count = window.sample_range(sample_rate_hz)
    if len(trace) < count:
        raise ValueError("spoofer trace shorter than the window")
    chips = code.samples(start, count, sample_rate_hz)

    if attack.kind is AttackKind.ESTIMATED_VALUE:
        sym = trace.decisions[:count].astype(np.float64)
    else:
        if guess_value not in (-1, 1):
            raise ValueError("guess_value must be +1 or -1")
        g = min(guess_samples, count)
        held = float(trace.decisions[max(g, 1) - 1]) if g < count else 0.0
        sym = np.full(count, held)
        sym[:g] = guess_value if attack.kind is AttackKind.RANDOM_VALUE else 0.0
    samples = beta * np.exp(1j * delta_phi) * sym * chips
    return ComplexSampleBlock(samples, window.start_s, symbol_index, window.kind)


def end_window_symbol(attack: AttackModel, cn0_spoofer_real_dbhz: float, end_window_start_s: float,
                      true_symbol: int, rng: np.random.Generator) -> int:
    """Spoofer's symbol in the end window, drawn from the closed-form error rate."""
    if attack.kind is AttackKind.NONE:
        raise ValueError("no spoofed component exists under H0 (attack kind 'none')")
    if not 0.0 < end_window_start_s < 4e-3:
        raise ValueError("end_window_start_s must lie in (0, 4 ms)")
    pe = symbol_error_prob(cn0_spoofer_real_dbhz, end_window_start_s)
    return -true_symbol if rng.random() < pe else true_symbol
