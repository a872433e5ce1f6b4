"""Propagation effects on the real-signal path: AWGN and two-state LMS fading."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import LmsParams
from .waveform import ComplexSampleBlock

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True, eq=False)
class LmsGainSeries:
    """Complex gain per window (rows: symbols, columns: windows) and state per symbol."""

    gains: np.ndarray
    good_state: np.ndarray
    times_s: np.ndarray


def add_awgn(block: ComplexSampleBlock, sigma2: float, rng: np.random.Generator,
             bypass: bool = False) -> ComplexSampleBlock:
    """Add circular complex Gaussian noise of variance ``sigma2`` per complex sample."""
    if bypass:
        return block.with_samples(block.samples.copy())
    if not sigma2 > 0:
        raise ValueError("sigma2 must be > 0")
    n = len(block)
    scale = math.sqrt(sigma2 / 2.0)
    noise = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return block.with_samples(block.samples + noise)


def coherence_time(speed_mps: float, carrier_hz: float = 1.57542e9) -> float:
    """c / (v f_c); a static receiver returns ``inf``."""
    if speed_mps < 0:
        raise ValueError("speed_mps must be >= 0")
    if speed_mps == 0:
        return math.inf
    return SPEED_OF_LIGHT / (speed_mps * carrier_hz)


def _state_at(times: np.ndarray, params: LmsParams, rng: np.random.Generator) -> np.ndarray:
    """Two-state renewal process with exponential dwell times, started in steady state."""
    if math.isinf(params.dwell_good_s):
        return np.ones(len(times), dtype=bool)
    if math.isinf(params.dwell_bad_s):
        return np.zeros(len(times), dtype=bool)
    p_good = params.dwell_good_s / (params.dwell_good_s + params.dwell_bad_s)
    good = bool(rng.random() < p_good)
    horizon = float(times.max()) if len(times) else 0.0
    edges, states = [0.0], [good]
    t = 0.0
    while t <= horizon:
        t += rng.exponential(params.dwell_good_s if good else params.dwell_bad_s)
        good = not good
        edges.append(t)
        states.append(good)
    idx = np.searchsorted(np.asarray(edges), times, side="right") - 1
    return np.asarray(states)[idx]


def _gauss_markov(times: np.ndarray, corr_time: float, rng: np.random.Generator,
                  complex_valued: bool) -> np.ndarray:
    """Unit-variance process with correlation exp(-|dt| / corr_time) on sorted times."""
    n = len(times)
    if complex_valued:
        w = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)
    else:
        w = rng.standard_normal(n)
    out = np.empty(n, dtype=w.dtype)
    if n == 0:
        return out
    out[0] = w[0]
    if math.isinf(corr_time):
        out[:] = w[0]
        return out
    rho = np.exp(-np.diff(times) / corr_time)
    innov = np.sqrt(1.0 - rho**2)
    for i in range(1, n):
        out[i] = rho[i - 1] * out[i - 1] + innov[i - 1] * w[i]
    return out


def lms_gains_at(params: LmsParams, times_s: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Loo-type gain at each time: shadowed direct path plus diffuse multipath.

    State, shadowing and multipath each use their own child stream.
    """
    times = np.asarray(times_s, dtype=np.float64)
    order = np.argsort(times, kind="stable")
    if np.any(order != np.arange(len(times))):
        gains, good = lms_gains_at(params, times[order], rng)
        inv = np.empty_like(order)
        inv[order] = np.arange(len(order))
        return gains[inv], good[inv]
    rng_state, rng_shadow, rng_diffuse = rng.spawn(3)
    good = _state_at(times, params, rng_state)

    v = params.receiver_speed_mps
    shadow_corr_t = math.inf if v == 0 else params.shadow_corr_distance_m / v
    z = _gauss_markov(times, shadow_corr_t, rng_shadow, complex_valued=False)
    mean_db = np.where(good, params.good_direct_mean_db, params.bad_direct_mean_db)
    std_db = np.where(good, params.good_shadow_std_db, params.bad_shadow_std_db)
    direct = 10.0 ** ((mean_db + std_db * z) / 20.0)

    diffuse = _gauss_markov(times, coherence_time(v, params.carrier_freq_hz), rng_diffuse, complex_valued=True)
    mp_db = np.where(good, params.good_multipath_db, params.bad_multipath_db)
    gains = direct + np.sqrt(10.0 ** (mp_db / 10.0)) * diffuse
    return gains, good


def lms_gain_series(params: LmsParams, n_symbols: int, symbol_spacing_s: float, rng: np.random.Generator,
                    window_offsets_s: tuple[float, ...] = (0.0,)) -> LmsGainSeries:
    """Gains for each symbol's windows at ``k * symbol_spacing_s + offset``."""
    if n_symbols < 1:
        raise ValueError("n_symbols must be >= 1")
    offsets = np.asarray(sorted(window_offsets_s), dtype=np.float64)
    times = (np.arange(n_symbols)[:, None] * symbol_spacing_s + offsets[None, :]).ravel()
    gains, good = lms_gains_at(params, times, rng)
    shape = (n_symbols, len(offsets))
    return LmsGainSeries(gains.reshape(shape), good.reshape(shape)[:, 0], times.reshape(shape))
