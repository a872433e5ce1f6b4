"""Per-trial simulation of the begin/end partial correlations.

Two engines produce the sign-stripped correlations of one trial:

``samples``
    Builds every window sample by sample (real signal, spoofer trace,
    spoofed signal, AWGN) and correlates against the local replica.
``correlation``
    Draws the same correlations directly in the correlation domain. The
    detector noise of a window correlates to one complex Gaussian of
    variance ``N * sigma2`` (the replica is ±1), so only the spoofer's
    random walk is simulated per sample. Same distribution, far cheaper.

Every trial owns a seed sequence keyed by (master seed, stream, N_b, trial
index), so results do not depend on execution order or worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import attack as atk
from .analysis import symbol_error_prob
from .channel import add_awgn, lms_gains_at
from .config import SYMBOL_DURATION_S, AttackKind, ChannelKind, EndWindowPolicy, Hypothesis, ScenarioConfig
from .detector import batch_statistics, partial_correlation, strip_symbol_sign
from .waveform import (
    amplitude_from_cn0,
    begin_window,
    end_window,
    generate_code,
    local_replica,
    synthesize_real_window,
)

STREAMS = {"campaign": 1, "calibration": 2, "verification": 3}
ENGINES = ("correlation", "samples")
# Spacing bound (in symbols) for the predictable symbol picked by the randomized end-window policy.
PREDICTABLE_MAX_OFFSET = 8
CHUNK = 128


@dataclass(frozen=True, eq=False)
class TrialCorrelations:
    b_beg: np.ndarray
    b_end: np.ndarray
    symbols: np.ndarray
    delta_phi: float | None


class _Streams:
    """Independent generators for one trial."""

    NAMES = ("symbols", "noise", "spoofer", "channel", "phase", "attack")

    def __init__(self, master_seed: int, stream: str, n_b: int, trial_index: int):
        ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(STREAMS[stream], n_b, trial_index))
        self._children = dict(zip(self.NAMES, ss.spawn(len(self.NAMES))))
        self._cache: dict[str, np.random.Generator] = {}

    def __getattr__(self, name: str) -> np.random.Generator:
        if name not in self._cache:
            self._cache[name] = np.random.default_rng(self._children[name])
        return self._cache[name]


def default_stream(hypothesis: Hypothesis) -> str:
    return "campaign" if Hypothesis(hypothesis) is Hypothesis.H1 else "calibration"


def code_seed(config: ScenarioConfig) -> int:
    return int(np.random.SeedSequence(config.master_seed).generate_state(1)[0])


def _end_layout(config: ScenarioConfig, symbols: np.ndarray, rng: np.random.Generator):
    """Sign and centre time of each end window (same symbol tail or a random predictable symbol)."""
    n_b = len(symbols)
    t_sym = np.arange(n_b) * SYMBOL_DURATION_S
    tail_centre = SYMBOL_DURATION_S - config.window_end_s / 2
    if config.end_window_policy is EndWindowPolicy.SAME_SYMBOL_TAIL:
        return symbols, t_sym + tail_centre, False
    offsets = rng.integers(1, PREDICTABLE_MAX_OFFSET + 1, size=n_b)
    signs = (2 * rng.integers(0, 2, size=n_b) - 1).astype(np.int8)
    return signs, t_sym + offsets * SYMBOL_DURATION_S + tail_centre, True


def _gains(config: ScenarioConfig, t_beg: np.ndarray, t_end: np.ndarray, rng: np.random.Generator):
    if config.channel.kind is ChannelKind.AWGN:
        return np.ones(len(t_beg), dtype=np.complex128), np.ones(len(t_end), dtype=np.complex128)
    g, _ = lms_gains_at(config.channel.lms, np.concatenate([t_beg, t_end]), rng)
    return g[: len(t_beg)], g[len(t_beg):]


def _guess_samples(config: ScenarioConfig) -> int:
    return round(atk.guess_duration(config.attack, config.cn0_spoofer_real_dbhz) * config.sample_rate_hz)


def _spoofer_begin_sums(config: ScenarioConfig, symbols: np.ndarray, streams: _Streams) -> np.ndarray:
    """Sum of the spoofer's transmitted symbol values over each begin window."""
    n_b, n = len(symbols), config.begin_samples
    cn0_s = config.cn0_spoofer_real_dbhz
    kind = config.attack.kind
    fs = config.sample_rate_hz
    if kind is AttackKind.ESTIMATED_VALUE:
        if math.isinf(cn0_s):
            return symbols.astype(np.float64) * n
        amp = np.float32(amplitude_from_cn0(cn0_s))
        sigma = np.float32(math.sqrt(fs / 2.0))
        steps = streams.spoofer.standard_normal((n_b, n), dtype=np.float32)
        steps *= sigma
        steps += (symbols.astype(np.float32) * amp)[:, None]
        walk = np.cumsum(steps, axis=1)
        negative = np.count_nonzero(walk < 0, axis=1)
        # decision is +1 where walk >= 0
        return (n - 2 * negative).astype(np.float64)

    g = _guess_samples(config)
    if g >= 1 and not math.isinf(cn0_s):
        s_g = symbols * amplitude_from_cn0(cn0_s) * g + math.sqrt(g * fs / 2.0) * streams.spoofer.standard_normal(n_b)
        held = np.where(s_g >= 0, 1.0, -1.0)
    else:
        held = symbols.astype(np.float64)
    blind = min(g, n)
    sums = held * (n - blind)
    if kind is AttackKind.RANDOM_VALUE:
        guesses = 2 * streams.attack.integers(0, 2, size=n_b) - 1
        sums = sums + guesses * blind
    return sums


def correlation_trial(config: ScenarioConfig, hypothesis: Hypothesis, trial_index: int,
                      stream: str | None = None) -> TrialCorrelations:
    hypothesis = Hypothesis(hypothesis)
    if hypothesis is Hypothesis.H1 and not config.spoofer_present:
        raise ValueError("H1 trial requested for a configuration without a spoofer")
    streams = _Streams(config.master_seed, stream or default_stream(hypothesis), config.n_symbols, trial_index)
    n_b, n, m = config.n_symbols, config.begin_samples, config.end_samples
    amp = amplitude_from_cn0(config.cn0_detector_real_dbhz)
    symbols = (2 * streams.symbols.integers(0, 2, size=n_b) - 1).astype(np.int8)
    end_signs, t_end, predictable_end = _end_layout(config, symbols, streams.symbols)
    t_beg = np.arange(n_b) * SYMBOL_DURATION_S + config.window_begin_s / 2
    g_beg, g_end = _gains(config, t_beg, t_end, streams.channel)

    raw_beg = symbols * (amp * n) * g_beg
    raw_end = end_signs * (amp * m) * g_end

    delta_phi = None
    if hypothesis is Hypothesis.H1:
        delta_phi = float(streams.phase.uniform(0.0, 2 * math.pi))
        spoof = amplitude_from_cn0(config.cn0_detector_spoof_dbhz) * complex(math.cos(delta_phi), math.sin(delta_phi))
        raw_beg = raw_beg + spoof * _spoofer_begin_sums(config, symbols, streams)
        if predictable_end:
            end_sent = end_signs.astype(np.float64)
        else:
            pe = symbol_error_prob(config.cn0_spoofer_real_dbhz, SYMBOL_DURATION_S - config.window_end_s)
            flips = streams.attack.random(n_b) < pe
            end_sent = np.where(flips, -symbols, symbols).astype(np.float64)
        raw_end = raw_end + spoof * m * end_sent

    if not config.channel.noiseless:
        z = streams.noise.standard_normal((4, n_b))
        sb = math.sqrt(n * config.noise_variance / 2.0)
        se = math.sqrt(m * config.noise_variance / 2.0)
        raw_beg = raw_beg + sb * (z[0] + 1j * z[1])
        raw_end = raw_end + se * (z[2] + 1j * z[3])

    return TrialCorrelations(
        b_beg=strip_symbol_sign(np.asarray(raw_beg, dtype=np.complex128), symbols),
        b_end=strip_symbol_sign(np.asarray(raw_end, dtype=np.complex128), end_signs),
        symbols=symbols,
        delta_phi=delta_phi,
    )


def sample_trial(config: ScenarioConfig, hypothesis: Hypothesis, trial_index: int,
                 stream: str | None = None) -> TrialCorrelations:
    """Sample-level reference engine (slow; intended for validation)."""
    hypothesis = Hypothesis(hypothesis)
    if hypothesis is Hypothesis.H1 and not config.spoofer_present:
        raise ValueError("H1 trial requested for a configuration without a spoofer")
    streams = _Streams(config.master_seed, stream or default_stream(hypothesis), config.n_symbols, trial_index)
    fs = config.sample_rate_hz
    n_b = config.n_symbols
    code = generate_code(code_seed(config))
    wb, we = begin_window(config), end_window(config)
    rep_b, rep_e = local_replica(code, wb, fs), local_replica(code, we, fs)
    symbols = (2 * streams.symbols.integers(0, 2, size=n_b) - 1).astype(np.int8)
    end_signs, t_end, predictable_end = _end_layout(config, symbols, streams.symbols)
    t_beg = np.arange(n_b) * SYMBOL_DURATION_S + config.window_begin_s / 2
    g_beg, g_end = _gains(config, t_beg, t_end, streams.channel)

    delta_phi = None
    if hypothesis is Hypothesis.H1:
        delta_phi = float(streams.phase.uniform(0.0, 2 * math.pi))
        beta = amplitude_from_cn0(config.cn0_detector_spoof_dbhz)
        guess = _guess_samples(config)
        trace_len = max(config.begin_samples, guess)
        rot = beta * complex(math.cos(delta_phi), math.sin(delta_phi))

    b_beg = np.empty(n_b, dtype=np.complex128)
    b_end = np.empty(n_b, dtype=np.complex128)
    for k in range(n_b):
        b = int(symbols[k])
        e = int(end_signs[k])
        y_b = synthesize_real_window(config, code, b, wb, complex(g_beg[k]), k)
        y_e = synthesize_real_window(config, code, e, we, complex(g_end[k]), k)
        if hypothesis is Hypothesis.H1:
            trace = atk.spoofer_estimate_stream(b, config.cn0_spoofer_real_dbhz, trace_len, code,
                                                streams.spoofer, fs)
            guess_value = int(2 * streams.attack.integers(0, 2) - 1) \
                if config.attack.kind is AttackKind.RANDOM_VALUE else 1
            sp = atk.spoofed_begin_window(config.attack, trace, beta, delta_phi, code, wb, fs,
                                          guess_samples=guess, guess_value=guess_value, symbol_index=k)
            y_b = y_b.with_samples(y_b.samples + sp.samples)
            if predictable_end:
                sent = e
            else:
                sent = atk.end_window_symbol(config.attack, config.cn0_spoofer_real_dbhz, we.start_s, b,
                                             streams.attack)
            y_e = y_e.with_samples(y_e.samples + rot * sent * rep_e.samples)
        y_b = add_awgn(y_b, config.noise_variance, streams.noise, bypass=config.channel.noiseless)
        y_e = add_awgn(y_e, config.noise_variance, streams.noise, bypass=config.channel.noiseless)
        b_beg[k] = strip_symbol_sign(partial_correlation(y_b, rep_b), b)
        b_end[k] = strip_symbol_sign(partial_correlation(y_e, rep_e), e)
    return TrialCorrelations(b_beg, b_end, symbols, delta_phi)


def simulate_trial(config: ScenarioConfig, hypothesis: Hypothesis, trial_index: int,
                   stream: str | None = None, engine: str = "correlation") -> TrialCorrelations:
    if engine == "correlation":
        return correlation_trial(config, hypothesis, trial_index, stream)
    if engine == "samples":
        return sample_trial(config, hypothesis, trial_index, stream)
    raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES}")


def _run_chunk(args) -> tuple[np.ndarray, np.ndarray]:
    config, hypothesis, indices, stream, engine = args
    trials = [simulate_trial(config, hypothesis, i, stream, engine) for i in indices]
    b_beg = np.stack([t.b_beg for t in trials])
    b_end = np.stack([t.b_end for t in trials])
    phis = np.array([np.nan if t.delta_phi is None else t.delta_phi for t in trials])
    return batch_statistics(b_beg, b_end, config.window_begin_s, config.window_end_s), phis


def run_trials(config: ScenarioConfig, hypothesis: Hypothesis, n_trials: int, stream: str | None = None,
               workers: int = 1, engine: str = "correlation", start_index: int = 0) -> np.ndarray:
    """Statistics of trials ``start_index .. start_index + n_trials - 1``, shape (n_trials, 5).

    Output is identical for any ``workers``: chunks are fixed by trial index
    and merged in index order.
    """
    return run_trials_with_phase(config, hypothesis, n_trials, stream, workers, engine, start_index)[0]


def run_trials_with_phase(config: ScenarioConfig, hypothesis: Hypothesis, n_trials: int,
                          stream: str | None = None, workers: int = 1, engine: str = "correlation",
                          start_index: int = 0) -> tuple[np.ndarray, np.ndarray]:
    hypothesis = Hypothesis(hypothesis)
    if hypothesis is Hypothesis.H1 and not config.spoofer_present:
        raise ValueError("H1 trials requested for a configuration without a spoofer")
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    stream = stream or default_stream(hypothesis)
    stop = start_index + n_trials
    jobs = [(config, hypothesis, range(lo, min(lo + CHUNK, stop)), stream, engine)
            for lo in range(start_index, stop, CHUNK)]
    if not jobs:
        return np.empty((0, 5)), np.empty(0)
    if workers <= 1 or len(jobs) == 1:
        parts = [_run_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])
