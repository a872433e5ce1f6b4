"""Complex baseband synthesis of the real signal and its local replica.

Noise convention: the noise PSD is 1, so a complex sample carries noise of
variance ``sample_rate_hz`` and the real-signal amplitude is ``sqrt(C/N0)``.
A coherent sum over ``T`` seconds then has a sign-decision error of
``0.5 * erfc(sqrt(C/N0 * T))``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .config import SYMBOL_DURATION_S, ScenarioConfig

CHIP_RATE_HZ = 1.023e6
BOC_SUBCARRIER_HZ = 1.023e6
CODE_LENGTH_CHIPS = 4092
SYMBOL_RATE = 250


class WindowKind(str, enum.Enum):
    BEGIN = "begin"
    END = "end"


@dataclass(frozen=True, eq=False)
class SpreadingCode:
    """Seeded pseudorandom ±1 chips standing in for a Galileo E1B memory code."""

    chips: np.ndarray
    seed: int
    chip_rate_hz: float = CHIP_RATE_HZ
    boc_subcarrier_hz: float = BOC_SUBCARRIER_HZ

    def __len__(self) -> int:
        return len(self.chips)

    def samples(self, start: int, count: int, sample_rate_hz: float) -> np.ndarray:
        """BOC(1,1) code samples ``start .. start+count-1`` of the symbol, each ±1."""
        n = np.arange(start, start + count)
        chip_idx = np.floor(n * (self.chip_rate_hz / sample_rate_hz)).astype(np.int64) % len(self.chips)
        half_periods = np.floor(n * (2.0 * self.boc_subcarrier_hz / sample_rate_hz)).astype(np.int64)
        subcarrier = 1 - 2 * (half_periods & 1)
        return (self.chips[chip_idx] * subcarrier).astype(np.float64)


@dataclass(frozen=True)
class SymbolStream:
    symbols: np.ndarray
    unpredictable: np.ndarray
    symbol_rate: int = SYMBOL_RATE

    @property
    def symbol_duration_s(self) -> float:
        return 1.0 / self.symbol_rate


@dataclass(frozen=True)
class Window:
    """A correlation window inside one symbol, in seconds from the symbol start."""

    kind: WindowKind
    start_s: float
    duration_s: float

    def sample_range(self, sample_rate_hz: float) -> tuple[int, int]:
        """(first sample, sample count); raises if the window leaves the symbol."""
        start = round(self.start_s * sample_rate_hz)
        count = round(self.duration_s * sample_rate_hz)
        per_symbol = round(SYMBOL_DURATION_S * sample_rate_hz)
        if count < 1 or start < 0 or start + count > per_symbol:
            raise ValueError(
                f"{self.kind.value} window [{self.start_s}, {self.start_s + self.duration_s}] s "
                f"lies outside the 4 ms symbol"
            )
        return start, count


@dataclass(frozen=True, eq=False)
class ComplexSampleBlock:
    samples: np.ndarray
    start_time_s: float
    symbol_index: int
    window_kind: WindowKind

    def __len__(self) -> int:
        return len(self.samples)

    def with_samples(self, samples: np.ndarray) -> ComplexSampleBlock:
        return ComplexSampleBlock(samples, self.start_time_s, self.symbol_index, self.window_kind)


def generate_code(seed: int, length_chips: int = CODE_LENGTH_CHIPS) -> SpreadingCode:
    if length_chips < 1:
        raise ValueError("length_chips must be >= 1")
    rng = np.random.default_rng(seed)
    chips = (2 * rng.integers(0, 2, size=length_chips) - 1).astype(np.int8)
    return SpreadingCode(chips=chips, seed=seed)


def generate_symbols(n_symbols: int, rng: np.random.Generator) -> SymbolStream:
    symbols = (2 * rng.integers(0, 2, size=n_symbols) - 1).astype(np.int8)
    return SymbolStream(symbols=symbols, unpredictable=np.ones(n_symbols, dtype=bool))


def amplitude_from_cn0(cn0_dbhz: float) -> float:
    return math.sqrt(10.0 ** (cn0_dbhz / 10.0))


def begin_window(config: ScenarioConfig) -> Window:
    return Window(WindowKind.BEGIN, 0.0, config.window_begin_s)


def end_window(config: ScenarioConfig) -> Window:
    return Window(WindowKind.END, SYMBOL_DURATION_S - config.window_end_s, config.window_end_s)


def local_replica(code: SpreadingCode, window: Window, sample_rate_hz: float,
                  symbol_index: int = 0) -> ComplexSampleBlock:
    start, count = window.sample_range(sample_rate_hz)
    samples = code.samples(start, count, sample_rate_hz).astype(np.complex128)
    return ComplexSampleBlock(samples, window.start_s, symbol_index, window.kind)


def synthesize_real_window(config: ScenarioConfig, code: SpreadingCode, symbol: int, window: Window,
                           channel_gain: complex = 1.0, symbol_index: int = 0) -> ComplexSampleBlock:
    """Noise-free authentic signal ``A * gain * b * c(n)`` over one window.

    Carrier phase is zero and residual Doppler is zero (zero-delay attack).
    """
    if symbol not in (-1, 1):
        raise ValueError("symbol must be +1 or -1")
    start, count = window.sample_range(config.sample_rate_hz)
    amp = amplitude_from_cn0(config.cn0_detector_real_dbhz) * channel_gain * symbol
    samples = amp * code.samples(start, count, config.sample_rate_hz).astype(np.complex128)
    return ComplexSampleBlock(samples, window.start_s, symbol_index, window.kind)
