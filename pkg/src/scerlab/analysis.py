"""Closed-form timing and OSNMA budget calculators."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

_SQRT_PI = math.sqrt(math.pi)


def erfc_inv(y: float) -> float:
    """Inverse complementary error function on (0, 2).

    Starts from Winitzki's closed-form approximation, written in terms of
    ``y`` directly so small arguments keep their precision, then polishes
    with Halley steps on ``erfc(x) - y``.
    """
    if not 0.0 < y < 2.0:
        if y == 0.0:
            return math.inf
        if y == 2.0:
            return -math.inf
        raise ValueError(f"erfc_inv argument must lie in [0, 2], got {y}")
    if y == 1.0:
        return 0.0
    if y > 1.0:
        return -erfc_inv(2.0 - y)

    a = 0.147
    ln_term = math.log(y * (2.0 - y))  # ln(1 - z^2) with z = 1 - y
    t = 2.0 / (math.pi * a) + 0.5 * ln_term
    x = math.sqrt(math.sqrt(t * t - ln_term / a) - t)

    for _ in range(8):
        err = math.erfc(x) - y
        deriv = -2.0 / _SQRT_PI * math.exp(-x * x)
        if deriv == 0.0:
            break
        step = err / deriv
        # Halley correction; f''/f' = -2x
        step = step / (1.0 + x * step)
        x -= step
        if abs(step) <= 1e-16 * max(1.0, abs(x)):
            break
    return x


def cn0_linear(cn0_dbhz: float) -> float:
    return 10.0 ** (cn0_dbhz / 10.0)


def spoofer_decision_time(cn0_dbhz: float, pe: float) -> float:
    """Observation time (s) for an uncoded BPSK sign decision to reach error rate ``pe``."""
    if not 0.0 < pe < 0.5:
        raise ValueError(f"pe must lie in (0, 0.5), got {pe}; at 0.5 the decision is a coin flip")
    return erfc_inv(2.0 * pe) ** 2 / cn0_linear(cn0_dbhz)


def symbol_error_prob(cn0_dbhz: float, t: float) -> float:
    """Sign-decision error probability after coherently integrating for ``t`` seconds."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if math.isinf(cn0_dbhz) and cn0_dbhz > 0:
        return 0.5 if t == 0 else 0.0
    return 0.5 * math.erfc(math.sqrt(cn0_linear(cn0_dbhz) * t))


def clock_masking_time(delay_s: float, stability: float) -> float:
    """Time needed to drift a signal by ``delay_s`` without exceeding the clock stability."""
    if not (delay_s > 0 and stability > 0):
        raise ValueError("delay_s and stability must both be positive")
    return delay_s / stability


@dataclass(frozen=True)
class TimingAnalysis:
    cn0_dbhz: float
    pe: float
    t_spof: float
    clock_stability: float
    masking_time: float


def timing_analysis(cn0_dbhz: float, pe: float, clock_stability: float = 1e-7) -> TimingAnalysis:
    t_spof = spoofer_decision_time(cn0_dbhz, pe)
    return TimingAnalysis(cn0_dbhz, pe, t_spof, clock_stability, clock_masking_time(t_spof, clock_stability))


class KeyAssumption(str, enum.Enum):
    PREDICTABLE = "predictable"
    FIRST_64_UNPREDICTABLE = "first_64_unpredictable"


@dataclass(frozen=True)
class OsnmaConfig:
    """OSNMA MACK layout. Defaults: 2 blocks / 30 s, 4 MACs of 20 bits, 96-bit keys."""

    mack_blocks_per_30s: int = 2
    mac_bits: int = 20
    macs_per_block: int = 4
    key_bits: int = 96
    unpredictable_key_bits: int = 64
    key_assumption: KeyAssumption = KeyAssumption.PREDICTABLE

    def __post_init__(self):
        object.__setattr__(self, "key_assumption", KeyAssumption(self.key_assumption))
        for name in ("mack_blocks_per_30s", "mac_bits", "macs_per_block", "key_bits"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 <= self.unpredictable_key_bits <= self.key_bits:
            raise ValueError("unpredictable_key_bits must lie in [0, key_bits]")

    @property
    def block_period_s(self) -> float:
        return 30.0 / self.mack_blocks_per_30s

    @property
    def symbols_per_block(self) -> int:
        n = self.macs_per_block * self.mac_bits
        if self.key_assumption is KeyAssumption.FIRST_64_UNPREDICTABLE:
            n += self.unpredictable_key_bits
        return n


def osnma_symbol_budget(cfg: OsnmaConfig, duration_s: float) -> int:
    """Unpredictable symbols broadcast in ``duration_s`` (a whole number of MACK blocks)."""
    blocks = duration_s / cfg.block_period_s
    if duration_s < 0 or abs(blocks - round(blocks)) > 1e-9:
        raise ValueError(f"duration_s must be a non-negative multiple of {cfg.block_period_s:g} s")
    return cfg.symbols_per_block * round(blocks)


@dataclass(frozen=True)
class TimeToDetect:
    required_symbols: int
    blocks: int
    seconds: float
    symbols_available: int
    masking_time: float | None = None

    @property
    def margin_s(self) -> float | None:
        """Seconds by which detection beats the spoofer's clock-masking time."""
        if self.masking_time is None:
            return None
        return self.masking_time - self.seconds


def time_to_detect(required_symbols: int, cfg: OsnmaConfig,
                   timing: TimingAnalysis | None = None) -> TimeToDetect:
    if required_symbols < 1:
        raise ValueError("required_symbols must be >= 1")
    blocks = -(-required_symbols // cfg.symbols_per_block)
    seconds = blocks * cfg.block_period_s
    return TimeToDetect(
        required_symbols=required_symbols,
        blocks=blocks,
        seconds=seconds,
        symbols_available=osnma_symbol_budget(cfg, seconds),
        masking_time=None if timing is None else timing.masking_time,
    )
