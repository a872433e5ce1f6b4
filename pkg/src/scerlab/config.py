"""Scenario description types and their JSON (de)serialization.

A scenario fixes everything one Monte Carlo trial needs: the three C/N0
values (real signal at the user, spoofed signal at the user, real signal at
the spoofer), the begin/end correlation windows, the attack, the channel and
the master seed.
"""
from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

SYMBOL_DURATION_S = 4e-3
DEFAULT_SAMPLE_RATE_HZ = 4.092e6
L1_CARRIER_HZ = 1.57542e9

# Guards the begin/end window fit against float round-off (sub-nanosecond).
_TIME_EPS = 1e-12


class ConfigError(ValueError):
    """Invalid scenario description. ``errors`` lists ``field: message`` items."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class AttackKind(str, enum.Enum):
    ESTIMATED_VALUE = "estimated_value"
    RANDOM_VALUE = "random_value"
    ZERO_VALUE = "zero_value"
    NONE = "none"


class ChannelKind(str, enum.Enum):
    AWGN = "awgn"
    LMS = "lms"


class EndWindowPolicy(str, enum.Enum):
    SAME_SYMBOL_TAIL = "same_symbol_tail"
    RANDOM_PREDICTABLE_SYMBOL = "random_predictable_symbol"


class Hypothesis(str, enum.Enum):
    H0 = "H0"
    H1 = "H1"


@dataclass(frozen=True)
class AttackModel:
    """Zero-delay replay attack.

    ``guess_duration_s`` only applies to the random/zero value attacks; ``None``
    means "the time the spoofer needs to reach a 10 % symbol error rate".
    """

    kind: AttackKind = AttackKind.ESTIMATED_VALUE
    guess_duration_s: float | None = None
    spoof_phase_policy: str = "uniform_per_trial"

    def __post_init__(self):
        object.__setattr__(self, "kind", AttackKind(self.kind))

    def validate(self) -> list[str]:
        errors = []
        if self.spoof_phase_policy != "uniform_per_trial":
            errors.append("attack.spoof_phase_policy: only 'uniform_per_trial' is supported")
        if self.guess_duration_s is not None:
            if self.kind not in (AttackKind.RANDOM_VALUE, AttackKind.ZERO_VALUE):
                errors.append("attack.guess_duration_s: only used by random_value/zero_value attacks")
            elif not 0.0 < self.guess_duration_s < SYMBOL_DURATION_S:
                errors.append("attack.guess_duration_s: must lie in (0, 4 ms)")
        return errors


@dataclass(frozen=True)
class LmsParams:
    """Two-state (good/bad) Loo-type land mobile satellite channel.

    The defaults are an approximation chosen for plausibility, not values
    taken from a measurement campaign.
    """

    good_direct_mean_db: float = 0.0
    good_shadow_std_db: float = 1.0
    good_multipath_db: float = -15.0
    bad_direct_mean_db: float = -12.0
    bad_shadow_std_db: float = 3.0
    bad_multipath_db: float = -18.0
    dwell_good_s: float = 3.0
    dwell_bad_s: float = 1.0
    shadow_corr_distance_m: float = 5.0
    receiver_speed_mps: float = 100 / 3.6
    carrier_freq_hz: float = L1_CARRIER_HZ

    def validate(self) -> list[str]:
        errors = []
        for name in ("dwell_good_s", "dwell_bad_s", "shadow_corr_distance_m", "carrier_freq_hz"):
            if not getattr(self, name) > 0:
                errors.append(f"channel.lms.{name}: must be > 0")
        if not self.receiver_speed_mps >= 0:
            errors.append("channel.lms.receiver_speed_mps: must be >= 0")
        for name in ("good_shadow_std_db", "bad_shadow_std_db"):
            if not getattr(self, name) >= 0:
                errors.append(f"channel.lms.{name}: must be >= 0")
        for name in ("good_direct_mean_db", "bad_direct_mean_db", "good_multipath_db", "bad_multipath_db"):
            if math.isnan(getattr(self, name)):
                errors.append(f"channel.lms.{name}: must be a number")
        return errors


@dataclass(frozen=True)
class ChannelModel:
    """Propagation of the real signal.

    ``noise_variance`` is the per-complex-sample variance; ``None`` resolves to
    the sample rate (unit noise PSD). ``noiseless`` bypasses the AWGN entirely.
    """

    kind: ChannelKind = ChannelKind.AWGN
    noise_variance: float | None = None
    noiseless: bool = False
    lms: LmsParams | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ChannelKind(self.kind))
        if self.kind is ChannelKind.LMS and self.lms is None:
            object.__setattr__(self, "lms", LmsParams())

    def validate(self) -> list[str]:
        errors = []
        if self.noise_variance is not None and not self.noise_variance > 0:
            errors.append("channel.noise_variance: must be > 0 (use noiseless=true to bypass noise)")
        if self.kind is ChannelKind.AWGN and self.lms is not None:
            errors.append("channel.lms: only allowed when kind is 'lms'")
        if self.lms is not None:
            errors.extend(self.lms.validate())
        return errors


@dataclass(frozen=True)
class ScenarioConfig:
    cn0_detector_real_dbhz: float = 40.0
    cn0_detector_spoof_dbhz: float | None = 40.0
    cn0_spoofer_real_dbhz: float = 40.0
    window_begin_s: float = 250e-6
    window_end_s: float = 250e-6
    n_symbols: int = 100
    attack: AttackModel = field(default_factory=AttackModel)
    channel: ChannelModel = field(default_factory=ChannelModel)
    end_window_policy: EndWindowPolicy = EndWindowPolicy.SAME_SYMBOL_TAIL
    master_seed: int = 0
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ

    def __post_init__(self):
        object.__setattr__(self, "end_window_policy", EndWindowPolicy(self.end_window_policy))
        errors = self.validate()
        if errors:
            raise ConfigError(errors)

    def validate(self) -> list[str]:
        errors = []
        if not (math.isfinite(self.sample_rate_hz) and self.sample_rate_hz > 0):
            errors.append("sample_rate_hz: must be a positive finite number")
        for name in ("cn0_detector_real_dbhz", "cn0_spoofer_real_dbhz"):
            if not math.isfinite(getattr(self, name)):
                errors.append(f"{name}: must be finite")
        if self.cn0_detector_spoof_dbhz is not None and not math.isfinite(self.cn0_detector_spoof_dbhz):
            errors.append("cn0_detector_spoof_dbhz: must be finite or null (no spoofer)")
        if not self.window_begin_s > 0:
            errors.append("window_begin_s: must be > 0")
        if not self.window_end_s > 0:
            errors.append("window_end_s: must be > 0")
        if self.window_begin_s + self.window_end_s > SYMBOL_DURATION_S + _TIME_EPS:
            errors.append("window_begin_s + window_end_s: must not exceed the 4 ms symbol")
        if isinstance(self.n_symbols, bool) or not isinstance(self.n_symbols, int) or self.n_symbols < 1:
            errors.append("n_symbols: must be an integer >= 1")
        if isinstance(self.master_seed, bool) or not isinstance(self.master_seed, int) \
                or not 0 <= self.master_seed < 2**64:
            errors.append("master_seed: must be an integer in [0, 2**64)")
        errors.extend(self.attack.validate())
        errors.extend(self.channel.validate())
        if not errors:
            for kind, dur in (("begin", self.window_begin_s), ("end", self.window_end_s)):
                if round(dur * self.sample_rate_hz) < 1:
                    errors.append(f"window_{kind}_s: shorter than one sample")
        return errors

    @property
    def spoofer_present(self) -> bool:
        return self.attack.kind is not AttackKind.NONE and self.cn0_detector_spoof_dbhz is not None

    @property
    def noise_variance(self) -> float:
        nv = self.channel.noise_variance
        return self.sample_rate_hz if nv is None else nv

    @property
    def begin_samples(self) -> int:
        return round(self.window_begin_s * self.sample_rate_hz)

    @property
    def end_samples(self) -> int:
        return round(self.window_end_s * self.sample_rate_hz)

    def replace(self, **changes) -> ScenarioConfig:
        return dataclasses.replace(self, **changes)

    def fingerprint(self) -> str:
        """Hash of the fields that shape the statistics under H0.

        Attack and spoofer parameters are excluded; the seed is excluded too
        since it does not change the H0 distribution.
        """
        h0 = {
            "sample_rate_hz": self.sample_rate_hz,
            "cn0_detector_real_dbhz": self.cn0_detector_real_dbhz,
            "window_begin_s": self.window_begin_s,
            "window_end_s": self.window_end_s,
            "n_symbols": self.n_symbols,
            "channel": _to_plain(self.channel),
            "end_window_policy": self.end_window_policy.value,
        }
        blob = json.dumps(h0, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_dict(self) -> dict[str, Any]:
        return _to_plain(self)


def _to_plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


def _build(cls, data: Any, path: str, errors: list[str]):
    if not isinstance(data, dict):
        errors.append(f"{path or '<root>'}: expected an object")
        return None
    names = {f.name: f for f in dataclasses.fields(cls)}
    for key in data:
        if key not in names:
            errors.append(f"{path}{key}: unknown key")
    kwargs = {}
    for key, value in data.items():
        if key not in names:
            continue
        if key == "attack":
            value = _build(AttackModel, value, f"{path}attack.", errors)
        elif key == "channel":
            value = _build(ChannelModel, value, f"{path}channel.", errors)
        elif key == "lms" and value is not None:
            value = _build(LmsParams, value, f"{path}lms.", errors)
        elif isinstance(value, int) and not isinstance(value, bool) and names[key].type in ("float", "float | None"):
            value = float(value)
        if value is not None or key in ("guess_duration_s", "noise_variance", "cn0_detector_spoof_dbhz", "lms"):
            kwargs[key] = value
    if errors:
        return None
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        errors.extend(exc.errors)
    except (TypeError, ValueError) as exc:
        errors.append(f"{path.rstrip('.') or '<root>'}: {exc}")
    return None


def config_from_dict(data: dict[str, Any]) -> ScenarioConfig:
    """Build a validated config; unknown keys and bad values raise ConfigError."""
    errors: list[str] = []
    cfg = _build(ScenarioConfig, data, "", errors)
    if errors or cfg is None:
        raise ConfigError(errors or ["<root>: invalid configuration"])
    return cfg


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([f"<file>: not valid JSON ({exc})"]) from exc
    return config_from_dict(data)


def dump_config(cfg: ScenarioConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"
