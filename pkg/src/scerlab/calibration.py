"""Detection thresholds for a target false-alarm probability.

Empirical thresholds (upper order statistic of simulated H0 statistics) are
available for every detector; R3 additionally has a closed-form Rayleigh
threshold, since under H0 the mean begin/end difference is a zero-mean
circular Gaussian.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import binomtest

from . import __version__
from .config import Hypothesis, ScenarioConfig
from .detector import DETECTORS
from .engine import run_trials

FORMAT = "scerlab-thresholds"
FORMAT_VERSION = 1
DEFAULT_PFA = 0.02
DEFAULT_CALIBRATION_TRIALS = 10_000


class FingerprintMismatch(ValueError):
    pass


def empirical_threshold(h0_statistics, pfa: float, min_exceedances: int = 50) -> float:
    """The ceil((1 - pfa) * M)-th order statistic of the H0 sample.

    Detection is declared for ``statistic > threshold``. Requires
    ``M >= min_exceedances / pfa`` so the tail is actually sampled.
    """
    if not 0.0 < pfa < 1.0:
        raise ValueError(f"pfa must lie in (0, 1), got {pfa}")
    values = np.sort(np.asarray(h0_statistics, dtype=np.float64))
    m = len(values)
    required = math.ceil(min_exceedances / pfa)
    if m < required:
        raise ValueError(f"{m} H0 samples are too few for pfa={pfa}: need at least {required}")
    rank = math.ceil((1.0 - pfa) * m - 1e-9)
    return float(values[max(rank, 1) - 1])


def rayleigh_scale_r3(noise_sigma2: float, window_samples: int, n_symbols: int) -> float:
    """Per-component std of the mean begin/end difference under H0 (equal windows)."""
    if not (noise_sigma2 > 0 and window_samples > 0 and n_symbols > 0):
        raise ValueError("all inputs must be positive")
    return math.sqrt(window_samples * noise_sigma2 / n_symbols)


def rayleigh_threshold(scale: float, pfa: float) -> float:
    """Inverse Rayleigh survival function: ``scale * sqrt(2 ln(1/pfa))``."""
    if not scale > 0:
        raise ValueError("scale must be > 0")
    if not 0.0 < pfa < 1.0:
        raise ValueError(f"pfa must lie in (0, 1), got {pfa}")
    return scale * math.sqrt(2.0 * math.log(1.0 / pfa))


def rayleigh_scale_for(config: ScenarioConfig) -> float:
    return rayleigh_scale_r3(config.noise_variance, config.begin_samples, config.n_symbols)


@dataclass
class ThresholdSet:
    target_pfa: float
    thresholds: dict[str, float]
    methods: dict[str, str]
    h0_trial_count: int
    fingerprint: str
    master_seed: int
    rayleigh_r3: float | None = None
    version: int = FORMAT_VERSION
    tool_version: str = field(default=__version__)

    def __getitem__(self, detector: str) -> float:
        return self.thresholds[detector]

    def detect(self, stats: np.ndarray) -> np.ndarray:
        """Boolean detections for a (trials, 5) statistic array; invalid entries never detect."""
        gam = np.array([self.thresholds.get(d, math.nan) for d in DETECTORS])
        with np.errstate(invalid="ignore"):
            return np.asarray(stats) > gam

    def check(self, config: ScenarioConfig) -> None:
        fp = config.fingerprint()
        if fp != self.fingerprint:
            raise FingerprintMismatch(
                f"thresholds were calibrated for scenario {self.fingerprint}, not {fp} "
                f"(N_b={config.n_symbols}); recalibrate for this scenario"
            )

    def to_json(self) -> str:
        def enc(x):
            if x is None or (isinstance(x, float) and math.isnan(x)):
                return None
            if isinstance(x, float) and math.isinf(x):
                return "inf" if x > 0 else "-inf"
            return x

        doc = {
            "format": FORMAT,
            "version": self.version,
            "tool_version": self.tool_version,
            "fingerprint": self.fingerprint,
            "target_pfa": self.target_pfa,
            "h0_trial_count": self.h0_trial_count,
            "master_seed": self.master_seed,
            "thresholds": {d: enc(self.thresholds.get(d)) for d in DETECTORS},
            "methods": {d: self.methods.get(d) for d in DETECTORS},
            "rayleigh_r3": enc(self.rayleigh_r3),
        }
        return json.dumps(doc, indent=2) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def from_json(cls, text: str) -> ThresholdSet:
        doc = json.loads(text)
        if doc.get("format") != FORMAT:
            raise ValueError("not a threshold file")
        if doc.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported threshold file version {doc.get('version')}")

        def dec(x):
            if x is None:
                return math.nan
            return float(x)

        return cls(
            target_pfa=float(doc["target_pfa"]),
            thresholds={d: dec(v) for d, v in doc["thresholds"].items()},
            methods={d: v for d, v in doc["methods"].items() if v is not None},
            h0_trial_count=int(doc["h0_trial_count"]),
            fingerprint=doc["fingerprint"],
            master_seed=int(doc["master_seed"]),
            rayleigh_r3=None if doc.get("rayleigh_r3") is None else dec(doc["rayleigh_r3"]),
            version=doc["version"],
            tool_version=doc.get("tool_version", ""),
        )

    @classmethod
    def load(cls, path: str | Path, config: ScenarioConfig | None = None) -> ThresholdSet:
        ts = cls.from_json(Path(path).read_text())
        if config is not None:
            ts.check(config)
        return ts


def calibrate(config: ScenarioConfig, pfa: float = DEFAULT_PFA, trials: int = DEFAULT_CALIBRATION_TRIALS,
              workers: int = 1, engine: str = "correlation", min_exceedances: int = 50) -> ThresholdSet:
    """Empirical thresholds for all detectors from ``trials`` fresh H0 trials."""
    stats = run_trials(config, Hypothesis.H0, trials, stream="calibration", workers=workers, engine=engine)
    thresholds, methods = {}, {}
    for j, d in enumerate(DETECTORS):
        col = stats[:, j]
        col = col[~np.isnan(col)]
        if len(col) == 0:
            thresholds[d] = math.nan
            continue
        thresholds[d] = empirical_threshold(col, pfa, min_exceedances=min_exceedances)
        methods[d] = "empirical"
    ray = None
    if not math.isnan(thresholds["R3"]) and not config.channel.noiseless:
        ray = rayleigh_threshold(rayleigh_scale_for(config), pfa)
    return ThresholdSet(
        target_pfa=pfa,
        thresholds=thresholds,
        methods=methods,
        h0_trial_count=trials,
        fingerprint=config.fingerprint(),
        master_seed=config.master_seed,
        rayleigh_r3=ray,
    )


def with_rayleigh_r3(ts: ThresholdSet) -> ThresholdSet:
    """Copy of ``ts`` that uses the closed-form R3 threshold."""
    if ts.rayleigh_r3 is None:
        raise ValueError("no Rayleigh threshold available for this scenario")
    thresholds = dict(ts.thresholds, R3=ts.rayleigh_r3)
    methods = dict(ts.methods, R3="rayleigh")
    return ThresholdSet(ts.target_pfa, thresholds, methods, ts.h0_trial_count, ts.fingerprint,
                        ts.master_seed, ts.rayleigh_r3)


@dataclass(frozen=True)
class RateEstimate:
    """A binomial proportion with its 95 % Wilson interval."""

    rate: float
    ci_low: float
    ci_high: float
    successes: int
    trials: int


def binomial_estimate(successes: int, trials: int, confidence: float = 0.95) -> RateEstimate:
    ci = binomtest(int(successes), int(trials)).proportion_ci(confidence_level=confidence, method="wilson")
    return RateEstimate(successes / trials, float(ci.low), float(ci.high), int(successes), int(trials))


def verify_pfa(threshold_set: ThresholdSet, config: ScenarioConfig, trials: int = DEFAULT_CALIBRATION_TRIALS,
               workers: int = 1, engine: str = "correlation") -> dict[str, RateEstimate]:
    """Empirical false-alarm rate per detector on fresh H0 trials (independent of calibration)."""
    if trials < 1000:
        raise ValueError("verification needs at least 1000 trials")
    threshold_set.check(config)
    stats = run_trials(config, Hypothesis.H0, trials, stream="verification", workers=workers, engine=engine)
    hits = threshold_set.detect(stats)
    return {d: binomial_estimate(int(hits[:, j].sum()), trials) for j, d in enumerate(DETECTORS)}
