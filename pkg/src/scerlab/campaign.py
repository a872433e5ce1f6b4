"""Monte Carlo campaigns: detection probability versus the number of symbols.

Thresholds depend on N_b, so every point of a curve gets its own H0
calibration; calibrations are cached by scenario fingerprint.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import (
    DEFAULT_CALIBRATION_TRIALS,
    DEFAULT_PFA,
    RateEstimate,
    ThresholdSet,
    binomial_estimate,
    calibrate,
)
from .config import Hypothesis, ScenarioConfig
from .detector import DETECTORS, DetectorStatistics, compute_statistics
from .engine import run_trials_with_phase, simulate_trial

PD_CURVE_HEADER = ("detector", "n_b", "pd", "ci_low", "ci_high", "trials")
REQUIRED_HEADER = ("case_id", "detector", "n_b_required", "target_pd", "grid_resolution")
NOT_REACHED = "not_reached"


@dataclass(frozen=True)
class TrialResult:
    hypothesis: Hypothesis
    statistics: DetectorStatistics
    detections: dict[str, bool] | None
    trial_index: int
    delta_phi: float | None


def run_trial(config: ScenarioConfig, hypothesis: Hypothesis | str, trial_index: int,
              thresholds: ThresholdSet | None = None, stream: str | None = None,
              engine: str = "correlation") -> TrialResult:
    hypothesis = Hypothesis(hypothesis)
    tc = simulate_trial(config, hypothesis, trial_index, stream, engine)
    stats = compute_statistics(tc.b_beg, tc.b_end, config.window_begin_s, config.window_end_s)
    detections = None
    if thresholds is not None:
        thresholds.check(config)
        hits = thresholds.detect(np.array([stats.as_tuple()]))[0]
        detections = dict(zip(DETECTORS, (bool(h) for h in hits)))
    return TrialResult(hypothesis, stats, detections, trial_index, tc.delta_phi)


class CalibrationCache:
    """Threshold sets keyed by (fingerprint, seed, pfa, trials, engine)."""

    def __init__(self):
        self._store: dict[tuple, ThresholdSet] = {}

    def get(self, config: ScenarioConfig, pfa: float, trials: int, workers: int = 1,
            engine: str = "correlation") -> ThresholdSet:
        key = (config.fingerprint(), config.master_seed, pfa, trials, engine)
        if key not in self._store:
            self._store[key] = calibrate(config, pfa=pfa, trials=trials, workers=workers, engine=engine)
        return self._store[key]

    def __len__(self) -> int:
        return len(self._store)


@dataclass(frozen=True)
class PdPoint:
    detector: str
    n_b: int
    estimate: RateEstimate

    @property
    def pd(self) -> float:
        return self.estimate.rate

    @property
    def ci_low(self) -> float:
        return self.estimate.ci_low

    @property
    def ci_high(self) -> float:
        return self.estimate.ci_high

    @property
    def trials(self) -> int:
        return self.estimate.trials


def estimate_pd(config: ScenarioConfig, n_b: int, thresholds: ThresholdSet, trials: int = 2000,
                workers: int = 1, engine: str = "correlation") -> dict[str, PdPoint]:
    """Fraction of H1 trials detected at ``n_b`` symbols, per detector."""
    if not config.spoofer_present:
        raise ValueError("configuration has no spoofer; detection probability is undefined")
    cfg = config.replace(n_symbols=n_b)
    thresholds.check(cfg)
    stats, _ = run_trials_with_phase(cfg, Hypothesis.H1, trials, stream="campaign", workers=workers, engine=engine)
    hits = thresholds.detect(stats)
    return {d: PdPoint(d, n_b, binomial_estimate(int(hits[:, j].sum()), trials)) for j, d in enumerate(DETECTORS)}


@dataclass
class PdCurve:
    fingerprint: str
    grid: list[int]
    points: dict[str, list[PdPoint]]
    trials_per_point: int
    target_pfa: float

    def pd(self, detector: str) -> np.ndarray:
        return np.array([p.pd for p in self.points[detector]])

    def rows(self):
        for d in DETECTORS:
            for p in self.points[d]:
                yield (d, p.n_b, p.pd, p.ci_low, p.ci_high, p.trials)


def _check_grid(grid) -> list[int]:
    grid = [int(n) for n in grid]
    if not grid:
        raise ValueError("empty N_b grid")
    if any(n < 1 for n in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("N_b grid must be strictly increasing positive integers")
    return grid


def pd_curve(config: ScenarioConfig, n_b_grid, trials_per_point: int = 2000, pfa: float = DEFAULT_PFA,
             calibration_trials: int = DEFAULT_CALIBRATION_TRIALS, workers: int = 1,
             cache: CalibrationCache | None = None, engine: str = "correlation",
             thresholds: dict[int, ThresholdSet] | None = None) -> PdCurve:
    grid = _check_grid(n_b_grid)
    cache = cache if cache is not None else CalibrationCache()
    points: dict[str, list[PdPoint]] = {d: [] for d in DETECTORS}
    for n_b in grid:
        cfg = config.replace(n_symbols=n_b)
        ts = (thresholds or {}).get(n_b) or cache.get(cfg, pfa, calibration_trials, workers, engine)
        for d, p in estimate_pd(cfg, n_b, ts, trials_per_point, workers, engine).items():
            points[d].append(p)
    return PdCurve(config.replace(n_symbols=grid[0]).fingerprint(), grid, points, trials_per_point, pfa)


@dataclass
class RequiredSymbols:
    """Smallest evaluated N_b whose Pd lower confidence bound reaches the target.

    ``n_b`` is ``None`` when the target was not reached within the cap.
    ``crossing`` linearly interpolates the Pd point estimates at the target.
    The search assumes Pd is non-decreasing in N_b.
    """

    detector: str
    target_pd: float
    n_b: int | None
    crossing: float | None
    resolution: int
    trace: list[PdPoint] = field(default_factory=list)

    @property
    def reached(self) -> bool:
        return self.n_b is not None


def _crossing(trace: list[PdPoint], target: float) -> float | None:
    pts = sorted(trace, key=lambda p: p.n_b)
    for lo, hi in zip(pts, pts[1:]):
        if lo.pd < target <= hi.pd:
            return lo.n_b + (target - lo.pd) * (hi.n_b - lo.n_b) / (hi.pd - lo.pd)
    if pts and pts[0].pd >= target:
        return float(pts[0].n_b)
    return None


def required_symbols(config: ScenarioConfig, detector: str = "R3", target_pd: float = 0.9,
                     trials_per_point: int = 2000, pfa: float = DEFAULT_PFA,
                     calibration_trials: int = DEFAULT_CALIBRATION_TRIALS, cap: int = 1000,
                     resolution: int = 10, workers: int = 1, cache: CalibrationCache | None = None,
                     engine: str = "correlation") -> RequiredSymbols:
    """Coarse doubling search, then bisection down to ``resolution`` symbols."""
    if detector not in DETECTORS:
        raise ValueError(f"unknown detector {detector!r}; valid names: {', '.join(DETECTORS)}")
    if not 0.0 < target_pd < 1.0:
        raise ValueError("target_pd must lie in (0, 1)")
    cache = cache if cache is not None else CalibrationCache()
    evaluated: dict[int, PdPoint] = {}

    def passes(n_b: int) -> bool:
        if n_b not in evaluated:
            if not config.spoofer_present:
                evaluated[n_b] = PdPoint(detector, n_b, binomial_estimate(0, 1))
            else:
                cfg = config.replace(n_symbols=n_b)
                ts = cache.get(cfg, pfa, calibration_trials, workers, engine)
                evaluated[n_b] = estimate_pd(cfg, n_b, ts, trials_per_point, workers, engine)[detector]
        return evaluated[n_b].ci_low >= target_pd

    if not config.spoofer_present:
        return RequiredSymbols(detector, target_pd, None, None, resolution, [])

    lo, hi = 0, None
    n = resolution
    while True:
        if passes(n):
            hi = n
            break
        lo = n
        if n >= cap:
            break
        n = min(2 * n, cap)
    if hi is not None:
        while hi - lo > resolution:
            mid = lo + resolution * max(1, ((hi - lo) // resolution) // 2)
            if passes(mid):
                hi = mid
            else:
                lo = mid
    trace = [evaluated[k] for k in sorted(evaluated)]
    return RequiredSymbols(detector, target_pd, hi, _crossing(trace, target_pd), resolution, trace)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_pd_curve_csv(curve: PdCurve, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PD_CURVE_HEADER)
        for d, n_b, pd, lo, hi, trials in curve.rows():
            w.writerow((d, n_b, _fmt(pd), _fmt(lo), _fmt(hi), trials))


def read_pd_curve_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{"detector": r["detector"], "n_b": int(r["n_b"]), "pd": float(r["pd"]),
             "ci_low": float(r["ci_low"]), "ci_high": float(r["ci_high"]), "trials": int(r["trials"])} for r in rows]


def write_required_csv(rows: list[tuple[str, RequiredSymbols]], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REQUIRED_HEADER)
        for case_id, res in rows:
            w.writerow((case_id, res.detector, res.n_b if res.reached else NOT_REACHED,
                        _fmt(res.target_pd), res.resolution))


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path: str | Path, config: ScenarioConfig | None, outputs: list[str | Path],
                   started: float, finished: float | None = None, extra: dict | None = None) -> dict:
    """Run manifest: tool version, resolved config, seed, timestamps and output digests."""
    finished = time.time() if finished is None else finished
    doc = {
        "tool": "scerlab",
        "tool_version": __version__,
        "config": None if config is None else config.to_dict(),
        "master_seed": None if config is None else config.master_seed,
        "started": _iso(started),
        "finished": _iso(finished),
        "outputs": [{"path": str(Path(p).name), "sha256": file_digest(p)} for p in outputs],
    }
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
    return doc


def verify_manifest(path: str | Path) -> bool:
    doc = json.loads(Path(path).read_text())
    base = Path(path).parent
    return all((base / o["path"]).exists() and file_digest(base / o["path"]) == o["sha256"]
               for o in doc["outputs"])


def _iso(t: float) -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t)) if math.isfinite(t) else ""
