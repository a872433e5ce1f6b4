"""Partial correlations and the five replay-detection statistics R1..R5.

Every statistic takes the sign-stripped begin/end correlations of the
``N_b`` unpredictable symbols as two complex arrays. An invalid statistic
(zero denominator, all-zero input) is reported as NaN.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .waveform import ComplexSampleBlock

DETECTORS = ("R1", "R2", "R3", "R4", "R5")
NP_EPS = 1e-9


@dataclass(frozen=True)
class PartialCorrelationPair:
    b_beg: complex
    b_end: complex
    symbol_index: int = 0
    symbol_sign_stripped: bool = True


def pairs_to_arrays(pairs) -> tuple[np.ndarray, np.ndarray]:
    pairs = list(pairs)
    if any(not p.symbol_sign_stripped for p in pairs):
        raise ValueError("pairs must have the symbol sign stripped")
    return (np.array([p.b_beg for p in pairs], dtype=np.complex128),
            np.array([p.b_end for p in pairs], dtype=np.complex128))


def partial_correlation(block: ComplexSampleBlock | np.ndarray, replica: ComplexSampleBlock | np.ndarray) -> complex:
    y = block.samples if isinstance(block, ComplexSampleBlock) else np.asarray(block)
    x = replica.samples if isinstance(replica, ComplexSampleBlock) else np.asarray(replica)
    if len(y) != len(x):
        raise ValueError(f"sample count mismatch: block has {len(y)}, replica has {len(x)}")
    return complex(np.sum(y * np.conj(x)))


def strip_symbol_sign(raw, b_k):
    """Multiply by the verified symbol; works elementwise on arrays."""
    b = np.asarray(b_k)
    if not np.all((b == 1) | (b == -1)):
        raise ValueError("symbol must be +1 or -1")
    out = b * raw
    return complex(out) if np.ndim(out) == 0 else out


def _ratio(b_beg, b_end) -> complex | float:
    den = complex(np.sum(b_end))
    if den == 0:
        return math.nan
    return complex(np.sum(b_beg)) / den


def r1(b_beg, b_end) -> float:
    q = _ratio(b_beg, b_end)
    return abs(q)


def r2(b_beg, b_end) -> float:
    q = _ratio(b_beg, b_end)
    return abs(q - 1)


def r3(b_beg, b_end) -> float:
    b_beg = np.asarray(b_beg)
    if len(b_beg) == 0 or len(b_beg) != len(b_end):
        raise ValueError("need equally many begin and end correlations (>= 1)")
    return abs(complex(np.mean(b_beg - np.asarray(b_end))))


@dataclass(frozen=True)
class NwprEstimate:
    """NWPR C/N0 estimate. ``saturation`` is -1/+1 when NP hit its floor/ceiling."""

    cn0_dbhz: float
    np_ratio: float
    nbp: float
    wbp: float
    saturation: int = 0

    @property
    def valid(self) -> bool:
        return not math.isnan(self.cn0_dbhz)


def nwpr_cn0(values, window_s: float) -> NwprEstimate:
    b = np.asarray(values, dtype=np.complex128)
    n_b = len(b)
    if n_b < 2:
        raise ValueError("NWPR needs at least two correlations")
    if not window_s > 0:
        raise ValueError("window_s must be > 0")
    wbp = float(np.sum(b.real**2 + b.imag**2))
    nbp = float(abs(np.sum(b)) ** 2)
    if wbp == 0:
        return NwprEstimate(math.nan, math.nan, nbp, wbp)
    np_ratio = nbp / wbp
    sat = 0
    clamped = np_ratio
    if np_ratio < 1 + NP_EPS:
        clamped, sat = 1 + NP_EPS, -1
    elif np_ratio > n_b - NP_EPS:
        clamped, sat = n_b - NP_EPS, 1
    cn0 = 10 * math.log10((clamped - 1) / (n_b - clamped) / window_s)
    return NwprEstimate(cn0, np_ratio, nbp, wbp, sat)


def r4(b_beg, b_end, window_begin_s: float, window_end_s: float) -> float:
    beg = nwpr_cn0(b_beg, window_begin_s)
    end = nwpr_cn0(b_end, window_end_s)
    if not (beg.valid and end.valid):
        return math.nan
    return abs(beg.cn0_dbhz - end.cn0_dbhz)


def _phase(values) -> float:
    s = complex(np.sum(values))
    if s == 0:
        return math.nan
    return math.atan2(s.imag, s.real)


def r5(b_beg, b_end) -> float:
    """|psi_beg - psi_end| with the difference wrapped to [-pi, pi]."""
    d = _phase(b_beg) - _phase(b_end)
    return abs(d - 2 * math.pi * round(d / (2 * math.pi))) if not math.isnan(d) else math.nan


@dataclass(frozen=True)
class DetectorStatistics:
    r1: float
    r2: float
    r3: float
    r4: float
    r5: float
    psi_beg: float = math.nan
    psi_end: float = math.nan
    nwpr_beg: NwprEstimate | None = field(default=None, repr=False)
    nwpr_end: NwprEstimate | None = field(default=None, repr=False)

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.r1, self.r2, self.r3, self.r4, self.r5)

    def __getitem__(self, name: str) -> float:
        return getattr(self, name.lower())

    @property
    def valid(self) -> dict[str, bool]:
        return {d: not math.isnan(v) for d, v in zip(DETECTORS, self.as_tuple())}


def compute_statistics(b_beg, b_end, window_begin_s: float, window_end_s: float) -> DetectorStatistics:
    """All five statistics. R2 and R3 are invalid when the windows differ in length."""
    b_beg = np.asarray(b_beg, dtype=np.complex128)
    b_end = np.asarray(b_end, dtype=np.complex128)
    equal_windows = math.isclose(window_begin_s, window_end_s, rel_tol=1e-12, abs_tol=0.0)
    n_b = len(b_beg)
    if n_b >= 2:
        nb_est = nwpr_cn0(b_beg, window_begin_s)
        ne_est = nwpr_cn0(b_end, window_end_s)
        stat4 = abs(nb_est.cn0_dbhz - ne_est.cn0_dbhz) if nb_est.valid and ne_est.valid else math.nan
    else:
        nb_est = ne_est = None
        stat4 = math.nan
    return DetectorStatistics(
        r1=r1(b_beg, b_end),
        r2=r2(b_beg, b_end) if equal_windows else math.nan,
        r3=r3(b_beg, b_end) if equal_windows else math.nan,
        r4=stat4,
        r5=r5(b_beg, b_end),
        psi_beg=_phase(b_beg),
        psi_end=_phase(b_end),
        nwpr_beg=nb_est,
        nwpr_end=ne_est,
    )


def batch_statistics(b_beg: np.ndarray, b_end: np.ndarray, window_begin_s: float,
                     window_end_s: float) -> np.ndarray:
    """Statistics for many trials at once.

    ``b_beg``/``b_end`` have shape (trials, N_b); returns (trials, 5) with
    NaN marking invalid entries. Agrees with :func:`compute_statistics`.
    """
    b_beg = np.atleast_2d(np.asarray(b_beg, dtype=np.complex128))
    b_end = np.atleast_2d(np.asarray(b_end, dtype=np.complex128))
    n_trials, n_b = b_beg.shape
    out = np.full((n_trials, 5), np.nan)
    sb = b_beg.sum(axis=1)
    se = b_end.sum(axis=1)
    ok = se != 0
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(ok, sb / np.where(ok, se, 1), np.nan)
    equal_windows = math.isclose(window_begin_s, window_end_s, rel_tol=1e-12, abs_tol=0.0)
    out[:, 0] = np.abs(q)
    if equal_windows:
        out[:, 1] = np.abs(q - 1)
        out[:, 2] = np.abs(np.mean(b_beg - b_end, axis=1))
    if n_b >= 2:
        out[:, 3] = np.abs(_batch_nwpr(b_beg, window_begin_s) - _batch_nwpr(b_end, window_end_s))
    psi_b = np.where(sb != 0, np.arctan2(sb.imag, sb.real), np.nan)
    psi_e = np.where(se != 0, np.arctan2(se.imag, se.real), np.nan)
    d = psi_b - psi_e
    out[:, 4] = np.abs(d - 2 * np.pi * np.round(d / (2 * np.pi)))
    return out


def _batch_nwpr(b: np.ndarray, window_s: float) -> np.ndarray:
    n_b = b.shape[1]
    wbp = np.sum(b.real**2 + b.imag**2, axis=1)
    nbp = np.abs(np.sum(b, axis=1)) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.clip(nbp / wbp, 1 + NP_EPS, n_b - NP_EPS)
        cn0 = 10 * np.log10((ratio - 1) / (n_b - ratio) / window_s)
    return np.where(wbp > 0, cn0, np.nan)
