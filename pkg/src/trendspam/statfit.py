"""Log-normal and power-law fitting with Kolmogorov-Smirnov goodness of fit."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import ndtr

from .errors import (
    EmptySample,
    InsufficientTail,
    NonPositiveForLogBins,
    NonPositiveValue,
    TooFewDistinct,
    TooFewPoints,
)

# asymptotic one-sample KS coefficients: critical D = c / sqrt(n)
KS_COEFFICIENTS = {0.10: 1.22, 0.05: 1.36, 0.01: 1.63}


def ks_critical_value(n: int, alpha: float = 0.05) -> float:
    try:
        c = KS_COEFFICIENTS[alpha]
    except KeyError:
        raise ValueError(f"alpha must be one of {sorted(KS_COEFFICIENTS)}") from None
    return c / math.sqrt(n)


def ks_distance(sorted_x: np.ndarray, cdf: np.ndarray) -> float:
    """sup |ECDF - F| given a sorted sample and F evaluated at it.

    Ties are handled correctly: within a run of equal values the largest
    ``i/n`` and the smallest ``(i-1)/n`` both appear in the maxima.
    """
    n = sorted_x.size
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - cdf)
    d_minus = np.max(cdf - (i - 1) / n)
    return float(max(d_plus, d_minus, 0.0))


def _positive_array(sample) -> np.ndarray:
    x = np.asarray(sample, dtype=float).ravel()
    if np.any(~(x > 0)):
        raise NonPositiveValue("sample contains non-positive or NaN values")
    return x


@dataclass(frozen=True)
class LognormalFit:
    mu: float
    sigma: float
    n: int

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return ndtr((np.log(x) - self.mu) / self.sigma)

    def ppf(self, q):
        from scipy.special import ndtri
        return np.exp(self.mu + self.sigma * ndtri(np.asarray(q, dtype=float)))

    def to_dict(self) -> dict:
        return {"distribution": "lognormal", **asdict(self)}


def fit_lognormal(sample) -> LognormalFit:
    """Maximum-likelihood log-normal: mean and population std of ``ln x``."""
    x = _positive_array(sample)
    if x.size < 2:
        raise TooFewPoints(f"need at least 2 values, got {x.size}")
    logs = np.log(x)
    sigma = float(logs.std())
    if not sigma > 0:
        raise TooFewDistinct("all values are equal; sigma would be 0")
    return LognormalFit(float(logs.mean()), sigma, int(x.size))


@dataclass(frozen=True)
class KsResult:
    d_stat: float
    critical_value: float
    passed: bool
    n: int
    alpha: float = 0.05

    def to_dict(self) -> dict:
        return asdict(self)


def ks_test_lognormal(sample, fit: LognormalFit, alpha: float = 0.05) -> KsResult:
    """One-sample KS test of ``sample`` against the fitted log-normal.

    Passes when D is below ``1.36 / sqrt(n)`` (at alpha 0.05). Parameters
    estimated from the same sample make the nominal level conservative.
    """
    x = np.sort(_positive_array(sample))
    if x.size == 0:
        raise EmptySample("empty sample")
    d = ks_distance(x, fit.cdf(x))
    crit = ks_critical_value(x.size, alpha)
    return KsResult(d, crit, d < crit, int(x.size), alpha)


@dataclass(frozen=True)
class PowerlawFit:
    alpha: float
    xmin: float
    n_tail: int
    n: int
    ks_distance: float

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < self.xmin, 0.0, 1.0 - (x / self.xmin) ** (1.0 - self.alpha))

    def to_dict(self) -> dict:
        return {"distribution": "powerlaw", **asdict(self)}


def _tail_fit(tail: np.ndarray, xmin: float):
    """(alpha, D) for a sorted tail, or None when the tail is degenerate."""
    s = np.log(tail / xmin).sum()
    if s <= 0:
        return None
    alpha = 1.0 + tail.size / s
    cdf = 1.0 - (tail / xmin) ** (1.0 - alpha)
    return alpha, ks_distance(tail, cdf)


def fit_powerlaw(sample, xmin: float | None = None, min_tail: int = 10) -> PowerlawFit:
    """Continuous power-law MLE, ``alpha = 1 + n / sum(ln(x / xmin))``.

    Without ``xmin``, every observed value leaving at least ``min_tail`` points
    in the tail is tried and the one minimizing the KS distance between the
    tail and its fit is kept.
    """
    x = np.sort(_positive_array(sample))
    if xmin is not None:
        tail = x[x >= xmin]
        if tail.size < min_tail:
            raise InsufficientTail(f"{tail.size} points >= xmin={xmin}, need {min_tail}")
        res = _tail_fit(tail, xmin)
        if res is None:
            raise InsufficientTail("every tail value equals xmin; alpha is unbounded")
        return PowerlawFit(res[0], float(xmin), int(tail.size), int(x.size), res[1])

    best = None
    starts = np.flatnonzero(np.r_[True, x[1:] != x[:-1]])
    for k in starts[x.size - starts >= min_tail]:
        res = _tail_fit(x[k:], x[k])
        if res is not None and (best is None or res[1] < best[1]):
            best = (res[0], res[1], k)
    if best is None:
        raise InsufficientTail(f"no cutoff leaves {min_tail} points with a finite exponent")
    alpha, d, k = best
    return PowerlawFit(alpha, float(x[k]), int(x.size - k), int(x.size), d)


@dataclass(frozen=True, eq=False)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    total: int
    log: bool = False

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.total * np.diff(self.edges))

    def rows(self):
        return zip(self.edges[:-1].tolist(), self.edges[1:].tolist(),
                   self.counts.tolist(), self.density.tolist())


def histogram(sample, bins: int = 10, log: bool = False) -> Histogram:
    """Counts over ``bins`` linear or logarithmic bins spanning the sample."""
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise EmptySample("cannot histogram an empty sample")
    lo, hi = float(x.min()), float(x.max())
    if log:
        if lo <= 0:
            raise NonPositiveForLogBins("log bins need strictly positive values")
        a, b = math.log10(lo), math.log10(hi)
        if a == b:
            a, b = a - 0.5, b + 0.5
        edges = np.logspace(a, b, bins + 1)
        if lo != hi:
            edges[0], edges[-1] = lo, hi
    else:
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        edges = np.linspace(lo, hi, bins + 1)
    counts, edges = np.histogram(x, bins=edges)
    return Histogram(edges, counts.astype(np.int64), int(x.size), log)


def write_histogram_csv(hist: Histogram, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["left", "right", "count", "density"])
        for row in hist.rows():
            w.writerow(row)
