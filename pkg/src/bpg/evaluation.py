"""Model-selection criteria, goodness-of-fit statistics, TTT transform and datasets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import DataError, DomainError

__all__ = [
    "info_criteria",
    "ks_statistic",
    "kolmogorov_sf",
    "ad_statistic",
    "cvm_statistic",
    "ttt_coordinates",
    "DescriptiveStats",
    "descriptive_stats",
    "GofReport",
    "gof_report",
    "Dataset",
    "DATASETS",
    "load_dataset",
    "read_values",
]


# ---------------------------------------------------------------------------
# information criteria
# ---------------------------------------------------------------------------


def info_criteria(loglik: float, k: int, w: int) -> tuple[float, float, float, float]:
    """Return ``(AIC, BIC, CAIC, HQIC)`` for log-likelihood ``loglik``.

    ``CAIC`` is the small-sample corrected AIC ``AIC + 2k(k+1)/(w-k-1)``.
    """
    if k < 0 or w <= k + 1:
        raise DomainError(f"need sample size w > k + 1, got w={w}, k={k}")
    aic = 2.0 * k - 2.0 * loglik
    bic = k * math.log(w) - 2.0 * loglik
    caic = aic + 2.0 * k * (k + 1) / (w - k - 1)
    hqic = 2.0 * k * math.log(math.log(w)) - 2.0 * loglik
    return aic, bic, caic, hqic


# ---------------------------------------------------------------------------
# empirical-distribution statistics
# ---------------------------------------------------------------------------


def kolmogorov_sf(t: float) -> float:
    """``P(K > t)`` for the limiting Kolmogorov distribution.

    Uses ``2 sum (-1)^(k-1) exp(-2 k^2 t^2)`` for ``t >= 1.18`` and the
    theta-function form ``1 - sqrt(2 pi)/t sum exp(-(2k-1)^2 pi^2 / (8 t^2))``
    below, each summed until terms fall under 1e-12.
    """
    t = float(t)
    if t <= 0:
        return 1.0
    total = 0.0
    if t >= 1.18:
        for k in range(1, 101):
            term = math.exp(-2.0 * k * k * t * t)
            total += term if k % 2 else -term
            if term < 1e-12:
                break
        return min(1.0, max(0.0, 2.0 * total))
    c = math.pi**2 / (8.0 * t * t)
    for k in range(1, 101):
        term = math.exp(-((2 * k - 1) ** 2) * c)
        total += term
        if term < 1e-12:
            break
    return min(1.0, max(0.0, 1.0 - math.sqrt(2.0 * math.pi) / t * total))


def _sorted_probs(data, cdf):
    x = np.sort(np.asarray(data, dtype=float).ravel())
    if x.size == 0:
        raise DataError("empty dataset")
    return x, np.asarray(cdf(x), dtype=float).reshape(x.shape)


def ks_statistic(data, cdf: Callable) -> tuple[float, float]:
    """Kolmogorov-Smirnov distance and its asymptotic p-value."""
    x, F = _sorted_probs(data, cdf)
    w = x.size
    i = np.arange(1, w + 1)
    d = float(max(np.max(i / w - F), np.max(F - (i - 1) / w)))
    return d, kolmogorov_sf(math.sqrt(w) * d)


def _interior(x, F, S):
    bad = np.flatnonzero(~((F > 0) & (S > 0)))
    if bad.size:
        raise DomainError(f"fitted cdf is 0 or 1 at data point {x[bad[0]]!r}")


def ad_statistic(data, cdf: Callable, sf: Callable | None = None, modified: bool = False) -> float:
    """Anderson-Darling ``A^2``; ``modified`` applies the factor ``1 + 0.75/w + 2.25/w^2``.

    When ``sf`` is supplied, ``log(1 - F)`` is taken from it directly.
    """
    x, F = _sorted_probs(data, cdf)
    S = np.asarray(sf(x), dtype=float) if sf is not None else 1.0 - F
    _interior(x, F, S)
    w = x.size
    i = np.arange(1, w + 1)
    a2 = -w - np.sum((2 * i - 1) * (np.log(F) + np.log(S[::-1]))) / w
    if modified:
        a2 *= 1.0 + 0.75 / w + 2.25 / w**2
    return float(a2)


def cvm_statistic(data, cdf: Callable, modified: bool = False) -> float:
    """Cramer-von Mises ``W^2``; ``modified`` applies the factor ``1 + 0.5/w``."""
    x, F = _sorted_probs(data, cdf)
    w = x.size
    i = np.arange(1, w + 1)
    w2 = 1.0 / (12.0 * w) + np.sum((F - (2 * i - 1) / (2.0 * w)) ** 2)
    if modified:
        w2 *= 1.0 + 0.5 / w
    return float(w2)


def ttt_coordinates(data) -> np.ndarray:
    """Scaled total-time-on-test points ``(i/w, T_i)`` as a ``(w, 2)`` array."""
    x = np.sort(np.asarray(data, dtype=float).ravel())
    if x.size == 0:
        raise DataError("empty dataset")
    if np.any(x < 0) or np.any(~np.isfinite(x)):
        raise DataError("TTT transform needs finite non-negative data")
    total = x.sum()
    if total <= 0:
        raise DataError("TTT transform is undefined for all-zero data")
    w = x.size
    i = np.arange(1, w + 1)
    t = (np.cumsum(x) + (w - i) * x) / total
    t[-1] = 1.0
    return np.column_stack([i / w, t])


# ---------------------------------------------------------------------------
# descriptive statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DescriptiveStats:
    n: int
    min: float
    mean: float
    median: float
    sd: float
    skewness: float
    kurtosis: float
    q1: float
    q3: float
    max: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def descriptive_stats(data) -> DescriptiveStats:
    """Summary statistics in the layout of a lifetime-data summary table.

    ``sd`` uses the ``w - 1`` divisor; skewness is ``m3 / sd^3`` and kurtosis
    is the excess ``m4 / sd^4 - 3`` with biased central moments ``m_k``;
    quartiles interpolate linearly between order statistics. Skewness and
    kurtosis are ``nan`` for constant data.
    """
    x = np.asarray(data, dtype=float).ravel()
    if x.size == 0:
        raise DataError("empty dataset")
    mean = float(x.mean())
    sd = float(x.std(ddof=1)) if x.size > 1 else 0.0
    dev = x - mean
    if sd > 0:
        skew = float(np.mean(dev**3) / sd**3)
        kurt = float(np.mean(dev**4) / sd**4 - 3.0)
    else:
        skew = kurt = math.nan
    q1, med, q3 = np.percentile(x, [25, 50, 75])
    return DescriptiveStats(int(x.size), float(x.min()), mean, float(med), sd, skew, kurt,
                            float(q1), float(q3), float(x.max()))


# ---------------------------------------------------------------------------
# goodness-of-fit report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GofReport:
    model_name: str
    k: int
    loglik: float
    aic: float
    bic: float
    caic: float
    hqic: float
    ks: float
    ks_pvalue: float
    ad: float
    cvm: float


def gof_report(fit, data, modified: bool = False) -> GofReport:
    """Criteria and EDF statistics of a :class:`~bpg.estimation.FitResult` on ``data``."""
    dist = fit.distribution()
    x = np.asarray(data, dtype=float)
    aic, bic, caic, hqic = info_criteria(fit.loglik, fit.k, x.size)
    ks, p = ks_statistic(x, dist.cdf)
    ad = ad_statistic(x, dist.cdf, dist.sf, modified=modified)
    cvm = cvm_statistic(x, dist.cdf, modified=modified)
    return GofReport(fit.model, fit.k, fit.loglik, aic, bic, caic, hqic, ks, p, ad, cvm)


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    id: str
    values: np.ndarray
    source: str


# published summary of each embedded dataset; loading fails if any cell is off by > 0.005
_CHECKSUMS = {
    "data1_guinea_pigs": dict(n=72, min=0.100, mean=1.851, median=1.560, sd=1.200, skewness=1.788,
                              kurtosis=4.157, q1=1.080, q3=2.303, max=7.000),
    "data2_relief_times": dict(n=20, min=1.100, mean=1.900, median=1.700, sd=0.704, skewness=1.592,
                               kurtosis=2.346, q1=1.475, q3=2.050, max=4.100),
}
DATASETS = {"data1": "data1_guinea_pigs", "data2": "data2_relief_times"}
CHECKSUM_TOL = 0.005


def read_values(path) -> tuple[np.ndarray, str]:
    """Parse a plain-text file of numbers; ``#`` starts a comment.

    Values may be separated by newlines, commas or whitespace. Returns the
    values and the joined comment header.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read data file {str(path)!r}: {exc.strerror}") from None
    return _parse(text, str(path))


def _parse(text: str, label: str):
    values, header = [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        body, _, comment = line.partition("#")
        if comment and not body.strip():
            header.append(comment.strip())
        for tok in body.replace(",", " ").split():
            try:
                values.append(float(tok))
            except ValueError:
                raise DataError(f"{label}:{lineno}: not a number: {tok!r}") from None
    if not values:
        raise DataError(f"{label}: no values found")
    return np.array(values), "\n".join(header)


def validate_checksum(dataset_id: str, values) -> None:
    expected = _CHECKSUMS[dataset_id]
    got = descriptive_stats(values).as_dict()
    bad = {k: (got[k], v) for k, v in expected.items() if not abs(got[k] - v) <= CHECKSUM_TOL}
    if bad:
        raise DataError(f"dataset {dataset_id} fails its checksum: {bad}")


def load_dataset(name: str) -> Dataset:
    """Load an embedded dataset by id (``data1``, ``data2`` or the long form).

    The values are checked against the stored summary statistics before
    being returned.
    """
    key = DATASETS.get(name, name)
    if key not in _CHECKSUMS:
        raise DataError(f"unknown dataset {name!r}; choose from {sorted(DATASETS)}")
    text = resources.files("bpg").joinpath("data", f"{key}.txt").read_text()
    values, header = _parse(text, key)
    validate_checksum(key, values)
    return Dataset(key, values, header)
