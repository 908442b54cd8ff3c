"""Moments, probability-weighted moments, mgf, entropies and quantile shape measures.

Integrals in x are split at quantiles of the distribution so that peaked
densities (large ``m`` or ``n``) are resolved; integrals in u = F(x) use the
quantile function directly and serve as an independent route to the same
numbers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .baselines import Exponential, Weibull
from .errors import DomainError, QuadratureWarning
from .family import BetaPoissonG, PoissonG, psi_coefficients, series_coefficients
from .numerics import QuadratureSpec, QuadResult, integrate

__all__ = [
    "MomentSummary",
    "pwm",
    "raw_moment",
    "moment_summary",
    "mgf",
    "mgf_threshold",
    "renyi_entropy",
    "renyi_entropy_expansion",
    "shannon_entropy",
    "galton_moors",
    "galton_moors_grid",
    "orderstat_pdf",
    "orderstat_coefficients",
]

# breakpoints in probability used to split x-space integrals
_U_BREAKS = (1e-6, 1e-3, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999, 1 - 1e-6)
# breakpoints for u-space integrals, dense near 1 where quantiles grow
_U_GRID = (0.5, 0.9, 0.99, 0.999, 0.9999, 1 - 1e-6)


def _combine(parts: list[QuadResult]) -> QuadResult:
    return QuadResult(
        float(sum(p.value for p in parts)),
        float(sum(p.error for p in parts)),
        all(p.converged for p in parts),
    )


def _checked(res: QuadResult, what: str) -> float:
    if not res.converged:
        warnings.warn(f"{what}: quadrature error estimate {res.error:.3g} above tolerance", QuadratureWarning,
                      stacklevel=3)
    return res.value


def _x_integral(fun: Callable[[float], float], dist, spec: QuadratureSpec | None) -> QuadResult:
    """Integral of ``fun`` over (0, inf) split at quantiles of ``dist``."""
    bps = np.asarray(dist.quantile(np.asarray(_U_BREAKS)), dtype=float)
    bps = np.unique(bps[np.isfinite(bps) & (bps > 0)])
    edges = np.concatenate([[0.0], bps, [np.inf]])
    return _combine([integrate(fun, a, b, spec) for a, b in zip(edges[:-1], edges[1:])])


def _u_integral(fun: Callable[[float], float], spec: QuadratureSpec | None) -> QuadResult:
    edges = (0.0,) + _U_GRID + (1.0,)
    return _combine([integrate(fun, a, b, spec) for a, b in zip(edges[:-1], edges[1:])])


def _scalar(fn):
    return lambda t: float(fn(t))


# ---------------------------------------------------------------------------
# probability-weighted and raw moments
# ---------------------------------------------------------------------------


def pwm(p: int, q: float, r: float, pg: PoissonG, spec: QuadratureSpec | None = None) -> float:
    """Probability-weighted moment ``E[X^p F(X)^q (1 - F(X))^r]`` of a Poisson-G law.

    Evaluated in probability space as ``int_0^1 Q(u)^p u^q (1-u)^r du``.
    """
    if p < 0 or q < 0 or r < 0:
        raise DomainError("pwm orders must be non-negative")
    if not isinstance(pg, PoissonG):
        raise DomainError("pwm expects a PoissonG distribution")

    def f(u):
        x = float(pg.quantile(u))
        val = u**q * (1.0 - u) ** r
        return val * x**p if p else val

    return _checked(_u_integral(f, spec), "pwm")


def raw_moment(s: int, dist: BetaPoissonG, method: str = "direct", spec: QuadratureSpec | None = None) -> float:
    """``E[X^s]`` by one of three independent routes.

    Parameters
    ----------
    s : int
        Moment order, ``s >= 1``.
    dist : BetaPoissonG
    method : {"direct", "quantile", "pwm_mixture"}
        ``direct`` integrates ``x^s f(x)`` over x, ``quantile`` integrates
        ``Q(u)^s`` over (0, 1), ``pwm_mixture`` sums
        ``mu_j E_PG[X^s F^(j+m-1)]`` and needs an integer ``n``.
    """
    if s < 1:
        raise DomainError("moment order must be >= 1")
    if method == "direct":
        res = _x_integral(lambda x: x**s * float(dist.pdf(x)), dist, spec)
    elif method == "quantile":
        res = _u_integral(lambda u: float(dist.quantile(u)) ** s, spec)
    elif method == "pwm_mixture":
        if dist.n != round(dist.n):
            raise DomainError("pwm_mixture requires an integer n")
        coef = series_coefficients(dist.m, dist.n, int(round(dist.n)))
        return float(sum(mu * pwm(s, j + dist.m - 1.0, 0.0, dist.pg, spec) for j, mu in enumerate(coef.mu)))
    else:
        raise DomainError(f"unknown moment method {method!r}")
    return _checked(res, f"raw moment {s}")


@dataclass(frozen=True)
class MomentSummary:
    """Mean, variance, skewness and raw (non-excess) kurtosis."""

    mean: float
    variance: float
    skewness: float
    kurtosis: float


def moment_summary(dist: BetaPoissonG, method: str = "direct", spec: QuadratureSpec | None = None) -> MomentSummary:
    """Mean, variance, skewness and kurtosis ``E[(X-mu)^4] / sigma^4``.

    Central moments are integrated directly around the mean rather than
    assembled from raw moments, which avoids cancellation for peaked laws.
    ``method`` selects x-space (``direct``) or u-space (``quantile``) quadrature.
    """
    if method == "direct":
        def central(k, mu):
            return _checked(_x_integral(lambda x: (x - mu) ** k * float(dist.pdf(x)), dist, spec),
                            f"central moment {k}")
    elif method == "quantile":
        def central(k, mu):
            return _checked(_u_integral(lambda u: (float(dist.quantile(u)) - mu) ** k, spec),
                            f"central moment {k}")
    else:
        raise DomainError(f"unknown moment method {method!r}")
    mean = raw_moment(1, dist, method, spec)
    var = central(2, mean)
    c3 = central(3, mean)
    c4 = central(4, mean)
    sd = math.sqrt(var) if var > 0 else float("nan")
    return MomentSummary(mean, var, c3 / sd**3, c4 / var**2)


# ---------------------------------------------------------------------------
# moment generating function
# ---------------------------------------------------------------------------


def mgf_threshold(dist: BetaPoissonG) -> float:
    """Supremum of the arguments ``s`` for which ``E[exp(sX)]`` is finite.

    The upper tail of the density behaves like ``g(x) S(x)^(n-1)``; for an
    exponential baseline this decays as ``exp(-n beta x)``.
    """
    base = dist.baseline
    if isinstance(base, Exponential):
        return dist.n * base.beta
    if isinstance(base, Weibull):
        if base.delta > 1.0:
            return math.inf
        if base.delta == 1.0:
            return dist.n * base.beta
        return 0.0
    raise DomainError(f"no tail rule for baseline {base.name!r}")


def mgf(s: float, dist: BetaPoissonG, method: str = "direct", spec: QuadratureSpec | None = None) -> float:
    """Moment generating function ``E[exp(sX)]``.

    ``direct`` integrates ``exp(sx) f(x)``. ``mixture`` writes the cdf as
    ``sum_j mu'_j F_PG^(j+m)`` and sums the mgfs of the exponentiated
    Poisson-G components, each computed on (0, 1) through its quantile
    ``Q_PG(v^(1/a))``; it needs an integer ``n``.
    """
    s = float(s)
    limit = mgf_threshold(dist)
    if s > 0 and s >= limit:
        raise DomainError(f"mgf diverges for s >= {limit}")
    if s == 0.0:
        return 1.0
    if method == "direct":
        with np.errstate(over="ignore"):
            res = _x_integral(lambda x: math.exp(s * x + float(dist.logpdf(x))), dist, spec)
        return _checked(res, "mgf")
    if method == "mixture":
        if dist.n != round(dist.n):
            raise DomainError("mixture mgf requires an integer n")
        coef = series_coefficients(dist.m, dist.n, int(round(dist.n)))
        total = 0.0
        for j, w in enumerate(coef.mu_prime):
            a = j + dist.m
            comp = _u_integral(lambda v: math.exp(s * float(dist.pg.quantile(v ** (1.0 / a)))), spec)
            total += w * _checked(comp, "mgf component")
        return float(total)
    raise DomainError(f"unknown mgf method {method!r}")


# ---------------------------------------------------------------------------
# entropies
# ---------------------------------------------------------------------------


def _check_delta(delta):
    delta = float(delta)
    if not (delta > 0) or delta == 1.0:
        raise DomainError("Renyi order must satisfy delta > 0 and delta != 1")
    return delta


def renyi_entropy(delta: float, dist: BetaPoissonG, spec: QuadratureSpec | None = None) -> float:
    """Renyi entropy ``log(int f^delta) / (1 - delta)`` by direct quadrature."""
    delta = _check_delta(delta)
    res = _x_integral(lambda x: math.exp(delta * float(dist.logpdf(x))), dist, spec)
    return math.log(_checked(res, "Renyi entropy")) / (1.0 - delta)


def renyi_entropy_expansion(delta: float, dist: BetaPoissonG, spec: QuadratureSpec | None = None) -> float:
    """Renyi entropy from the binomial expansion of ``(1 - F_PG)^(delta (n-1))``.

    ``f^delta = f_PG^delta sum_i zeta_i F_PG^(i + delta (m-1))`` with
    ``zeta_i = B(m,n)^(-delta) C(delta(n-1), i) (-1)^i``. The sum is finite
    only when ``delta (n - 1)`` is a non-negative integer, which is required.
    """
    delta = _check_delta(delta)
    k = delta * (dist.n - 1.0)
    if k < 0 or abs(k - round(k)) > 1e-12:
        raise DomainError("expansion needs delta * (n - 1) to be a non-negative integer")
    k = int(round(k))
    pg = dist.pg
    total = 0.0
    for i in range(k + 1):
        zeta = math.exp(-delta * dist._lbeta) * special.binom(k, i) * (-1.0) ** i
        power = i + delta * (dist.m - 1.0)

        def f(x, power=power):
            z = float(pg.cdf(x))
            if z <= 0.0:
                return 0.0
            return math.exp(delta * float(pg.logpdf(x)) + power * math.log(z))

        total += zeta * _checked(_x_integral(f, dist, spec), "Renyi expansion term")
    return math.log(total) / (1.0 - delta)


def shannon_entropy(dist: BetaPoissonG, spec: QuadratureSpec | None = None) -> float:
    """Differential entropy ``-int f log f``."""

    def f(x):
        lf = float(dist.logpdf(x))
        return -math.exp(lf) * lf if np.isfinite(lf) else 0.0

    return _checked(_x_integral(f, dist, spec), "Shannon entropy")


# ---------------------------------------------------------------------------
# quantile-based shape
# ---------------------------------------------------------------------------


def galton_moors(dist: BetaPoissonG) -> tuple[float, float]:
    """Galton skewness S and Moors kurtosis K from the octiles."""
    q = np.asarray(dist.quantile(np.arange(1, 8) / 8.0), dtype=float)
    spread = q[5] - q[1]
    if not spread > 0:
        raise DomainError("degenerate octile spread")
    skew = (q[5] - 2.0 * q[3] + q[1]) / spread
    kurt = (q[6] - q[4] + q[2] - q[0]) / spread
    return float(skew), float(kurt)


def galton_moors_grid(m: float, n: float, lam_values, beta_values) -> list[dict]:
    """S and K of the exponential-baseline law over a (lam, beta) grid."""
    rows = []
    for lam in lam_values:
        for beta in beta_values:
            s, k = galton_moors(BetaPoissonG(m, n, lam, Exponential(beta)))
            rows.append({"m": m, "n": n, "lam": float(lam), "beta": float(beta), "galton": s, "moors": k})
    return rows


# ---------------------------------------------------------------------------
# order statistics
# ---------------------------------------------------------------------------


def orderstat_pdf(x, u: int, g: int, dist: BetaPoissonG):
    """Density of the ``u``-th order statistic out of ``g``.

    ``g!/((u-1)!(g-u)!) sum_{j=0}^{g-u} (-1)^j C(g-u, j) f(x) F(x)^(j+u-1)``.
    """
    u, g = int(u), int(g)
    if not 1 <= u <= g:
        raise DomainError("order statistic index must satisfy 1 <= u <= g")
    x = np.asarray(x, dtype=float)
    f = np.asarray(dist.pdf(x), dtype=float)
    F = np.asarray(dist.cdf(x), dtype=float)
    lead = math.exp(math.lgamma(g + 1) - math.lgamma(u) - math.lgamma(g - u + 1))
    total = np.zeros_like(F)
    for j in range(g - u + 1):
        total = total + (-1.0) ** j * special.binom(g - u, j) * F ** (j + u - 1)
    out = lead * f * total
    return float(out) if out.ndim == 0 else out


def orderstat_coefficients(power: int, m: float, n: float, p_max: int, q_max: int) -> np.ndarray:
    """Coefficients ``d_{power,k}`` of ``(sum_k psi_k z^k)^power`` for ``k <= q_max``.

    Obtained by repeated polynomial multiplication of the truncated ``psi``
    series, each product truncated to degree ``q_max``.
    """
    if power < 0:
        raise DomainError("power must be non-negative")
    psi = psi_coefficients(m, n, p_max, q_max)
    out = np.zeros(q_max + 1)
    out[0] = 1.0
    for _ in range(power):
        out = np.convolve(out, psi)[: q_max + 1]
    return out
