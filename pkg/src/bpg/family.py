"""Poisson-G and beta Poisson-G distributions.

The Poisson-G cdf is ``z(x) = (1 - exp(-lam G)) / (1 - exp(-lam))`` and the
beta Poisson-G cdf is ``I_z(m, n)``. Both ``z`` and its complement are
formed from the baseline cumulative hazard so that neither tail loses
precision:

    z     = expm1(-lam G) / expm1(-lam)
    1 - z = exp(-lam G) expm1(-lam S) / expm1(-lam),    S = 1 - G.

Every expression above is written to be valid for either sign of ``lam``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .baselines import Baseline, Exponential
from .errors import DomainError
from .numerics import RandomStream, _ibeta_inv_vec, _ibeta_vec, log_beta

__all__ = [
    "PoissonG",
    "BetaPoissonG",
    "SeriesCoefficients",
    "series_coefficients",
    "psi_coefficients",
]


def _out(arr):
    arr = np.asarray(arr, dtype=float)
    return float(arr) if arr.ndim == 0 else arr


def _unit(u):
    u = np.asarray(u, dtype=float)
    if np.any(np.isnan(u)) or np.any(u < 0.0) or np.any(u > 1.0):
        raise DomainError("probability argument must lie in [0, 1]")
    return u


def _positive(name, value):
    value = float(value)
    if not (np.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be finite and > 0, got {value!r}")
    return value


class PoissonG:
    """Poisson-G distribution over a baseline ``G`` with parameter ``lam != 0``."""

    def __init__(self, lam: float, baseline: Baseline):
        lam = float(lam)
        if not np.isfinite(lam) or lam == 0.0:
            raise DomainError(f"lam must be finite and nonzero, got {lam!r}")
        if not isinstance(baseline, Baseline):
            raise DomainError("baseline must be a Baseline instance")
        self.lam = lam
        self.baseline = baseline
        # log(lam / (1 - e^{-lam})), positive quantity for either sign of lam
        self._log_norm = float(np.log(abs(lam)) - np.log(abs(np.expm1(-lam))))

    def _parts(self, x):
        """Return ``(G, S, log z, log(1 - z))`` at ``x``."""
        lam = self.lam
        h = np.asarray(self.baseline.cumhaz(x), dtype=float)
        G = -np.expm1(-h)
        S = np.exp(-h)
        den = np.log(abs(np.expm1(-lam)))
        # 1 - z written through S = e^{-h} so it stays finite after S underflows
        q = lam * S
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(q != 0.0, np.expm1(-q) / -q, 1.0)
            log_z = np.log(np.abs(np.expm1(-lam * G))) - den
            log_zc = -lam * G + np.log(abs(lam)) - h + np.log(ratio) - den
        return G, S, log_z, log_zc

    def cdf(self, x):
        _, _, log_z, _ = self._parts(x)
        return _out(np.exp(log_z))

    def sf(self, x):
        _, _, _, log_zc = self._parts(x)
        return _out(np.exp(log_zc))

    def logpdf(self, x):
        G = self.baseline.cdf(x)
        with np.errstate(divide="ignore"):
            return _out(self._log_norm + np.asarray(self.baseline.logpdf(x)) - self.lam * np.asarray(G))

    def pdf(self, x):
        return _out(np.exp(self.logpdf(x)))

    def hrf(self, x):
        _, _, _, log_zc = self._parts(x)
        with np.errstate(invalid="ignore"):
            return _out(np.exp(np.asarray(self.logpdf(x)) - log_zc))

    def quantile(self, u):
        """Inverse cdf; ``quantile(1)`` is the baseline's upper support limit."""
        u = _unit(u)
        lam = self.lam
        with np.errstate(divide="ignore", invalid="ignore"):
            t = -np.log1p(u * np.expm1(-lam)) / lam
            return _out(self.baseline.quantile(np.clip(t, 0.0, 1.0)))

    def __repr__(self):
        return f"PoissonG(lam={self.lam!r}, baseline={self.baseline!r})"


class BetaPoissonG:
    """Beta Poisson-G distribution with cdf ``I_{z(x)}(m, n)``.

    Parameters
    ----------
    m, n : float
        Positive beta shape parameters.
    lam : float
        Positive Poisson parameter.
    baseline : Baseline
        The parent distribution G.
    """

    def __init__(self, m: float, n: float, lam: float, baseline: Baseline):
        self.m = _positive("m", m)
        self.n = _positive("n", n)
        self.lam = _positive("lam", lam)
        self.pg = PoissonG(self.lam, baseline)
        self.baseline = baseline
        self._lbeta = float(log_beta(self.m, self.n))

    # parameter vector rho = (m, n, lam, baseline params)
    @property
    def param_names(self) -> tuple[str, ...]:
        return ("m", "n", "lam") + self.baseline.param_names

    @property
    def values(self) -> np.ndarray:
        return np.concatenate([[self.m, self.n, self.lam], self.baseline.values])

    @classmethod
    def from_values(cls, values, baseline: Baseline) -> "BetaPoissonG":
        values = np.asarray(values, dtype=float)
        return cls(values[0], values[1], values[2], baseline.with_values(values[3:]))

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        _, _, log_z, log_zc = self.pg._parts(x)
        with np.errstate(invalid="ignore"):
            # m = 1 or n = 1 must not turn 0 * (-inf) into nan at the support ends
            a = np.where(self.m == 1.0, 0.0, (self.m - 1.0) * log_z)
            b = np.where(self.n == 1.0, 0.0, (self.n - 1.0) * log_zc)
            out = np.asarray(self.pg.logpdf(x)) + a + b - self._lbeta
        out = np.where(np.isnan(out) & ~np.isnan(x), -np.inf, out)
        return _out(out)

    def pdf(self, x):
        return _out(np.exp(self.logpdf(x)))

    def cdf(self, x):
        _, _, log_z, _ = self.pg._parts(x)
        return _out(_ibeta_vec(np.exp(log_z), self.m, self.n))

    def sf(self, x):
        _, _, _, log_zc = self.pg._parts(x)
        return _out(_ibeta_vec(np.exp(log_zc), self.n, self.m))

    def hrf(self, x):
        with np.errstate(divide="ignore", invalid="ignore"):
            return _out(np.asarray(self.pdf(x)) / np.asarray(self.sf(x)))

    def quantile(self, u):
        """Inverse cdf ``Q_G(-log(1 - Q_{m,n}(u)(1 - e^{-lam})) / lam)``.

        Where the beta quantile exceeds 1/2 the evaluation switches to the
        complementary route through the baseline inverse survival function,
        so the upper tail keeps its relative accuracy.
        """
        u = _unit(u)
        lam = self.lam
        z = np.asarray(_ibeta_inv_vec(u, self.m, self.n), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.clip(-np.log1p(z * np.expm1(-lam)) / lam, 0.0, 1.0)
            x = np.asarray(self.baseline.quantile(t), dtype=float)
            upper = z > 0.5
            if np.any(upper):
                uu = np.broadcast_to(u, z.shape)[upper]
                y = np.asarray(_ibeta_inv_vec(1.0 - uu, self.n, self.m), dtype=float)
                s = self._s_from_complement(y)
                x[upper] = self.baseline.isf(np.clip(s, 0.0, 1.0))
        return _out(x)

    def _s_from_complement(self, y):
        # 1 - z = expm1(lam S) / expm1(lam)  =>  S = log1p(y expm1(lam)) / lam
        lam = self.lam
        if lam < 700.0:
            return np.log1p(y * np.expm1(lam)) / lam
        with np.errstate(divide="ignore"):
            return 1.0 + np.log(y + (1.0 - y) * np.exp(-lam)) / lam

    def bpe_quantile(self, u):
        """Closed-form quantile of the exponential-baseline member.

        ``x_u = -log(1 + log(1 - Q_{m,n}(u)(1 - e^{-lam})) / lam) / beta``.
        """
        if not isinstance(self.baseline, Exponential):
            raise DomainError("closed-form quantile requires an exponential baseline")
        u = _unit(u)
        z = np.asarray(_ibeta_inv_vec(u, self.m, self.n), dtype=float)
        with np.errstate(divide="ignore"):
            return _out(-np.log1p(np.log1p(z * np.expm1(-self.lam)) / self.lam) / self.baseline.beta)

    def sample(self, count: int, stream: RandomStream):
        """Draw ``count`` variates by inverse transform from ``stream``."""
        count = int(count)
        if count < 1:
            raise DomainError("count must be >= 1")
        return np.asarray(self.quantile(stream.uniform(count)), dtype=float)

    # --- series representations, used as cross-checks -------------------

    def series_pdf(self, x):
        """Density as ``f_PG sum_{j<n} mu_j z^(j+m-1)``; exact for integer ``n``."""
        if self.n != round(self.n):
            raise DomainError("series_pdf requires an integer n (finite binomial sum)")
        coef = series_coefficients(self.m, self.n, int(round(self.n)))
        x = np.asarray(x, dtype=float)
        z = np.asarray(self.pg.cdf(x), dtype=float)
        j = np.arange(coef.truncation)
        with np.errstate(divide="ignore", invalid="ignore"):
            powers = np.power.outer(z, j + self.m - 1.0)
        total = powers @ coef.mu
        return _out(np.asarray(self.pg.pdf(x)) * total)

    def series_cdf(self, x, p_max: int, q_max: int):
        """Partial sum ``sum_{r<=q_max} psi_r z^r`` of the power series in ``z``."""
        psi = psi_coefficients(self.m, self.n, p_max, q_max)
        z = np.asarray(self.pg.cdf(x), dtype=float)
        return _out(np.polynomial.polynomial.polyval(z, psi))

    def __repr__(self):
        return f"BetaPoissonG(m={self.m!r}, n={self.n!r}, lam={self.lam!r}, baseline={self.baseline!r})"


@dataclass(frozen=True)
class SeriesCoefficients:
    """Mixture weights of the beta Poisson-G density and cdf in powers of ``z``.

    ``mu_prime[j] = (-1)^j C(n-1, j) / (B(m, n) (j + m))`` and
    ``mu[j] = mu_prime[j] (j + m)``.
    """

    mu: np.ndarray
    mu_prime: np.ndarray
    truncation: int


def series_coefficients(m: float, n: float, terms: int) -> SeriesCoefficients:
    """First ``terms`` weights; for integer ``n`` the list ends at ``j = n - 1``."""
    m, n = _positive("m", m), _positive("n", n)
    if terms < 1:
        raise DomainError("terms must be >= 1")
    j = np.arange(terms)
    lb = float(log_beta(m, n))
    mu_prime = (-1.0) ** j * special.binom(n - 1.0, j) / (np.exp(lb) * (j + m))
    return SeriesCoefficients(mu=mu_prime * (j + m), mu_prime=mu_prime, truncation=int(terms))


def psi_coefficients(m: float, n: float, p_max: int, q_max: int) -> np.ndarray:
    """``psi_0 .. psi_q_max`` with the double sum truncated at ``p <= p_max, q <= q_max``.

    ``psi_r = sum_p sum_{q>=r} (-1)^(p+q+r) C(n-1,p) C(m+p,q) C(q,r) / (B(m,n)(m+p))``.
    The sums are finite when ``m`` and ``n`` are integers.
    """
    if p_max < 0 or q_max < 0:
        raise DomainError("truncation bounds must be >= 0")
    m, n = _positive("m", m), _positive("n", n)
    lb = float(log_beta(m, n))
    p = np.arange(p_max + 1, dtype=float)
    q = np.arange(q_max + 1, dtype=float)
    r = np.arange(q_max + 1, dtype=float)
    wp = (-1.0) ** p * special.binom(n - 1.0, p) / (np.exp(lb) * (m + p))  # (P,)
    wq = (-1.0) ** q * special.binom(m + p[:, None], q[None, :])  # (P, Q)
    wr = (-1.0) ** r[None, :] * special.binom(q[:, None], r[None, :])  # (Q, R), zero for r > q
    return wp @ wq @ wr
