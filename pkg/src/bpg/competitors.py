"""Exponential-type competitor models used for model comparison.

All models live on (0, inf) with rate-type parameter ``beta`` except the
moment exponential, whose ``beta`` is a scale (density ``x e^{-x/beta} / beta^2``).
"""

from __future__ import annotations

from typing import Mapping

import numpy as np
from scipy import special

from .errors import DomainError
from .numerics import _ibeta_inv_vec, _ibeta_vec

__all__ = [
    "Competitor",
    "Exp",
    "MomentExp",
    "MarshallOlkinExp",
    "KumaraswamyExp",
    "BetaExp",
    "COMPETITORS",
    "make_competitor",
]


def _out(arr):
    arr = np.asarray(arr, dtype=float)
    return float(arr) if arr.ndim == 0 else arr


def _unit(u):
    u = np.asarray(u, dtype=float)
    if np.any(np.isnan(u)) or np.any(u < 0.0) or np.any(u > 1.0):
        raise DomainError("probability argument must lie in [0, 1]")
    return u


class Competitor:
    """Base class: named positive parameters plus pdf, cdf, sf and quantile."""

    name = ""
    param_names: tuple[str, ...] = ()

    def __init__(self, *args: float, **params: float):
        if len(args) > len(self.param_names):
            raise DomainError(f"{self.name} takes {len(self.param_names)} parameters, got {len(args)}")
        for key, val in zip(self.param_names, args):
            if key in params:
                raise DomainError(f"{self.name} parameter {key} given twice")
            params[key] = val
        if set(params) != set(self.param_names):
            raise DomainError(f"{self.name} expects parameters {self.param_names}, got {tuple(params)}")
        for key in self.param_names:
            val = float(params[key])
            if not (np.isfinite(val) and val > 0):
                raise DomainError(f"{self.name} parameter {key} must be finite and > 0, got {params[key]!r}")
            setattr(self, key, val)

    @property
    def param_count(self) -> int:
        return len(self.param_names)

    @property
    def params(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in self.param_names}

    @property
    def values(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in self.param_names])

    @classmethod
    def from_values(cls, values) -> "Competitor":
        return cls(**dict(zip(cls.param_names, np.asarray(values, dtype=float))))

    def _logpdf(self, x):  # x > 0 only
        raise NotImplementedError

    def _sf(self, x):  # x > 0 only
        raise NotImplementedError

    def _cdf(self, x):
        return 1.0 - self._sf(x)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        xp = np.where(x > 0, x, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            return _out(np.where(x > 0, self._logpdf(xp), -np.inf))

    def pdf(self, x):
        return _out(np.exp(self.logpdf(x)))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        xp = np.where(x > 0, x, 1.0)
        return _out(np.where(x > 0, self._cdf(xp), 0.0))

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        xp = np.where(x > 0, x, 1.0)
        return _out(np.where(x > 0, self._sf(xp), 1.0))

    def quantile(self, u):
        raise NotImplementedError

    def loglik(self, data) -> float:
        """Sum of log densities; ``-inf`` if any point has zero density."""
        data = np.asarray(data, dtype=float)
        if data.size == 0 or np.any(~np.isfinite(data)) or np.any(data < 0):
            raise DomainError(f"{self.name}: data must be finite and lie in the support [0, inf)")
        return float(np.sum(self.logpdf(data)))

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{type(self).__name__}({inner})"


class Exp(Competitor):
    """Exponential with rate ``beta``."""

    name = "exp"
    param_names = ("beta",)

    def _logpdf(self, x):
        return np.log(self.beta) - self.beta * x

    def _sf(self, x):
        return np.exp(-self.beta * x)

    def _cdf(self, x):
        return -np.expm1(-self.beta * x)

    def quantile(self, u):
        with np.errstate(divide="ignore"):
            return _out(-np.log1p(-_unit(u)) / self.beta)


class MomentExp(Competitor):
    """Moment (length-biased) exponential: ``f(x) = x exp(-x/beta) / beta^2``."""

    name = "me"
    param_names = ("beta",)

    def _logpdf(self, x):
        return np.log(x) - x / self.beta - 2.0 * np.log(self.beta)

    def _sf(self, x):
        t = x / self.beta
        return (1.0 + t) * np.exp(-t)

    def _cdf(self, x):
        return special.gammainc(2.0, x / self.beta)

    def quantile(self, u):
        return _out(special.gammaincinv(2.0, _unit(u)) * self.beta)


class MarshallOlkinExp(Competitor):
    """Marshall-Olkin exponential: ``S(x) = a t / (1 - (1 - a) t)`` with ``t = exp(-beta x)``."""

    name = "mo_e"
    param_names = ("alpha", "beta")

    def _logpdf(self, x):
        t = np.exp(-self.beta * x)
        return np.log(self.alpha * self.beta) - self.beta * x - 2.0 * np.log1p(-(1.0 - self.alpha) * t)

    def _sf(self, x):
        t = np.exp(-self.beta * x)
        return self.alpha * t / (1.0 - (1.0 - self.alpha) * t)

    def _cdf(self, x):
        t = np.exp(-self.beta * x)
        sf = self.alpha * t / (1.0 - (1.0 - self.alpha) * t)
        # 1 - sf in the upper half keeps the cdf monotone after rounding
        return np.where(sf < 0.5, 1.0 - sf, -np.expm1(-self.beta * x) / (1.0 - (1.0 - self.alpha) * t))

    def quantile(self, u):
        s = 1.0 - _unit(u)
        with np.errstate(divide="ignore"):
            t = s / (self.alpha + s * (1.0 - self.alpha))
            return _out(-np.log(t) / self.beta)


class KumaraswamyExp(Competitor):
    """Kumaraswamy exponential: ``F(x) = 1 - (1 - G^m)^n`` with ``G = 1 - exp(-beta x)``."""

    name = "kw_e"
    param_names = ("m", "n", "beta")

    def _logpdf(self, x):
        G = -np.expm1(-self.beta * x)
        lg = np.log(G)
        out = np.log(self.m * self.n * self.beta) - self.beta * x
        # unit shapes drop their factor, so 0 * log 0 never appears
        if self.m != 1.0:
            out = out + (self.m - 1.0) * lg
        if self.n != 1.0:
            out = out + (self.n - 1.0) * self._log_one_minus_gm(x)
        return out

    def _log_one_minus_gm(self, x):
        # log(1 - G^m) through S = exp(-beta x), finite even after S underflows
        # (the direct form is used while G < 1/2, where it is accurate)
        x = np.asarray(x, dtype=float)
        G = -np.expm1(-self.beta * x)
        S = np.exp(-self.beta * x)
        with np.errstate(divide="ignore", invalid="ignore"):
            r1 = np.where((S > 0.0) & (S < 0.5), -np.log1p(-S) / S, 1.0)
            a = self.m * S * r1
            r2 = np.where(a > 0.0, -np.expm1(-a) / a, 1.0)
            upper = np.log(self.m) - self.beta * x + np.log(r1) + np.log(r2)
            lower = np.log1p(-(G**self.m))
        return np.where(G < 0.5, lower, upper)

    def _sf(self, x):
        return np.exp(self.n * self._log_one_minus_gm(x))

    def _cdf(self, x):
        return -np.expm1(self.n * self._log_one_minus_gm(x))

    def quantile(self, u):
        u = _unit(u)
        with np.errstate(divide="ignore"):
            gm = -np.expm1(np.log1p(-u) / self.n)
            return _out(-np.log1p(-(gm ** (1.0 / self.m))) / self.beta)


class BetaExp(Competitor):
    """Beta exponential: ``F(x) = I_{G(x)}(m, n)`` with ``G = 1 - exp(-beta x)``."""

    name = "b_e"
    param_names = ("m", "n", "beta")

    def _logpdf(self, x):
        G = -np.expm1(-self.beta * x)
        out = np.log(self.beta) - self.n * self.beta * x - special.betaln(self.m, self.n)
        if self.m != 1.0:
            out = out + (self.m - 1.0) * np.log(G)
        return out

    def _cdf(self, x):
        return _ibeta_vec(-np.expm1(-self.beta * x), self.m, self.n)

    def _sf(self, x):
        return _ibeta_vec(np.exp(-self.beta * x), self.n, self.m)

    def quantile(self, u):
        z = _ibeta_inv_vec(_unit(u), self.m, self.n)
        with np.errstate(divide="ignore"):
            return _out(-np.log1p(-z) / self.beta)


COMPETITORS: Mapping[str, type[Competitor]] = {
    cls.name: cls for cls in (Exp, MomentExp, MarshallOlkinExp, KumaraswamyExp, BetaExp)
}


def make_competitor(name: str, **params: float) -> Competitor:
    """Construct a competitor by name, e.g. ``make_competitor("mo_e", alpha=2, beta=1)``."""
    try:
        cls = COMPETITORS[name]
    except KeyError:
        raise DomainError(f"unknown competitor {name!r}; choose from {sorted(COMPETITORS)}") from None
    return cls(**params)
