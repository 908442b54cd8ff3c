"""Baseline distributions G for the Poisson-G construction.

Each baseline is an immutable object exposing ``pdf``, ``logpdf``, ``cdf``,
``sf``, ``quantile`` and ``isf`` on the support [0, inf). Outside the support
the density is 0 and the cdf is 0, so datasets can be evaluated without a
separate range check.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Mapping

import numpy as np

from .errors import DomainError

__all__ = ["Baseline", "Exponential", "Weibull", "BASELINES", "make_baseline"]


def _out(arr):
    arr = np.asarray(arr, dtype=float)
    return float(arr) if arr.ndim == 0 else arr


def _unit(u):
    u = np.asarray(u, dtype=float)
    if np.any(np.isnan(u)) or np.any(u < 0.0) or np.any(u > 1.0):
        raise DomainError("probability argument must lie in [0, 1]")
    return u


class Baseline(ABC):
    """Interface of a continuous baseline on [0, inf)."""

    name: str = ""
    param_names: tuple[str, ...] = ()

    def __init__(self, **params: float):
        missing = set(self.param_names) - set(params)
        extra = set(params) - set(self.param_names)
        if missing or extra:
            raise DomainError(f"{self.name} baseline expects parameters {self.param_names}, got {tuple(params)}")
        for key in self.param_names:
            val = float(params[key])
            if not (np.isfinite(val) and val > 0):
                raise DomainError(f"{self.name} parameter {key} must be finite and > 0, got {params[key]!r}")
            setattr(self, key, val)

    @property
    def params(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in self.param_names}

    @property
    def values(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in self.param_names])

    def with_values(self, values) -> "Baseline":
        """Same baseline type with a new parameter vector (ordered as ``param_names``)."""
        return type(self)(**dict(zip(self.param_names, np.asarray(values, dtype=float))))

    support = (0.0, np.inf)

    def pdf(self, x):
        return _out(np.exp(self.logpdf(x)))

    @abstractmethod
    def logpdf(self, x): ...

    @abstractmethod
    def cumhaz(self, x):
        """Cumulative hazard -log S(x); 0 for x <= 0."""

    def cdf(self, x):
        return _out(-np.expm1(-np.asarray(self.cumhaz(x))))

    def sf(self, x):
        return _out(np.exp(-np.asarray(self.cumhaz(x))))

    @abstractmethod
    def _inv_cumhaz(self, h): ...

    def quantile(self, u):
        """Q_G(u); ``quantile(1)`` is ``inf``."""
        u = _unit(u)
        with np.errstate(divide="ignore"):
            return _out(self._inv_cumhaz(-np.log1p(-u)))

    def isf(self, s):
        """Inverse survival function, accurate when ``s`` is small."""
        s = _unit(s)
        with np.errstate(divide="ignore"):
            return _out(self._inv_cumhaz(-np.log(s)))

    def __eq__(self, other):
        return type(self) is type(other) and self.params == other.params

    def __hash__(self):
        return hash((type(self).__name__, tuple(self.values)))

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{type(self).__name__}({inner})"


class Exponential(Baseline):
    """Exponential baseline with rate ``beta``: g(x) = beta exp(-beta x)."""

    name = "exp"
    param_names = ("beta",)

    def __init__(self, beta: float):
        super().__init__(beta=beta)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(invalid="ignore"):
            out = np.where(x >= 0, np.log(self.beta) - self.beta * x, -np.inf)
        return _out(out)

    def cumhaz(self, x):
        x = np.asarray(x, dtype=float)
        return _out(self.beta * np.maximum(x, 0.0))

    def _inv_cumhaz(self, h):
        return h / self.beta


class Weibull(Baseline):
    """Weibull baseline g(x) = delta beta x^(delta-1) exp(-beta x^delta)."""

    name = "weibull"
    param_names = ("beta", "delta")

    def __init__(self, beta: float, delta: float):
        super().__init__(beta=beta, delta=delta)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            body = (
                np.log(self.delta * self.beta)
                + (self.delta - 1.0) * np.log(xp)
                - self.beta * xp**self.delta
            )
            if self.delta == 1.0:
                body = np.log(self.beta) - self.beta * xp
        return _out(np.where(x >= 0, body, -np.inf))

    def cumhaz(self, x):
        x = np.asarray(x, dtype=float)
        return _out(self.beta * np.maximum(x, 0.0) ** self.delta)

    def _inv_cumhaz(self, h):
        return (h / self.beta) ** (1.0 / self.delta)


BASELINES: Mapping[str, type[Baseline]] = {"exp": Exponential, "weibull": Weibull}


def make_baseline(name: str, **params: float) -> Baseline:
    """Construct a registered baseline by name, e.g. ``make_baseline("exp", beta=2)``."""
    try:
        cls = BASELINES[name]
    except KeyError:
        raise DomainError(f"unknown baseline {name!r}; choose from {sorted(BASELINES)}") from None
    extra = set(params) - set(cls.param_names)
    if extra:
        raise DomainError(f"{name} baseline takes {cls.param_names}, got unexpected {sorted(extra)}")
    return cls(**params)
