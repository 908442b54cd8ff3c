"""Log-likelihood, maximum-likelihood fitting and Wald inference.

Fits maximize the log-likelihood over log-transformed parameters with a
multi-start Nelder-Mead search, each run polished by Powell's method. The
observed information is the finite-difference Hessian of ``-loglik`` in the
natural parameters at the optimum.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from numba import njit
from scipy import optimize
from scipy.stats import norm

from .baselines import Baseline, Exponential, Weibull
from .competitors import COMPETITORS, Competitor
from .errors import ConvergenceError, DataError, DomainError, NotPositiveDefiniteError
from .family import BetaPoissonG
from .numerics import RandomStream, numerical_hessian

__all__ = [
    "FitConfig",
    "FitResult",
    "ModelSpec",
    "MODELS",
    "get_model",
    "bpg_loglik",
    "fit_mle",
    "invert_information",
]


def bpg_loglik(data, dist: BetaPoissonG) -> float:
    """Log-likelihood of a beta Poisson-G sample in expanded form.

    ``w log(lam) + sum log g - lam sum G + (m-1) sum log(1 - e^{-lam G})
    + (n-1) sum log(e^{-lam G} - e^{-lam}) - w log B(m,n)
    - w (m+n-1) log(1 - e^{-lam})``, with ``w`` the sample size.
    Returns ``-inf`` when a term degenerates (zero density at some point).
    """
    x = np.asarray(data, dtype=float).ravel()
    if x.size == 0 or np.any(~np.isfinite(x)) or np.any(x < 0):
        raise DomainError("data must be finite and lie in the support [0, inf)")
    m, n, lam = dist.m, dist.n, dist.lam
    base = dist.baseline
    w = x.size
    h = np.asarray(base.cumhaz(x), dtype=float)
    G = -np.expm1(-h)
    S = np.exp(-h)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = (
            w * math.log(lam)
            + np.sum(base.logpdf(x))
            - lam * np.sum(G)
            - w * dist._lbeta
            - w * (m + n - 1.0) * math.log(-math.expm1(-lam))
        )
        if m != 1.0:
            terms += (m - 1.0) * np.sum(np.log(-np.expm1(-lam * G)))
        if n != 1.0:
            # log(e^{-lam G} - e^{-lam}) = -lam G + log(1 - e^{-lam S}), written via
            # log(lam S) = log(lam) - h so it survives underflow of S
            q = lam * S
            ratio = np.where(q > 0.0, -np.expm1(-q) / q, 1.0)
            terms += (n - 1.0) * np.sum(-lam * G + math.log(lam) - h + np.log(ratio))
    terms = float(terms)
    return terms if np.isfinite(terms) or terms == -math.inf else -math.inf


# ---------------------------------------------------------------------------
# model specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    """A fittable model: parameter names, a constructor, and a log-likelihood."""

    name: str
    param_names: tuple[str, ...]
    build: Callable[[np.ndarray], object]
    loglik: Callable[[np.ndarray, np.ndarray], float]

    @property
    def k(self) -> int:
        return len(self.param_names)


def _competitor_spec(cls: type[Competitor]) -> ModelSpec:
    return ModelSpec(
        name=cls.name,
        param_names=cls.param_names,
        build=cls.from_values,
        loglik=lambda data, v, cls=cls: cls.from_values(v).loglik(data),
    )


@njit(cache=True)
def _bpw_loglik_kernel(x, m, n, lam, beta, delta):
    # compiled twin of bpg_loglik for the Weibull baseline (exponential when delta = 1)
    if not (m > 0.0 and n > 0.0 and lam > 0.0 and beta > 0.0 and delta > 0.0):
        return -np.inf
    w = x.size
    lbeta = math.lgamma(m) + math.lgamma(n) - math.lgamma(m + n)
    total = w * (math.log(lam) - lbeta - (m + n - 1.0) * math.log(-math.expm1(-lam)))
    log_db = math.log(delta * beta)
    for i in range(w):
        xi = x[i]
        if xi < 0.0:
            return -np.inf
        h = beta * xi if delta == 1.0 else beta * xi**delta
        G = -math.expm1(-h)
        S = math.exp(-h)
        if delta == 1.0:
            lg = log_db - h
        elif xi == 0.0:
            lg = np.inf if delta < 1.0 else -np.inf
        else:
            lg = log_db + (delta - 1.0) * math.log(xi) - h
        total += lg - lam * G
        if m != 1.0:
            a = -math.expm1(-lam * G)
            total += (m - 1.0) * (math.log(a) if a > 0.0 else -np.inf)
        if n != 1.0:
            q = lam * S
            ratio = -math.expm1(-q) / q if q > 0.0 else 1.0
            total += (n - 1.0) * (-lam * G + math.log(lam) - h + math.log(ratio))
    if total != total:
        return -np.inf
    return total


def _bp_spec(name: str, baseline: type[Baseline]) -> ModelSpec:
    names = ("m", "n", "lam") + baseline.param_names

    def build(v):
        v = np.asarray(v, dtype=float)
        return BetaPoissonG(v[0], v[1], v[2], baseline(*v[3:]))

    def loglik(data, v):
        x = np.ascontiguousarray(data, dtype=float)
        delta = v[4] if len(v) > 4 else 1.0
        return float(_bpw_loglik_kernel(x, float(v[0]), float(v[1]), float(v[2]), float(v[3]), float(delta)))

    return ModelSpec(name=name, param_names=names, build=build, loglik=loglik)


MODELS: Mapping[str, ModelSpec] = {
    **{name: _competitor_spec(cls) for name, cls in COMPETITORS.items()},
    "bp_e": _bp_spec("bp_e", Exponential),
    "bp_w": _bp_spec("bp_w", Weibull),
}


def get_model(name: str) -> ModelSpec:
    try:
        return MODELS[name]
    except KeyError:
        raise DomainError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None


# ---------------------------------------------------------------------------
# configuration and results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FitConfig:
    """Optimizer settings.

    Attributes
    ----------
    starts : int
        Number of optimizer starts. Explicit ``initial`` points are used
        first, then a data-scaled default, then log-uniform random draws from
        ``start_box``.
    param_bounds : mapping
        Per-parameter ``(low, high)``; parameters not listed use ``default_bounds``.
    """

    starts: int = 20
    max_iters: int = 4000
    x_tol: float = 1e-8
    f_tol: float = 1e-10
    ci_level: float = 0.95
    param_bounds: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    default_bounds: tuple[float, float] = (1e-6, 1e6)
    start_box: tuple[float, float] = (0.05, 20.0)
    initial: Sequence[Sequence[float]] = ()
    seed: int = 0
    polish: bool = True

    def __post_init__(self):
        if self.starts < 1:
            raise DomainError("starts must be >= 1")
        if self.max_iters < 1 or not (self.x_tol > 0 and self.f_tol > 0):
            raise DomainError("max_iters and tolerances must be positive")
        if not 0 < self.ci_level < 1:
            raise DomainError("ci_level must lie in (0, 1)")
        for low, high in list(self.param_bounds.values()) + [self.default_bounds]:
            if not 0 < low < high:
                raise DomainError("bounds must satisfy 0 < low < high")
        if not 0 < self.start_box[0] < self.start_box[1]:
            raise DomainError("start_box must satisfy 0 < low < high")

    def bounds_for(self, names: Sequence[str]) -> list[tuple[float, float]]:
        return [tuple(self.param_bounds.get(nm, self.default_bounds)) for nm in names]


@dataclass
class FitResult:
    """Outcome of :func:`fit_mle`.

    ``std_errors``, ``ci_low`` and ``ci_high`` are ``None`` when the observed
    information is not positive-definite.
    """

    model: str
    param_names: tuple[str, ...]
    estimates: dict[str, float]
    loglik: float
    observed_info: np.ndarray
    covariance: np.ndarray | None
    std_errors: dict[str, float] | None
    ci_low: dict[str, float] | None
    ci_high: dict[str, float] | None
    converged: bool
    n_obs: int
    n_starts: int
    n_failed_starts: int
    message: str = ""

    @property
    def k(self) -> int:
        return len(self.param_names)

    @property
    def values(self) -> np.ndarray:
        return np.array([self.estimates[nm] for nm in self.param_names])

    def distribution(self):
        return get_model(self.model).build(self.values)


def invert_information(observed_info) -> np.ndarray:
    """Covariance matrix ``I^{-1}`` via a Cholesky factorization.

    Raises
    ------
    NotPositiveDefiniteError
        If the matrix is not finite, symmetric and positive-definite.
    """
    info = np.atleast_2d(np.asarray(observed_info, dtype=float))
    if info.shape[0] != info.shape[1]:
        raise DomainError("information matrix must be square")
    if not np.all(np.isfinite(info)):
        raise NotPositiveDefiniteError("information matrix has non-finite entries")
    if not np.allclose(info, info.T, rtol=1e-10, atol=0.0):
        raise NotPositiveDefiniteError("information matrix is not symmetric")
    try:
        chol = np.linalg.cholesky(info)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError("information matrix is not positive-definite") from None
    inv_chol = np.linalg.solve(chol, np.eye(info.shape[0]))
    return inv_chol.T @ inv_chol


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

_BIG = 1e300
_EPS = float(np.finfo(float).eps)


def _validate_data(data, k):
    x = np.asarray(data, dtype=float).ravel()
    if x.size == 0:
        raise DataError("empty dataset")
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise DataError("data must be finite and strictly positive")
    if x.size <= k + 1:
        raise DataError(f"need more than {k + 1} observations for a {k}-parameter model")
    return np.sort(x)


def _default_start(spec: ModelSpec, x: np.ndarray) -> np.ndarray:
    start = np.ones(spec.k)
    mean = float(np.mean(x))
    for i, nm in enumerate(spec.param_names):
        if nm == "beta":
            start[i] = mean / 2.0 if spec.name == "me" else 1.0 / mean
    return start


def fit_mle(data, model: str | ModelSpec, config: FitConfig | None = None) -> FitResult:
    """Maximum-likelihood fit with observed-information standard errors.

    Parameters
    ----------
    data : array_like
        Positive observations; their order does not matter.
    model : str or ModelSpec
        A name from :data:`MODELS` or a custom spec.
    config : FitConfig, optional

    Returns
    -------
    FitResult

    Raises
    ------
    ConvergenceError
        If every start fails to produce a finite log-likelihood.
    """
    spec = get_model(model) if isinstance(model, str) else model
    config = config or FitConfig()
    x = _validate_data(data, spec.k)
    bounds = np.log(np.array(config.bounds_for(spec.param_names)))

    def nll(theta):
        try:
            val = -spec.loglik(x, np.exp(theta))
        except (DomainError, FloatingPointError):
            return _BIG
        return val if np.isfinite(val) else _BIG

    starts = [np.log(np.asarray(s, dtype=float)) for s in config.initial][: config.starts]
    if len(starts) < config.starts:
        starts.append(np.log(_default_start(spec, x)))
    gen = RandomStream(config.seed).generator
    lo, hi = np.log(config.start_box)
    while len(starts) < config.starts:
        starts.append(gen.uniform(lo, hi, spec.k))

    best = None
    failed = 0
    for theta0 in starts:
        theta0 = np.clip(theta0, bounds[:, 0], bounds[:, 1])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = optimize.minimize(
                nll, theta0, method="Nelder-Mead", bounds=bounds,
                options=dict(maxiter=config.max_iters, maxfev=2 * config.max_iters,
                             xatol=config.x_tol, fatol=config.f_tol, adaptive=spec.k > 2),
            )
            if config.polish and res.fun < _BIG:
                pol = optimize.minimize(nll, res.x, method="Powell", bounds=bounds,
                                        options=dict(xtol=config.x_tol * 1e-2, ftol=config.f_tol * 1e-4,
                                                     maxiter=config.max_iters))
                if pol.fun <= res.fun:
                    res = optimize.OptimizeResult(x=pol.x, fun=pol.fun, success=res.success or pol.success,
                                                  message=pol.message)
        if not res.fun < _BIG:
            failed += 1
            continue
        if config.polish:
            res = _newton_refine(nll, res, bounds)
        key = (float(res.fun), float(np.linalg.norm(np.exp(res.x))))
        if best is None or _better(key, best[0]):
            best = (key, res)
    if best is None:
        raise ConvergenceError(f"all {len(starts)} starts failed for model {spec.name}")

    res = best[1]
    est = np.exp(res.x)
    loglik = -float(res.fun)
    info = numerical_hessian(lambda v: _safe_negll(spec, x, v), est)
    names = spec.param_names
    cov = se = ci_low = ci_high = None
    message = str(res.message)
    try:
        cov = invert_information(info)
        se_vec = np.sqrt(np.diag(cov))
        zq = norm.ppf(0.5 + config.ci_level / 2.0)
        se = dict(zip(names, map(float, se_vec)))
        ci_low = dict(zip(names, map(float, np.maximum(est - zq * se_vec, 0.0))))
        ci_high = dict(zip(names, map(float, est + zq * se_vec)))
    except NotPositiveDefiniteError as exc:
        message = f"{message}; standard errors unavailable: {exc}"
    return FitResult(
        model=spec.name,
        param_names=names,
        estimates=dict(zip(names, map(float, est))),
        loglik=loglik,
        observed_info=info,
        covariance=cov,
        std_errors=se,
        ci_low=ci_low,
        ci_high=ci_high,
        converged=bool(res.success and np.isfinite(loglik)),
        n_obs=int(x.size),
        n_starts=len(starts),
        n_failed_starts=failed,
        message=message,
    )


def _newton_refine(nll, res, bounds, iters: int = 3):
    # simplex-type stopping rules are relative in f, which caps parameter
    # accuracy near sqrt(f_tol); a few guarded Newton steps recover the rest
    theta, fun = np.asarray(res.x, dtype=float), float(res.fun)
    for _ in range(iters):
        h = _EPS ** (1.0 / 3.0) * np.maximum(1.0, np.abs(theta))
        grad = np.empty_like(theta)
        for i in range(theta.size):
            e = np.zeros_like(theta)
            e[i] = h[i]
            grad[i] = (nll(theta + e) - nll(theta - e)) / (2.0 * h[i])
        hess = numerical_hessian(nll, theta)
        if not (np.all(np.isfinite(grad)) and np.all(np.isfinite(hess))):
            break
        try:
            chol = np.linalg.cholesky(hess)
        except np.linalg.LinAlgError:
            break
        step = np.linalg.solve(chol.T, np.linalg.solve(chol, grad))
        cand = np.clip(theta - step, bounds[:, 0], bounds[:, 1])
        val = nll(cand)
        # at the optimum f is flat to rounding, so allow a few ulps of slack
        if not val <= fun + 8.0 * _EPS * max(1.0, abs(fun)):
            break
        theta, fun = cand, val
        if np.all(np.abs(step) <= 1e-13 * (1.0 + np.abs(theta))):
            break
    return optimize.OptimizeResult(x=theta, fun=fun, success=res.success, message=res.message)


def _better(a, b, tol=1e-9):
    # lower negative log-likelihood wins; near-ties go to the smaller parameter norm
    if a[0] < b[0] - tol * max(1.0, abs(b[0])):
        return True
    if abs(a[0] - b[0]) <= tol * max(1.0, abs(b[0])):
        return a[1] < b[1]
    return False


def _safe_negll(spec: ModelSpec, x: np.ndarray, v: np.ndarray) -> float:
    if np.any(v <= 0):
        return math.nan
    try:
        return -spec.loglik(x, v)
    except DomainError:
        return math.nan
