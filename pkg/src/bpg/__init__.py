"""Beta Poisson-G distribution family."""

from .baselines import Exponential, Weibull, make_baseline
from .competitors import make_competitor
from .errors import BpgError, ConvergenceError, DataError, DomainError, NotPositiveDefiniteError
from .estimation import FitConfig, FitResult, bpg_loglik, fit_mle, invert_information
from .evaluation import descriptive_stats, gof_report, info_criteria, load_dataset
from .family import BetaPoissonG, PoissonG
from .montecarlo import SimulationPlan, run_simulation
from .numerics import RandomStream
from .properties import galton_moors, moment_summary, raw_moment, renyi_entropy

__all__ = [
    "BetaPoissonG",
    "BpgError",
    "ConvergenceError",
    "DataError",
    "DomainError",
    "Exponential",
    "FitConfig",
    "FitResult",
    "NotPositiveDefiniteError",
    "PoissonG",
    "RandomStream",
    "SimulationPlan",
    "Weibull",
    "bpg_loglik",
    "descriptive_stats",
    "fit_mle",
    "galton_moors",
    "gof_report",
    "info_criteria",
    "invert_information",
    "load_dataset",
    "make_baseline",
    "make_competitor",
    "moment_summary",
    "raw_moment",
    "renyi_entropy",
    "run_simulation",
]
