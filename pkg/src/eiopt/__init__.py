"""Expected-improvement global optimisation with Gaussian-process surrogates.

The package is layered bottom-up: :mod:`~eiopt.kernel` (correlation
kernels), :mod:`~eiopt.posterior` (flat-mean GP conditioning),
:mod:`~eiopt.acquisition` (expected improvement and its maximiser),
:mod:`~eiopt.strategy` (sequential design variants), :mod:`~eiopt.funcspace`
(objectives with known ground truth) and :mod:`~eiopt.harness` (experiments
and the command line).
"""

from .acquisition import PriorParams, expected_improvement, maximize_ei, rho, tau
from .domain import Box, SobolStream
from .errors import DuplicatePointError, KernelConfigError, ProtocolError, SingularDesignError
from .funcspace import (
    BumpFamily,
    BumpFunction,
    CounterexamplePair,
    RkhsSpanFunction,
    eval_bump,
    eval_span,
    make_bump_family,
    make_counterexample,
    span_suite,
)
from .kernel import KernelSpec, check_distinct, cross, eval_base, eval_scaled, gram
from .posterior import DesignSet, PosteriorModel, fit, predict_mean, predict_sd, reduced_ss
from .strategy import (
    Strategy,
    StrategyConfig,
    estimate_theta_mle,
    naive_recommend,
    next_design_point,
    observe,
    recommend,
    robust_sigma,
)

__version__ = "0.1.0"

__all__ = [
    "Box",
    "BumpFamily",
    "BumpFunction",
    "CounterexamplePair",
    "DesignSet",
    "DuplicatePointError",
    "KernelConfigError",
    "KernelSpec",
    "PosteriorModel",
    "PriorParams",
    "ProtocolError",
    "RkhsSpanFunction",
    "SingularDesignError",
    "SobolStream",
    "Strategy",
    "StrategyConfig",
    "check_distinct",
    "cross",
    "estimate_theta_mle",
    "eval_base",
    "eval_bump",
    "eval_scaled",
    "eval_span",
    "expected_improvement",
    "fit",
    "gram",
    "make_bump_family",
    "make_counterexample",
    "maximize_ei",
    "naive_recommend",
    "next_design_point",
    "observe",
    "predict_mean",
    "predict_sd",
    "recommend",
    "reduced_ss",
    "rho",
    "robust_sigma",
    "span_suite",
    "tau",
]
