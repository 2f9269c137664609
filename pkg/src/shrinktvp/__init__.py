"""Bayesian shrinkage for time-varying parameter regressions.

The double gamma prior on the process variances, an interweaved Gibbs
sampler with all-without-a-loop state draws, predictive scoring and a
multivariate Cholesky stochastic volatility model.
"""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    Dataset,
    PriorConfig,
    PriorVariant,
    SimTruth,
    SvPrior,
    simulate_tvp,
)
from .sampler import DrawStore, SamplerSettings, run_chain  # noqa: E402

__all__ = [
    "Dataset",
    "DrawStore",
    "PriorConfig",
    "PriorVariant",
    "SamplerSettings",
    "SimTruth",
    "SvPrior",
    "run_chain",
    "simulate_tvp",
    "__version__",
]
