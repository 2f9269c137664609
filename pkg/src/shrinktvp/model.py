"""Domain types for the sparse TVP regression model and simple path transforms."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np


class DegenerateCovariateError(ValueError):
    """A non-intercept covariate column has zero sample variance."""

    def __init__(self, column: int):
        self.column = column
        super().__init__(f"covariate column {column} has zero sample variance")


class PriorVariant(str, enum.Enum):
    DOUBLE_GAMMA = "DoubleGamma"
    BAYESIAN_LASSO = "BayesianLasso"
    INVERTED_GAMMA = "InvertedGamma"


@dataclass(frozen=True)
class SvPrior:
    b_mu: float = 0.0
    B_mu: float = 100.0
    a0: float = 20.0
    b0: float = 1.5
    B_sigma: float = 1.0

    def __post_init__(self) -> None:
        for name in ("B_mu", "a0", "b0", "B_sigma"):
            if not getattr(self, name) > 0:
                raise ValueError(f"sv prior {name} must be > 0")


@dataclass(frozen=True)
class PriorConfig:
    """Hyperparameters of the hierarchical shrinkage prior and the error model.

    Defaults follow the settings used for the simulated-data design:
    d1 = d2 = e1 = e2 = 0.001, exponential(10) priors on the shrinkage
    exponents, nu_P = 20, c_P = 1, c0 = 2.5, g0 = 5.
    """

    variant: PriorVariant = PriorVariant.DOUBLE_GAMMA
    d1: float = 0.001
    d2: float = 0.001
    e1: float = 0.001
    e2: float = 0.001
    b_xi: float = 10.0
    b_tau: float = 10.0
    fixed_a_xi: float | None = None
    fixed_a_tau: float | None = None
    s0: float = 0.1
    S0: float = 0.001
    A0_beta: float = 10.0
    nu_P: float = 20.0
    c_P: float = 1.0
    c0: float = 2.5
    g0: float = 5.0
    sigma2_guess: float = 1.0
    sv: SvPrior | None = None

    def __post_init__(self) -> None:
        variant = PriorVariant(self.variant)
        object.__setattr__(self, "variant", variant)
        if variant is PriorVariant.BAYESIAN_LASSO:
            if self.fixed_a_xi not in (None, 1.0) or self.fixed_a_tau not in (None, 1.0):
                raise ValueError("the Bayesian Lasso fixes both shrinkage exponents at 1")
            object.__setattr__(self, "fixed_a_xi", 1.0)
            object.__setattr__(self, "fixed_a_tau", 1.0)
        for name in ("d1", "d2", "e1", "e2", "s0", "S0", "A0_beta", "nu_P", "c_P",
                     "c0", "g0", "sigma2_guess"):
            if not getattr(self, name) > 0:
                raise ValueError(f"prior hyperparameter {name} must be > 0")
        if self.b_xi < 1 or self.b_tau < 1:
            raise ValueError("b_xi and b_tau must be >= 1")
        for name in ("fixed_a_xi", "fixed_a_tau"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be > 0")

    @property
    def G0(self) -> float:
        # G0 = g0 / (E(sigma^2) (c0 - 1))
        return self.g0 / (self.sigma2_guess * (self.c0 - 1.0))

    @property
    def use_sv(self) -> bool:
        return self.sv is not None

    @property
    def learn_exponents(self) -> bool:
        return self.variant is PriorVariant.DOUBLE_GAMMA and (
            self.fixed_a_xi is None or self.fixed_a_tau is None
        )

    @classmethod
    def lasso(cls, **kwargs) -> "PriorConfig":
        return cls(variant=PriorVariant.BAYESIAN_LASSO, **kwargs)

    @classmethod
    def inverted_gamma(cls, **kwargs) -> "PriorConfig":
        return cls(variant=PriorVariant.INVERTED_GAMMA, **kwargs)


@dataclass
class Dataset:
    y: np.ndarray
    X: np.ndarray
    t0: int | None = None
    names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        self.y = np.ascontiguousarray(self.y, dtype=float).reshape(-1)
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.size == 0:
            X = np.zeros((self.y.shape[0], 0))
        self.X = np.ascontiguousarray(X)
        if self.y.shape[0] < 2:
            raise ValueError("need at least two observations")
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError(
                f"X has {self.X.shape[0]} rows but y has {self.y.shape[0]} observations"
            )
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.X))):
            raise ValueError("missing or non-finite values are not allowed")
        if self.t0 is not None and not 0 < self.t0 < self.T:
            raise ValueError("t0 must lie strictly between 0 and T")

    @property
    def T(self) -> int:
        return int(self.y.shape[0])

    @property
    def d(self) -> int:
        return int(self.X.shape[1])

    def head(self, n: int) -> "Dataset":
        """First ``n`` observations (the information set y^n)."""
        return Dataset(self.y[:n].copy(), self.X[:n].copy(), names=self.names)


@dataclass
class ChainState:
    """One complete set of latent states and parameters of the sampler."""

    beta_tilde: np.ndarray
    beta: np.ndarray
    sqrt_theta: np.ndarray
    xi2: np.ndarray
    tau2: np.ndarray
    a_xi: float
    a_tau: float
    kappa2: float
    lambda2: float
    P0: np.ndarray
    sigma2: float = 1.0
    C0: float = 1.0
    h: np.ndarray | None = None
    mu: float = 0.0
    phi: float = 0.9
    sigma2_eta: float = 0.1

    @property
    def theta(self) -> np.ndarray:
        return self.sqrt_theta ** 2

    @property
    def sv(self) -> bool:
        return self.h is not None

    def sigma2_path(self, T: int) -> np.ndarray:
        """Observation error variances for t = 1..T."""
        if self.h is not None:
            return np.exp(self.h[1:])
        return np.full(T, self.sigma2)

    def copy(self) -> "ChainState":
        kw = {}
        for f in self.__dataclass_fields__:
            v = getattr(self, f)
            kw[f] = v.copy() if isinstance(v, np.ndarray) else v
        return ChainState(**kw)

    def validate(self) -> None:
        for name in ("xi2", "tau2", "P0"):
            if np.any(~(getattr(self, name) > 0)):
                raise ValueError(f"{name} must be positive")
        for name in ("kappa2", "lambda2", "a_xi", "a_tau"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.h is None:
            if not self.sigma2 > 0:
                raise ValueError("sigma2 must be positive")
        else:
            if not abs(self.phi) < 1:
                raise ValueError("phi must lie in (-1, 1)")
            if not self.sigma2_eta > 0:
                raise ValueError("sigma2_eta must be positive")


@dataclass(frozen=True)
class SimTruth:
    beta_true: np.ndarray
    theta_true: np.ndarray
    sigma2_true: float
    paths: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        b = np.asarray(self.beta_true, dtype=float).reshape(-1)
        th = np.asarray(self.theta_true, dtype=float).reshape(-1)
        if b.shape != th.shape:
            raise ValueError("beta_true and theta_true must have equal length")
        if np.any(th < 0):
            raise ValueError("process variances must be >= 0")
        if not self.sigma2_true > 0:
            raise ValueError("sigma2_true must be > 0")
        object.__setattr__(self, "beta_true", b)
        object.__setattr__(self, "theta_true", th)

    @property
    def d(self) -> int:
        return int(self.beta_true.shape[0])


# Design used for the simulated-data illustration.
REFERENCE_DESIGN = SimTruth(
    beta_true=np.array([1.5, -0.3, 0.0]),
    theta_true=np.array([0.02, 0.0, 0.0]),
    sigma2_true=1.0,
)


def standardize_covariates(
    X: np.ndarray, intercept_col: int | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Center and scale every non-intercept column to unit sample variance.

    The sample variance uses divisor T - 1. The intercept column is returned
    unchanged with mean 0 and sd 1 recorded so the back-transformation is the
    identity for it.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D array")
    T, d = X.shape
    means = np.zeros(d)
    sds = np.ones(d)
    out = X.copy()
    for j in range(d):
        if intercept_col is not None and j == intercept_col:
            continue
        col = X[:, j]
        m = col.mean()
        s = col.std(ddof=1)
        if not s > 0 or s < 1e-14 * max(1.0, abs(m)):
            raise DegenerateCovariateError(j)
        out[:, j] = (col - m) / s
        means[j] = m
        sds[j] = s
    return out, means, sds


def simulate_tvp(
    d: int,
    T: int,
    truth: SimTruth,
    seed: int | np.random.Generator | None = None,
    c_P: float = 1.0,
) -> tuple[Dataset, SimTruth]:
    """Draw one series from the TVP model with an intercept and N(0,1) covariates.

    The initial coefficients are drawn from N(beta_j, theta_j * c_P).
    """
    if truth.d != d:
        raise ValueError(f"truth has dimension {truth.d}, expected {d}")
    if T < 2:
        raise ValueError("T must be >= 2")
    rng = np.random.default_rng(seed)
    X = np.empty((T, d))
    X[:, 0] = 1.0
    if d > 1:
        X[:, 1:] = rng.standard_normal((T, d - 1))
    sd = np.sqrt(truth.theta_true)
    paths = np.empty((T + 1, d))
    paths[0] = truth.beta_true + sd * np.sqrt(c_P) * rng.standard_normal(d)
    paths[1:] = paths[0] + np.cumsum(sd * rng.standard_normal((T, d)), axis=0)
    eps = np.sqrt(truth.sigma2_true) * rng.standard_normal(T)
    y = np.einsum("tj,tj->t", X, paths[1:]) + eps
    return Dataset(y, X), replace(truth, paths=paths)


def path_centered(beta: np.ndarray, sqrt_theta: np.ndarray, beta_tilde: np.ndarray) -> np.ndarray:
    beta_tilde = np.asarray(beta_tilde, dtype=float)
    if beta_tilde.ndim != 2 or beta_tilde.shape[1] != np.shape(beta)[0]:
        raise ValueError("beta_tilde must be (T+1) x d with d matching beta")
    if np.shape(sqrt_theta) != np.shape(beta):
        raise ValueError("beta and sqrt_theta must have the same length")
    return np.asarray(beta)[None, :] + np.asarray(sqrt_theta)[None, :] * beta_tilde


def path_noncentered(
    beta_path: np.ndarray, beta_new: np.ndarray, sqrt_theta_new: np.ndarray
) -> np.ndarray:
    sqrt_theta_new = np.asarray(sqrt_theta_new, dtype=float)
    if np.any(sqrt_theta_new == 0):
        raise ZeroDivisionError("sqrt_theta must be nonzero; floor it before transforming")
    beta_path = np.asarray(beta_path, dtype=float)
    if beta_path.ndim != 2 or beta_path.shape[1] != sqrt_theta_new.shape[0]:
        raise ValueError("beta_path must be (T+1) x d")
    return (beta_path - np.asarray(beta_new)[None, :]) / sqrt_theta_new[None, :]
