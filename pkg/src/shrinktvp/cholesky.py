"""Multivariate TVP model with a time-varying Cholesky decomposition.

Row i of the system regresses y_i,t on y_1,t .. y_{i-1},t (no intercept) with
its own stochastic volatility, so Sigma_t = A_t D_t A_t' where A_t^{-1} is unit
lower triangular with entries -beta_ij,t and D_t = Diag(exp(h_i,t)). The rows
are independent given the data and are fitted separately.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .forecast import lpds_kalman_mixture
from .model import Dataset, PriorConfig, SvPrior
from .sampler import DrawStore, SamplerSettings, run_chain

log = logging.getLogger(__name__)


def row_seed(master: int, row: int) -> np.random.SeedSequence:
    """Seed of row ``row`` derived from the master seed (independent of scheduling)."""
    return np.random.SeedSequence([int(master), int(row)])


@dataclass
class CholeskySystem:
    Y: np.ndarray  # (T, r)
    rows: list[Dataset]
    names: tuple[str, ...]
    row_draws: list[DrawStore | None] = field(default_factory=list)
    errors: dict[int, BaseException] = field(default_factory=dict)

    @property
    def r(self) -> int:
        return int(self.Y.shape[1])

    @property
    def T(self) -> int:
        return int(self.Y.shape[0])

    @property
    def fitted(self) -> bool:
        return len(self.row_draws) == self.r and all(d is not None for d in self.row_draws)

    def n_draws(self) -> int:
        return min(len(d) for d in self.row_draws if d is not None)


def build_row_regressions(Y, names=None) -> CholeskySystem:
    Y = np.ascontiguousarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y.reshape(-1, 1)
    T, r = Y.shape
    if r < 1:
        raise ValueError("need at least one series")
    if not np.all(np.isfinite(Y)):
        raise ValueError("missing or non-finite values are not allowed")
    names = tuple(names) if names is not None else tuple(f"y{i + 1}" for i in range(r))
    if len(names) != r:
        raise ValueError("one name per column required")
    rows = [Dataset(Y[:, i], Y[:, :i], names=names[:i]) for i in range(r)]
    return CholeskySystem(Y, rows, names)


def _fit_row(args):
    data, prior, settings, seed = args
    return run_chain(data, prior, settings, np.random.default_rng(seed))


def fit_cholesky_sv(
    sys: CholeskySystem,
    prior: PriorConfig,
    settings: SamplerSettings,
    seed: int,
    workers: int = 1,
) -> CholeskySystem:
    """Fit every row with its own SV error and shrinkage hyperparameters.

    A failing row is recorded in ``sys.errors`` and leaves the others intact.
    """
    if not prior.use_sv:
        prior = replace(prior, sv=SvPrior())
    jobs = [(row, prior, settings, row_seed(seed, i)) for i, row in enumerate(sys.rows)]
    draws: list[DrawStore | None] = [None] * sys.r
    errors: dict[int, BaseException] = {}
    if workers > 1 and sys.r > 1:
        with ProcessPoolExecutor(min(workers, sys.r)) as pool:
            futures = [pool.submit(_fit_row, j) for j in jobs]
            for i, fut in enumerate(futures):
                try:
                    draws[i] = fut.result()
                except Exception as exc:  # noqa: BLE001
                    errors[i] = exc
    else:
        for i, job in enumerate(jobs):
            try:
                draws[i] = _fit_row(job)
            except Exception as exc:  # noqa: BLE001
                errors[i] = exc
    for i, exc in errors.items():
        log.error("row %d failed: %s", i + 1, exc)
    sys.row_draws = draws
    sys.errors = errors
    return sys


def _row_coefficients(draws: DrawStore, t: int, m) -> np.ndarray:
    """beta_ij,t for row draws at state index t (0..T)."""
    bt = draws["beta_tilde"][m, t]
    return draws["beta"][m] + draws["sqrt_theta"][m] * bt


def reconstruct_sigma(sys: CholeskySystem, t: int, m: int) -> np.ndarray:
    """Sigma_t for draw m at time t (1-based, 1..T)."""
    return sigma_draws(sys, t, np.array([m]))[0]


def sigma_draws(sys: CholeskySystem, t: int, m=None) -> np.ndarray:
    """(M, r, r) covariance matrices at time t for the selected draws."""
    if not sys.fitted:
        raise ValueError("system has not been fitted (or a row failed)")
    if not 1 <= t <= sys.T:
        raise ValueError(f"t must lie in 1..{sys.T}")
    if m is None:
        m = np.arange(sys.n_draws())
    m = np.atleast_1d(m)
    r = sys.r
    Ainv = np.zeros((len(m), r, r))
    Ainv[:, np.arange(r), np.arange(r)] = 1.0
    D = np.empty((len(m), r))
    for i, draws in enumerate(sys.row_draws):
        D[:, i] = np.exp(draws["h"][m, t])
        if i > 0:
            Ainv[:, i, :i] = -_row_coefficients(draws, t, m)
    # A = (A^{-1})^{-1} is unit lower triangular as well
    A = np.linalg.inv(Ainv)
    Sigma = np.einsum("mij,mj,mkj->mik", A, D, A)
    return 0.5 * (Sigma + np.swapaxes(Sigma, 1, 2))


def row_scores(sys: CholeskySystem, y_t, rng=None) -> list[float]:
    """Conditionally optimal score of each row for the next observation y_t.

    ``sys`` must have been fitted on the observations before y_t; row i is
    scored with regressors y_1,t .. y_{i-1},t.
    """
    if not sys.fitted:
        raise ValueError("system has not been fitted (or a row failed)")
    y_t = np.asarray(y_t, dtype=float).reshape(sys.r)
    ss = np.random.SeedSequence(rng) if not isinstance(rng, np.random.SeedSequence) else rng
    rngs = [np.random.default_rng(s) for s in ss.spawn(sys.r)]
    return [
        lpds_kalman_mixture(draws, row, y_t[:i], y_t[i], rngs[i])
        for i, (row, draws) in enumerate(zip(sys.rows, sys.row_draws))
    ]


def multivariate_lpds(scores) -> float:
    """Sum of the row-wise scores; every row must be present."""
    scores = list(scores)
    if not scores:
        raise ValueError("no row scores")
    for i, s in enumerate(scores):
        if s is None or not np.isfinite(s):
            raise ValueError(f"missing score for row {i + 1}")
    return float(np.sum(scores))


def simulate_cholesky_sv(
    r: int,
    T: int,
    seed,
    theta: float = 0.002,
    beta0: float = 0.5,
    mu: float = 0.0,
    phi: float = 0.95,
    sigma2_eta: float = 0.05,
):
    """Draw Y (T, r) from the Cholesky SV model.

    Returns (Y, coef, h) with coef[t, i, j] = beta_ij,t (t = 0..T) and
    h[t, i] the log-variances.
    """
    rng = np.random.default_rng(seed)
    coef = np.zeros((T + 1, r, r))
    lower = np.tril_indices(r, -1)
    n = len(lower[0])
    walk = beta0 + np.vstack([np.zeros((1, n)),
                              np.cumsum(np.sqrt(theta) * rng.standard_normal((T, n)), axis=0)])
    coef[:, lower[0], lower[1]] = walk
    h = np.empty((T + 1, r))
    h[0] = mu + np.sqrt(sigma2_eta / (1 - phi * phi)) * rng.standard_normal(r)
    for t in range(1, T + 1):
        h[t] = mu + phi * (h[t - 1] - mu) + np.sqrt(sigma2_eta) * rng.standard_normal(r)
    Y = np.empty((T, r))
    for t in range(1, T + 1):
        eps = np.exp(h[t] / 2) * rng.standard_normal(r)
        for i in range(r):
            Y[t - 1, i] = coef[t, i, :i] @ Y[t - 1, :i] + eps[i]
    return Y, coef, h
