"""One-step-ahead predictive densities and log predictive density scores.

For a fixed parameter draw the non-centered states follow a Gaussian random
walk, so the predictive density of y_t given y^{t-1} is available exactly from
the Kalman filter. The conditionally optimal score averages these exact
densities over posterior draws; the naive score instead averages Gaussian
densities evaluated at simulated coefficient paths.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp

from .model import Dataset, PriorConfig
from .sampler import DrawStore, SamplerSettings, run_chain
from .sv import forecast_h_many

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class KalmanState:
    m: np.ndarray  # filter mean of beta_tilde_t
    C: np.ndarray  # filter covariance
    R: np.ndarray | None = None  # propagated covariance C_{t-1} + I
    y_hat: float = math.nan
    S: float = math.nan
    K: np.ndarray | None = None

    @classmethod
    def initial(cls, P0: np.ndarray) -> "KalmanState":
        P0 = np.asarray(P0, dtype=float)
        return cls(np.zeros(len(P0)), np.diag(P0))


def kalman_predict(ks: KalmanState, x_t, beta, sqrt_theta, sigma2_t) -> tuple[float, float, np.ndarray, np.ndarray]:
    """(y_hat, S, R, F) for the next observation."""
    F = np.asarray(x_t, dtype=float) * np.asarray(sqrt_theta, dtype=float)
    R = ks.C + np.eye(len(ks.m))
    y_hat = float(np.dot(x_t, beta) + F @ ks.m)
    S = float(F @ R @ F + sigma2_t)
    if not S > 0:
        raise FloatingPointError(f"non-positive predictive variance {S}")
    return y_hat, S, R, F


def kalman_step(ks: KalmanState, x_t, beta, sqrt_theta, sigma2_t: float, y_t: float) -> KalmanState:
    y_hat, S, R, F = kalman_predict(ks, x_t, beta, sqrt_theta, sigma2_t)
    K = R @ F / S
    m = ks.m + K * (y_t - y_hat)
    C = (np.eye(len(m)) - np.outer(K, F)) @ R
    C = 0.5 * (C + C.T)
    return KalmanState(m, C, R, y_hat, S, K)


def kalman_loglik(X, y, beta, sqrt_theta, sigma2_t, P0) -> tuple[float, KalmanState]:
    """Sum of log N(y_t; y_hat_t, S_t) over t and the final filter state."""
    X = np.asarray(X, dtype=float)
    sigma2_t = np.broadcast_to(np.asarray(sigma2_t, dtype=float), (X.shape[0],))
    ks = KalmanState.initial(P0)
    ll = 0.0
    for t in range(X.shape[0]):
        ks = kalman_step(ks, X[t], beta, sqrt_theta, sigma2_t[t], y[t])
        ll += -0.5 * (_LOG_2PI + math.log(ks.S) + (y[t] - ks.y_hat) ** 2 / ks.S)
    return ll, ks


# ---------------------------------------------------------------------------
# filtering across many draws at once


def filter_draws(X, y, beta, sqrt_theta, sigma2, P0) -> tuple[np.ndarray, np.ndarray]:
    """Run the filter for M parameter draws in parallel.

    beta, sqrt_theta, P0 are (M, d); sigma2 is (M, T). Returns the filter
    moments (m_T, C_T) with shapes (M, d) and (M, d, d).
    """
    X = np.asarray(X, dtype=float)
    M, d = beta.shape
    m = np.zeros((M, d))
    C = np.zeros((M, d, d))
    idx = np.arange(d)
    C[:, idx, idx] = P0
    for t in range(X.shape[0]):
        F = X[t][None, :] * sqrt_theta
        R = C.copy()
        R[:, idx, idx] += 1.0
        RF = np.einsum("mij,mj->mi", R, F)
        S = np.einsum("mi,mi->m", F, RF) + sigma2[:, t]
        K = RF / S[:, None]
        y_hat = beta @ X[t] + np.einsum("mi,mi->m", F, m)
        m = m + K * (y[t] - y_hat)[:, None]
        C = R - np.einsum("mi,mj->mij", K, RF)
        C = 0.5 * (C + np.swapaxes(C, 1, 2))
    return m, C


def _next_sigma2(draws: DrawStore, rng) -> np.ndarray:
    if draws.sv:
        return forecast_h_many(draws["h"][:, -1], draws["mu"], draws["phi"], draws["sigma2_eta"], rng)
    return np.asarray(draws["sigma2"], dtype=float)


def log_predictive_components(
    draws: DrawStore,
    history: Dataset | None,
    x_t,
    y_t: float,
    rng: np.random.Generator | int | None = None,
) -> np.ndarray:
    """log N(y_t; y_hat^(m), S^(m)) for each stored draw m."""
    if len(draws) == 0:
        raise ValueError("empty DrawStore")
    rng = np.random.default_rng(rng)
    beta, st, P0 = draws["beta"], draws["sqrt_theta"], draws["P0"]
    M, d = beta.shape
    x_t = np.asarray(x_t, dtype=float).reshape(d)
    if history is not None and history.T > 0:
        if history.T != draws.T:
            raise ValueError(f"draws were fitted on {draws.T} observations, history has {history.T}")
        m, C = filter_draws(history.X, history.y, beta, st, draws.sigma2_path(), P0)
    else:
        m = np.zeros((M, d))
        C = np.zeros((M, d, d))
        C[:, np.arange(d), np.arange(d)] = P0
    s2 = _next_sigma2(draws, rng)
    F = x_t[None, :] * st
    R = C.copy()
    R[:, np.arange(d), np.arange(d)] += 1.0
    S = np.einsum("mi,mij,mj->m", F, R, F) + s2
    y_hat = beta @ x_t + np.einsum("mi,mi->m", F, m)
    return -0.5 * (_LOG_2PI + np.log(S) + (y_t - y_hat) ** 2 / S)


def lpds_kalman_mixture(
    draws: DrawStore,
    history: Dataset | None,
    x_t,
    y_t: float,
    rng: np.random.Generator | int | None = None,
) -> float:
    """log of the draw-average of exact Kalman predictive densities at y_t."""
    lp = log_predictive_components(draws, history, x_t, y_t, rng)
    return float(logsumexp(lp) - math.log(len(lp)))


def lpds_naive_mixture(
    draws: DrawStore,
    x_t,
    y_t: float,
    rng: np.random.Generator | int | None = None,
) -> float:
    """log of the draw-average of N(y_t; x_t beta_t^(m), sigma2_t^(m)).

    beta_t^(m) = beta^(m) + sqrt_theta^(m) beta_tilde_t^(m), the states moved
    one step ahead from the last stored beta_tilde.
    """
    if len(draws) == 0:
        raise ValueError("empty DrawStore")
    rng = np.random.default_rng(rng)
    beta, st = draws["beta"], draws["sqrt_theta"]
    M, d = beta.shape
    x_t = np.asarray(x_t, dtype=float).reshape(d)
    bt = draws["beta_tilde_last"] + rng.standard_normal((M, d))
    mean = (beta + st * bt) @ x_t
    s2 = _next_sigma2(draws, rng)
    lp = -0.5 * (_LOG_2PI + np.log(s2) + (y_t - mean) ** 2 / s2)
    return float(logsumexp(lp) - math.log(M))


# ---------------------------------------------------------------------------
# score series


@dataclass(frozen=True)
class ScoreSeries:
    times: np.ndarray  # 1-based indices t of the scored observations
    values: np.ndarray  # LPDS*_t
    label: str = "kalman"

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=int).reshape(-1)
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if t.shape != v.shape:
            raise ValueError("times and values must have equal length")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.values)

    @property
    def total(self) -> float:
        return float(self.values.sum())


def cumulative_lpds(series: ScoreSeries) -> ScoreSeries:
    return replace(series, values=np.cumsum(series.values))


def _origin_seed(seed: int, t: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, t])


def _score_origin(args):
    data, t, prior, settings, seed, methods, init = args
    ss = _origin_seed(seed, t)
    fit_rng, score_rng = (np.random.default_rng(s) for s in ss.spawn(2))
    hist = data.head(t - 1)
    draws = run_chain(hist, prior, settings, fit_rng, init=init)
    x_t, y_t = data.X[t - 1], data.y[t - 1]
    out = {}
    for name in methods:
        if name == "kalman":
            out[name] = lpds_kalman_mixture(draws, hist, x_t, y_t, score_rng)
        elif name == "naive":
            out[name] = lpds_naive_mixture(draws, x_t, y_t, score_rng)
        else:
            raise ValueError(f"unknown score {name!r}")
    return out, draws.stats.get("last_state")


def rolling_lpds(
    data: Dataset,
    t0: int,
    prior: PriorConfig,
    settings: SamplerSettings,
    seed: int,
    methods: tuple[str, ...] = ("kalman",),
    warm_start: bool = False,
    warm_burnin: int | None = None,
    workers: int = 1,
) -> dict[str, ScoreSeries]:
    """Score y_t for t = t0+1..T, re-fitting the sampler on y^{t-1} at each origin.

    With ``warm_start`` each origin starts from the last state of the previous
    one with ``warm_burnin`` burn-in sweeps; origins then run sequentially.
    """
    if not 1 <= t0 < data.T:
        raise ValueError(f"t0 must satisfy 1 <= t0 < T = {data.T}")
    if t0 < 2:
        raise ValueError("need at least two training observations")
    times = list(range(t0 + 1, data.T + 1))
    results: list[dict] = []
    if warm_start:
        init = None
        for t in times:
            st = settings if init is None else replace(
                settings, n_burnin=settings.n_burnin if warm_burnin is None else warm_burnin)
            if init is not None:
                init = _extend_state(init)
            res, last = _score_origin((data, t, prior, st, seed, methods, init))
            results.append(res)
            init = last
    else:
        jobs = [(data, t, prior, settings, seed, methods, None) for t in times]
        if workers > 1:
            with ProcessPoolExecutor(workers) as pool:
                results = [r for r, _ in pool.map(_score_origin, jobs)]
        else:
            results = [_score_origin(j)[0] for j in jobs]
    return {m: ScoreSeries(np.array(times), np.array([r[m] for r in results]), m) for m in methods}


def _extend_state(state):
    """Append one state period so a chain fitted on t-1 points can start on t."""
    s = state.copy()
    s.beta_tilde = np.vstack([s.beta_tilde, s.beta_tilde[-1:]])
    if s.h is not None:
        s.h = np.append(s.h, s.h[-1])
    return s
