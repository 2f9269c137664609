"""Posterior summaries, inefficiency factors and simulation-study error metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_QUANTILES = (0.025, 0.5, 0.975)


@dataclass(frozen=True)
class Summary:
    mean: float
    sd: float
    quantiles: dict[float, float]

    @property
    def median(self) -> float:
        return self.quantiles.get(0.5, math.nan)


def posterior_summary(draws, quantiles=DEFAULT_QUANTILES) -> Summary:
    """Mean, standard deviation (divisor N - 1) and type-7 empirical quantiles."""
    x = np.asarray(draws, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValueError("no draws to summarize")
    if x.size < 2:
        raise ValueError("need at least two draws")
    qs = np.quantile(x, list(quantiles), method="linear")
    sd = float(x.std(ddof=1))
    return Summary(float(x.mean()), sd, {float(q): float(v) for q, v in zip(quantiles, qs)})


@dataclass(frozen=True)
class InefficiencyFactor:
    value: float
    ess: float
    infinite: bool = False


def _autocovariance(x: np.ndarray) -> np.ndarray:
    n = len(x)
    xc = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n]
    return acov / n


def inefficiency_factor(chain, min_length: int = 100) -> InefficiencyFactor:
    """N / ESS with Geyer's initial monotone positive sequence estimator.

    A chain without variation has no defined autocorrelation time; it is
    reported as infinite and flagged.
    """
    x = np.asarray(chain, dtype=float).reshape(-1)
    n = len(x)
    if n < min_length:
        raise ValueError(f"need at least {min_length} draws, got {n}")
    if not np.all(np.isfinite(x)):
        raise ValueError("chain contains non-finite values")
    acov = _autocovariance(x)
    if not acov[0] > 0 or np.ptp(x) == 0:
        return InefficiencyFactor(math.inf, 0.0, True)
    m = (n - 1) // 2
    pairs = acov[0:2 * m:2] + acov[1:2 * m:2]
    # initial positive sequence, then made monotone
    nonpos = np.nonzero(pairs <= 0)[0]
    k = int(nonpos[0]) if len(nonpos) else len(pairs)
    pairs = np.minimum.accumulate(pairs[:k])
    tau = (-acov[0] + 2.0 * pairs.sum()) / acov[0]
    tau = max(tau, 1.0 / n)
    return InefficiencyFactor(float(tau), float(n / tau), False)


@dataclass(frozen=True)
class SimMetrics:
    avMSE: float
    avVAR: float
    avBIAS2: float


def sim_study_metrics(draws_per_series, truth) -> SimMetrics:
    """Average MSE, posterior variance and squared bias over replicated series.

    draws_per_series is a sequence of 1-D draw arrays (one per series) and
    truth a scalar or one true value per series. V_i uses divisor M.
    """
    series = [np.asarray(d, dtype=float).reshape(-1) for d in draws_per_series]
    if not series:
        raise ValueError("need at least one series")
    truth = np.broadcast_to(np.asarray(truth, dtype=float), (len(series),))
    E = np.array([s.mean() for s in series])
    V = np.array([s.var() for s in series])
    av_var = float(V.mean())
    av_bias2 = float(np.mean((E - truth) ** 2))
    return SimMetrics(av_var + av_bias2, av_var, av_bias2)
