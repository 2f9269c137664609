"""Stochastic volatility block: log-variance path and AR(1) parameters.

The log of the squared residual is linearised as log(e_t^2) = h_t + log(chi2_1),
the chi2_1 log-noise replaced by the 10-component Gaussian mixture of Omori,
Chib, Shephard & Nakajima (2007). Given mixture indicators, the whole path
h_0..h_T is drawn jointly from its tridiagonal-precision Gaussian. The AR
parameters are then updated in the centered parameterization and
(mu, sigma_eta) once more in the non-centered one.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .banded import PrecisionSystem, awol_draw, band_cholesky
from .dists import GigParams, gig_draw
from .model import SvPrior

log = logging.getLogger(__name__)

MIX_PROB = np.array([0.00609, 0.04775, 0.13057, 0.20674, 0.22715,
                     0.18842, 0.12047, 0.05591, 0.01575, 0.00115])
MIX_MEAN = np.array([1.92677, 1.34744, 0.73504, 0.02266, -0.85173,
                     -1.97278, -3.46788, -5.55246, -8.68384, -14.65000])
MIX_VAR = np.array([0.11265, 0.17788, 0.26768, 0.40611, 0.62699,
                    0.98583, 1.57469, 2.54498, 4.16591, 7.33342])
_LOG_MIX_W = np.log(MIX_PROB) - 0.5 * np.log(MIX_VAR)

LOG_OFFSET = 1e-8
H_BOUND = 700.0

# Number of times a log-variance had to be clamped to [-700, 700].
clamp_count = 0


@dataclass
class SvState:
    h: np.ndarray  # (T+1,), h_0..h_T
    mu: float
    phi: float
    sigma2_eta: float

    def __post_init__(self) -> None:
        self.h = np.asarray(self.h, dtype=float)
        if not abs(self.phi) < 1:
            raise ValueError("phi must lie in (-1, 1)")
        if not self.sigma2_eta > 0:
            raise ValueError("sigma2_eta must be positive")

    @property
    def sigma2(self) -> np.ndarray:
        return np.exp(self.h[1:])


def initial_sv_state(residuals: np.ndarray) -> SvState:
    v = float(np.var(residuals)) if len(residuals) > 1 else 1.0
    level = math.log(max(v, 1e-8))
    return SvState(np.full(len(residuals) + 1, level), level, 0.9, 0.1)


def log_squared(residuals: np.ndarray) -> np.ndarray:
    return np.log(np.asarray(residuals, dtype=float) ** 2 + LOG_OFFSET)


def sample_indicators(ystar: np.ndarray, h: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Mixture component for each t given h_1..h_T."""
    dev = ystar[:, None] - h[:, None] - MIX_MEAN[None, :]
    lp = _LOG_MIX_W[None, :] - 0.5 * dev * dev / MIX_VAR[None, :]
    lp -= lp.max(axis=1, keepdims=True)
    w = np.exp(lp)
    cdf = np.cumsum(w, axis=1)
    u = rng.random(len(ystar)) * cdf[:, -1]
    return np.minimum((cdf < u[:, None]).sum(axis=1), len(MIX_PROB) - 1)


def sample_h(ystar: np.ndarray, r: np.ndarray, sv: SvState, rng: np.random.Generator) -> np.ndarray:
    """Joint draw of h_0..h_T given indicators and AR parameters."""
    global clamp_count
    T = len(ystar)
    phi, s2 = sv.phi, sv.sigma2_eta
    v = MIX_VAR[r]
    diag = np.empty(T + 1)
    diag[0] = 1.0 / s2
    diag[1:T] = (1.0 + phi * phi) / s2
    diag[T] = 1.0 / s2
    diag[1:] += 1.0 / v
    off = np.full(T, -phi / s2)
    c = np.zeros(T + 1)
    c[1:] = (ystar - MIX_MEAN[r] - sv.mu) / v
    system = band_cholesky(PrecisionSystem(diag.reshape(-1, 1, 1), off.reshape(-1, 1, 1), c))
    h = sv.mu + awol_draw(system, rng.standard_normal(T + 1))
    out_of_range = np.abs(h) > H_BOUND
    if np.any(out_of_range):
        clamp_count += int(out_of_range.sum())
        log.warning("clamped %d log-variances to [-%g, %g]", out_of_range.sum(), H_BOUND, H_BOUND)
        h = np.clip(h, -H_BOUND, H_BOUND)
    return h


def _log_phi_extra(phi: float, hc0: float, s2: float, prior: SvPrior) -> float:
    # beta prior on (phi+1)/2 and the stationary density of h_0; the AR
    # regression part is absorbed by the proposal
    return ((prior.a0 - 1.0) * math.log1p(phi) + (prior.b0 - 1.0) * math.log1p(-phi)
            + 0.5 * math.log1p(-phi * phi) - 0.5 * (1.0 - phi * phi) * hc0 * hc0 / s2)


def sample_sv_params(
    h: np.ndarray,
    ystar: np.ndarray,
    r: np.ndarray,
    sv: SvState,
    prior: SvPrior,
    rng: np.random.Generator,
) -> SvState:
    T = len(h) - 1
    mu, phi = sv.mu, sv.phi

    # sigma2_eta | h, mu, phi: Gamma(1/2, 1/(2 B_sigma)) prior gives a GIG posterior
    hc = h - mu
    ss = (1.0 - phi * phi) * hc[0] ** 2 + float(np.sum((hc[1:] - phi * hc[:-1]) ** 2))
    s2 = float(gig_draw(GigParams(-T / 2.0, 1.0 / prior.B_sigma, max(ss, 1e-300)), rng))

    # phi | h, mu, sigma2_eta: independence MH with the AR regression as proposal
    x, z = hc[:-1], hc[1:]
    sxx = float(x @ x)
    if sxx > 0:
        phi_hat = float(x @ z) / sxx
        prop = phi_hat + math.sqrt(s2 / sxx) * rng.standard_normal()
        if abs(prop) < 1.0:
            log_acc = _log_phi_extra(prop, hc[0], s2, prior) - _log_phi_extra(phi, hc[0], s2, prior)
            if math.log(rng.random()) < log_acc:
                phi = prop

    # mu | h, phi, sigma2_eta: conjugate normal
    prec = 1.0 / prior.B_mu + ((1.0 - phi * phi) + T * (1.0 - phi) ** 2) / s2
    num = (prior.b_mu / prior.B_mu
           + ((1.0 - phi * phi) * h[0] + (1.0 - phi) * float(np.sum(h[1:] - phi * h[:-1]))) / s2)
    mu = num / prec + rng.standard_normal() / math.sqrt(prec)

    # interweave: redraw (mu, sigma_eta) given the standardized path
    sig = math.sqrt(s2)
    htil = (h - mu) / sig
    v = MIX_VAR[r]
    resp = ystar - MIX_MEAN[r]
    Z = np.column_stack([np.ones(T), htil[1:]])
    w = 1.0 / v
    P = (Z * w[:, None]).T @ Z + np.diag([1.0 / prior.B_mu, 1.0 / prior.B_sigma])
    b = Z.T @ (w * resp) + np.array([prior.b_mu / prior.B_mu, 0.0])
    Lc = np.linalg.cholesky(P)
    mean = np.linalg.solve(Lc.T, np.linalg.solve(Lc, b))
    draw = mean + np.linalg.solve(Lc.T, rng.standard_normal(2))
    mu_nc, sig_nc = float(draw[0]), float(draw[1])
    if sig_nc != 0.0 and math.isfinite(sig_nc):
        mu, s2 = mu_nc, sig_nc * sig_nc
        h = mu + sig_nc * htil
    return SvState(h, mu, phi, s2)


def sample_sv_block(
    residuals: np.ndarray,
    sv: SvState,
    prior: SvPrior,
    rng: np.random.Generator,
) -> SvState:
    """One SV update given the current regression residuals y_t - z_t alpha."""
    ystar = log_squared(residuals)
    return sample_sv_block_logsq(ystar, sv, prior, rng)


def sample_sv_block_logsq(
    ystar: np.ndarray, sv: SvState, prior: SvPrior, rng: np.random.Generator
) -> SvState:
    r = sample_indicators(ystar, sv.h[1:], rng)
    h = sample_h(ystar, r, sv, rng)
    return sample_sv_params(h, ystar, r, SvState(h, sv.mu, sv.phi, sv.sigma2_eta), prior, rng)


def forecast_h(sv: SvState, rng: np.random.Generator) -> float:
    """sigma^2 for the next period: exp of a draw from the AR(1) transition."""
    mean = sv.mu + sv.phi * (sv.h[-1] - sv.mu)
    return math.exp(mean + math.sqrt(sv.sigma2_eta) * rng.standard_normal())


def forecast_h_many(h_last, mu, phi, sigma2_eta, rng: np.random.Generator) -> np.ndarray:
    h_last, mu, phi, sigma2_eta = (np.asarray(v, dtype=float) for v in (h_last, mu, phi, sigma2_eta))
    mean = mu + phi * (h_last - mu)
    return np.exp(mean + np.sqrt(sigma2_eta) * rng.standard_normal(mean.shape))
