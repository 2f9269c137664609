"""Interweaved Gibbs sampler for a univariate TVP regression under shrinkage priors.

One sweep runs, in order:
  (a) non-centered states by a joint AWOL draw,
  (b) (beta, sqrt_theta) jointly from the expanded regression,
  (c) (beta_j, theta_j) re-drawn in the centered parameterization (interweaving),
  (d) random-walk MH on the shrinkage exponents a_tau, a_xi,
  (e) local variances tau2_j, xi2_j and global lambda2, kappa2,
  (f) the error variance (or the stochastic volatility block),
  (g) the initial-state scales P0_jj.
Under the inverted gamma prior, (b) updates beta only, theta_j is drawn from
its conjugate inverse gamma posterior in the centered parameterization and
(d), (e) are skipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .banded import awol_draw, band_cholesky, build_precision
from .dists import (
    GigParams,
    exponential_logpdf,
    gig_draw,
    log_marginal_normal_gamma,
    rgamma,
    rinvgamma,
)
from .model import ChainState, Dataset, PriorConfig, PriorVariant, path_centered
from .sv import SvState, initial_sv_state, sample_sv_block


class SamplerError(RuntimeError):
    def __init__(self, sweep: int, state: ChainState, cause: BaseException):
        self.sweep = sweep
        self.state = state
        super().__init__(f"sampler failed at sweep {sweep}: {cause!r}")


@dataclass
class SamplerSettings:
    n_burnin: int = 1000
    n_draws: int = 1000
    thin: int = 1
    c_tau: float = 1.0
    c_xi: float = 1.0
    sqrt_theta_floor: float = 1e-12
    adapt_mh: bool = False
    target_accept: float = 0.30
    interweave: bool = True
    # random joint sign flip of (sqrt_theta_j, beta_tilde_j), an exact symmetry
    sign_switch: bool = True
    store_paths: bool = True
    # known observation variance; disables step (f) when set
    fixed_sigma2: float | None = None

    def __post_init__(self) -> None:
        if self.n_draws < 0 or self.n_burnin < 0:
            raise ValueError("n_draws and n_burnin must be >= 0")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if not (self.c_tau > 0 and self.c_xi > 0):
            raise ValueError("MH scales must be positive")
        if not self.sqrt_theta_floor > 0:
            raise ValueError("sqrt_theta_floor must be positive")


@dataclass
class SweepStats:
    accepted_xi: int = 0
    proposed_xi: int = 0
    accepted_tau: int = 0
    proposed_tau: int = 0
    degenerate_gig: int = 0
    c_xi: float = 1.0
    c_tau: float = 1.0

    @property
    def accept_rate_xi(self) -> float:
        return self.accepted_xi / self.proposed_xi if self.proposed_xi else math.nan

    @property
    def accept_rate_tau(self) -> float:
        return self.accepted_tau / self.proposed_tau if self.proposed_tau else math.nan


# ---------------------------------------------------------------------------
# draw storage

_SCALARS = ("a_xi", "a_tau", "kappa2", "lambda2")
_VECTORS = ("beta", "sqrt_theta", "xi2", "tau2", "P0", "beta_tilde_last")


@dataclass
class DrawStore:
    """Thinned posterior draws, one array per parameter with draws along axis 0."""

    draws: dict[str, np.ndarray]
    T: int
    d: int
    sv: bool = False
    stats: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.draws["beta"].shape[0])

    def __getitem__(self, name: str) -> np.ndarray:
        return self.draws[name]

    def __contains__(self, name: str) -> bool:
        return name in self.draws

    @property
    def names(self) -> list[str]:
        return list(self.draws)

    def theta(self) -> np.ndarray:
        return self.draws["sqrt_theta"] ** 2

    def abs_sqrt_theta(self) -> np.ndarray:
        return np.abs(self.draws["sqrt_theta"])

    def sigma2_path(self) -> np.ndarray:
        """(M, T) error variances for t = 1..T."""
        if self.sv:
            return np.exp(self.draws["h"][:, 1:])
        return np.repeat(self.draws["sigma2"][:, None], self.T, axis=1)

    def centered_paths(self, m: int | slice | None = None) -> np.ndarray:
        """beta_jt = beta_j + sqrt_theta_j * beta_tilde_jt, built on demand."""
        if "beta_tilde" not in self.draws:
            raise KeyError("state paths were not stored (store_paths=False)")
        sel = slice(None) if m is None else m
        bt = self.draws["beta_tilde"][sel]
        b = self.draws["beta"][sel]
        s = self.draws["sqrt_theta"][sel]
        if bt.ndim == 2:
            return path_centered(b, s, bt)
        return b[:, None, :] + s[:, None, :] * bt

    def state(self, m: int = -1) -> ChainState:
        g = lambda k: self.draws[k][m]  # noqa: E731
        bt = self.draws["beta_tilde"][m].copy() if "beta_tilde" in self.draws else np.zeros((self.T + 1, self.d))
        kw = dict(
            beta_tilde=bt, beta=g("beta").copy(), sqrt_theta=g("sqrt_theta").copy(),
            xi2=g("xi2").copy(), tau2=g("tau2").copy(), a_xi=float(g("a_xi")),
            a_tau=float(g("a_tau")), kappa2=float(g("kappa2")), lambda2=float(g("lambda2")),
            P0=g("P0").copy(),
        )
        if self.sv:
            kw.update(h=g("h").copy(), mu=float(g("mu")), phi=float(g("phi")),
                      sigma2_eta=float(g("sigma2_eta")))
        else:
            kw.update(sigma2=float(g("sigma2")), C0=float(g("C0")))
        return ChainState(**kw)

    @classmethod
    def merge(cls, stores: list["DrawStore"]) -> "DrawStore":
        if not stores:
            raise ValueError("nothing to merge")
        first = stores[0]
        for s in stores[1:]:
            if (s.T, s.d, s.sv) != (first.T, first.d, first.sv) or set(s.draws) != set(first.draws):
                raise ValueError("incompatible draw stores")
        draws = {k: np.concatenate([s.draws[k] for s in stores], axis=0) for k in first.draws}
        return cls(draws, first.T, first.d, first.sv, dict(first.stats))


def _allocate(n: int, T: int, d: int, sv: bool, store_paths: bool) -> dict[str, np.ndarray]:
    out = {k: np.empty(n) for k in _SCALARS}
    out.update({k: np.empty((n, d)) for k in _VECTORS})
    if sv:
        out["h"] = np.empty((n, T + 1))
        for k in ("mu", "phi", "sigma2_eta"):
            out[k] = np.empty(n)
    else:
        out["sigma2"] = np.empty(n)
        out["C0"] = np.empty(n)
    if store_paths:
        out["beta_tilde"] = np.empty((n, T + 1, d))
    return out


def _record(draws: dict[str, np.ndarray], i: int, s: ChainState) -> None:
    draws["beta"][i] = s.beta
    draws["sqrt_theta"][i] = s.sqrt_theta
    draws["xi2"][i] = s.xi2
    draws["tau2"][i] = s.tau2
    draws["P0"][i] = s.P0
    draws["beta_tilde_last"][i] = s.beta_tilde[-1]
    draws["a_xi"][i] = s.a_xi
    draws["a_tau"][i] = s.a_tau
    draws["kappa2"][i] = s.kappa2
    draws["lambda2"][i] = s.lambda2
    if s.h is not None:
        draws["h"][i] = s.h
        draws["mu"][i] = s.mu
        draws["phi"][i] = s.phi
        draws["sigma2_eta"][i] = s.sigma2_eta
    else:
        draws["sigma2"][i] = s.sigma2
        draws["C0"][i] = s.C0
    if "beta_tilde" in draws:
        draws["beta_tilde"][i] = s.beta_tilde


# ---------------------------------------------------------------------------
# starting values


def initial_state(data: Dataset, prior: PriorConfig) -> ChainState:
    d, T = data.d, data.T
    vy = float(np.var(data.y, ddof=1))
    vy = vy if vy > 0 else 1.0
    state = ChainState(
        beta_tilde=np.zeros((T + 1, d)),
        beta=np.zeros(d),
        sqrt_theta=np.full(d, 0.1),
        xi2=np.ones(d),
        tau2=np.ones(d),
        a_xi=prior.fixed_a_xi if prior.fixed_a_xi is not None else 0.1,
        a_tau=prior.fixed_a_tau if prior.fixed_a_tau is not None else 0.1,
        kappa2=20.0,
        lambda2=20.0,
        P0=np.ones(d),
        sigma2=vy,
        C0=1.0,
    )
    if prior.use_sv:
        sv = initial_sv_state(data.y - data.y.mean())
        state.h, state.mu, state.phi, state.sigma2_eta = sv.h, sv.mu, sv.phi, sv.sigma2_eta
    return state


# ---------------------------------------------------------------------------
# single steps


def _fitted(state: ChainState, X: np.ndarray) -> np.ndarray:
    """z_t alpha = x_t beta + x_t Diag(sqrt_theta) beta_tilde_t for t = 1..T."""
    return X @ state.beta + np.einsum("tj,tj->t", X * state.sqrt_theta, state.beta_tilde[1:])


def step_a_states(state: ChainState, data: Dataset, rng: np.random.Generator) -> np.ndarray:
    T, d = data.T, data.d
    system = build_precision(data.X, state.beta, state.sqrt_theta, state.sigma2_path(T),
                             state.P0, data.y)
    system = band_cholesky(system)
    eps = rng.standard_normal((T + 1) * d)
    return awol_draw(system, eps).reshape(T + 1, d)


def _gaussian_regression_draw(W, y, w, prior_var, rng):
    """Draw from N(a_T, A_T), A_T = (W' diag(w) W + diag(1/prior_var))^-1.

    Computed in the scaled form A0^{1/2} (A0^{1/2} W'WA0^{1/2} + I)^-1 A0^{1/2}
    so that tiny prior variances stay well conditioned.
    """
    s = np.sqrt(prior_var)
    Ws = W * s[None, :]
    M = (Ws * w[:, None]).T @ Ws
    M[np.diag_indices_from(M)] += 1.0
    L = np.linalg.cholesky(M)
    rhs = s * (W.T @ (w * y))
    u = solve_triangular(L, rhs, lower=True)
    z = rng.standard_normal(len(s))
    star = solve_triangular(L.T, u + z, lower=False)
    return s * star


def expanded_regression_moments(state: ChainState, data: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean a_T and covariance A_T of alpha = (beta, sqrt_theta)."""
    W = np.hstack([data.X, data.X * state.beta_tilde[1:]])
    w = 1.0 / state.sigma2_path(data.T)
    s = np.sqrt(np.concatenate([state.tau2, state.xi2]))
    Ws = W * s[None, :]
    M = (Ws * w[:, None]).T @ Ws + np.eye(len(s))
    Mi = np.linalg.inv(M)
    A_T = s[:, None] * Mi * s[None, :]
    a_T = A_T @ (W.T @ (w * data.y))
    return a_T, A_T


def step_b_alpha(state: ChainState, data: Dataset, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    d = data.d
    W = np.hstack([data.X, data.X * state.beta_tilde[1:]])
    w = 1.0 / state.sigma2_path(data.T)
    alpha = _gaussian_regression_draw(W, data.y, w, np.concatenate([state.tau2, state.xi2]), rng)
    return alpha[:d], alpha[d:]


def step_b_beta_only(state: ChainState, data: Dataset, prior: PriorConfig,
                     rng: np.random.Generator) -> np.ndarray:
    resid = data.y - np.einsum("tj,tj->t", data.X * state.sqrt_theta, state.beta_tilde[1:])
    w = 1.0 / state.sigma2_path(data.T)
    return _gaussian_regression_draw(data.X, resid, w, np.full(data.d, prior.A0_beta), rng)


def _floored(sqrt_theta: np.ndarray, floor: float) -> tuple[np.ndarray, np.ndarray]:
    # only exact zeros are replaced; tiny nonzero scales are legitimate draws
    sign = np.where(sqrt_theta < 0, -1.0, 1.0)
    return sign, np.where(sqrt_theta == 0.0, sign * floor, sqrt_theta)


def _centered_sums(st: np.ndarray, beta_tilde: np.ndarray, P0: np.ndarray) -> np.ndarray:
    """sum_t (beta_jt - beta_j,t-1)^2 + (beta_j0 - beta_j)^2 / P0_jj for the centered path.

    Evaluated as theta_j (sum_t dbeta_tilde^2 + beta_tilde_j0^2 / P0_jj), which is
    the same quantity without forming beta_j + sqrt_theta_j beta_tilde_jt; that sum
    rounds to a constant path once |sqrt_theta_j| falls below the spacing of beta_j.
    """
    inner = np.sum(np.diff(beta_tilde, axis=0) ** 2, axis=0) + beta_tilde[0] ** 2 / P0
    return st * st * inner


def _centered_update(state, theta, prior_var, sign, st, floor, rng):
    """Draw beta_j | beta_j0, theta_j and map the path back to the non-centered scale.

    With w = v / (v + theta P0) the update is beta_new = w beta_j0 + noise; it is
    carried out on the shift delta = beta_new - beta_old so that the new states
    (sqrt_theta_old beta_tilde - delta) / sqrt_theta_new keep full precision.
    """
    P0 = state.P0
    denom = prior_var + theta * P0
    shrink = theta * P0 / denom  # 1 - w
    sd = np.sqrt(prior_var * theta * P0 / denom)
    dev0 = st * state.beta_tilde[0]  # beta_j0 - beta_old
    delta = -shrink * state.beta + (1.0 - shrink) * dev0 + sd * rng.standard_normal(len(theta))
    beta = state.beta + delta
    sqrt_theta = sign * np.sqrt(theta)
    sqrt_theta = np.where(sqrt_theta == 0.0, sign * floor, sqrt_theta)
    beta_tilde = (st[None, :] * state.beta_tilde - delta[None, :]) / sqrt_theta[None, :]
    bad = ~np.all(np.isfinite(beta_tilde), axis=0)
    if np.any(bad):
        sqrt_theta = np.where(bad, sign * np.maximum(np.abs(sqrt_theta), floor), sqrt_theta)
        beta_tilde = (st[None, :] * state.beta_tilde - delta[None, :]) / sqrt_theta[None, :]
    return beta, sqrt_theta, beta_tilde


def step_c_interweave(
    state: ChainState,
    data: Dataset,
    rng: np.random.Generator,
    floor: float = 1e-12,
    stats: SweepStats | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    T, d = data.T, data.d
    sign, st = _floored(state.sqrt_theta, floor)
    ss = _centered_sums(st, state.beta_tilde, state.P0)
    theta = np.empty(d)
    for j in range(d):
        if ss[j] > _GIG_B_MIN:
            theta[j] = gig_draw(GigParams(-T / 2.0, 1.0 / state.xi2[j], ss[j]), rng)
        else:
            # b is negligible next to a: GIG(-T/2, a, b) -> InvGamma(T/2, b/2)
            theta[j] = rinvgamma(T / 2.0, ss[j] / 2.0, rng)
            if stats is not None:
                stats.degenerate_gig += 1
    return _centered_update(state, theta, state.tau2, sign, st, floor, rng)


def step_theta_inverted_gamma(
    state: ChainState, data: Dataset, prior: PriorConfig, rng: np.random.Generator,
    floor: float = 1e-12,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Conjugate inverse gamma update of theta_j (and beta_j) on the centered path."""
    T = data.T
    sign, st = _floored(state.sqrt_theta, floor)
    scale = prior.S0 + 0.5 * _centered_sums(st, state.beta_tilde, state.P0)
    theta = rinvgamma(prior.s0 + (T + 1) / 2.0, scale, rng)
    return _centered_update(state, theta, np.full(data.d, prior.A0_beta), sign, st, floor, rng)


def _mh_exponent(a, values, scale2, rate, c, rng, floor):
    # exact zeros would make the marginal infinite for a <= 1/2
    x = np.abs(values)
    x = np.where(x == 0.0, floor, x)

    def log_target(v):
        return exponential_logpdf(v, rate) + float(np.sum(log_marginal_normal_gamma(x, v, scale2)))

    z = c * rng.standard_normal()
    prop = a * math.exp(z) if z < 700.0 else math.inf
    if not 0.0 < prop < math.inf:
        return a, False
    try:
        log_ratio = log_target(prop) + math.log(prop) - log_target(a) - math.log(a)
    except (OverflowError, ValueError):
        # proposal far outside the range where the marginal is representable
        return a, False
    if math.log(rng.random()) < log_ratio:
        return prop, True
    return a, False


def step_d_mh_exponents(
    state: ChainState,
    prior: PriorConfig,
    rng: np.random.Generator,
    c_tau: float = 1.0,
    c_xi: float = 1.0,
    floor: float = 1e-12,
) -> tuple[float, float, tuple[bool | None, bool | None]]:
    """Random-walk MH on log a_tau and log a_xi given beta and sqrt_theta.

    The local variances are integrated out, so the acceptance ratio uses the
    normal-gamma marginal of each coefficient.
    """
    a_tau, a_xi = state.a_tau, state.a_xi
    acc_tau = acc_xi = None
    if prior.fixed_a_tau is None:
        a_tau, acc_tau = _mh_exponent(a_tau, state.beta, state.lambda2, prior.b_tau, c_tau, rng, floor)
    if prior.fixed_a_xi is None:
        a_xi, acc_xi = _mh_exponent(a_xi, state.sqrt_theta, state.kappa2, prior.b_xi, c_xi, rng, floor)
    return a_tau, a_xi, (acc_tau, acc_xi)


def step_e_prior_variances(
    state: ChainState, prior: PriorConfig, rng: np.random.Generator, floor: float = 1e-12
) -> tuple[np.ndarray, np.ndarray, float, float]:
    d = len(state.beta)
    a_tau, a_xi = state.a_tau, state.a_xi
    tiny = _GIG_B_MIN
    tau2 = np.empty(d)
    xi2 = np.empty(d)
    for j in range(d):
        tau2[j] = _local_variance(a_tau, state.lambda2, state.beta[j] ** 2, tiny, rng)
        xi2[j] = _local_variance(a_xi, state.kappa2, state.sqrt_theta[j] ** 2, tiny, rng)
    lambda2 = rgamma(prior.e1 + a_tau * d, prior.e2 + 0.5 * tau2.mean() * a_tau * d, rng)
    kappa2 = rgamma(prior.d1 + a_xi * d, prior.d2 + 0.5 * xi2.mean() * a_xi * d, rng)
    return tau2, xi2, max(float(lambda2), _VAR_MIN), max(float(kappa2), _VAR_MIN)


# smallest GIG b accepted when p <= 0 (squares that underflow are lifted to it)
_GIG_B_MIN = 1e-290
# local variances below the smallest normal double would make 1/xi2 overflow
_VAR_MIN = float(np.finfo(float).tiny)


def _local_variance(a: float, global_: float, sq: float, tiny: float, rng) -> float:
    p = a - 0.5
    if sq <= 0.0 and p > 0:
        v = float(rgamma(p, a * global_ / 2.0, rng))
    else:
        v = float(gig_draw(GigParams(p, a * global_, max(sq, tiny)), rng))
    return max(v, _VAR_MIN)


def step_f_sigma2(state: ChainState, data: Dataset, prior: PriorConfig,
                  rng: np.random.Generator) -> tuple[float, float]:
    resid = data.y - _fitted(state, data.X)
    sigma2 = float(rinvgamma(prior.c0 + data.T / 2.0, state.C0 + 0.5 * float(resid @ resid), rng))
    C0 = float(rgamma(prior.g0 + prior.c0, prior.G0 + 1.0 / sigma2, rng))
    return sigma2, C0


def step_sv(state: ChainState, data: Dataset, prior: PriorConfig, rng: np.random.Generator) -> SvState:
    resid = data.y - _fitted(state, data.X)
    sv = SvState(state.h, state.mu, state.phi, state.sigma2_eta)
    return sample_sv_block(resid, sv, prior.sv, rng)


def random_sign_switch(sqrt_theta: np.ndarray, beta_tilde: np.ndarray, rng: np.random.Generator):
    """Flip (sqrt_theta_j, beta_tilde_j) jointly with probability 1/2 each.

    The likelihood and prior are invariant under the flip, so the move is
    always accepted; it lets the chain visit both modes of sqrt_theta_j.
    """
    flip = np.where(rng.random(len(sqrt_theta)) < 0.5, -1.0, 1.0)
    return sqrt_theta * flip, beta_tilde * flip[None, :]


def step_g_P0(state: ChainState, prior: PriorConfig, rng: np.random.Generator) -> np.ndarray:
    bt0 = state.beta_tilde[0]
    return rinvgamma(prior.nu_P + 0.5, (prior.nu_P - 1.0) * prior.c_P + 0.5 * bt0 ** 2, rng)


# ---------------------------------------------------------------------------
# sweep and chain


def gibbs_sweep(
    state: ChainState,
    data: Dataset,
    prior: PriorConfig,
    settings: SamplerSettings,
    rng: np.random.Generator,
    stats: SweepStats,
) -> ChainState:
    """One full pass of the sampler; returns a new state."""
    s = state.copy()
    floor = settings.sqrt_theta_floor
    ig = prior.variant is PriorVariant.INVERTED_GAMMA
    if data.d > 0:
        s.beta_tilde = step_a_states(s, data, rng)
        if ig:
            s.beta = step_b_beta_only(s, data, prior, rng)
            s.beta, s.sqrt_theta, s.beta_tilde = step_theta_inverted_gamma(s, data, prior, rng, floor)
        else:
            s.beta, s.sqrt_theta = step_b_alpha(s, data, rng)
            if settings.interweave:
                s.beta, s.sqrt_theta, s.beta_tilde = step_c_interweave(s, data, rng, floor, stats)
        if settings.sign_switch:
            s.sqrt_theta, s.beta_tilde = random_sign_switch(s.sqrt_theta, s.beta_tilde, rng)
        if not ig:
            if prior.learn_exponents:
                s.a_tau, s.a_xi, (acc_tau, acc_xi) = step_d_mh_exponents(
                    s, prior, rng, stats.c_tau, stats.c_xi, floor)
                if acc_tau is not None:
                    stats.proposed_tau += 1
                    stats.accepted_tau += int(acc_tau)
                if acc_xi is not None:
                    stats.proposed_xi += 1
                    stats.accepted_xi += int(acc_xi)
            s.tau2, s.xi2, s.lambda2, s.kappa2 = step_e_prior_variances(s, prior, rng, floor)
    if s.h is not None:
        sv = step_sv(s, data, prior, rng)
        s.h, s.mu, s.phi, s.sigma2_eta = sv.h, sv.mu, sv.phi, sv.sigma2_eta
    elif settings.fixed_sigma2 is not None:
        s.sigma2 = settings.fixed_sigma2
    else:
        s.sigma2, s.C0 = step_f_sigma2(s, data, prior, rng)
    if data.d > 0:
        s.P0 = step_g_P0(s, prior, rng)
    return s


def _adapt(stats: SweepStats, i: int, acc_tau, acc_xi, target: float) -> None:
    gain = 1.0 / (i + 1) ** 0.6
    if acc_tau is not None:
        stats.c_tau *= math.exp(gain * (float(acc_tau) - target))
    if acc_xi is not None:
        stats.c_xi *= math.exp(gain * (float(acc_xi) - target))


def run_chain(
    data: Dataset,
    prior: PriorConfig,
    settings: SamplerSettings,
    rng: np.random.Generator | int | None = None,
    init: ChainState | None = None,
) -> DrawStore:
    """Run burn-in then keep every ``thin``-th of ``n_draws * thin`` sweeps."""
    rng = np.random.default_rng(rng)
    state = init.copy() if init is not None else initial_state(data, prior)
    if prior.use_sv and state.h is None:
        sv = initial_sv_state(data.y - data.y.mean())
        state.h, state.mu, state.phi, state.sigma2_eta = sv.h, sv.mu, sv.phi, sv.sigma2_eta
    if not prior.use_sv:
        state.h = None
    if prior.fixed_a_xi is not None:
        state.a_xi = prior.fixed_a_xi
    if prior.fixed_a_tau is not None:
        state.a_tau = prior.fixed_a_tau
    stats = SweepStats(c_xi=settings.c_xi, c_tau=settings.c_tau)
    draws = _allocate(settings.n_draws, data.T, data.d, prior.use_sv, settings.store_paths)
    total = settings.n_burnin + settings.n_draws * settings.thin
    kept = 0
    burn_stats = None
    for i in range(total):
        prev = (stats.accepted_tau, stats.accepted_xi, stats.proposed_tau, stats.proposed_xi)
        try:
            state = gibbs_sweep(state, data, prior, settings, rng, stats)
        except Exception as exc:  # noqa: BLE001
            raise SamplerError(i, state, exc) from exc
        if settings.adapt_mh and i < settings.n_burnin:
            acc_tau = (stats.accepted_tau - prev[0]) if stats.proposed_tau > prev[2] else None
            acc_xi = (stats.accepted_xi - prev[1]) if stats.proposed_xi > prev[3] else None
            _adapt(stats, i, acc_tau, acc_xi, settings.target_accept)
        if i == settings.n_burnin - 1:
            burn_stats = SweepStats(**vars(stats))
            stats.accepted_tau = stats.accepted_xi = stats.proposed_tau = stats.proposed_xi = 0
        if i >= settings.n_burnin and (i - settings.n_burnin + 1) % settings.thin == 0:
            _record(draws, kept, state)
            kept += 1
    info = {
        "accept_rate_xi": stats.accept_rate_xi,
        "accept_rate_tau": stats.accept_rate_tau,
        "c_xi": stats.c_xi,
        "c_tau": stats.c_tau,
        "degenerate_gig": stats.degenerate_gig,
        "burnin_accept_rate_xi": burn_stats.accept_rate_xi if burn_stats else math.nan,
        "burnin_accept_rate_tau": burn_stats.accept_rate_tau if burn_stats else math.nan,
    }
    store = DrawStore(draws, data.T, data.d, prior.use_sv, info)
    store.stats["last_state"] = state
    return store
