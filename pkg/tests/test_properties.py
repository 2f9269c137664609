import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from shrinktvp.banded import band_cholesky, build_precision, posterior_mean
from shrinktvp.diagnostics import posterior_summary
from shrinktvp.dists import log_bessel_k
from shrinktvp.model import path_centered, path_noncentered, standardize_covariates
from shrinktvp.tables import read_matrix, write_matrix

from oracles import dense_posterior

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@given(st.floats(0.0, 150.0), st.floats(1e-8, 200.0))
def test_bessel_recurrence(nu, x):
    # K_{nu+1} = K_{nu-1} + (2 nu / x) K_nu, all terms positive
    lhs = log_bessel_k(nu + 1, x)
    rhs = log_bessel_k(nu - 1, x)
    if 2 * nu / x > 0:
        rhs = np.logaddexp(rhs, math.log(2 * nu / x) + log_bessel_k(nu, x))
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))


@given(arrays(float, st.tuples(st.integers(3, 30), st.integers(1, 4)), elements=st.floats(-100, 100)))
def test_standardize_unit_variance(X):
    X = np.column_stack([np.ones(len(X)), X + np.arange(len(X))[:, None] * 1e-3])
    Z, m, s = standardize_covariates(X, intercept_col=0)
    assert np.array_equal(Z[:, 0], X[:, 0]) and m[0] == 0 and s[0] == 1
    assert np.allclose(Z[:, 1:].mean(axis=0), 0, atol=1e-8)
    assert np.allclose(Z[:, 1:].std(axis=0, ddof=1), 1, atol=1e-8)
    assert np.allclose(Z * s + m, X, atol=1e-8 * max(1.0, np.abs(X).max()))


@given(st.integers(1, 4), st.integers(1, 10), st.integers(0, 2 ** 32 - 1))
def test_path_roundtrip(d, T, seed):
    rng = np.random.default_rng(seed)
    beta, bt = rng.standard_normal(d), rng.standard_normal((T + 1, d))
    stv = rng.uniform(0.05, 2.0, d) * rng.choice([-1, 1], d)
    back = path_noncentered(path_centered(beta, stv, bt), beta, stv)
    assert np.allclose(back, bt, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(1, 8), st.integers(0, 2 ** 32 - 1))
def test_band_system_matches_dense(d, T, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((T, d))
    beta, y = rng.standard_normal(d), rng.standard_normal(T)
    stv = rng.uniform(-1.5, 1.5, d)
    s2, P0 = rng.uniform(0.2, 3.0, T), rng.uniform(0.3, 5.0, d)
    sys = build_precision(X, beta, stv, s2, P0, y)
    Omega, c = dense_posterior(X, beta, stv, s2, P0, y)
    assert np.allclose(sys.to_dense(), Omega, atol=1e-10)
    assert np.allclose(sys.covector, c, atol=1e-10)
    m = posterior_mean(band_cholesky(sys))
    assert np.allclose(Omega @ m, c, atol=1e-8 * max(1.0, np.abs(c).max()))


@settings(max_examples=25, deadline=None)
@given(arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 4)),
              elements=st.floats(allow_nan=False, allow_infinity=False, width=64)),
       st.sampled_from(["csv", "bin"]))
def test_matrix_roundtrip(tmp_path_factory, values, fmt):
    path = write_matrix(tmp_path_factory.mktemp("m") / "x", [f"c{j}" for j in range(values.shape[1])],
                        values, fmt)
    assert np.array_equal(read_matrix(path).values, values)


@given(arrays(float, st.integers(2, 200), elements=finite))
def test_quantiles_monotone(x):
    s = posterior_summary(x, quantiles=(0.025, 0.25, 0.5, 0.75, 0.975))
    q = [s.quantiles[p] for p in sorted(s.quantiles)]
    assert all(a <= b for a, b in zip(q, q[1:]))
    assert x.min() <= q[0] and q[-1] <= x.max()
