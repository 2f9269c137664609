import numpy as np
import pytest

import shrinktvp.banded as banded
from shrinktvp.banded import (
    NotPositiveDefiniteError,
    PrecisionSystem,
    awol_draw,
    band_cholesky,
    build_precision,
    posterior_mean,
)

from oracles import dense_posterior


def _instance(d=2, T=5, seed=0):
    rng = np.random.default_rng(seed)
    X = np.column_stack([np.ones(T), rng.standard_normal((T, d - 1))])
    beta = rng.standard_normal(d)
    st = rng.uniform(0.2, 1.0, d) * rng.choice([-1, 1], d)
    sigma2 = rng.uniform(0.5, 2.0, T)
    P0 = rng.uniform(0.5, 2.0, d)
    y = rng.standard_normal(T)
    return X, beta, st, sigma2, P0, y


def test_precision_matches_dense_oracle():
    args = _instance()
    sys = build_precision(*args)
    Omega, c = dense_posterior(*args)
    assert np.max(np.abs(sys.to_dense() - Omega)) < 1e-10
    assert np.max(np.abs(sys.covector - c)) < 1e-10


def test_band_storage_consistent_with_dense():
    sys = build_precision(*_instance(d=3, T=4, seed=1))
    dense = sys.to_dense()
    ab = sys.band()
    n, d = sys.n, sys.d
    for r in range(d + 1):
        for i in range(n - r):
            assert ab[r, i] == dense[i + r, i]


def test_factor_blocks_reassemble():
    sys = band_cholesky(build_precision(*_instance(d=3, T=6, seed=2)))
    Ld, Ls = sys.factor_blocks()
    d, nb = sys.d, sys.n_blocks
    L = np.zeros((sys.n, sys.n))
    for t in range(nb):
        L[t * d:(t + 1) * d, t * d:(t + 1) * d] = Ld[t]
    for t in range(nb - 1):
        L[(t + 1) * d:(t + 2) * d, t * d:(t + 1) * d] = Ls[t]
    assert np.allclose(L @ L.T, sys.to_dense(), atol=1e-12)


def test_posterior_mean_solves_system():
    sys = band_cholesky(build_precision(*_instance(d=2, T=30, seed=3)))
    m = posterior_mean(sys)
    assert np.allclose(sys.to_dense() @ m, sys.covector, atol=1e-10)


def test_identity_system_returns_noise():
    d, nb = 2, 4
    sys = PrecisionSystem(np.broadcast_to(np.eye(d), (nb, d, d)).copy(),
                          np.zeros((nb - 1, d, d)), np.zeros(nb * d))
    eps = np.arange(nb * d, dtype=float)
    assert np.allclose(awol_draw(band_cholesky(sys), eps), eps)


def test_awol_requires_factor_and_length():
    sys = build_precision(*_instance())
    with pytest.raises(ValueError):
        awol_draw(sys, np.zeros(sys.n))
    with pytest.raises(ValueError):
        awol_draw(band_cholesky(sys), np.zeros(3))


def test_not_positive_definite_reports_block():
    d, nb = 1, 3
    diag = np.ones((nb, d, d))
    diag[2, 0, 0] = -1.0
    sys = PrecisionSystem(diag, np.zeros((nb - 1, d, d)), np.zeros(nb))
    with pytest.raises(NotPositiveDefiniteError) as ei:
        band_cholesky(sys)
    assert ei.value.block == 2


def test_shape_validation():
    with pytest.raises(ValueError):
        PrecisionSystem(np.ones((3, 2, 2)), np.ones((3, 2, 2)), np.zeros(6))
    with pytest.raises(ValueError):
        build_precision(np.ones((3, 1)), [0.0], [1.0], [1.0, 0.0, 1.0], [1.0], np.zeros(3))


def test_no_inverse_in_api():
    public = [n for n in dir(banded) if not n.startswith("_")]
    assert not any("inv" in n.lower() for n in public)


def test_scales_linearly_in_T():
    # O(T d^3): a long system factors without forming dense matrices
    sys = band_cholesky(build_precision(*_instance(d=3, T=5000, seed=4)))
    assert sys.chol.shape == (4, 5001 * 3)
