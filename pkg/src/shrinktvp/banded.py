"""Block-tridiagonal SPD systems and the AWOL joint Gaussian state draw.

The precision is held as (T+1) diagonal d x d blocks plus T upper off-diagonal
blocks. Factorization and triangular solves go through LAPACK's banded
Cholesky (``dpbtrf``/``dtbtrs``): the block-tridiagonal matrix has scalar
half-bandwidth d, so cost is O(T d^3) and memory O(T d^2). No inverse is
ever formed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import lapack


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    def __init__(self, block: int, row: int):
        self.block = block
        self.row = row
        super().__init__(f"precision matrix not positive definite at block {block} (row {row})")


@dataclass(frozen=True)
class PrecisionSystem:
    diag_blocks: np.ndarray  # (T+1, d, d)
    off_blocks: np.ndarray  # (T, d, d); off_blocks[t] = Omega_{t, t+1}
    covector: np.ndarray  # ((T+1) d,)
    chol: np.ndarray | None = None  # lower band storage, (d+1, (T+1) d)

    def __post_init__(self) -> None:
        D = self.diag_blocks
        if D.ndim != 3 or D.shape[1] != D.shape[2]:
            raise ValueError("diag_blocks must have shape (T+1, d, d)")
        n_blocks, d = D.shape[0], D.shape[1]
        if self.off_blocks.shape != (n_blocks - 1, d, d):
            raise ValueError("off_blocks must have shape (T, d, d)")
        if self.covector.shape != (n_blocks * d,):
            raise ValueError("covector must have length (T+1) d")

    @property
    def d(self) -> int:
        return int(self.diag_blocks.shape[1])

    @property
    def n_blocks(self) -> int:
        return int(self.diag_blocks.shape[0])

    @property
    def n(self) -> int:
        return self.n_blocks * self.d

    def band(self) -> np.ndarray:
        """Lower band storage ab[r, i] = Omega[i + r, i], r = 0..d."""
        d, nb = self.d, self.n_blocks
        n = nb * d
        ab = np.zeros((d + 1, n))
        for r in range(d + 1):
            row = ab[r]
            for k in range(d):
                if k + r < d:
                    row[k::d] = self.diag_blocks[:, k + r, k]
                else:
                    # entry of Omega_{t+1,t} = Omega_{t,t+1}'
                    row[k:(nb - 1) * d:d] = self.off_blocks[:, k, k + r - d]
        return ab

    def to_dense(self) -> np.ndarray:
        d, nb = self.d, self.n_blocks
        out = np.zeros((nb * d, nb * d))
        for t in range(nb):
            out[t * d:(t + 1) * d, t * d:(t + 1) * d] = self.diag_blocks[t]
        for t in range(nb - 1):
            out[t * d:(t + 1) * d, (t + 1) * d:(t + 2) * d] = self.off_blocks[t]
            out[(t + 1) * d:(t + 2) * d, t * d:(t + 1) * d] = self.off_blocks[t].T
        return out

    def factor_blocks(self) -> tuple[np.ndarray, np.ndarray]:
        """Blocks (L_tt, L_{t+1,t}) of the lower block-bidiagonal factor."""
        if self.chol is None:
            raise ValueError("system has not been factorized")
        d, nb = self.d, self.n_blocks
        Ld = np.zeros((nb, d, d))
        Ls = np.zeros((nb - 1, d, d))
        L = self.chol
        for r in range(d + 1):
            for k in range(d):
                if k + r < d:
                    Ld[:, k + r, k] = L[r, k::d]
                else:
                    Ls[:, k + r - d, k] = L[r, k:(nb - 1) * d:d]
        return Ld, Ls


def build_precision(
    X: np.ndarray,
    beta: np.ndarray,
    sqrt_theta: np.ndarray,
    sigma2_t: np.ndarray,
    P0: np.ndarray,
    y: np.ndarray,
) -> PrecisionSystem:
    """Posterior precision and covector of the non-centered states given parameters."""
    X = np.asarray(X, dtype=float)
    T, d = X.shape
    sigma2_t = np.broadcast_to(np.asarray(sigma2_t, dtype=float), (T,))
    P0 = np.asarray(P0, dtype=float)
    if np.any(~(sigma2_t > 0)):
        raise ValueError("error variances must be positive")
    if np.any(~(P0 > 0)):
        raise ValueError("P0 entries must be positive")
    F = X * np.asarray(sqrt_theta, dtype=float)[None, :]
    w = 1.0 / sigma2_t
    diag = np.empty((T + 1, d, d))
    diag[1:] = np.einsum("ti,tj,t->tij", F, F, w)
    idx = np.arange(d)
    diag[1:T, idx, idx] += 2.0
    diag[T, idx, idx] += 1.0
    diag[0] = np.diag(1.0 / P0 + 1.0)
    off = np.broadcast_to(-np.eye(d), (T, d, d)).copy()
    ystar = np.asarray(y, dtype=float) - X @ np.asarray(beta, dtype=float)
    c = np.zeros((T + 1, d))
    c[1:] = F * (w * ystar)[:, None]
    return PrecisionSystem(diag, off, c.reshape(-1))


def band_cholesky(sys: PrecisionSystem) -> PrecisionSystem:
    ab = sys.band()
    L, info = lapack.dpbtrf(ab, lower=1)
    if info > 0:
        raise NotPositiveDefiniteError(block=(info - 1) // sys.d, row=info - 1)
    if info < 0:
        raise ValueError(f"dpbtrf: illegal argument {-info}")
    return replace(sys, chol=L)


def _tb_solve(L: np.ndarray, rhs: np.ndarray, trans: str) -> np.ndarray:
    x, info = lapack.dtbtrs(L, rhs.reshape(-1, 1), uplo="L", trans=trans)
    if info != 0:
        raise np.linalg.LinAlgError(f"dtbtrs failed with info={info}")
    return x[:, 0]


def awol_draw(sys: PrecisionSystem, eps: np.ndarray) -> np.ndarray:
    """Return Omega^{-1} c + L'^{-1} eps as a flat ((T+1) d,) vector.

    With eps ~ N(0, I) this is a draw from N(Omega^{-1} c, Omega^{-1}).
    """
    if sys.chol is None:
        raise ValueError("call band_cholesky first")
    eps = np.asarray(eps, dtype=float).reshape(-1)
    if eps.shape[0] != sys.n:
        raise ValueError(f"eps must have length {sys.n}")
    a = _tb_solve(sys.chol, sys.covector, "N")
    return _tb_solve(sys.chol, a + eps, "T")


def posterior_mean(sys: PrecisionSystem) -> np.ndarray:
    return awol_draw(sys, np.zeros(sys.n))
