"""FastICA baseline: symmetric fixed-point iteration with logcosh contrast.

Whitening uses the exact Jacobi eigensolver with PCA dimension reduction
to n_components.  Non-convergence is reported through a flag rather than
an exception so benchmark sweeps always get a result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, NumericError, RankError
from .linalg import symmetric_eigen
from .rng import make_rng


@dataclass(frozen=True)
class FastIcaConfig:
    n_components: int
    max_iters: int = 500
    tol: float = 1e-6
    nonlinearity: str = "logcosh"
    seed: int = 0

    def __post_init__(self):
        if self.n_components < 1:
            raise ConfigError(f"n_components must be >= 1, got {self.n_components}")
        if self.tol <= 0.0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.nonlinearity != "logcosh":
            raise ConfigError(f"unsupported nonlinearity {self.nonlinearity!r}")


@dataclass
class FastIcaResult:
    sources: np.ndarray
    unmixing: np.ndarray
    converged: bool
    n_iter: int


def _sym_decorrelate(w: np.ndarray) -> np.ndarray:
    """W <- (W W^T)^(-1/2) W, making the rows exactly orthonormal."""
    eig = symmetric_eigen(w @ w.T)
    inv = 1.0 / np.sqrt(np.maximum(eig.eigenvalues, 1e-18))
    return (eig.eigenvectors * inv) @ eig.eigenvectors.T @ w


def fastica(x: np.ndarray, cfg: FastIcaConfig) -> FastIcaResult:
    """Estimate cfg.n_components unit-variance sources from mixed rows of x."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {x.shape}")
    d, n = x.shape
    if n <= d:
        raise DimensionError(f"need more samples than channels: got {d} x {n}")
    if not np.all(np.isfinite(x)):
        raise NumericError("input contains non-finite values")
    p = cfg.n_components
    if p > d:
        raise ConfigError(f"n_components {p} exceeds input dim {d}")

    xc = x - x.mean(axis=1, keepdims=True)
    cov = xc @ xc.T / n
    eig = symmetric_eigen(cov)
    lam = eig.eigenvalues[:p]
    if lam[-1] <= 1e-12 * max(eig.eigenvalues[0], 1.0):
        raise RankError(f"input covariance rank below {p}")
    k = (eig.eigenvectors[:, :p] / np.sqrt(lam)).T
    xw = k @ xc

    rng = make_rng(cfg.seed)
    w = _sym_decorrelate(rng.standard_normal((p, p)))
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        wx = w @ xw
        g = np.tanh(wx)
        g_prime = 1.0 - g * g
        w_new = g @ xw.T / n - g_prime.mean(axis=1, keepdims=True) * w
        w_new = _sym_decorrelate(w_new)
        drift = np.abs(np.abs(np.diag(w_new @ w.T)) - 1.0).max()
        w = w_new
        if drift < cfg.tol:
            converged = True
            break
    return FastIcaResult(sources=w @ xw, unmixing=w @ k, converged=converged, n_iter=it)
