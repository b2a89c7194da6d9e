"""Differentiable whitening of predicted sources.

whiten_forward builds the whole procedure as tape operations: batch
centering, covariance, a fixed number of power-iteration updates per
eigenpair with deflation, and the inverse-square-root whitening matrix

    W = sum_j max(lam_j, floor)^(-1/2) u_j u_j^T.

Because the iteration schedule is unrolled on the tape, the backward pass
differentiates exactly the computation that produced the output,
including the deflation terms.  whiten_reference is the non-differentiable
oracle using the exact Jacobi eigensolver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tape as T
from .errors import ConfigError, DimensionError
from .linalg import inverse_sqrt_from_eigen, symmetric_eigen
from .rng import make_rng

# keeps 1/||Cu|| finite when a batch collapses to rank zero
_NORM_FLOOR = 1e-60


@dataclass(frozen=True)
class WhiteningConfig:
    iterations_per_pair: int = 100
    eig_floor: float = 1e-8
    center: bool = True

    def __post_init__(self):
        if self.iterations_per_pair < 1:
            raise ConfigError(f"iterations_per_pair must be >= 1, got {self.iterations_per_pair}")
        if self.eig_floor <= 0.0:
            raise ConfigError(f"eig_floor must be positive, got {self.eig_floor}")


def whiten_forward(z: T.Var, cfg: WhiteningConfig, tape: T.Tape = None, seed: int = 0,
                   diagnostics: dict = None) -> T.Var:
    """Whiten a p x N Var on its tape; output covariance is I within tolerance.

    seed fixes the power-iteration start vectors.  When an extracted
    eigenvalue falls below cfg.eig_floor it is floored (no error) and
    diagnostics["floored_eigenvalues"] is incremented when a dict is given.
    """
    tp = z.tape
    if tape is not None and tape is not tp:
        raise DimensionError("z lives on a different tape than given")
    p, n = z.shape
    if n <= p:
        raise DimensionError(f"whitening needs more samples than rows: got {p} x {n}")
    zc = T.center_cols(z) if cfg.center else z
    cov = T.scale(T.matmul(zc, T.transpose(zc)), 1.0 / n)

    rng = make_rng(seed)
    pairs = []
    work = cov
    for _ in range(p):
        u0 = rng.standard_normal((p, 1))
        u0 /= np.linalg.norm(u0)
        u = tp.const(u0)
        n2c = None
        for _ in range(cfg.iterations_per_pair):
            w = T.matmul(work, u)
            n2c = T.clamp_min(T.sum_sq(w), _NORM_FLOOR)
            u = T.mul_scalar(w, T.powf(n2c, -0.5))
        lam = T.powf(n2c, 0.5)
        outer = T.matmul(u, T.transpose(u))
        work = T.sub(work, T.mul_scalar(outer, lam))
        pairs.append((lam, outer))

    if diagnostics is not None:
        floored = sum(1 for lam, _ in pairs if lam.value[0, 0] < cfg.eig_floor)
        diagnostics["floored_eigenvalues"] = diagnostics.get("floored_eigenvalues", 0) + floored

    white = None
    for lam, outer in pairs:
        coef = T.powf(T.clamp_min(lam, cfg.eig_floor), -0.5)
        term = T.mul_scalar(outer, coef)
        white = term if white is None else T.add(white, term)
    return T.matmul(white, zc)


def whiten_reference(z: np.ndarray, cfg: WhiteningConfig) -> np.ndarray:
    """Exact-eigendecomposition whitening oracle (no tape, Jacobi solver)."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {z.shape}")
    p, n = z.shape
    if n <= p:
        raise DimensionError(f"whitening needs more samples than rows: got {p} x {n}")
    zc = z - z.mean(axis=1, keepdims=True) if cfg.center else z
    cov = zc @ zc.T / n
    eig = symmetric_eigen(cov)
    white = inverse_sqrt_from_eigen(eig, cfg.eig_floor)
    return white @ zc
