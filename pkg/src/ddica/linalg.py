"""Dense symmetric eigensolvers: cyclic Jacobi and power iteration with deflation.

The Jacobi routine is the full-accuracy reference path used by tests,
baseline whitening, and input preprocessing.  Power iteration with
deflation is the production routine mirrored inside the differentiable
whitening layer; the two must agree on well-separated spectra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ConvergenceError, PsdError, SymmetryError
from .rng import make_rng


@dataclass
class EigenDecomposition:
    """Eigenvalues sorted descending; eigenvectors as unit-norm columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _check_symmetric(a: np.ndarray, tol: float = 1e-9):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise SymmetryError(f"expected a square matrix, got shape {a.shape}")
    dev = np.abs(a - a.T).max() if a.size else 0.0
    scale = max(np.abs(a).max(), 1.0) if a.size else 1.0
    if dev > tol * scale:
        raise SymmetryError(f"matrix asymmetric: max |A - A^T| = {dev:.3e}")
    return a


def symmetric_eigen(a: np.ndarray, max_sweeps: int = 100) -> EigenDecomposition:
    """Full spectrum of a symmetric matrix via cyclic Jacobi rotations.

    Sweeps rotate away every off-diagonal entry in turn; converged when the
    largest off-diagonal magnitude falls below 1e-12 * max|A|.  Raises
    ConvergenceError with the residual if max_sweeps is exhausted.
    """
    a = _check_symmetric(a)
    n = a.shape[0]
    d = a.copy()
    v = np.eye(n)
    anorm = np.abs(a).max()
    if n == 1 or anorm == 0.0:
        return EigenDecomposition(np.diag(d).copy(), v)
    tol = 1e-12 * anorm

    def offdiag_max(m):
        off = np.abs(m - np.diag(np.diag(m)))
        return off.max()

    converged = False
    for _ in range(max_sweeps):
        if offdiag_max(d) <= tol:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = d[p, q]
                if abs(apq) <= tol:
                    continue
                theta = (d[q, q] - d[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # two-sided rotation in the (p, q) plane
                dp = d[:, p].copy()
                dq = d[:, q].copy()
                d[:, p] = c * dp - s * dq
                d[:, q] = s * dp + c * dq
                dp = d[p, :].copy()
                dq = d[q, :].copy()
                d[p, :] = c * dp - s * dq
                d[q, :] = s * dp + c * dq
                d[p, q] = 0.0
                d[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        converged = offdiag_max(d) <= tol
    if not converged:
        raise ConvergenceError(
            f"Jacobi did not converge in {max_sweeps} sweeps; residual {offdiag_max(d):.3e}"
        )
    vals = np.diag(d).copy()
    order = np.argsort(-vals, kind="stable")
    return EigenDecomposition(vals[order], v[:, order])


def power_iteration_deflate(c: np.ndarray, iters_per_pair: int = 100, seed: int = 0) -> EigenDecomposition:
    """Extract all eigenpairs of a symmetric PSD matrix, largest first.

    Each pair runs a fixed number of updates u <- Cu / ||Cu|| with
    lam = ||Cu||, then the found component lam u u^T is deflated away.
    Start vectors come from the seeded repository generator.  A vanished
    iterate (zero or fully deflated matrix) yields lam = 0 and a basis
    vector completed orthonormally against the pairs already found.
    """
    c = _check_symmetric(c)
    if iters_per_pair < 1:
        raise ConfigError(f"iters_per_pair must be >= 1, got {iters_per_pair}")
    n = c.shape[0]
    rng = make_rng(seed)
    work = c.copy()
    vals = np.empty(n)
    vecs = np.empty((n, n))
    for j in range(n):
        u = rng.standard_normal(n)
        u /= np.linalg.norm(u)
        lam = 0.0
        dead = False
        for _ in range(iters_per_pair):
            w = work @ u
            nw = np.linalg.norm(w)
            if nw <= 1e-30:
                dead = True
                break
            lam = nw
            u = w / nw
        if dead:
            lam = 0.0
            u = _complete_basis(vecs[:, :j])
        vals[j] = lam
        vecs[:, j] = u
        work = work - lam * np.outer(u, u)
    order = np.argsort(-vals, kind="stable")
    return EigenDecomposition(vals[order], vecs[:, order])


def _complete_basis(found: np.ndarray) -> np.ndarray:
    """Deterministic unit vector orthogonal to the given column set."""
    n = found.shape[0]
    best = None
    best_norm = -1.0
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        r = e - found @ (found.T @ e)
        rn = np.linalg.norm(r)
        if rn > best_norm + 1e-12:
            best = r
            best_norm = rn
    return best / best_norm


def inverse_sqrt_from_eigen(e: EigenDecomposition, floor: float = 1e-8) -> np.ndarray:
    """C^(-1/2) = sum_j max(lam_j, floor)^(-1/2) u_j u_j^T."""
    if floor <= 0.0:
        raise ConfigError(f"floor must be positive, got {floor}")
    lam = np.asarray(e.eigenvalues, dtype=np.float64)
    if lam.size and lam.min() < -1e-8:
        raise PsdError(f"eigenvalue {lam.min():.3e} below -1e-8")
    inv = 1.0 / np.sqrt(np.maximum(lam, floor))
    u = e.eigenvectors
    return (u * inv) @ u.T
