"""Matrix-based Renyi alpha-order entropy and total correlation.

All quantities are computed from the eigenvalue spectrum of normalized
kernel Gram matrices over a sample batch, with no density estimation:

    H_alpha(A) = log2(sum_n lam_n(A)^alpha) / (1 - alpha)

Marginal Gram matrices use a Gaussian kernel on scalar samples and are
normalized to unit trace (K / N, since the kernel diagonal is 1).  Joint
entropy uses the trace-normalized Hadamard product of the marginals.
Total correlation is the sum of marginal entropies minus the joint
entropy; it is the training objective when built on a tape.

Everything is in bits (log base 2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tape as T
from .errors import ConfigError, DimensionError, NumericError, PsdError, SampleCountError, SymmetryError

_DEFAULT_ALPHA = 0.75
_DEFAULT_SIGMA = 0.1584


@dataclass(frozen=True)
class EntropyConfig:
    """Kernel and entropy parameters.

    alpha: Renyi order (positive, != 1).
    sigma: Gaussian kernel width; used as-is unless silverman is set.
    eig_floor: eigenvalues are clamped to this before the alpha power.
    silverman: per-batch width 1.06 * std * N^(-1/5) instead of sigma
        (the width is treated as a batch statistic, not differentiated).
    """

    alpha: float = _DEFAULT_ALPHA
    sigma: float = _DEFAULT_SIGMA
    eig_floor: float = 1e-12
    silverman: bool = False

    def __post_init__(self):
        if self.alpha <= 0.0 or self.alpha == 1.0:
            raise ConfigError(f"alpha must be positive and != 1, got {self.alpha}")
        if self.sigma <= 0.0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if self.eig_floor <= 0.0:
            raise ConfigError(f"eig_floor must be positive, got {self.eig_floor}")


@dataclass
class GramMatrix:
    """Trace-one kernel matrix over n samples."""

    a: np.ndarray
    n: int


def _as_samples(samples) -> np.ndarray:
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.ravel()
    if arr.ndim != 1:
        raise DimensionError(f"samples must be a vector, got shape {arr.shape}")
    if arr.size < 2:
        raise SampleCountError(f"need at least 2 samples, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise NumericError("samples contain non-finite values")
    return arr


def _kernel_width(samples: np.ndarray, cfg: EntropyConfig) -> float:
    if not cfg.silverman:
        return cfg.sigma
    std = float(samples.std(ddof=1))
    if std <= 0.0:
        return cfg.sigma
    return 1.06 * std * samples.size ** (-0.2)


def gram_matrix(samples, cfg: EntropyConfig) -> GramMatrix:
    """Normalized Gaussian Gram matrix A = K / N of a scalar sample vector."""
    s = _as_samples(samples)
    n = s.size
    sigma = _kernel_width(s, cfg)
    d = s[:, None] - s[None, :]
    k = np.exp(d * d / (-2.0 * sigma * sigma))
    return GramMatrix(k / n, n)


def _spectrum(g: GramMatrix) -> np.ndarray:
    a = g.a
    dev = np.abs(a - a.T).max()
    if dev > 1e-9:
        raise SymmetryError(f"Gram matrix asymmetric: max |A - A^T| = {dev:.3e}")
    lam = np.linalg.eigvalsh(a)
    if lam.min() < -1e-8:
        raise PsdError(f"Gram matrix has eigenvalue {lam.min():.3e} < -1e-8")
    return lam


def renyi_entropy(g: GramMatrix, cfg: EntropyConfig) -> float:
    """H_alpha of one normalized Gram matrix, in bits.

    Matches the tape-side spectral entropy bit for bit: negative
    round-off eigenvalues are zero-clipped before the alpha power.
    """
    lam = np.maximum(_spectrum(g), 0.0)
    total = float((lam ** cfg.alpha).sum())
    return float(np.log2(total) / (1.0 - cfg.alpha))


def joint_entropy(gs, cfg: EntropyConfig) -> float:
    """H_alpha of the trace-normalized Hadamard product of >= 2 Gram matrices."""
    gs = list(gs)
    if len(gs) < 2:
        raise DimensionError(f"joint entropy needs >= 2 variables, got {len(gs)}")
    n = gs[0].n
    prod = gs[0].a.copy()
    for g in gs[1:]:
        if g.n != n:
            raise DimensionError(f"sample-count mismatch: {g.n} vs {n}")
        prod = prod * g.a
    prod = prod / np.trace(prod)
    return renyi_entropy(GramMatrix(prod, n), cfg)


def total_correlation(gs, cfg: EntropyConfig) -> float:
    """Sum of marginal entropies minus joint entropy; 0 for a single variable."""
    gs = list(gs)
    if len(gs) < 1:
        raise DimensionError("total correlation needs at least one variable")
    if len(gs) == 1:
        return 0.0
    marginal = 0.0
    for g in gs:
        if g.n != gs[0].n:
            raise DimensionError(f"sample-count mismatch: {g.n} vs {gs[0].n}")
        marginal += renyi_entropy(g, cfg)
    return marginal - joint_entropy(gs, cfg)


def mutual_information(g1: GramMatrix, g2: GramMatrix, cfg: EntropyConfig) -> float:
    """H(g1) + H(g2) - H(g1, g2); identical code path to total_correlation."""
    return total_correlation([g1, g2], cfg)


def gram_var(s: T.Var, cfg: EntropyConfig) -> T.Var:
    """Tape version of gram_matrix for an N x 1 sample Var."""
    n, cols = s.shape
    if cols != 1:
        raise DimensionError(f"gram_var expects an N x 1 Var, got {s.shape}")
    if n < 2:
        raise SampleCountError(f"need at least 2 samples, got {n}")
    sigma = _kernel_width(s.value.ravel(), cfg)
    ones_row = s.tape.const(np.ones((1, n)))
    left = T.matmul(s, ones_row)
    diff = T.sub(left, T.transpose(left))
    k = T.exp_elem(T.scale(T.hadamard(diff, diff), -1.0 / (2.0 * sigma * sigma)))
    return T.scale(k, 1.0 / n)


def total_correlation_loss(outputs, cfg: EntropyConfig, tape: T.Tape = None) -> T.Var:
    """Differentiable total correlation of p sample vectors (N x 1 Vars).

    Forward value matches total_correlation on the detached samples; the
    backward pass reaches every output sample through the Gram kernels
    and the spectral entropy nodes.
    """
    outputs = list(outputs)
    if not outputs:
        raise DimensionError("loss needs at least one output variable")
    tp = outputs[0].tape
    if tape is not None and tape is not tp:
        raise DimensionError("outputs live on a different tape than given")
    for v in outputs[1:]:
        if v.tape is not tp:
            raise DimensionError("outputs live on different tapes")
        if v.shape != outputs[0].shape:
            raise DimensionError(f"output shape mismatch: {v.shape} vs {outputs[0].shape}")
    if len(outputs) == 1:
        return tp.const(np.zeros((1, 1)))
    grams = [gram_var(s, cfg) for s in outputs]
    marginal = T.spectral_entropy_node(grams[0], cfg.alpha, cfg.eig_floor)
    for g in grams[1:]:
        marginal = T.add(marginal, T.spectral_entropy_node(g, cfg.alpha, cfg.eig_floor))
    prod = grams[0]
    for g in grams[1:]:
        prod = T.hadamard(prod, g)
    normed = T.mul_scalar(prod, T.powf(T.trace(prod), -1.0))
    joint = T.spectral_entropy_node(normed, cfg.alpha, cfg.eig_floor)
    return T.sub(marginal, joint)
