"""Scoring estimated components against ground truth.

ICA recovers sources only up to permutation and sign, so every score
first matches estimated rows to ground-truth rows by maximizing the sum
of absolute Pearson correlations (exhaustive for up to 8 ground-truth
components, greedy beyond).  PMSE here is the mean squared difference of
min-max normalized signals after orientation matching; this definition
is repository-specific.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateComponentError, DimensionError, NumericError

_EXHAUSTIVE_LIMIT = 8


@dataclass
class MatchResult:
    permutation: list
    signs: list
    correlations: list
    mean_abs_corr: float


def _corr_matrix(est: np.ndarray, gt: np.ndarray) -> np.ndarray:
    ec = est - est.mean(axis=1, keepdims=True)
    gc = gt - gt.mean(axis=1, keepdims=True)
    en = np.sqrt((ec * ec).sum(axis=1))
    gn = np.sqrt((gc * gc).sum(axis=1))
    if (en == 0.0).any():
        raise DegenerateComponentError("estimated component is constant")
    if (gn == 0.0).any():
        raise DegenerateComponentError("ground-truth component is constant")
    return (gc @ ec.T) / np.outer(gn, en)


def match_components(est: np.ndarray, gt: np.ndarray) -> MatchResult:
    """Assign each ground-truth row its best estimated row.

    permutation[i] is the estimated-row index matched to ground-truth row
    i; signs orient each match so the correlation is non-negative.  Ties
    break toward the lowest index.
    """
    est = np.asarray(est, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if est.ndim != 2 or gt.ndim != 2 or est.shape[1] != gt.shape[1]:
        raise DimensionError(f"incompatible shapes: est {est.shape}, gt {gt.shape}")
    q, p = gt.shape[0], est.shape[0]
    if p < q:
        raise DimensionError(f"need at least {q} estimated components, got {p}")
    if est.shape[1] < 2:
        raise DimensionError("components need at least 2 entries")
    r = _corr_matrix(est, gt)
    if q <= _EXHAUSTIVE_LIMIT:
        perm = _match_exhaustive(np.abs(r), q, p)
    else:
        perm = _match_greedy(np.abs(r), q, p)
    signs = [1 if r[i, perm[i]] >= 0.0 else -1 for i in range(q)]
    corrs = [float(abs(r[i, perm[i]])) for i in range(q)]
    return MatchResult(
        permutation=list(perm),
        signs=signs,
        correlations=corrs,
        mean_abs_corr=float(np.mean(corrs)),
    )


def _match_exhaustive(absr: np.ndarray, q: int, p: int):
    best = None
    best_score = -1.0
    for perm in itertools.permutations(range(p), q):
        score = sum(absr[i, perm[i]] for i in range(q))
        if score > best_score + 1e-15:
            best = perm
            best_score = score
    return best


def _match_greedy(absr: np.ndarray, q: int, p: int):
    perm = [-1] * q
    used_rows = set()
    used_cols = set()
    for _ in range(q):
        best = (-1.0, None, None)
        for i in range(q):
            if i in used_rows:
                continue
            for j in range(p):
                if j in used_cols:
                    continue
                if absr[i, j] > best[0] + 1e-15:
                    best = (absr[i, j], i, j)
        _, i, j = best
        perm[i] = j
        used_rows.add(i)
        used_cols.add(j)
    return perm


def _unit_interval(v: np.ndarray) -> np.ndarray:
    span = v.max() - v.min()
    if span == 0.0:
        return np.zeros_like(v)
    return (v - v.min()) / span


def pmse(est_component, gt_component) -> float:
    """Peak mean squared error between min-max normalized signals.

    Both signals are mapped to [0, 1]; the orientation (signal or its
    mirror 1 - signal) with the lower squared error is scored.
    """
    est = np.asarray(est_component, dtype=np.float64).ravel()
    gt = np.asarray(gt_component, dtype=np.float64).ravel()
    if est.size != gt.size:
        raise DimensionError(f"length mismatch: {est.size} vs {gt.size}")
    if gt.max() == gt.min():
        raise DegenerateComponentError("ground-truth component is constant")
    e01 = _unit_interval(est)
    g01 = _unit_interval(gt)
    direct = float(np.mean((e01 - g01) ** 2))
    flipped = float(np.mean((1.0 - e01 - g01) ** 2))
    return min(direct, flipped)


def amari_index(w_est: np.ndarray, a_true: np.ndarray) -> float:
    """Amari index of P = W A, normalized to [0, 1]; 0 iff P is a scaled
    permutation."""
    w_est = np.asarray(w_est, dtype=np.float64)
    a_true = np.asarray(a_true, dtype=np.float64)
    if w_est.shape != a_true.shape or w_est.ndim != 2 or w_est.shape[0] != w_est.shape[1]:
        raise DimensionError(f"need equal square matrices, got {w_est.shape} and {a_true.shape}")
    n = w_est.shape[0]
    if n < 2:
        raise DimensionError("Amari index needs dimension >= 2")
    p = np.abs(w_est @ a_true)
    row_max = p.max(axis=1)
    col_max = p.max(axis=0)
    if (row_max == 0.0).any() or (col_max == 0.0).any():
        raise NumericError("product matrix has an all-zero row or column")
    rows = (p / row_max[:, None]).sum(axis=1) - 1.0
    cols = (p / col_max[None, :]).sum(axis=0) - 1.0
    return float((rows.sum() + cols.sum()) / (2.0 * n * (n - 1)))


def score_report(est: np.ndarray, gt: np.ndarray, w_est=None, a_true=None) -> dict:
    """Full evaluation document: matching, per-component PMSE, optional Amari."""
    match = match_components(est, gt)
    pmses = [
        pmse(est[match.permutation[i]], gt[i]) for i in range(gt.shape[0])
    ]
    amari = None
    if w_est is not None and a_true is not None:
        w_est = np.asarray(w_est, dtype=np.float64)
        a_true = np.asarray(a_true, dtype=np.float64)
        square = (
            w_est.ndim == 2 and w_est.shape == a_true.shape
            and w_est.shape[0] == w_est.shape[1] and w_est.shape[0] >= 2
        )
        if square:
            amari = amari_index(w_est, a_true)
    return {
        "mean_abs_corr": match.mean_abs_corr,
        "per_component": match.correlations,
        "permutation": match.permutation,
        "pmse": pmses,
        "amari": amari,
    }


def write_report(report: dict, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
