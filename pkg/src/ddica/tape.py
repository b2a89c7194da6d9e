"""Reverse-mode automatic differentiation over dense float64 matrices.

Matrices are plain 2-D C-ordered numpy float64 arrays.  A Tape records an
eager computation graph: every operation computes its forward value
immediately and stores a closure mapping the output gradient to input
gradients.  Node ids are topologically ordered by construction, so the
backward pass is a single reverse scan that visits each node once.

The op set is deliberately small: just enough to push a total-correlation
loss through a fully connected network and an unrolled power-iteration
whitening layer.  No broadcasting beyond the dedicated column-bias op, no
higher-order derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, DimensionError, NumericError, PsdError, SymmetryError

_LN2 = math.log(2.0)


def _as_matrix(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got ndim={arr.ndim}")
    return arr


@dataclass
class Node:
    op: str
    inputs: tuple
    value: np.ndarray
    vjp: Optional[Callable]
    is_leaf: bool
    needs_grad: bool


@dataclass(frozen=True, eq=False)
class Var:
    """Handle to one node on one tape."""

    tape: "Tape"
    nid: int

    @property
    def value(self) -> np.ndarray:
        return self.tape.nodes[self.nid].value

    @property
    def shape(self) -> tuple:
        return self.tape.nodes[self.nid].value.shape

    def _needs(self) -> bool:
        return self.tape.nodes[self.nid].needs_grad


class Tape:
    """Ordered record of one forward computation."""

    def __init__(self):
        self.nodes: list[Node] = []

    def _push(self, op, value, inputs=(), vjp=None, is_leaf=False, needs_grad=True) -> Var:
        self.nodes.append(Node(op, tuple(inputs), value, vjp, is_leaf, needs_grad))
        return Var(self, len(self.nodes) - 1)

    def leaf(self, values) -> Var:
        """Gradient-tracked input (parameters, probe inputs)."""
        arr = _as_matrix(values)
        if not np.all(np.isfinite(arr)):
            raise NumericError("leaf contains non-finite entries")
        return self._push("leaf", arr, is_leaf=True, needs_grad=True)

    def const(self, values) -> Var:
        """Untracked input; backward never flows into it."""
        arr = _as_matrix(values)
        if not np.all(np.isfinite(arr)):
            raise NumericError("const contains non-finite entries")
        return self._push("const", arr, needs_grad=False)

    def backward(self, loss: Var) -> dict:
        """Gradients of a scalar loss w.r.t. every leaf, keyed by node id.

        Leaves that do not contribute to the loss get zero gradients.
        """
        if loss.tape is not self:
            raise DimensionError("loss lives on a different tape")
        if loss.shape != (1, 1):
            raise DimensionError(f"loss must be 1x1, got {loss.shape}")
        grads: list = [None] * len(self.nodes)
        grads[loss.nid] = np.ones((1, 1))
        for nid in range(loss.nid, -1, -1):
            g = grads[nid]
            node = self.nodes[nid]
            if g is None or node.vjp is None:
                continue
            for inp, gin in zip(node.inputs, node.vjp(g)):
                if gin is None:
                    continue
                if grads[inp] is None:
                    grads[inp] = gin
                else:
                    grads[inp] = grads[inp] + gin
        out = {}
        for nid, node in enumerate(self.nodes):
            if node.is_leaf:
                out[nid] = grads[nid] if grads[nid] is not None else np.zeros_like(node.value)
        return out


def backward(tape: Tape, loss: Var) -> dict:
    return tape.backward(loss)


def _join(*vs: Var) -> Tape:
    tape = vs[0].tape
    for v in vs[1:]:
        if v.tape is not tape:
            raise DimensionError("operands live on different tapes")
    return tape


def _same_shape(a: Var, b: Var, op: str):
    if a.shape != b.shape:
        raise DimensionError(f"{op} shape mismatch: {a.shape} vs {b.shape}")


def matmul(a: Var, b: Var) -> Var:
    tape = _join(a, b)
    av, bv = a.value, b.value
    if av.shape[1] != bv.shape[0]:
        raise DimensionError(f"matmul shape mismatch: {av.shape} x {bv.shape}")
    na, nb = a._needs(), b._needs()

    def vjp(g):
        return (g @ bv.T if na else None, av.T @ g if nb else None)

    return tape._push("matmul", av @ bv, (a.nid, b.nid), vjp, needs_grad=na or nb)


def add(a: Var, b: Var) -> Var:
    tape = _join(a, b)
    _same_shape(a, b, "add")
    na, nb = a._needs(), b._needs()

    def vjp(g):
        return (g if na else None, g if nb else None)

    return tape._push("add", a.value + b.value, (a.nid, b.nid), vjp, needs_grad=na or nb)


def sub(a: Var, b: Var) -> Var:
    tape = _join(a, b)
    _same_shape(a, b, "sub")
    na, nb = a._needs(), b._needs()

    def vjp(g):
        return (g if na else None, -g if nb else None)

    return tape._push("sub", a.value - b.value, (a.nid, b.nid), vjp, needs_grad=na or nb)


def hadamard(a: Var, b: Var) -> Var:
    tape = _join(a, b)
    _same_shape(a, b, "hadamard")
    av, bv = a.value, b.value
    na, nb = a._needs(), b._needs()

    def vjp(g):
        return (g * bv if na else None, g * av if nb else None)

    return tape._push("hadamard", av * bv, (a.nid, b.nid), vjp, needs_grad=na or nb)


def scale(a: Var, c: float) -> Var:
    c = float(c)
    if not math.isfinite(c):
        raise NumericError("scale factor must be finite")
    na = a._needs()

    def vjp(g):
        return (c * g if na else None,)

    return a.tape._push("scale", c * a.value, (a.nid,), vjp, needs_grad=na)


def add_col(a: Var, b: Var) -> Var:
    """a (p x N) plus a column b (p x 1) added to every column."""
    tape = _join(a, b)
    if b.shape != (a.shape[0], 1):
        raise DimensionError(f"add_col needs {a.shape[0]}x1 bias, got {b.shape}")
    na, nb = a._needs(), b._needs()

    def vjp(g):
        return (g if na else None, g.sum(axis=1, keepdims=True) if nb else None)

    return tape._push("add_col", a.value + b.value, (a.nid, b.nid), vjp, needs_grad=na or nb)


def tanh_act(a: Var) -> Var:
    t = np.tanh(a.value)
    na = a._needs()

    def vjp(g):
        return (g * (1.0 - t * t) if na else None,)

    return a.tape._push("tanh", t, (a.nid,), vjp, needs_grad=na)


def exp_elem(a: Var) -> Var:
    e = np.exp(a.value)
    na = a._needs()

    def vjp(g):
        return (g * e if na else None,)

    return a.tape._push("exp", e, (a.nid,), vjp, needs_grad=na)


def powf(a: Var, q: float) -> Var:
    """Elementwise power with float exponent; entries must be positive."""
    q = float(q)
    av = a.value
    out = av ** q
    na = a._needs()

    def vjp(g):
        return (g * q * av ** (q - 1.0) if na else None,)

    return a.tape._push("powf", out, (a.nid,), vjp, needs_grad=na)


def clamp_min(a: Var, c: float) -> Var:
    """max(a, c) elementwise; gradient is zero where the clamp is active."""
    c = float(c)
    av = a.value
    mask = av > c
    na = a._needs()

    def vjp(g):
        return (g * mask if na else None,)

    return a.tape._push("clamp_min", np.maximum(av, c), (a.nid,), vjp, needs_grad=na)


def transpose(a: Var) -> Var:
    na = a._needs()

    def vjp(g):
        return (g.T if na else None,)

    return a.tape._push("transpose", a.value.T, (a.nid,), vjp, needs_grad=na)


def row(a: Var, i: int) -> Var:
    """Extract row i as a 1 x N Var."""
    av = a.value
    if not 0 <= i < av.shape[0]:
        raise DimensionError(f"row index {i} out of range for {av.shape}")
    na = a._needs()

    def vjp(g):
        full = np.zeros_like(av)
        full[i, :] = g[0, :]
        return (full if na else None,)

    return a.tape._push("row", av[i : i + 1, :], (a.nid,), vjp, needs_grad=na)


def sum_all(a: Var) -> Var:
    av = a.value
    na = a._needs()

    def vjp(g):
        return (g[0, 0] * np.ones_like(av) if na else None,)

    return a.tape._push("sum", np.array([[av.sum()]]), (a.nid,), vjp, needs_grad=na)


def sum_sq(a: Var) -> Var:
    av = a.value
    na = a._needs()

    def vjp(g):
        return (2.0 * g[0, 0] * av if na else None,)

    return a.tape._push("sumsq", np.array([[(av * av).sum()]]), (a.nid,), vjp, needs_grad=na)


def trace(a: Var) -> Var:
    av = a.value
    if av.shape[0] != av.shape[1]:
        raise DimensionError(f"trace needs a square matrix, got {av.shape}")
    na = a._needs()

    def vjp(g):
        return (g[0, 0] * np.eye(av.shape[0]) if na else None,)

    return a.tape._push("trace", np.array([[np.trace(av)]]), (a.nid,), vjp, needs_grad=na)


def mul_scalar(a: Var, s: Var) -> Var:
    """Multiply a matrix Var by a 1x1 Var."""
    tape = _join(a, s)
    if s.shape != (1, 1):
        raise DimensionError(f"mul_scalar needs a 1x1 scalar, got {s.shape}")
    av, sv = a.value, s.value[0, 0]
    na, ns = a._needs(), s._needs()

    def vjp(g):
        ga = g * sv if na else None
        gs = np.array([[float((g * av).sum())]]) if ns else None
        return (ga, gs)

    return tape._push("mul_scalar", av * sv, (a.nid, s.nid), vjp, needs_grad=na or ns)


def center_cols(a: Var) -> Var:
    """Subtract the mean over columns from every row."""
    av = a.value
    na = a._needs()

    def vjp(g):
        return (g - g.mean(axis=1, keepdims=True) if na else None,)

    return a.tape._push("center", av - av.mean(axis=1, keepdims=True), (a.nid,), vjp, needs_grad=na)


def spectral_entropy_node(a: Var, alpha: float, floor: float = 1e-12) -> Var:
    """Renyi alpha-order entropy of a normalized Gram matrix, in bits.

    Forward: H = log2(sum_n lam_n^alpha) / (1 - alpha) with eigenvalues
    clamped to >= floor.  Backward: the closed-form derivative of
    tr(A^alpha), which stays finite under repeated eigenvalues:

        dH/dA = alpha / ((1 - alpha) ln2 sum lam^alpha)
                * U diag(lam^(alpha-1)) U^T
    """
    alpha = float(alpha)
    floor = float(floor)
    if alpha <= 0.0 or alpha == 1.0:
        raise ConfigError(f"alpha must be positive and != 1, got {alpha}")
    if floor <= 0.0:
        raise ConfigError(f"eigenvalue floor must be positive, got {floor}")
    av = a.value
    if av.shape[0] != av.shape[1]:
        raise DimensionError(f"entropy input must be square, got {av.shape}")
    dev = np.abs(av - av.T).max()
    if dev > 1e-9:
        raise SymmetryError(f"entropy input asymmetric: max |A - A^T| = {dev:.3e}")
    lam, vecs = np.linalg.eigh(av)
    if lam.min() < -1e-8:
        raise PsdError(f"entropy input has eigenvalue {lam.min():.3e} < -1e-8")
    # forward zero-clips so rank-deficient inputs give exact entropies;
    # backward floors so lam^(alpha-1) stays bounded for alpha < 1
    total = float((np.maximum(lam, 0.0) ** alpha).sum())
    h = math.log(total) / ((1.0 - alpha) * _LN2)
    coef = alpha / ((1.0 - alpha) * _LN2 * total)
    lam_b = np.maximum(lam, floor)
    na = a._needs()

    def vjp(g):
        grad = (vecs * lam_b ** (alpha - 1.0)) @ vecs.T
        return (g[0, 0] * coef * grad if na else None,)

    return a.tape._push("spectral_entropy", np.array([[h]]), (a.nid,), vjp, needs_grad=na)
