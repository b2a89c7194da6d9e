"""Unmixing network, Adam optimizer, and the total-correlation training loop.

The unmixing function is a stack of fully connected layers (tanh on the
hidden layers, linear output) followed by the differentiable whitening
layer, so the predicted sources always leave with unit covariance.  The
default architecture has nine affine layers.  Training minimizes the
total correlation of the whitened outputs over shuffled mini-batches with
bias-corrected Adam; an optional linear-stack decoder adds a reconstruction
term when reconstruction_weight is positive.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import tape as T
from .entropy import EntropyConfig, total_correlation_loss
from .errors import ConfigError, DimensionError, NumericError
from .rng import make_rng, split_seed
from .whitening import WhiteningConfig, whiten_forward

_DEFAULT_HIDDEN = (64, 64, 64, 64, 64, 64, 64, 64)  # nine affine layers total


@dataclass(frozen=True)
class NetworkConfig:
    input_dim: int
    output_dim: int
    hidden_widths: tuple = _DEFAULT_HIDDEN
    activation: str = "tanh"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.input_dim < 1 or self.output_dim < 1:
            raise ConfigError(f"bad dims: input {self.input_dim}, output {self.output_dim}")
        if self.output_dim > self.input_dim:
            raise ConfigError(
                f"output_dim {self.output_dim} exceeds input_dim {self.input_dim}"
            )
        if any(w < 1 for w in self.hidden_widths):
            raise ConfigError(f"zero-width hidden layer in {self.hidden_widths}")
        if self.activation != "tanh":
            raise ConfigError(f"unsupported activation {self.activation!r}")

    def layer_dims(self):
        dims = [self.input_dim, *self.hidden_widths, self.output_dim]
        return list(zip(dims[:-1], dims[1:]))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 256
    epochs: int = 1
    seed: int = 0
    whitening: WhiteningConfig = field(default_factory=WhiteningConfig)
    entropy: EntropyConfig = field(default_factory=EntropyConfig)
    reconstruction_weight: float = 0.0

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 2:
            raise ConfigError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.reconstruction_weight < 0.0:
            raise ConfigError(f"reconstruction_weight must be >= 0, got {self.reconstruction_weight}")


@dataclass
class ModelState:
    config: NetworkConfig
    weights: list
    biases: list
    m_w: list
    v_w: list
    m_b: list
    v_b: list
    step: int = 0
    decoder_weights: list = field(default_factory=list)
    decoder_biases: list = field(default_factory=list)
    dec_m_w: list = field(default_factory=list)
    dec_v_w: list = field(default_factory=list)
    dec_m_b: list = field(default_factory=list)
    dec_v_b: list = field(default_factory=list)

    @property
    def has_decoder(self) -> bool:
        return bool(self.decoder_weights)


def _glorot(rng, fan_out, fan_in):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def init_model(cfg: NetworkConfig, decoder: bool = False) -> ModelState:
    """Seeded Glorot-uniform weights, zero biases, zeroed Adam accumulators."""
    rng = make_rng(cfg.seed)
    weights, biases = [], []
    for fan_in, fan_out in cfg.layer_dims():
        weights.append(_glorot(rng, fan_out, fan_in))
        biases.append(np.zeros((fan_out, 1)))
    state = ModelState(
        config=cfg,
        weights=weights,
        biases=biases,
        m_w=[np.zeros_like(w) for w in weights],
        v_w=[np.zeros_like(w) for w in weights],
        m_b=[np.zeros_like(b) for b in biases],
        v_b=[np.zeros_like(b) for b in biases],
    )
    if decoder:
        dims = [cfg.output_dim, *reversed(cfg.hidden_widths), cfg.input_dim]
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            state.decoder_weights.append(_glorot(rng, fan_out, fan_in))
            state.decoder_biases.append(np.zeros((fan_out, 1)))
        state.dec_m_w = [np.zeros_like(w) for w in state.decoder_weights]
        state.dec_v_w = [np.zeros_like(w) for w in state.decoder_weights]
        state.dec_m_b = [np.zeros_like(b) for b in state.decoder_biases]
        state.dec_v_b = [np.zeros_like(b) for b in state.decoder_biases]
    return state


def _stack_forward(tape, weights, biases, x_var):
    h = x_var
    last = len(weights) - 1
    handles = []
    for i, (w, b) in enumerate(zip(weights, biases)):
        wv = tape.leaf(w)
        bv = tape.leaf(b)
        handles.append((wv, bv))
        h = T.add_col(T.matmul(wv, h), bv)
        if i != last:
            h = T.tanh_act(h)
    return h, handles


def forward(m: ModelState, x: np.ndarray, tape: T.Tape, wcfg: WhiteningConfig = None,
            whiten_seed: int = 0, diagnostics: dict = None, return_handles: bool = False):
    """Run the unmixing stack and whitening; returns the p x N source Var."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != m.config.input_dim:
        raise DimensionError(
            f"input must be {m.config.input_dim} x N, got {x.shape}"
        )
    if wcfg is None:
        wcfg = WhiteningConfig()
    xv = tape.const(x)
    z, handles = _stack_forward(tape, m.weights, m.biases, xv)
    out = whiten_forward(z, wcfg, tape, seed=whiten_seed, diagnostics=diagnostics)
    if return_handles:
        return out, handles, xv
    return out


def _build_loss(m, xb, tcfg, tape, whiten_seed, diagnostics=None):
    out, handles, xv = forward(
        m, xb, tape, tcfg.whitening, whiten_seed=whiten_seed,
        diagnostics=diagnostics, return_handles=True,
    )
    p = m.config.output_dim
    cols = [T.transpose(T.row(out, i)) for i in range(p)]
    loss = total_correlation_loss(cols, tcfg.entropy, tape)
    dec_handles = []
    if tcfg.reconstruction_weight > 0.0:
        if not m.has_decoder:
            raise ConfigError("reconstruction_weight > 0 but the model has no decoder")
        recon, dec_handles = _stack_forward(tape, m.decoder_weights, m.decoder_biases, out)
        err = T.sub(recon, xv)
        mse = T.scale(T.sum_sq(err), 1.0 / err.value.size)
        loss = T.add(loss, T.scale(mse, tcfg.reconstruction_weight))
    return loss, out, handles, dec_handles


def _entry_grads(grads, handles):
    gw = [grads[wv.nid] for wv, _ in handles]
    gb = [grads[bv.nid] for _, bv in handles]
    return gw, gb


def adam_step(m: ModelState, grads: dict, tcfg: TrainConfig) -> ModelState:
    """One bias-corrected Adam update in place; increments the step counter.

    grads holds lists under "w" and "b" (and "dec_w"/"dec_b" when a decoder
    is trained) whose shapes mirror the parameters.
    """
    groups = [("w", m.weights, m.m_w, m.v_w), ("b", m.biases, m.m_b, m.v_b)]
    if m.has_decoder and "dec_w" in grads:
        groups += [
            ("dec_w", m.decoder_weights, m.dec_m_w, m.dec_v_w),
            ("dec_b", m.decoder_biases, m.dec_m_b, m.dec_v_b),
        ]
    for key, params, _, _ in groups:
        gs = grads.get(key, [])
        if len(gs) != len(params):
            raise DimensionError(f"gradient count mismatch for {key!r}")
        for g, p in zip(gs, params):
            if g.shape != p.shape:
                raise DimensionError(f"gradient shape {g.shape} != parameter {p.shape}")
            if not np.all(np.isfinite(g)):
                raise NumericError("non-finite gradient; training aborted")
    t = m.step + 1
    b1, b2 = tcfg.beta1, tcfg.beta2
    bc1 = 1.0 - b1 ** t
    bc2 = 1.0 - b2 ** t
    for key, params, ms, vs in groups:
        for g, p, mm, vv in zip(grads[key], params, ms, vs):
            mm *= b1
            mm += (1.0 - b1) * g
            vv *= b2
            vv += (1.0 - b2) * (g * g)
            p -= tcfg.learning_rate * (mm / bc1) / (np.sqrt(vv / bc2) + tcfg.eps)
    m.step = t
    return m


def _snapshot(m: ModelState) -> ModelState:
    return copy.deepcopy(m)


def train(m: ModelState, x: np.ndarray, tcfg: TrainConfig, on_step=None):
    """Minimize total correlation over shuffled mini-batches.

    Returns (model, loss_history).  A non-finite loss or gradient aborts
    training and restores the last good parameter state.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != m.config.input_dim:
        raise DimensionError(f"input must be {m.config.input_dim} x N, got {x.shape}")
    n_total = x.shape[1]
    if n_total < tcfg.batch_size:
        raise DimensionError(
            f"dataset has {n_total} columns, fewer than batch_size {tcfg.batch_size}"
        )
    shuffle_rng = make_rng(split_seed(tcfg.seed, 0))
    whiten_seed = split_seed(tcfg.seed, 1)
    history = []
    good = _snapshot(m)
    step = 0
    for _ in range(tcfg.epochs):
        perm = shuffle_rng.permutation(n_total)
        for k in range(n_total // tcfg.batch_size):
            cols = perm[k * tcfg.batch_size : (k + 1) * tcfg.batch_size]
            xb = x[:, cols]
            tape = T.Tape()
            diagnostics = {}
            loss, out, handles, dec_handles = _build_loss(
                m, xb, tcfg, tape, whiten_seed, diagnostics
            )
            loss_val = float(loss.value[0, 0])
            if not math.isfinite(loss_val):
                m.__dict__.update(good.__dict__)
                return m, history
            grads = tape.backward(loss)
            gw, gb = _entry_grads(grads, handles)
            packed = {"w": gw, "b": gb}
            if dec_handles:
                packed["dec_w"], packed["dec_b"] = _entry_grads(grads, dec_handles)
            try:
                adam_step(m, packed, tcfg)
            except NumericError:
                m.__dict__.update(good.__dict__)
                return m, history
            good = _snapshot(m)
            history.append(loss_val)
            step += 1
            if on_step is not None:
                on_step(step, loss_val, out.value, diagnostics)
    return m, history


def predict_sources(m: ModelState, x: np.ndarray, wcfg: WhiteningConfig = None,
                    whiten_seed: int = 0) -> np.ndarray:
    """Forward pass on plain arrays (no tape) for inference over a full dataset."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != m.config.input_dim:
        raise DimensionError(f"input must be {m.config.input_dim} x N, got {x.shape}")
    if wcfg is None:
        wcfg = WhiteningConfig()
    h = x
    last = len(m.weights) - 1
    for i, (w, b) in enumerate(zip(m.weights, m.biases)):
        h = w @ h + b
        if i != last:
            h = np.tanh(h)
    tape = T.Tape()
    z = tape.const(h)
    return whiten_forward(z, wcfg, tape, seed=whiten_seed).value.copy()


# --- persistence ---------------------------------------------------------


def _layers_to_json(weights, biases):
    return [
        {"w": w.tolist(), "b": b.ravel().tolist()}
        for w, b in zip(weights, biases)
    ]


def _layers_from_json(items):
    weights, biases = [], []
    for it in items:
        weights.append(np.asarray(it["w"], dtype=np.float64))
        biases.append(np.asarray(it["b"], dtype=np.float64).reshape(-1, 1))
    return weights, biases


def save_model(m: ModelState, path):
    doc = {
        "config": {
            "input_dim": m.config.input_dim,
            "output_dim": m.config.output_dim,
            "hidden_widths": list(m.config.hidden_widths),
            "activation": m.config.activation,
            "seed": m.config.seed,
        },
        "layers": _layers_to_json(m.weights, m.biases),
        "adam": {
            "m": _layers_to_json(m.m_w, m.m_b),
            "v": _layers_to_json(m.v_w, m.v_b),
        },
        "step": m.step,
    }
    if m.has_decoder:
        doc["decoder_layers"] = _layers_to_json(m.decoder_weights, m.decoder_biases)
        doc["decoder_adam"] = {
            "m": _layers_to_json(m.dec_m_w, m.dec_m_b),
            "v": _layers_to_json(m.dec_v_w, m.dec_v_b),
        }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path) -> ModelState:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    cfg = NetworkConfig(
        input_dim=doc["config"]["input_dim"],
        output_dim=doc["config"]["output_dim"],
        hidden_widths=tuple(doc["config"]["hidden_widths"]),
        activation=doc["config"]["activation"],
        seed=doc["config"]["seed"],
    )
    weights, biases = _layers_from_json(doc["layers"])
    m_w, m_b = _layers_from_json(doc["adam"]["m"])
    v_w, v_b = _layers_from_json(doc["adam"]["v"])
    state = ModelState(
        config=cfg, weights=weights, biases=biases,
        m_w=m_w, v_w=v_w, m_b=m_b, v_b=v_b, step=int(doc["step"]),
    )
    if "decoder_layers" in doc:
        state.decoder_weights, state.decoder_biases = _layers_from_json(doc["decoder_layers"])
        state.dec_m_w, state.dec_m_b = _layers_from_json(doc["decoder_adam"]["m"])
        state.dec_v_w, state.dec_v_b = _layers_from_json(doc["decoder_adam"]["v"])
    return state


# --- finite-difference verification --------------------------------------


def tc_gradient_check(seed: int, input_dim: int = 3, width: int = 8, output_dim: int = 3,
                      n_samples: int = 16, fd_step: float = 1e-5,
                      tcfg: TrainConfig = None) -> float:
    """Max relative error between analytic and central-FD gradients of the
    full total-correlation loss (through whitening) on a reduced network.
    """
    if tcfg is None:
        tcfg = TrainConfig()
    ncfg = NetworkConfig(
        input_dim=input_dim, output_dim=output_dim,
        hidden_widths=(width, width), seed=seed,
    )
    model = init_model(ncfg)
    rng = make_rng(split_seed(seed, 7))
    x = rng.standard_normal((input_dim, n_samples))
    wseed = split_seed(seed, 1)

    def loss_value(mm):
        tape = T.Tape()
        loss, _, _, _ = _build_loss(mm, x, tcfg, tape, wseed)
        return float(loss.value[0, 0])

    tape = T.Tape()
    loss, _, handles, _ = _build_loss(model, x, tcfg, tape, wseed)
    grads = tape.backward(loss)
    gw, gb = _entry_grads(grads, handles)

    # Errors are measured against the overall gradient scale of the loss:
    # batch centering makes the loss exactly invariant to the output bias,
    # so a per-entry quotient there would only ever divide finite-difference
    # evaluation noise (about 1e-8 at this step size) by itself.
    diffs = []
    scales = [1e-8]
    for li in range(len(model.weights)):
        for params, analytic in ((model.weights[li], gw[li]), (model.biases[li], gb[li])):
            fd = np.zeros_like(params)
            it = np.nditer(params, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                keep = params[idx]
                params[idx] = keep + fd_step
                up = loss_value(model)
                params[idx] = keep - fd_step
                down = loss_value(model)
                params[idx] = keep
                fd[idx] = (up - down) / (2.0 * fd_step)
            diffs.append(float(np.abs(analytic - fd).max()))
            scales.append(max(float(np.abs(analytic).max()), float(np.abs(fd).max())))
    return max(diffs) / max(scales)
