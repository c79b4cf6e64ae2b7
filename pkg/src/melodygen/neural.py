"""From-scratch LSTM sequence model on numpy: forward, exact BPTT, Adam.

The model is a stack of LSTM layers followed by a linear projection to
per-symbol logits. Per layer, with gate order [input | forget | output |
cell] packed along the last axis of the combined matrices:

    a   = x @ w_x + m_prev @ w_m + b          a is (B, 4H)
    i   = sigmoid(a[:, 0H:1H])
    f   = sigmoid(a[:, 1H:2H])
    o   = sigmoid(a[:, 2H:3H])
    g   = tanh(a[:, 3H:4H])
    c   = f * c_prev + i * g
    m   = o * cell_act(c)      cell_act = tanh (default) or identity

``cell_activation="identity"`` reproduces the variant with an unsquashed
cell output; the tanh default is the numerically safe choice.

Dropout (inverted, scale 1/keep) is applied to up-going connections only:
each layer's output as it feeds the next layer and the projection. The
recurrent path m_prev is never dropped. A fresh mask is drawn per step.

Batched sequences are time-major: inputs (T, B, D), integer targets (T, B),
optional validity mask (T, B) for padded batches. The loss is the mean
negative log-likelihood over valid steps.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .container import load_arrays, save_arrays

DEFAULT_INIT_SCALE = 0.08
DEFAULT_FORGET_BIAS = 1.0
DEFAULT_CLIP_NORM = 5.0


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    out = np.empty_like(z, dtype=np.float64)
    positive = z >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-z[positive]))
    expz = np.exp(z[~positive])
    out[~positive] = expz / (1.0 + expz)
    return out


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Stable softmax; strictly positive rows summing to one."""
    shifted = logits - logits.max(axis=axis, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=axis, keepdims=True)


def log_softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - logits.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


@dataclass
class LstmLayerParams:
    """One LSTM layer's combined-gate weights."""

    w_x: np.ndarray  # (input_dim, 4*hidden)
    w_m: np.ndarray  # (hidden, 4*hidden)
    b: np.ndarray  # (4*hidden,)

    @property
    def hidden_size(self) -> int:
        return self.w_m.shape[0]

    @property
    def input_dim(self) -> int:
        return self.w_x.shape[0]


@dataclass
class GeneratorParams:
    """All trainable arrays for one sequence generator."""

    layers: list[LstmLayerParams]
    w_out: np.ndarray  # (hidden, n_outputs)
    b_out: np.ndarray  # (n_outputs,)
    cell_activation: str = "tanh"

    def __post_init__(self) -> None:
        if self.cell_activation not in ("tanh", "identity"):
            raise ValueError(f"unknown cell activation {self.cell_activation!r}")
        if not self.layers:
            raise ValueError("at least one LSTM layer is required")

    @property
    def input_dim(self) -> int:
        return self.layers[0].input_dim

    @property
    def hidden_size(self) -> int:
        return self.layers[0].hidden_size

    @property
    def n_outputs(self) -> int:
        return self.w_out.shape[1]

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        """Stable (name, array) pairs; the canonical parameter ordering."""
        pairs: list[tuple[str, np.ndarray]] = []
        for index, layer in enumerate(self.layers):
            pairs.append((f"lstm{index}.w_x", layer.w_x))
            pairs.append((f"lstm{index}.w_m", layer.w_m))
            pairs.append((f"lstm{index}.b", layer.b))
        pairs.append(("w_out", self.w_out))
        pairs.append(("b_out", self.b_out))
        return pairs

    def copy(self) -> "GeneratorParams":
        return GeneratorParams(
            layers=[
                LstmLayerParams(l.w_x.copy(), l.w_m.copy(), l.b.copy())
                for l in self.layers
            ],
            w_out=self.w_out.copy(),
            b_out=self.b_out.copy(),
            cell_activation=self.cell_activation,
        )

    def n_parameters(self) -> int:
        return sum(arr.size for _, arr in self.named_arrays())


def init_params(
    input_dim: int,
    hidden_size: int,
    n_outputs: int,
    *,
    n_layers: int = 2,
    seed: int = 0,
    init_scale: float = DEFAULT_INIT_SCALE,
    forget_bias: float = DEFAULT_FORGET_BIAS,
    cell_activation: str = "tanh",
) -> GeneratorParams:
    """Seeded initialization: uniform weights, zero biases, forget bias set.

    Weights draw from uniform(-init_scale, init_scale) in a fixed order, so
    the same seed always produces the same parameters.
    """
    if min(input_dim, hidden_size, n_outputs, n_layers) < 1:
        raise ValueError("model dimensions must be positive")
    rng = np.random.default_rng(seed)
    layers = []
    for index in range(n_layers):
        d = input_dim if index == 0 else hidden_size
        w_x = rng.uniform(-init_scale, init_scale, size=(d, 4 * hidden_size))
        w_m = rng.uniform(-init_scale, init_scale, size=(hidden_size, 4 * hidden_size))
        b = np.zeros(4 * hidden_size)
        b[hidden_size : 2 * hidden_size] = forget_bias
        layers.append(LstmLayerParams(w_x, w_m, b))
    w_out = rng.uniform(-init_scale, init_scale, size=(hidden_size, n_outputs))
    b_out = np.zeros(n_outputs)
    return GeneratorParams(layers, w_out, b_out, cell_activation)


@dataclass
class LstmState:
    """Cell and output state for every layer: arrays of shape (L, B, H)."""

    c: np.ndarray
    m: np.ndarray

    @classmethod
    def zeros(cls, params: GeneratorParams, batch_size: int) -> "LstmState":
        shape = (params.n_layers, batch_size, params.hidden_size)
        return cls(np.zeros(shape), np.zeros(shape))

    def copy(self) -> "LstmState":
        return LstmState(self.c.copy(), self.m.copy())


def _cell_act(c: np.ndarray, kind: str) -> np.ndarray:
    return np.tanh(c) if kind == "tanh" else c


def lstm_step(
    params: GeneratorParams,
    x: np.ndarray,
    state: LstmState | None = None,
    *,
    dropout_masks: np.ndarray | None = None,
) -> tuple[LstmState, np.ndarray]:
    """Advance one step. x is (B, D) or (D,); returns (new state, logits)."""
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    batch = x.shape[0]
    if state is None:
        state = LstmState.zeros(params, batch)
    hidden = params.hidden_size
    new_c = np.empty_like(state.c)
    new_m = np.empty_like(state.m)
    below = x
    for index, layer in enumerate(params.layers):
        a = below @ layer.w_x + state.m[index] @ layer.w_m + layer.b
        i = sigmoid(a[:, :hidden])
        f = sigmoid(a[:, hidden : 2 * hidden])
        o = sigmoid(a[:, 2 * hidden : 3 * hidden])
        g = np.tanh(a[:, 3 * hidden :])
        c = f * state.c[index] + i * g
        m = o * _cell_act(c, params.cell_activation)
        new_c[index] = c
        new_m[index] = m
        below = m if dropout_masks is None else m * dropout_masks[index]
    logits = below @ params.w_out + params.b_out
    if not np.all(np.isfinite(logits)):
        raise FloatingPointError("non-finite logits; model state diverged")
    return LstmState(new_c, new_m), logits[0] if squeeze else logits


@dataclass
class ForwardResult:
    loss: float
    probs: np.ndarray  # (T, B, K)
    n_valid: int
    cache: dict | None = None


def make_dropout_masks(
    rng: np.random.Generator,
    dropout: float,
    steps: int,
    n_layers: int,
    batch: int,
    hidden: int,
) -> np.ndarray:
    """Inverted-dropout masks of shape (T, L, B, H), values in {0, 1/keep}."""
    keep = 1.0 - dropout
    return (rng.random((steps, n_layers, batch, hidden)) < keep) / keep


def forward_sequence(
    params: GeneratorParams,
    inputs: np.ndarray,
    targets: np.ndarray,
    *,
    mask: np.ndarray | None = None,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
    dropout_masks: np.ndarray | None = None,
    collect_cache: bool = True,
) -> ForwardResult:
    """Teacher-forced forward pass over a (T, B, D) batch.

    Returns the mean negative log-likelihood over valid steps and per-step
    probabilities. With ``collect_cache`` the result carries everything
    :func:`backward` needs.
    """
    if inputs.ndim == 2:
        inputs = inputs[:, None, :]
        targets = np.asarray(targets)[:, None]
        if mask is not None:
            mask = np.asarray(mask)[:, None]
    if inputs.ndim != 3:
        raise ValueError("inputs must be (T, B, D)")
    steps, batch, _ = inputs.shape
    if steps == 0:
        raise ValueError("cannot run a forward pass on an empty sequence")
    targets = np.asarray(targets, dtype=np.int64)
    if targets.shape != (steps, batch):
        raise ValueError(f"targets shape {targets.shape} != {(steps, batch)}")
    if mask is None:
        mask = np.ones((steps, batch))
    mask = np.asarray(mask, dtype=np.float64)
    n_valid = int(round(mask.sum()))
    if n_valid == 0:
        raise ValueError("mask leaves no valid steps")
    if not 0.0 <= dropout < 1.0:
        raise ValueError(f"dropout {dropout} outside [0, 1)")
    n_layers, hidden = params.n_layers, params.hidden_size
    if dropout > 0.0 and dropout_masks is None:
        if rng is None:
            raise ValueError("dropout requires an rng (or explicit masks)")
        dropout_masks = make_dropout_masks(rng, dropout, steps, n_layers, batch, hidden)

    gates = np.empty((steps, n_layers, batch, 4 * hidden))
    cells = np.empty((steps, n_layers, batch, hidden))
    outs = np.empty((steps, n_layers, batch, hidden))
    logits = np.empty((steps, batch, params.n_outputs))

    c_prev = np.zeros((n_layers, batch, hidden))
    m_prev = np.zeros((n_layers, batch, hidden))
    for t in range(steps):
        below = inputs[t]
        for l, layer in enumerate(params.layers):
            a = below @ layer.w_x + m_prev[l] @ layer.w_m + layer.b
            i = sigmoid(a[:, :hidden])
            f = sigmoid(a[:, hidden : 2 * hidden])
            o = sigmoid(a[:, 2 * hidden : 3 * hidden])
            g = np.tanh(a[:, 3 * hidden :])
            c = f * c_prev[l] + i * g
            m = o * _cell_act(c, params.cell_activation)
            gates[t, l] = np.concatenate([i, f, o, g], axis=1)
            cells[t, l] = c
            outs[t, l] = m
            c_prev[l] = c
            m_prev[l] = m
            below = m if dropout_masks is None else m * dropout_masks[t, l]
        logits[t] = below @ params.w_out + params.b_out

    logp = log_softmax(logits)
    probs = np.exp(logp)
    rows = np.arange(batch)
    picked = np.stack([logp[t, rows, targets[t]] for t in range(steps)])
    loss = float(-(picked * mask).sum() / n_valid)
    if not np.isfinite(loss):
        raise FloatingPointError("non-finite loss; training diverged")

    cache = None
    if collect_cache:
        cache = {
            "inputs": inputs,
            "targets": targets,
            "mask": mask,
            "n_valid": n_valid,
            "gates": gates,
            "cells": cells,
            "outs": outs,
            "dropout_masks": dropout_masks,
            "probs": probs,
        }
    return ForwardResult(loss=loss, probs=probs, n_valid=n_valid, cache=cache)


def backward(params: GeneratorParams, cache: dict) -> dict[str, np.ndarray]:
    """Exact gradients of the mean NLL from a cached forward pass."""
    inputs = cache["inputs"]
    targets = cache["targets"]
    mask = cache["mask"]
    n_valid = cache["n_valid"]
    gates = cache["gates"]
    cells = cache["cells"]
    outs = cache["outs"]
    dropout_masks = cache["dropout_masks"]
    probs = cache["probs"]

    steps, batch, _ = inputs.shape
    hidden = params.hidden_size
    n_layers = params.n_layers
    tanh_cell = params.cell_activation == "tanh"

    dlogits = probs.copy()
    rows = np.arange(batch)
    for t in range(steps):
        dlogits[t, rows, targets[t]] -= 1.0
    dlogits *= (mask / n_valid)[:, :, None]

    grads = {name: np.zeros_like(arr) for name, arr in params.named_arrays()}

    top = n_layers - 1
    if dropout_masks is None:
        dropped_top = outs[:, top]
    else:
        dropped_top = outs[:, top] * dropout_masks[:, top]
    grads["w_out"] = np.einsum("tbh,tbk->hk", dropped_top, dlogits)
    grads["b_out"] = dlogits.sum(axis=(0, 1))

    # Gradient flowing into each layer's output via the up-going connection.
    dm_up = np.einsum("tbk,hk->tbh", dlogits, params.w_out)
    if dropout_masks is not None:
        dm_up = dm_up * dropout_masks[:, top]

    for l in range(n_layers - 1, -1, -1):
        layer = params.layers[l]
        dw_x = grads[f"lstm{l}.w_x"]
        dw_m = grads[f"lstm{l}.w_m"]
        db = grads[f"lstm{l}.b"]
        dm_rec = np.zeros((batch, hidden))
        dc_rec = np.zeros((batch, hidden))
        dx = np.empty((steps, batch, layer.input_dim))
        for t in range(steps - 1, -1, -1):
            i = gates[t, l, :, :hidden]
            f = gates[t, l, :, hidden : 2 * hidden]
            o = gates[t, l, :, 2 * hidden : 3 * hidden]
            g = gates[t, l, :, 3 * hidden :]
            c = cells[t, l]
            h_c = np.tanh(c) if tanh_cell else c
            dm_total = dm_up[t] + dm_rec
            da_o = dm_total * h_c * o * (1.0 - o)
            dc = dm_total * o
            if tanh_cell:
                dc = dc * (1.0 - h_c * h_c)
            dc = dc + dc_rec
            da_g = dc * i * (1.0 - g * g)
            da_i = dc * g * i * (1.0 - i)
            c_prev = cells[t - 1, l] if t > 0 else np.zeros_like(c)
            da_f = dc * c_prev * f * (1.0 - f)
            da = np.concatenate([da_i, da_f, da_o, da_g], axis=1)

            if l == 0:
                x_l = inputs[t]
            elif dropout_masks is None:
                x_l = outs[t, l - 1]
            else:
                x_l = outs[t, l - 1] * dropout_masks[t, l - 1]
            m_prev = outs[t - 1, l] if t > 0 else np.zeros((batch, hidden))

            dw_x += x_l.T @ da
            dw_m += m_prev.T @ da
            db += da.sum(axis=0)
            dx[t] = da @ layer.w_x.T
            dm_rec = da @ layer.w_m.T
            dc_rec = dc * f
        if l > 0:
            dm_up = dx if dropout_masks is None else dx * dropout_masks[:, l - 1]
    return grads


def loss_and_grads(
    params: GeneratorParams,
    inputs: np.ndarray,
    targets: np.ndarray,
    *,
    mask: np.ndarray | None = None,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[float, dict[str, np.ndarray], np.ndarray]:
    result = forward_sequence(
        params, inputs, targets, mask=mask, dropout=dropout, rng=rng
    )
    grads = backward(params, result.cache)
    return result.loss, grads, result.probs


def clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients in place if their joint L2 norm exceeds max_norm."""
    total = 0.0
    for arr in grads.values():
        total += float((arr * arr).sum())
    norm = float(np.sqrt(total))
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for arr in grads.values():
            arr *= scale
    return norm


@dataclass
class AdamState:
    """Bias-corrected Adam moments for every named parameter."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def init_adam(
    params: GeneratorParams,
    *,
    learning_rate: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
) -> AdamState:
    zeros = {name: np.zeros_like(arr) for name, arr in params.named_arrays()}
    return AdamState(
        m=zeros,
        v={name: arr.copy() for name, arr in zeros.items()},
        t=0,
        learning_rate=learning_rate,
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
    )


def adam_update(
    params: GeneratorParams, grads: dict[str, np.ndarray], state: AdamState
) -> GeneratorParams:
    """One in-place Adam step: theta -= lr * mhat / (sqrt(vhat) + eps)."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bias1 = 1.0 - b1**state.t
    bias2 = 1.0 - b2**state.t
    for name, arr in params.named_arrays():
        g = grads[name]
        state.m[name] = b1 * state.m[name] + (1.0 - b1) * g
        state.v[name] = b2 * state.v[name] + (1.0 - b2) * (g * g)
        m_hat = state.m[name] / bias1
        v_hat = state.v[name] / bias2
        arr -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return params


@dataclass
class GradCheckReport:
    max_rel_error: float
    n_checked: int
    worst_name: str
    worst_index: int
    worst_analytic: float
    worst_numeric: float


def _loss_only(
    params: GeneratorParams,
    inputs: np.ndarray,
    targets: np.ndarray,
    mask: np.ndarray | None,
) -> float:
    return forward_sequence(
        params, inputs, targets, mask=mask, collect_cache=False
    ).loss


def grad_check(
    params: GeneratorParams,
    inputs: np.ndarray,
    targets: np.ndarray,
    *,
    mask: np.ndarray | None = None,
    n_samples: int = 200,
    delta: float = 1e-5,
    seed: int = 0,
) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    Samples coordinates uniformly across all parameter arrays. The relative
    error is |analytic - numeric| / max(|analytic|, |numeric|, 1e-6). The
    1e-6 denominator floor reflects the precision limit of the oracle, not
    of the gradients: central differences on a double-precision loss of
    order 1 carry ~1e-11 of rounding noise at delta=1e-5, so coordinates
    whose true gradient is below ~1e-7 cannot be certified in relative
    terms at all. Against the floor they are still certified to an
    absolute 1e-10 per unit of tolerance, which any structural bug (wrong
    sign, dropped term, misrouted state) exceeds by many orders.
    """
    result = forward_sequence(params, inputs, targets, mask=mask)
    grads = backward(params, result.cache)
    named = params.named_arrays()
    sizes = np.array([arr.size for _, arr in named])
    total = int(sizes.sum())
    rng = np.random.default_rng(seed)
    chosen = rng.choice(total, size=min(n_samples, total), replace=False)
    boundaries = np.cumsum(sizes)

    report = GradCheckReport(0.0, len(chosen), "", -1, 0.0, 0.0)
    for flat in chosen:
        which = int(np.searchsorted(boundaries, flat, side="right"))
        name, arr = named[which]
        index = int(flat - (boundaries[which - 1] if which else 0))
        original = arr.flat[index]
        arr.flat[index] = original + delta
        loss_plus = _loss_only(params, inputs, targets, mask)
        arr.flat[index] = original - delta
        loss_minus = _loss_only(params, inputs, targets, mask)
        arr.flat[index] = original
        numeric = (loss_plus - loss_minus) / (2.0 * delta)
        analytic = float(grads[name].flat[index])
        rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-6)
        if rel > report.max_rel_error:
            report.max_rel_error = rel
            report.worst_name = name
            report.worst_index = index
            report.worst_analytic = analytic
            report.worst_numeric = numeric
    return report


@dataclass
class TrainConfig:
    """Optimization settings for one generator layer."""

    max_iterations: int = 2000
    batch_size: int = 64
    dropout: float = 0.5
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    clip_norm: float = DEFAULT_CLIP_NORM
    eval_every: int = 20
    patience: int = 5
    hidden_size: int = 256
    n_lstm_layers: int = 2
    init_scale: float = DEFAULT_INIT_SCALE
    forget_bias: float = DEFAULT_FORGET_BIAS
    cell_activation: str = "tanh"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "TrainConfig":
        return cls(**obj)


CHECKPOINT_META_KEY = "generator"


def save_checkpoint(
    path: str | Path,
    params: GeneratorParams,
    *,
    adam: AdamState | None = None,
    meta: dict | None = None,
) -> None:
    """Write parameters (and optionally optimizer state) deterministically."""
    arrays = {name: arr for name, arr in params.named_arrays()}
    header: dict = {
        CHECKPOINT_META_KEY: {
            "n_layers": params.n_layers,
            "cell_activation": params.cell_activation,
        },
        "user": meta or {},
    }
    if adam is not None:
        for name in list(arrays):
            arrays[f"adam.m.{name}"] = adam.m[name]
            arrays[f"adam.v.{name}"] = adam.v[name]
        header["adam"] = {
            "t": adam.t,
            "learning_rate": adam.learning_rate,
            "beta1": adam.beta1,
            "beta2": adam.beta2,
            "epsilon": adam.epsilon,
        }
    save_arrays(path, arrays, header)


@dataclass
class Checkpoint:
    params: GeneratorParams
    adam: AdamState | None
    meta: dict


def load_checkpoint(path: str | Path) -> Checkpoint:
    arrays, header = load_arrays(path)
    info = header[CHECKPOINT_META_KEY]
    layers = []
    for index in range(info["n_layers"]):
        layers.append(
            LstmLayerParams(
                w_x=arrays[f"lstm{index}.w_x"],
                w_m=arrays[f"lstm{index}.w_m"],
                b=arrays[f"lstm{index}.b"],
            )
        )
    params = GeneratorParams(
        layers=layers,
        w_out=arrays["w_out"],
        b_out=arrays["b_out"],
        cell_activation=info["cell_activation"],
    )
    adam = None
    if "adam" in header:
        names = [name for name, _ in params.named_arrays()]
        adam = AdamState(
            m={name: arrays[f"adam.m.{name}"] for name in names},
            v={name: arrays[f"adam.v.{name}"] for name in names},
            t=header["adam"]["t"],
            learning_rate=header["adam"]["learning_rate"],
            beta1=header["adam"]["beta1"],
            beta2=header["adam"]["beta2"],
            epsilon=header["adam"]["epsilon"],
        )
    return Checkpoint(params=params, adam=adam, meta=header.get("user", {}))
