"""Per-layer training loop with periodic validation and early stopping."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from ..encode import NO_EVENT
from ..neural import (
    GeneratorParams,
    TrainConfig,
    adam_update,
    backward,
    clip_global_norm,
    forward_sequence,
    init_adam,
    init_params,
)
from .datasets import TrainingSequence, pad_batch
from .evaluation import evaluate_layer
from .specs import LayerSpec

# Deterministic per-level offsets applied to the user seed so the three
# layers train on distinct but reproducible random streams.
LEVEL_SEED_OFFSETS = {"bar": 101, "beat": 202, "note": 303}


class EarlyStopping:
    """Stop after ``patience`` consecutive validation-loss increases."""

    def __init__(self, patience: int):
        self.patience = patience
        self.previous: float | None = None
        self.consecutive_increases = 0

    def update(self, val_loss: float) -> bool:
        """Record one evaluation; True means stop now."""
        if self.previous is not None and val_loss > self.previous:
            self.consecutive_increases += 1
        else:
            self.consecutive_increases = 0
        self.previous = val_loss
        return self.consecutive_increases >= self.patience


@dataclass
class LayerTrainResult:
    params: GeneratorParams
    curves: list[dict]
    iterations_run: int
    best_iteration: int
    best_val_loss: float
    stop_reason: str
    final_train_loss: float

    def curve_column(self, key: str) -> list[float]:
        return [row[key] for row in self.curves]


def train_layer(
    spec: LayerSpec,
    train_sequences: list[TrainingSequence],
    val_sequences: list[TrainingSequence] | None,
    config: TrainConfig,
    *,
    stop_at_accuracy: float | None = None,
) -> LayerTrainResult:
    """Optimize one generator layer.

    Minibatches are drawn with replacement from ``train_sequences`` using the
    config seed. Every ``eval_every`` iterations the layer is evaluated on
    ``val_sequences`` (when given): the best-validation parameters are
    retained and training stops early after ``patience`` consecutive
    validation-loss increases. Without validation data the loop runs to
    ``max_iterations`` (or until ``stop_at_accuracy`` is reached on the
    training set, for deliberate overfitting runs).
    """
    if not train_sequences:
        raise ValueError("no training sequences")
    rng = np.random.default_rng(config.seed)
    params = init_params(
        spec.input_dim,
        config.hidden_size,
        spec.alphabet_size,
        n_layers=config.n_lstm_layers,
        seed=config.seed,
        init_scale=config.init_scale,
        forget_bias=config.forget_bias,
        cell_activation=config.cell_activation,
    )
    adam = init_adam(
        params,
        learning_rate=config.learning_rate,
        beta1=config.beta1,
        beta2=config.beta2,
        epsilon=config.epsilon,
    )
    no_event = NO_EVENT if spec.level == "note" else None

    stopper = EarlyStopping(config.patience)
    best_params = params.copy()
    best_iteration = 0
    best_val_loss = float("inf")
    curves: list[dict] = []
    recent_losses: list[float] = []
    stop_reason = "max-iterations"
    iteration = 0

    for iteration in range(1, config.max_iterations + 1):
        picks = rng.integers(0, len(train_sequences), size=config.batch_size)
        batch = [train_sequences[j] for j in picks]
        inputs, targets, mask = pad_batch(batch)
        result = forward_sequence(
            params,
            inputs,
            targets,
            mask=mask,
            dropout=config.dropout,
            rng=rng,
        )
        grads = backward(params, result.cache)
        clip_global_norm(grads, config.clip_norm)
        adam_update(params, grads, adam)
        recent_losses.append(result.loss)

        if iteration % config.eval_every == 0:
            row = {
                "iteration": iteration,
                "train_loss": float(np.mean(recent_losses)),
            }
            recent_losses = []
            eval_on = val_sequences if val_sequences else train_sequences
            metrics = evaluate_layer(params, eval_on, no_event_index=no_event)
            prefix = "val" if val_sequences else "train_set"
            for key, value in metrics.items():
                row[f"{prefix}_{key}"] = value
            curves.append(row)

            if val_sequences:
                val_loss = metrics["loss"]
                if val_loss < best_val_loss:
                    best_val_loss = val_loss
                    best_params = params.copy()
                    best_iteration = iteration
                if stopper.update(val_loss):
                    stop_reason = "early-stopping"
                    break
            else:
                best_params = params
                best_iteration = iteration
                if (
                    stop_at_accuracy is not None
                    and metrics["combined_accuracy"] >= stop_at_accuracy
                ):
                    stop_reason = "target-accuracy"
                    break

    final_train_loss = curves[-1]["train_loss"] if curves else float("nan")
    return LayerTrainResult(
        params=best_params,
        curves=curves,
        iterations_run=iteration,
        best_iteration=best_iteration,
        best_val_loss=best_val_loss,
        stop_reason=stop_reason,
        final_train_loss=final_train_loss,
    )


def layer_config(base: TrainConfig, level: str) -> TrainConfig:
    """The per-level config: same settings, level-specific seed stream."""
    cfg = copy.deepcopy(base)
    cfg.seed = base.seed + LEVEL_SEED_OFFSETS[level]
    return cfg


def curves_to_csv(curves: list[dict]) -> str:
    """Render curve rows as CSV (stable column order)."""
    if not curves:
        return ""
    columns: list[str] = []
    for row in curves:
        for key in row:
            if key not in columns:
                columns.append(key)
    lines = [",".join(columns)]
    for row in curves:
        lines.append(",".join(_csv_cell(row.get(key)) for key in columns))
    return "\n".join(lines) + "\n"


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)
