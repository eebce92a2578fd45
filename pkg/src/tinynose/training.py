"""Squared-error backpropagation and class-balanced stochastic gradient descent.

Training is per-sample: every frame of the shuffled training split produces
one parameter update. Minority classes get a larger step,
``alpha = base_rate * sqrt(max_count / class_count)``, so each compound pulls
on the weights with roughly equal total force per epoch.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from .errors import MalformedDatasetError
from .labels import CLASSES, NUM_CLASSES, CompoundLabel
from .net_core import (
    N_PARAMS,
    Activations,
    NetworkParams,
    as_input_vector,
    forward,
    forward_batch,
    logsig_derivative,
)
from .sensing import LabeledDataset, Normalizer, fit_normalizer


class StopReason(str, enum.Enum):
    TARGET_REACHED = "target_reached"
    MAX_EPOCHS = "max_epochs"
    VALIDATION_EARLY_STOP = "validation_early_stop"


def _check_fractions(fractions) -> tuple[float, float, float]:
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3:
        raise ValueError("split_fractions needs (train, validation, test)")
    if any(not 0.0 <= f <= 1.0 for f in fractions):
        raise ValueError("each split fraction must lie in [0, 1]")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"split fractions must sum to 1, got {sum(fractions)!r}")
    return fractions


@dataclass(frozen=True)
class TrainConfig:
    base_learning_rate: float = 0.1
    max_epochs: int = 5000
    target_mse: float = 1e-4
    seed: int = 0
    init_range: float = 0.5
    validation_patience: int = 6
    split_fractions: tuple[float, float, float] = (0.70, 0.15, 0.15)

    def __post_init__(self) -> None:
        if not self.base_learning_rate > 0:
            raise ValueError("base_learning_rate must be > 0")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")
        if not self.target_mse >= 0:
            raise ValueError("target_mse must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not self.init_range > 0:
            raise ValueError("init_range must be > 0")
        if self.validation_patience < 0:
            raise ValueError("validation_patience must be >= 0")
        object.__setattr__(self, "split_fractions", _check_fractions(self.split_fractions))


@dataclass(frozen=True, eq=False)
class Sensitivities:
    output_s: np.ndarray
    hidden_s: np.ndarray


@dataclass(frozen=True, eq=False)
class TrainReport:
    epoch_mse: tuple[float, ...]
    validation_mse: tuple[float, ...]
    stop_reason: StopReason
    epochs_run: int
    final_params: NetworkParams
    initial_params: NetworkParams
    normalizer: Normalizer
    train_set: LabeledDataset = field(repr=False)
    validation_set: LabeledDataset = field(repr=False)
    test_set: LabeledDataset = field(repr=False)


# --------------------------------------------------------------------------
# Per-sample math
# --------------------------------------------------------------------------


def mse(target, output) -> float:
    """Squared error ``(t - a)^T (t - a)`` for one sample."""
    e = np.asarray(target, dtype=np.float64) - np.asarray(output, dtype=np.float64)
    return float(np.dot(e, e))


def output_sensitivity(target, acts: Activations) -> np.ndarray:
    a = acts.output_out
    return -2.0 * logsig_derivative(a) * (np.asarray(target, dtype=np.float64) - a)


def hidden_sensitivity(params: NetworkParams, acts: Activations, output_s) -> np.ndarray:
    a = acts.hidden_out
    return logsig_derivative(a) * (params.output_weights.T @ np.asarray(output_s))


def sensitivities(params: NetworkParams, acts: Activations, target) -> Sensitivities:
    s2 = output_sensitivity(target, acts)
    return Sensitivities(s2, hidden_sensitivity(params, acts, s2))


def sgd_step(
    params: NetworkParams, x, acts: Activations, sens: Sensitivities, alpha: float
) -> NetworkParams:
    """One gradient step; returns new parameters and leaves ``params`` alone."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    return NetworkParams(
        hidden_weights=params.hidden_weights - alpha * np.outer(sens.hidden_s, x),
        hidden_bias=params.hidden_bias - alpha * sens.hidden_s,
        output_weights=params.output_weights - alpha * np.outer(sens.output_s, acts.hidden_out),
        output_bias=params.output_bias - alpha * sens.output_s,
    )


@dataclass(frozen=True, eq=False)
class ParamGradient:
    """Derivative of the per-sample squared error w.r.t. each parameter."""

    hidden_weights: np.ndarray
    hidden_bias: np.ndarray
    output_weights: np.ndarray
    output_bias: np.ndarray

    def flat(self) -> np.ndarray:
        return np.concatenate(
            [
                np.ravel(self.hidden_weights),
                self.hidden_bias,
                np.ravel(self.output_weights),
                self.output_bias,
            ]
        )

    @classmethod
    def from_flat(cls, flat) -> "ParamGradient":
        shaped = NetworkParams.from_flat(flat)
        return cls(
            shaped.hidden_weights, shaped.hidden_bias, shaped.output_weights, shaped.output_bias
        )


def analytic_gradient(params: NetworkParams, x, target) -> ParamGradient:
    x = as_input_vector(x)
    acts = forward(params, x)
    sens = sensitivities(params, acts, target)
    return ParamGradient(
        hidden_weights=np.outer(sens.hidden_s, x),
        hidden_bias=sens.hidden_s.copy(),
        output_weights=np.outer(sens.output_s, acts.hidden_out),
        output_bias=sens.output_s.copy(),
    )


def finite_difference_gradient(params: NetworkParams, x, target, h: float = 1e-5) -> ParamGradient:
    """Central-difference estimate of every parameter's gradient."""
    if not h > 0:
        raise ValueError("h must be > 0")
    x = as_input_vector(x)
    base = params.flat()
    grad = np.empty(N_PARAMS)
    for k in range(N_PARAMS):
        up = base.copy()
        up[k] += h
        down = base.copy()
        down[k] -= h
        f_up = mse(target, forward(NetworkParams.from_flat(up), x).output_out)
        f_down = mse(target, forward(NetworkParams.from_flat(down), x).output_out)
        grad[k] = (f_up - f_down) / (2.0 * h)
    return ParamGradient.from_flat(grad)


def gradient_discrepancy(
    analytic: ParamGradient, numeric: ParamGradient, small: float = 1e-4
) -> tuple[float, float]:
    """Return (max relative error, max absolute error among small entries).

    Entries whose magnitude is below ``small`` in both gradients are judged by
    absolute error, the rest by relative error.
    """
    a = analytic.flat()
    n = numeric.flat()
    scale = np.maximum(np.abs(a), np.abs(n))
    big = scale >= small
    diff = np.abs(a - n)
    rel = float(np.max(diff[big] / scale[big])) if np.any(big) else 0.0
    absolute = float(np.max(diff[~big])) if np.any(~big) else 0.0
    return rel, absolute


# --------------------------------------------------------------------------
# Training
# --------------------------------------------------------------------------


def balanced_alpha(class_counts: Mapping[CompoundLabel, int], label: CompoundLabel) -> float:
    if label not in class_counts:
        raise MalformedDatasetError(f"no samples of class {label.name} in the training data")
    if any(c < 1 for c in class_counts.values()):
        raise MalformedDatasetError("class counts must be positive")
    return math.sqrt(max(class_counts.values()) / class_counts[label])


def init_params(seed: int, init_range: float = 0.5) -> NetworkParams:
    if not init_range > 0:
        raise ValueError("init_range must be > 0")
    rng = np.random.default_rng(seed)
    return NetworkParams.from_flat(rng.uniform(-init_range, init_range, N_PARAMS))


def split_sizes(n: int, fractions) -> tuple[int, int, int]:
    """Floor each share; whatever is left over goes to the training split."""
    _, f_val, f_test = _check_fractions(fractions)
    # The epsilon keeps products like 0.15 * 100 = 15.000000000000002 from
    # depending on representation error in the opposite direction.
    n_val = math.floor(n * f_val + 1e-9)
    n_test = math.floor(n * f_test + 1e-9)
    return n - n_val - n_test, n_val, n_test


def split_dataset(
    data: LabeledDataset, fractions, seed: int
) -> tuple[LabeledDataset, LabeledDataset, LabeledDataset]:
    if len(data) == 0:
        raise MalformedDatasetError("cannot split an empty dataset")
    n_train, n_val, _ = split_sizes(len(data), fractions)
    order = np.random.default_rng(seed).permutation(len(data))
    return (
        data.subset(order[:n_train]),
        data.subset(order[n_train : n_train + n_val]),
        data.subset(order[n_train + n_val :]),
    )


def _targets(labels) -> np.ndarray:
    out = np.zeros((len(labels), NUM_CLASSES))
    for i, label in enumerate(labels):
        out[i, label.index] = 1.0
    return out


def dataset_mse(params: NetworkParams, inputs: np.ndarray, targets: np.ndarray) -> float:
    """Mean over samples of the per-sample squared error."""
    if len(inputs) == 0:
        return float("nan")
    e = targets - forward_batch(params, inputs)
    return float(np.mean(np.sum(e * e, axis=1)))


def train(
    data: LabeledDataset,
    config: TrainConfig = TrainConfig(),
    normalizer: Optional[Normalizer] = None,
    on_epoch: Optional[Callable[[int, float, Optional[float]], None]] = None,
) -> TrainReport:
    """Split, normalise and fit the network with per-sample SGD.

    The normalizer is fitted on the training split unless one is given.
    Stopping is checked after every epoch in the order: target MSE reached,
    validation patience exhausted, epoch budget spent.
    """
    train_set, val_set, test_set = split_dataset(data, config.split_fractions, config.seed)
    counts = train_set.class_counts()
    missing = [c.name for c in CLASSES if c not in counts]
    if missing:
        raise MalformedDatasetError(
            f"training split has no samples of: {', '.join(missing)}"
        )
    if normalizer is None:
        normalizer = fit_normalizer(train_set)

    x_train = normalizer.apply(train_set.raw_matrix())
    t_train = _targets(train_set.labels)
    x_val = normalizer.apply(val_set.raw_matrix())
    t_val = _targets(val_set.labels)
    alphas = [config.base_learning_rate * balanced_alpha(counts, lab) for lab in train_set.labels]

    params = initial = init_params(config.seed, config.init_range)
    shuffle_rng = np.random.default_rng([config.seed, 1])
    epoch_mse: list[float] = []
    val_mse: list[float] = []
    best_val = math.inf
    stale = 0
    stop = StopReason.MAX_EPOCHS

    for epoch in range(1, config.max_epochs + 1):
        for i in shuffle_rng.permutation(len(x_train)):
            x, t = x_train[i], t_train[i]
            acts = forward(params, x)
            params = sgd_step(params, x, acts, sensitivities(params, acts, t), alphas[i])
        epoch_mse.append(dataset_mse(params, x_train, t_train))
        v = dataset_mse(params, x_val, t_val) if len(x_val) else None
        if v is not None:
            val_mse.append(v)
        if on_epoch is not None:
            on_epoch(epoch, epoch_mse[-1], v)

        if epoch_mse[-1] <= config.target_mse:
            stop = StopReason.TARGET_REACHED
            break
        if v is not None and config.validation_patience:
            if v < best_val:
                best_val, stale = v, 0
            else:
                stale += 1
                if stale >= config.validation_patience:
                    stop = StopReason.VALIDATION_EARLY_STOP
                    break

    return TrainReport(
        epoch_mse=tuple(epoch_mse),
        validation_mse=tuple(val_mse),
        stop_reason=stop,
        epochs_run=len(epoch_mse),
        final_params=params,
        initial_params=initial,
        normalizer=normalizer,
        train_set=train_set,
        validation_set=val_set,
        test_set=test_set,
    )


def predict_indices(params: NetworkParams, inputs: np.ndarray) -> np.ndarray:
    """Argmax class index per row (lowest index wins ties)."""
    return np.argmax(forward_batch(params, inputs), axis=1)

