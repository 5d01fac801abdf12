"""Training loops for the forward model and the configuration controller.

Supervision comes straight from babble datasets: the forward model maps
encoder configurations to the true robot state, and the controller maps a
six-tick window (target configuration, recent configurations and actions,
module label) to the action that produced the target. Splits are contiguous
blocks so sliding windows never straddle the train/validation boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .bundles import ModelBundle
from .datasets import Dataset
from .errors import SoftArmError
from .networks import (
    C2A_ACTION_HISTORY,
    C2A_CONFIG_HISTORY,
    C2A_FEATURES,
    C2A_SPEC,
    C2S_SPEC,
    BiLstmSpec,
    Normalizer,
    bilstm_forward,
    init_parameters,
    module_label,
    sum_and_range_graph,
)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 64
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 200
    patience: int = 20  # stop after this many epochs without val improvement
    validation_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in (0, 1)")


class Adam:
    """Adam with bias correction; updates parameter arrays in place."""

    def __init__(self, params: list, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in params]
        self.v = [np.zeros_like(p.value) for p in params]

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for i, p in enumerate(self.params):
            g = p.grad
            if g is None:
                continue
            self.m[i] = b1 * self.m[i] + (1 - b1) * g
            self.v[i] = b2 * self.v[i] + (1 - b2) * (g * g)
            m_hat = self.m[i] / (1 - b1**self.t)
            v_hat = self.v[i] / (1 - b2**self.t)
            p.value -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class TrainingCurves:
    train_loss: list
    val_loss: list
    val_mae_percent: list
    epochs_run: int
    best_epoch: int

    @property
    def final_val_mae_percent(self) -> float:
        return self.val_mae_percent[self.best_epoch]


def _contiguous_split(n: int, validation_fraction: float) -> tuple[slice, slice]:
    cut = int(round(n * (1.0 - validation_fraction)))
    cut = min(max(cut, 1), n - 1)
    return slice(0, cut), slice(cut, n)


def _forward(spec, params, inputs_by_module):
    outs = bilstm_forward(spec, params, inputs_by_module)
    return ad.concat(outs, axis=0)  # module-major (modules*batch, out)


def _module_major(rows: np.ndarray) -> np.ndarray:
    """(N, modules, width) -> (modules*N, width) matching _forward's concat."""
    return rows.transpose(1, 0, 2).reshape(-1, rows.shape[2])


def _run_training(
    spec: BiLstmSpec,
    x: np.ndarray,  # (N, modules, features) already normalized
    y: np.ndarray,  # (N, modules, out) already normalized
    config: TrainConfig,
    squash_output: bool,
    label: str,
) -> tuple[dict, TrainingCurves]:
    n = len(x)
    if n < 10 * config.batch_size:
        raise SoftArmError(
            f"{label}: need at least {10 * config.batch_size} records, got {n}"
        )
    train_slice, val_slice = _contiguous_split(n, config.validation_fraction)
    x_train, y_train = x[train_slice], y[train_slice]
    x_val, y_val = x[val_slice], y[val_slice]

    rng = np.random.default_rng(config.seed)
    params = {
        name: ad.Tensor(array, requires_grad=True)
        for name, array in init_parameters(spec, rng).items()
    }
    frozen = {name: ad.Tensor(t.value) for name, t in params.items()}  # shares arrays
    optimizer = Adam(
        list(params.values()), config.learning_rate, config.beta1, config.beta2,
        config.epsilon,
    )
    modules = x.shape[1]

    def batch_loss(xb, yb, train):
        p = params if train else frozen
        inputs = [ad.Tensor(xb[:, m, :]) for m in range(modules)]
        pred = _forward(spec, p, inputs)
        if squash_output:
            pred = sum_and_range_graph(pred)
        target = ad.Tensor(_module_major(yb))
        err = pred - target
        return ad.mean(ad.square(err)), err

    def evaluate(xs, ys):
        total_sq, total_abs, count = 0.0, 0.0, 0
        for start in range(0, len(xs), 1024):
            loss, err = batch_loss(xs[start : start + 1024], ys[start : start + 1024], False)
            total_sq += loss.item() * err.value.size
            total_abs += np.abs(err.value).sum()
            count += err.value.size
        return total_sq / count, 100.0 * total_abs / count / 2.0

    curves = TrainingCurves([], [], [], 0, 0)
    best_val = math.inf
    best_weights = None
    best_epoch = 0
    n_train = len(x_train)

    for epoch in range(config.epochs):
        order = rng.permutation(n_train)
        epoch_loss = 0.0
        batches = 0
        for start in range(0, n_train - config.batch_size + 1, config.batch_size):
            idx = order[start : start + config.batch_size]
            optimizer.zero_grad()
            loss, _ = batch_loss(x_train[idx], y_train[idx], True)
            value = loss.item()
            if not math.isfinite(value):
                raise SoftArmError(
                    f"{label}: non-finite loss at epoch {epoch}, batch {batches}"
                )
            loss.backward()
            optimizer.step()
            epoch_loss += value
            batches += 1
        val_loss, val_mae = evaluate(x_val, y_val)
        curves.train_loss.append(epoch_loss / max(batches, 1))
        curves.val_loss.append(val_loss)
        curves.val_mae_percent.append(val_mae)
        curves.epochs_run = epoch + 1
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_weights = {k: t.value.copy() for k, t in params.items()}
        elif epoch - best_epoch >= config.patience:
            break
    curves.best_epoch = best_epoch
    return best_weights, curves


# ---------------------------------------------------------------------------
# forward model: encoder configurations -> true state


def c2s_training_arrays(dataset: Dataset):
    x = dataset.encoder_configs
    y = dataset.true_states
    return x, y


def train_c2s(
    dataset: Dataset,
    spec: BiLstmSpec = C2S_SPEC,
    config: TrainConfig = TrainConfig(),
) -> tuple[ModelBundle, TrainingCurves]:
    x_raw, y_raw = c2s_training_arrays(dataset)
    n = len(x_raw)
    train_slice, _ = _contiguous_split(n, config.validation_fraction)
    input_norm = _rowwise_normalizer(x_raw[train_slice])
    output_norm = _rowwise_normalizer(y_raw[train_slice])
    x = input_norm.encode(x_raw)
    y = output_norm.encode(y_raw)
    weights, curves = _run_training(spec, x, y, config, squash_output=False, label="c2s")
    bundle = ModelBundle(
        kind="c2s",
        spec=spec,
        weights=weights,
        input_norm=input_norm,
        output_norm=output_norm,
        module_count=dataset.module_count,
        max_cable_displacement=dataset.meta["geometry"]["max_cable_displacement"],
        training_seed=config.seed,
    )
    return bundle, curves


def _rowwise_normalizer(rows: np.ndarray) -> Normalizer:
    """Per (module, feature) extrema over axis 0."""
    return Normalizer(lo=rows.min(axis=0).copy(), hi=rows.max(axis=0).copy())


# ---------------------------------------------------------------------------
# controller: (target, history, label) -> action


def c2a_windows(dataset: Dataset, ticks: slice):
    """Sliding six-tick windows inside one contiguous block of the dataset.

    Dataset row t holds the encoder configuration *after* action t was
    applied, while the controller sees the pre-action estimate, so the
    supervision for action t pairs the target cfg[t] (what the action
    achieved) with the history cfg[t-1]..cfg[t-4] and act[t-1]..act[t-5].
    Window starts without full history are skipped rather than padded.
    """
    cfg = dataset.encoder_configs[ticks]
    act = dataset.actions[ticks]
    n, modules = cfg.shape[0], cfg.shape[1]
    first = C2A_ACTION_HISTORY  # t >= 5 so act[t-5] and cfg[t-4] exist
    last = n - 1
    if last < first:
        return (
            np.zeros((0, modules, C2A_FEATURES)),
            np.zeros((0, modules, 3)),
        )
    ts = np.arange(first, last + 1)
    w = len(ts)
    feats = np.zeros((w, modules, C2A_FEATURES))
    labels = np.array([module_label(m + 1, modules) for m in range(modules)])
    feats[:, :, 0:3] = cfg[ts]
    for k in range(C2A_CONFIG_HISTORY):
        feats[:, :, 3 + 3 * k : 6 + 3 * k] = cfg[ts - 1 - k]
    base = 3 + 3 * C2A_CONFIG_HISTORY
    for k in range(C2A_ACTION_HISTORY):
        feats[:, :, base + 3 * k : base + 3 * (k + 1)] = act[ts - 1 - k]
    feats[:, :, -1] = labels[None, :]
    targets = act[ts]
    return feats, targets


def train_c2a(
    dataset: Dataset,
    spec: BiLstmSpec = C2A_SPEC,
    config: TrainConfig = TrainConfig(),
) -> tuple[ModelBundle, TrainingCurves]:
    n = len(dataset)
    train_slice, val_slice = _contiguous_split(n, config.validation_fraction)
    x_train_raw, y_train = c2a_windows(dataset, train_slice)
    x_val_raw, y_val = c2a_windows(dataset, val_slice)
    input_norm = _rowwise_normalizer(x_train_raw)
    x = np.concatenate([input_norm.encode(x_train_raw), input_norm.encode(x_val_raw)])
    y = np.concatenate([y_train, y_val])
    # blocks were split before windowing; rebuild the fraction so the
    # training loop's contiguous cut lands exactly on the block boundary
    fraction = len(x_val_raw) / len(x)
    cfg = TrainConfig(
        learning_rate=config.learning_rate,
        batch_size=config.batch_size,
        beta1=config.beta1,
        beta2=config.beta2,
        epsilon=config.epsilon,
        epochs=config.epochs,
        patience=config.patience,
        validation_fraction=fraction,
        seed=config.seed,
    )
    weights, curves = _run_training(spec, x, y, cfg, squash_output=True, label="c2a")
    bundle = ModelBundle(
        kind="c2a",
        spec=spec,
        weights=weights,
        input_norm=input_norm,
        output_norm=Normalizer(
            lo=-np.ones((dataset.module_count, 3)), hi=np.ones((dataset.module_count, 3))
        ),
        module_count=dataset.module_count,
        max_cable_displacement=dataset.meta["geometry"]["max_cable_displacement"],
        training_seed=config.seed,
    )
    return bundle, curves
