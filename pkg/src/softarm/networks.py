"""Space-sequence biLSTM networks.

The recurrence runs over the module chain (base to tip), not over time:
each sequence position carries one module's features, and forward plus
backward passes let every module's output see the whole chain. Two
networks share this machinery: a forward model mapping module
configurations to the robot state, and a configuration controller mapping
targets and recent history to cable actions through a final layer that
enforces the zero-sum, range-bounded actuation constraint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ShapeMismatchError

GATE_ORDER = "ifgo"  # input, forget, cell, output


@dataclass(frozen=True)
class BiLstmSpec:
    layer_count: int
    hidden_size: int
    input_size: int
    output_size: int

    def __post_init__(self):
        for name in ("layer_count", "hidden_size", "input_size", "output_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


C2S_SPEC = BiLstmSpec(layer_count=4, hidden_size=64, input_size=3, output_size=6)
C2A_SPEC = BiLstmSpec(layer_count=2, hidden_size=32, input_size=31, output_size=3)

# controller feature layout per module: target config, past configs, past
# actions, module label
C2A_TARGET_DIM = 3
C2A_CONFIG_HISTORY = 4
C2A_ACTION_HISTORY = 5
C2A_FEATURES = C2A_TARGET_DIM + 3 * C2A_CONFIG_HISTORY + 3 * C2A_ACTION_HISTORY + 1


def parameter_names(spec: BiLstmSpec) -> list[str]:
    """Canonical parameter order; serialization and the optimizer rely on it."""
    names = []
    for layer in range(spec.layer_count):
        for direction in ("fwd", "bwd"):
            prefix = f"l{layer}_{direction}"
            names += [f"{prefix}_W", f"{prefix}_U", f"{prefix}_b"]
    names += ["head_W", "head_b"]
    return names


def parameter_shape(spec: BiLstmSpec, name: str) -> tuple[int, ...]:
    h = spec.hidden_size
    if name == "head_W":
        return (2 * h, spec.output_size)
    if name == "head_b":
        return (spec.output_size,)
    layer = int(name.split("_")[0][1:])
    fan_in = spec.input_size if layer == 0 else 2 * h
    kind = name.rsplit("_", 1)[1]
    if kind == "W":
        return (fan_in, 4 * h)
    if kind == "U":
        return (h, 4 * h)
    return (4 * h,)


def init_parameters(spec: BiLstmSpec, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per matrix."""
    params = {}
    for name in parameter_names(spec):
        shape = parameter_shape(spec, name)
        if name.endswith("_W"):
            fan_in = shape[0]
        elif name.endswith("_U") or name.endswith("_b"):
            fan_in = spec.hidden_size
        else:
            fan_in = shape[0]
        bound = 1.0 / np.sqrt(fan_in)
        params[name] = rng.uniform(-bound, bound, size=shape)
    return params


def _lstm_direction(xs, W, U, b, hidden_size, reverse):
    """One directional pass; returns per-position hidden states."""
    batch = xs[0].value.shape[0]
    h = ad.Tensor(np.zeros((batch, hidden_size)))
    c = ad.Tensor(np.zeros((batch, hidden_size)))
    order = range(len(xs) - 1, -1, -1) if reverse else range(len(xs))
    out = [None] * len(xs)
    for t in order:
        gates = ad.add(ad.add(ad.matmul(xs[t], W), ad.matmul(h, U)), b)
        i = ad.sigmoid(ad.narrow(gates, 1, 0, hidden_size))
        f = ad.sigmoid(ad.narrow(gates, 1, hidden_size, hidden_size))
        g = ad.tanh(ad.narrow(gates, 1, 2 * hidden_size, hidden_size))
        o = ad.sigmoid(ad.narrow(gates, 1, 3 * hidden_size, hidden_size))
        c = ad.add(ad.mul(f, c), ad.mul(i, g))
        h = ad.mul(o, ad.tanh(c))
        out[t] = h
    return out


def bilstm_forward(spec: BiLstmSpec, params: dict, inputs: list) -> list:
    """Run the biLSTM over the module sequence.

    inputs: one (batch, input_size) tensor per module position.
    Returns one (batch, output_size) tensor per position.
    """
    if len(inputs) < 1:
        raise ShapeMismatchError("module sequence is empty")
    for t, x in enumerate(inputs):
        if x.value.ndim != 2 or x.value.shape[1] != spec.input_size:
            raise ShapeMismatchError(
                f"module axis position {t}: expected feature axis of size "
                f"{spec.input_size}, got shape {x.value.shape}"
            )
    xs = inputs
    for layer in range(spec.layer_count):
        fwd = _lstm_direction(
            xs,
            params[f"l{layer}_fwd_W"],
            params[f"l{layer}_fwd_U"],
            params[f"l{layer}_fwd_b"],
            spec.hidden_size,
            reverse=False,
        )
        bwd = _lstm_direction(
            xs,
            params[f"l{layer}_bwd_W"],
            params[f"l{layer}_bwd_U"],
            params[f"l{layer}_bwd_b"],
            spec.hidden_size,
            reverse=True,
        )
        xs = [ad.concat([f, b], axis=1) for f, b in zip(fwd, bwd)]
    return [ad.add(ad.matmul(x, params["head_W"]), params["head_b"]) for x in xs]


def module_label(m: int, n_sum: int) -> float:
    """Chain-position label in [-1, 1] for the m-th module (1-based)."""
    if n_sum < 2:
        raise ValueError("module labels need at least 2 modules")
    if not 1 <= m <= n_sum:
        raise ValueError(f"module index {m} outside 1..{n_sum}")
    return 2.0 * (m - 1) / (n_sum - 1) - 1.0


def sum_and_range(raw: np.ndarray) -> np.ndarray:
    """Map raw triples to zero-sum actions in [-1, 1] along the last axis.

    out_i = (3 tanh(raw_i) - sum_j tanh(raw_j)) / 4
    """
    t = np.tanh(np.asarray(raw, dtype=float))
    return (3.0 * t - t.sum(axis=-1, keepdims=True)) / 4.0


_ONES_3x1 = np.ones((3, 1))


def sum_and_range_graph(raw: "ad.Tensor") -> "ad.Tensor":
    """Differentiable sum-and-range layer for (batch, 3) tensors."""
    t = ad.tanh(raw)
    row_sum = ad.matmul(t, ad.Tensor(_ONES_3x1))  # (batch, 1)
    return ad.mul(ad.add(ad.mul(t, ad.Tensor(3.0)), ad.mul(row_sum, ad.Tensor(-1.0))),
                  ad.Tensor(0.25))


@dataclass(frozen=True)
class Normalizer:
    """Per-dimension affine map between data range [lo, hi] and [-1, 1]."""

    lo: np.ndarray
    hi: np.ndarray

    @staticmethod
    def from_data(rows: np.ndarray) -> "Normalizer":
        flat = rows.reshape(-1, rows.shape[-1]) if rows.ndim > 2 else rows
        return Normalizer(lo=flat.min(axis=0).copy(), hi=flat.max(axis=0).copy())

    @staticmethod
    def identity(width: int) -> "Normalizer":
        return Normalizer(lo=-np.ones(width), hi=np.ones(width))

    def _scale_center(self):
        span = self.hi - self.lo
        positive = span > 0.0
        center = (self.hi + self.lo) / 2.0
        scale = np.where(positive, 2.0 / np.where(positive, span, 1.0), 0.0)
        half_span = span / 2.0  # zero for degenerate dims: decode returns center
        return scale, center, half_span

    def encode(self, x: np.ndarray) -> np.ndarray:
        scale, center, _ = self._scale_center()
        return (x - center) * scale

    def decode(self, y: np.ndarray) -> np.ndarray:
        scale, center, half_span = self._scale_center()
        return center + y * half_span

    def encode_tensor(self, x: "ad.Tensor") -> "ad.Tensor":
        scale, center, _ = self._scale_center()
        return ad.add(ad.mul(x, ad.Tensor(scale)), ad.Tensor(-center * scale))

    def decode_tensor(self, y: "ad.Tensor") -> "ad.Tensor":
        scale, center, half_span = self._scale_center()
        return ad.add(ad.mul(y, ad.Tensor(half_span)), ad.Tensor(center))
