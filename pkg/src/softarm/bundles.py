"""Trained model bundles: weights, normalization constants, serialization.

File container: a magic line, a JSON manifest line (sorted keys, explicit
array order and byte offsets, sha256 of the payload), then the raw
little-endian float64 payload. Writing the same bundle twice produces
identical bytes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace

import numpy as np

from . import autodiff as ad
from .errors import ModelFormatError
from .geometry import ModuleConfiguration, RobotState
from .networks import (
    BiLstmSpec,
    Normalizer,
    bilstm_forward,
    parameter_names,
    parameter_shape,
    sum_and_range_graph,
)

MAGIC = b"softarm-model v1\n"


@dataclass(frozen=True)
class ModelBundle:
    kind: str  # "c2s" or "c2a"
    spec: BiLstmSpec
    weights: dict  # name -> float64 ndarray, keys == parameter_names(spec)
    input_norm: Normalizer  # per (module, feature) over the input rows
    output_norm: Normalizer  # per (module, feature) over the output rows
    module_count: int
    max_cable_displacement: float
    training_seed: int

    def tensor_weights(self, requires_grad: bool = False) -> dict:
        return {
            name: ad.Tensor(array, requires_grad=requires_grad)
            for name, array in self.weights.items()
        }

    def with_weights(self, weights: dict) -> "ModelBundle":
        return replace(self, weights=weights)


def _manifest(bundle: ModelBundle) -> tuple[dict, list[np.ndarray]]:
    arrays = []
    entries = []
    offset = 0

    def register(name, arr):
        nonlocal offset
        arr = np.ascontiguousarray(arr, dtype="<f8")
        arrays.append(arr)
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += arr.nbytes

    for name in parameter_names(bundle.spec):
        register(f"weights/{name}", bundle.weights[name])
    register("input_norm/lo", bundle.input_norm.lo)
    register("input_norm/hi", bundle.input_norm.hi)
    register("output_norm/lo", bundle.output_norm.lo)
    register("output_norm/hi", bundle.output_norm.hi)

    manifest = {
        "arrays": entries,
        "kind": bundle.kind,
        "max_cable_displacement": bundle.max_cable_displacement,
        "module_count": bundle.module_count,
        "spec": {
            "layer_count": bundle.spec.layer_count,
            "hidden_size": bundle.spec.hidden_size,
            "input_size": bundle.spec.input_size,
            "output_size": bundle.spec.output_size,
        },
        "training_seed": bundle.training_seed,
    }
    return manifest, arrays


def model_save(bundle: ModelBundle, path) -> None:
    manifest, arrays = _manifest(bundle)
    payload = b"".join(a.tobytes() for a in arrays)
    manifest["sha256"] = hashlib.sha256(payload).hexdigest()
    header = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode() + b"\n"
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(header)
        fh.write(payload)


def model_load(path) -> ModelBundle:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from exc
    if not blob.startswith(MAGIC):
        raise ModelFormatError(f"{path}: not a softarm model file (bad magic)")
    rest = blob[len(MAGIC):]
    newline = rest.find(b"\n")
    if newline < 0:
        raise ModelFormatError(f"{path}: truncated header")
    try:
        manifest = json.loads(rest[:newline])
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: corrupt manifest: {exc}") from exc
    payload = rest[newline + 1:]
    if hashlib.sha256(payload).hexdigest() != manifest.get("sha256"):
        raise ModelFormatError(f"{path}: payload checksum mismatch (corrupted file)")

    spec = BiLstmSpec(**manifest["spec"])
    stash: dict[str, np.ndarray] = {}
    for entry in manifest["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        end = start + count * 8
        if end > len(payload):
            raise ModelFormatError(f"{path}: truncated payload at array {entry['name']}")
        stash[entry["name"]] = np.frombuffer(payload[start:end], dtype="<f8").reshape(shape).copy()

    weights = {}
    for name in parameter_names(spec):
        key = f"weights/{name}"
        if key not in stash:
            raise ModelFormatError(f"{path}: missing weight array {name}")
        if stash[key].shape != parameter_shape(spec, name):
            raise ModelFormatError(f"{path}: weight {name} has shape {stash[key].shape}")
        weights[name] = stash[key]

    return ModelBundle(
        kind=manifest["kind"],
        spec=spec,
        weights=weights,
        input_norm=Normalizer(lo=stash["input_norm/lo"], hi=stash["input_norm/hi"]),
        output_norm=Normalizer(lo=stash["output_norm/lo"], hi=stash["output_norm/hi"]),
        module_count=manifest["module_count"],
        max_cable_displacement=manifest["max_cable_displacement"],
        training_seed=manifest["training_seed"],
    )


# ---------------------------------------------------------------------------
# forward passes through trained bundles


def c2s_predict_norm_graph(bundle: ModelBundle, configs: "ad.Tensor", weights=None) -> "ad.Tensor":
    """Differentiable forward model in its native normalized output space:
    (modules, 3) configs -> (modules, 6) rows scaled to [-1, 1]."""
    if bundle.kind != "c2s":
        raise ModelFormatError(f"forward model expected a c2s bundle, got {bundle.kind}")
    params = weights if weights is not None else bundle.tensor_weights()
    normed = bundle.input_norm.encode_tensor(configs)
    rows = [ad.narrow(normed, 0, m, 1) for m in range(bundle.module_count)]
    outputs = bilstm_forward(bundle.spec, params, rows)
    return ad.concat(outputs, axis=0)  # (modules, 6), normalized


def c2s_predict_graph(bundle: ModelBundle, configs: "ad.Tensor", weights=None) -> "ad.Tensor":
    """Differentiable forward model: (modules, 3) configs -> (modules, 6) state rows.

    Normalization happens inside, so the caller optimizes raw unit vectors
    and receives meters back.
    """
    stacked = c2s_predict_norm_graph(bundle, configs, weights)
    return bundle.output_norm.decode_tensor(stacked)


def nn_c2s_forward(bundle: ModelBundle, configs: list[ModuleConfiguration]) -> RobotState:
    """Predicted robot state for a list of module configurations."""
    rows = np.stack([c.as_array() for c in configs])
    out = c2s_predict_graph(bundle, ad.Tensor(rows)).value
    return RobotState(positions=out[:, :3].copy(), orientations=out[:, 3:].copy())


def c2a_predict_graph(bundle: ModelBundle, features: "ad.Tensor", weights=None) -> "ad.Tensor":
    """Controller forward: (modules, 31) features -> (modules, 3) normalized actions."""
    if bundle.kind != "c2a":
        raise ModelFormatError(f"controller expected a c2a bundle, got {bundle.kind}")
    params = weights if weights is not None else bundle.tensor_weights()
    normed = bundle.input_norm.encode_tensor(features)
    rows = [ad.narrow(normed, 0, m, 1) for m in range(bundle.module_count)]
    raw = bilstm_forward(bundle.spec, params, rows)
    actions = [sum_and_range_graph(r) for r in raw]
    return ad.concat(actions, axis=0)


def nn_c2a_forward(bundle: ModelBundle, features: np.ndarray) -> np.ndarray:
    """Normalized zero-sum actions for a (modules, 31) feature matrix."""
    return c2a_predict_graph(bundle, ad.Tensor(features)).value
