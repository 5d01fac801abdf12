"""Babble dataset collection and line-oriented persistence.

File layout: one JSON header line carrying geometry, disturbance gains,
schedule, and per-dimension state extrema, then one whitespace-separated
record per line. Floats are written with repr, which round-trips float64
exactly, so write -> read -> write is byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DatasetFormatError
from .geometry import ArmGeometry, ModuleAction, arc_to_config
from .plant import BabbleSchedule, DisturbanceParams, initial_plant_state, make_babble_schedule, plant_step

HEADER_PREFIX = "softarm-dataset v1 "


@dataclass
class Dataset:
    """Time-indexed babble records plus collection metadata."""

    ticks: np.ndarray  # (N,)
    actions: np.ndarray  # (N, modules, 3) normalized
    encoder_configs: np.ndarray  # (N, modules, 3)
    true_states: np.ndarray  # (N, modules, 6) [p, o] meters / unit
    true_configs: np.ndarray  # (N, modules, 3) evaluation only
    meta: dict

    def __len__(self) -> int:
        return len(self.ticks)

    @property
    def module_count(self) -> int:
        return self.actions.shape[1]


@dataclass(frozen=True)
class DatasetRecord:
    tick: int
    actions: np.ndarray
    encoder_configs: np.ndarray
    true_state: np.ndarray
    true_configs: np.ndarray


def record_at(dataset: Dataset, index: int) -> DatasetRecord:
    return DatasetRecord(
        tick=int(dataset.ticks[index]),
        actions=dataset.actions[index],
        encoder_configs=dataset.encoder_configs[index],
        true_state=dataset.true_states[index],
        true_configs=dataset.true_configs[index],
    )


def collect_dataset(
    schedule: BabbleSchedule,
    params: DisturbanceParams,
    geom: ArmGeometry,
) -> Dataset:
    """Run the babble schedule through the plant and record every tick."""
    normalized = make_babble_schedule(schedule)
    n = len(normalized)
    m = geom.module_count
    state = initial_plant_state(geom, params)
    encoder = np.zeros((n, m, 3))
    truth = np.zeros((n, m, 6))
    true_cfg = np.zeros((n, m, 3))
    scale = geom.max_cable_displacement
    for t in range(n):
        acts = [ModuleAction.from_array(normalized[t, k] * scale) for k in range(m)]
        state, robot, enc = plant_step(state, acts, params, geom)
        encoder[t] = enc
        truth[t, :, :3] = robot.positions
        truth[t, :, 3:] = robot.orientations
        true_cfg[t] = np.stack([arc_to_config(a).as_array() for a in state.realized_arcs()])
    meta = {
        "geometry": asdict(geom),
        "disturbance": asdict(params),
        "schedule": asdict(schedule),
        "state_lo": truth.reshape(n, -1).min(axis=0).tolist(),
        "state_hi": truth.reshape(n, -1).max(axis=0).tolist(),
    }
    return Dataset(
        ticks=np.arange(n, dtype=np.int64),
        actions=normalized,
        encoder_configs=encoder,
        true_states=truth,
        true_configs=true_cfg,
        meta=meta,
    )


def estimation_errors_deg(dataset: Dataset) -> np.ndarray:
    """Mean angle [deg] between encoder and true configuration per module."""
    dots = np.einsum("nmk,nmk->nm", dataset.encoder_configs, dataset.true_configs)
    angles = np.degrees(np.arccos(np.clip(dots, -1.0, 1.0)))
    return angles.mean(axis=0)


def _format_row(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def dataset_write(dataset: Dataset, path) -> None:
    n = len(dataset)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(HEADER_PREFIX + json.dumps(dataset.meta, sort_keys=True) + "\n")
        for i in range(n):
            fields = [
                str(int(dataset.ticks[i])),
                _format_row(dataset.actions[i].reshape(-1)),
                _format_row(dataset.encoder_configs[i].reshape(-1)),
                _format_row(dataset.true_states[i].reshape(-1)),
                _format_row(dataset.true_configs[i].reshape(-1)),
            ]
            fh.write(" ".join(fields) + "\n")


def dataset_read(path) -> Dataset:
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DatasetFormatError(f"cannot read dataset {path}: {exc}") from exc
    if not lines or not lines[0].startswith(HEADER_PREFIX):
        raise DatasetFormatError(f"{path}: missing dataset header")
    try:
        meta = json.loads(lines[0][len(HEADER_PREFIX):])
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"{path}: corrupt header: {exc}") from exc

    modules = meta.get("geometry", {}).get("module_count", 3)
    width = 1 + 9 * modules + 6 * modules  # tick + actions + enc + state + cfg
    n = len(lines) - 1
    ticks = np.zeros(n, dtype=np.int64)
    actions = np.zeros((n, modules, 3))
    encoder = np.zeros((n, modules, 3))
    truth = np.zeros((n, modules, 6))
    true_cfg = np.zeros((n, modules, 3))
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != width:
            raise DatasetFormatError(
                f"{path}:{i}: expected {width} fields, found {len(parts)}"
            )
        try:
            ticks[i - 2] = int(parts[0])
            row = np.array([float(p) for p in parts[1:]])
        except ValueError as exc:
            raise DatasetFormatError(f"{path}:{i}: bad number: {exc}") from exc
        if not np.all(np.isfinite(row)):
            raise DatasetFormatError(f"{path}:{i}: non-finite value")
        k = 3 * modules
        actions[i - 2] = row[:k].reshape(modules, 3)
        encoder[i - 2] = row[k : 2 * k].reshape(modules, 3)
        truth[i - 2] = row[2 * k : 2 * k + 6 * modules].reshape(modules, 6)
        true_cfg[i - 2] = row[2 * k + 6 * modules :].reshape(modules, 3)
    return Dataset(
        ticks=ticks,
        actions=actions,
        encoder_configs=encoder,
        true_states=truth,
        true_configs=true_cfg,
        meta=meta,
    )
