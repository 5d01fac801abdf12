"""State-to-configuration planning.

Gradient-based optimization of the stacked module configurations through
the differentiable learned forward model: position / orientation /
obstacle / configuration-change losses are weighted into one cost, a
short Adam run (10 iterations at lr 0.02) minimizes it from a warm start,
and each iterate is renormalized back onto unit configurations. Planning
either chains along a waypoint sequence offline or runs one step per tick
online.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .bundles import ModelBundle, c2s_predict_norm_graph
from .training import Adam

PLAN_ITERATIONS = 10
PLAN_LEARNING_RATE = 0.02
OBSTACLE_DISTANCE_FLOOR = 1e-6


@dataclass(frozen=True)
class PositionTarget:
    module: int  # 0-based module-end index
    weight: float
    path: np.ndarray  # (3,) static or (T, 3) per-step sequence

    def at(self, step: int) -> np.ndarray:
        if self.path.ndim == 1:
            return self.path
        return self.path[min(step, len(self.path) - 1)]


@dataclass(frozen=True)
class OrientationTarget:
    module: int
    weight: float
    path: np.ndarray  # (3,) or (T, 3), unit vectors

    def at(self, step: int) -> np.ndarray:
        if self.path.ndim == 1:
            return self.path
        return self.path[min(step, len(self.path) - 1)]


@dataclass(frozen=True)
class Obstacle:
    center: np.ndarray  # (3,) meters
    threshold: float  # risk radius r
    weight: float
    watched: tuple = (2,)  # module-end indices the loss applies to


@dataclass(frozen=True)
class TaskSpec:
    position_targets: tuple = ()
    orientation_targets: tuple = ()
    obstacles: tuple = ()
    smoothness_weight: float = 0.5
    steps: int = 1

    def __post_init__(self):
        for tgt in self.position_targets + self.orientation_targets:
            if tgt.weight < 0:
                raise ValueError("target weights must be >= 0")
        for tgt in self.orientation_targets:
            path = np.atleast_2d(tgt.path)
            norms = np.linalg.norm(path, axis=1)
            if not np.allclose(norms, 1.0, atol=1e-6):
                raise ValueError("orientation targets must be unit vectors")
        for ob in self.obstacles:
            if ob.threshold <= 0:
                raise ValueError("obstacle thresholds must be > 0")
            if ob.weight < 0:
                raise ValueError("obstacle weights must be >= 0")
        if self.smoothness_weight < 0:
            raise ValueError("smoothness weight must be >= 0")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")


# ---------------------------------------------------------------------------
# task (de)serialization: plain JSON mirror of the fields, meters/radians


def task_to_dict(task: TaskSpec) -> dict:
    return {
        "position_targets": [
            {"module": t.module, "weight": t.weight, "path": np.asarray(t.path).tolist()}
            for t in task.position_targets
        ],
        "orientation_targets": [
            {"module": t.module, "weight": t.weight, "path": np.asarray(t.path).tolist()}
            for t in task.orientation_targets
        ],
        "obstacles": [
            {
                "center": np.asarray(o.center).tolist(),
                "threshold": o.threshold,
                "weight": o.weight,
                "watched": list(o.watched),
            }
            for o in task.obstacles
        ],
        "smoothness_weight": task.smoothness_weight,
        "steps": task.steps,
    }


def task_from_dict(data: dict) -> TaskSpec:
    return TaskSpec(
        position_targets=tuple(
            PositionTarget(t["module"], t["weight"], np.asarray(t["path"], dtype=float))
            for t in data.get("position_targets", [])
        ),
        orientation_targets=tuple(
            OrientationTarget(t["module"], t["weight"], np.asarray(t["path"], dtype=float))
            for t in data.get("orientation_targets", [])
        ),
        obstacles=tuple(
            Obstacle(
                np.asarray(o["center"], dtype=float),
                o["threshold"],
                o["weight"],
                tuple(o.get("watched", (2,))),
            )
            for o in data.get("obstacles", [])
        ),
        smoothness_weight=data.get("smoothness_weight", 0.5),
        steps=data.get("steps", 1),
    )


def task_save(task: TaskSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(task_to_dict(task), fh, indent=2, sort_keys=True)


def task_load(path) -> TaskSpec:
    with open(path) as fh:
        return task_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# losses (numeric forms; the graph forms live inside total_cost)


def loss_position(predicted: np.ndarray, target: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(target) - np.asarray(predicted)))


def loss_orientation(predicted: np.ndarray, target: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(target) - np.asarray(predicted)))


def loss_obstacle(predicted: np.ndarray, center: np.ndarray, threshold: float) -> float:
    d = float(np.linalg.norm(np.asarray(center) - np.asarray(predicted)))
    if d > threshold:
        return 0.0
    return 1.0 / max(d, OBSTACLE_DISTANCE_FLOOR)


def loss_config_change(configs: np.ndarray, reference: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(configs) - np.asarray(reference)))


def _graph_norm_rows(x: "ad.Tensor") -> "ad.Tensor":
    return ad.norm2(x)


def total_cost_graph(
    task: TaskSpec,
    step: int,
    configs: "ad.Tensor",  # (modules, 3)
    reference: np.ndarray,  # (modules, 3) previous configurations
    bundle: ModelBundle,
    weights=None,
):
    """Weighted cost tensor plus a float breakdown of weighted terms.

    Position and orientation losses are taken in the forward model's
    normalized [-1, 1] output space (the space the networks are trained
    in), which is what makes the published loss weights commensurate:
    configurations, positions, and orientations all live on unit scale.
    Obstacle distances are evaluated in meters so the risk radius r keeps
    its physical meaning.
    """
    pred_norm = c2s_predict_norm_graph(bundle, configs, weights=weights)

    terms = []
    breakdown = {"position": 0.0, "orientation": 0.0, "obstacle": 0.0, "smoothness": 0.0}

    def encoded_target(module, cols, values):
        lo = bundle.output_norm.lo[module, cols]
        hi = bundle.output_norm.hi[module, cols]
        span = hi - lo
        positive = span > 0
        scale = np.where(positive, 2.0 / np.where(positive, span, 1.0), 0.0)
        return (values - (hi + lo) / 2.0) * scale

    for tgt in task.position_targets:
        if tgt.weight == 0.0:
            continue
        row = ad.narrow(ad.narrow(pred_norm, 0, tgt.module, 1), 1, 0, 3)
        want = encoded_target(tgt.module, slice(0, 3), tgt.at(step))
        term = _graph_norm_rows(row - ad.Tensor(want[None, :]))
        terms.append(ad.mul(term, ad.Tensor(tgt.weight)))
        breakdown["position"] += tgt.weight * term.item()

    for tgt in task.orientation_targets:
        if tgt.weight == 0.0:
            continue
        row = ad.narrow(ad.narrow(pred_norm, 0, tgt.module, 1), 1, 3, 3)
        want = encoded_target(tgt.module, slice(3, 6), tgt.at(step))
        term = _graph_norm_rows(row - ad.Tensor(want[None, :]))
        terms.append(ad.mul(term, ad.Tensor(tgt.weight)))
        breakdown["orientation"] += tgt.weight * term.item()

    if task.obstacles:
        pred_m = bundle.output_norm.decode_tensor(pred_norm)
        for ob in task.obstacles:
            if ob.weight == 0.0:
                continue
            for module in ob.watched:
                row = ad.narrow(ad.narrow(pred_m, 0, module, 1), 1, 0, 3)
                dist = _graph_norm_rows(row - ad.Tensor(np.asarray(ob.center)[None, :]))
                if dist.item() > ob.threshold:
                    continue  # outside the risk area: exactly zero, no gradient
                term = ad.reciprocal(ad.maximum_const(dist, OBSTACLE_DISTANCE_FLOOR))
                terms.append(ad.mul(term, ad.Tensor(ob.weight)))
                breakdown["obstacle"] += ob.weight * term.item()

    if task.smoothness_weight > 0.0:
        term = _graph_norm_rows(configs - ad.Tensor(reference))
        terms.append(ad.mul(term, ad.Tensor(task.smoothness_weight)))
        breakdown["smoothness"] += task.smoothness_weight * term.item()

    if not terms:
        return ad.Tensor(np.asarray(0.0)), breakdown
    cost = terms[0]
    for term in terms[1:]:
        cost = ad.add(cost, term)
    return cost, breakdown


def total_cost(
    task: TaskSpec, configs: np.ndarray, reference: np.ndarray, bundle: ModelBundle,
    step: int = 0,
) -> tuple[float, dict]:
    cost, breakdown = total_cost_graph(task, step, ad.Tensor(configs), reference, bundle)
    return cost.item(), breakdown


@dataclass
class PlanStepResult:
    configs: np.ndarray  # (modules, 3) unit rows
    cost: float
    breakdown: dict
    iterations: int
    degraded: bool = False


def _renormalize_rows(values: np.ndarray) -> None:
    norms = np.linalg.norm(values, axis=1, keepdims=True)
    np.divide(values, norms, out=values, where=norms > 0)


def plan_step(
    start_configs: np.ndarray,
    task: TaskSpec,
    bundle: ModelBundle,
    step: int = 0,
    iterations: int = PLAN_ITERATIONS,
    learning_rate: float = PLAN_LEARNING_RATE,
    weights=None,
) -> PlanStepResult:
    """One planning update: a short Adam descent from the current estimate.

    Returns the best iterate by cost (the warm start itself competes), with
    every candidate renormalized to unit module configurations. A non-finite
    cost aborts back to the warm start with the degraded flag set.
    """
    reference = np.array(start_configs, dtype=float)
    shared = weights if weights is not None else bundle.tensor_weights()
    c = ad.Tensor(reference.copy(), requires_grad=True)
    optimizer = Adam([c], lr=learning_rate)

    best_value = math.inf
    best_configs = reference.copy()
    best_breakdown: dict = {}
    evaluations = 0
    for it in range(iterations + 1):
        c.grad = None
        cost, breakdown = total_cost_graph(task, step, c, reference, bundle, weights=shared)
        value = cost.item()
        if not math.isfinite(value):
            return PlanStepResult(
                configs=reference.copy(), cost=math.nan, breakdown={},
                iterations=evaluations, degraded=True,
            )
        if value < best_value:
            best_value = value
            best_configs = c.value.copy()
            best_breakdown = breakdown
        evaluations += 1
        if it == iterations:
            break
        cost.backward()
        optimizer.step()
        _renormalize_rows(c.value)
    return PlanStepResult(
        configs=best_configs,
        cost=best_value,
        breakdown=best_breakdown,
        iterations=iterations,
    )


def plan_offline(
    task: TaskSpec,
    bundle: ModelBundle,
    start_configs: np.ndarray,
    iterations: int = PLAN_ITERATIONS,
    learning_rate: float = PLAN_LEARNING_RATE,
) -> list[PlanStepResult]:
    """Chain plan_step along the task's waypoint sequence, warm-starting
    each step from the previous plan."""
    weights = bundle.tensor_weights()
    current = np.array(start_configs, dtype=float)
    results = []
    for step in range(task.steps):
        result = plan_step(
            current, task, bundle, step=step, iterations=iterations,
            learning_rate=learning_rate, weights=weights,
        )
        results.append(result)
        if not result.degraded:
            current = result.configs
    return results


def planned_trajectory(results: list[PlanStepResult]) -> np.ndarray:
    return np.stack([r.configs for r in results]) if results else np.zeros((0, 3, 3))
