"""Run summaries: pooled error tables and plot-ready per-tick CSV series."""

from __future__ import annotations

import csv
import json

import numpy as np

from .control import TrajectoryLog, metrics
from .planner import TaskSpec


def pooled_errors(logs: list[TrajectoryLog], tasks: list[TaskSpec]) -> dict:
    """Pool per-tick tracking errors across runs of the same preset."""
    position: dict[int, list] = {}
    orient_z: dict[int, list] = {}
    orient_x: dict[int, list] = {}
    for log, task in zip(logs, tasks):
        for tgt in task.position_targets:
            if tgt.weight == 0.0:
                continue
            errs = [
                float(np.linalg.norm(log.true_states[t, tgt.module, :3] - tgt.at(t)))
                for t in range(len(log))
            ]
            position.setdefault(tgt.module, []).extend(errs)
        summary = metrics(log, task)
        for module, (mean, _std) in summary["orientation_z"].items():
            orient_z.setdefault(module, [])
        for tgt in task.orientation_targets:
            if tgt.weight == 0.0:
                continue
            from .control import _azimuth_error_deg, _polar_deg

            for t in range(len(log)):
                real = log.true_states[t, tgt.module, 3:]
                want = tgt.at(t)
                orient_z.setdefault(tgt.module, []).append(
                    abs(_polar_deg(real) - _polar_deg(want))
                )
                x = _azimuth_error_deg(real, want)
                if x is not None:
                    orient_x.setdefault(tgt.module, []).append(x)
    out: dict = {"position": {}, "orientation_z": {}, "orientation_x": {}}
    for key, box in (("position", position), ("orientation_z", orient_z),
                     ("orientation_x", orient_x)):
        for module, values in box.items():
            if values:
                out[key][module] = (float(np.mean(values)), float(np.std(values)))
    return out


def report_table(per_preset: dict) -> str:
    """Text table: one row per preset/controller, mean +- std columns."""
    lines = []
    header = f"{'preset':24s} {'controller':10s} {'runs':>4s} " \
             f"{'position err [m]':>20s} {'orient z [deg]':>16s} {'orient x [deg]':>16s}"
    lines.append(header)
    lines.append("-" * len(header))
    for (preset, controller), entry in sorted(per_preset.items()):
        pooled = entry["errors"]
        pos = _fmt_stat(pooled["position"])
        oz = _fmt_stat(pooled["orientation_z"])
        ox = _fmt_stat(pooled["orientation_x"])
        lines.append(
            f"{preset:24s} {controller:10s} {entry['runs']:>4d} {pos:>20s} {oz:>16s} {ox:>16s}"
        )
    return "\n".join(lines)


def _fmt_stat(stats: dict) -> str:
    if not stats:
        return "-"
    parts = []
    for module, (mean, std) in sorted(stats.items()):
        parts.append(f"m{module}:{mean:.4f}+-{std:.4f}")
    return " ".join(parts)


def build_report(logs: list[TrajectoryLog], tasks: list[TaskSpec]) -> dict:
    """Group runs by (preset, controller) and pool their errors."""
    groups: dict = {}
    for log, task in zip(logs, tasks):
        key = (log.meta.get("preset", "unknown"), log.meta.get("controller", "?"))
        groups.setdefault(key, {"logs": [], "tasks": []})
        groups[key]["logs"].append(log)
        groups[key]["tasks"].append(task)
    report = {}
    for key, blob in groups.items():
        report[key] = {
            "runs": len(blob["logs"]),
            "errors": pooled_errors(blob["logs"], blob["tasks"]),
        }
    return report


def report_json(per_preset: dict) -> str:
    doc = {
        f"{preset}/{controller}": entry
        for (preset, controller), entry in per_preset.items()
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def write_tick_series(log: TrajectoryLog, path) -> None:
    """Per-tick CSV for external plotting."""
    modules = log.true_states.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["tick"]
        for m in range(modules):
            header += [f"m{m}_x", f"m{m}_y", f"m{m}_z"]
        header += ["loss_position", "loss_orientation", "loss_obstacle",
                   "loss_smoothness", "loss_total", "degraded", "wall_ms"]
        writer.writerow(header)
        for t in range(len(log)):
            row = [int(log.ticks[t])]
            for m in range(modules):
                row += [f"{v:.6f}" for v in log.true_states[t, m, :3]]
            row += [f"{v:.6f}" for v in log.losses[t]]
            row += [int(log.degraded[t]), f"{log.wall_ms[t]:.3f}"]
            writer.writerow(row)
