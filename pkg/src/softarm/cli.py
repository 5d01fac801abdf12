"""Command-line entry points: collect, train, plan, run, report, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bundles import model_load, model_save
from .control import metrics, trajectory_read, trajectory_write
from .datasets import collect_dataset, dataset_read, dataset_write, estimation_errors_deg
from .errors import SoftArmError
from .geometry import ArmGeometry
from .planner import planned_trajectory, plan_offline, task_load, task_save, task_to_dict
from .plant import BabbleSchedule, DisturbanceParams
from .presets import PRESETS, execute_preset
from .reporting import build_report, report_json, report_table, write_tick_series
from .training import TrainConfig, train_c2a, train_c2s


def _load_geometry(path: str | None) -> ArmGeometry:
    if path is None:
        return ArmGeometry()
    with open(path) as fh:
        return ArmGeometry(**json.load(fh))


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--geom", help="JSON file with arm geometry overrides")


def cmd_collect(args) -> int:
    geom = _load_geometry(args.geom)
    schedule = BabbleSchedule(total_samples=args.samples, step_std=args.step_std,
                              seed=args.seed)
    params = DisturbanceParams(seed=args.seed)
    dataset = collect_dataset(schedule, params, geom)
    dataset_write(dataset, args.out)
    errs = estimation_errors_deg(dataset)
    print(f"wrote {len(dataset)} records to {args.out}")
    print("estimation error [deg] per module:", " ".join(f"{e:.2f}" for e in errs))
    return 0


def cmd_train(args) -> int:
    dataset = dataset_read(args.dataset)
    config = TrainConfig(epochs=args.epochs, patience=args.patience,
                         batch_size=args.batch_size, seed=args.seed)
    if args.kind == "c2s":
        bundle, curves = train_c2s(dataset, config=config)
    else:
        bundle, curves = train_c2a(dataset, config=config)
    model_save(bundle, args.out)
    print(
        f"trained {args.kind}: {curves.epochs_run} epochs (best {curves.best_epoch}), "
        f"validation error {curves.final_val_mae_percent:.3f}% of range"
    )
    if args.curves:
        with open(args.curves, "w") as fh:
            json.dump(
                {
                    "train_loss": curves.train_loss,
                    "val_loss": curves.val_loss,
                    "val_mae_percent": curves.val_mae_percent,
                    "best_epoch": curves.best_epoch,
                },
                fh,
                indent=2,
            )
        print(f"wrote curves to {args.curves}")
    return 0


def cmd_plan(args) -> int:
    geom = _load_geometry(args.geom)
    c2s = model_load(args.model)
    if args.preset:
        task = PRESETS[args.preset].build_task(geom)
    else:
        task = task_load(args.task)
    start = np.tile(np.array([0.0, 0.0, 1.0]), (geom.module_count, 1))
    results = plan_offline(task, c2s, start)
    trajectory = planned_trajectory(results)
    doc = {
        "task": task_to_dict(task),
        "configs": trajectory.tolist(),
        "costs": [r.cost for r in results],
        "degraded": [bool(r.degraded) for r in results],
    }
    with open(args.out, "w") as fh:
        json.dump(doc, fh)
    print(f"planned {len(results)} waypoints to {args.out}")
    return 0


def cmd_run(args) -> int:
    geom = _load_geometry(args.geom)
    if args.preset not in PRESETS:
        print(f"unknown preset '{args.preset}'; known: {', '.join(sorted(PRESETS))}",
              file=sys.stderr)
        return 2
    c2s = model_load(args.c2s) if args.c2s else None
    c2a = model_load(args.c2a) if args.c2a else None
    if args.controller == "nn" and c2a is None:
        print("error: --controller nn requires --c2a MODEL", file=sys.stderr)
        return 2
    if c2s is None:
        print("error: run requires --c2s MODEL for planning", file=sys.stderr)
        return 2
    disturbance = DisturbanceParams(seed=args.seed)
    log, task = execute_preset(
        args.preset, args.controller, geom, disturbance, c2s, c2a, ticks=args.ticks
    )
    if args.out:
        trajectory_write(log, args.out)
        print(f"wrote trajectory log to {args.out}")
    summary = metrics(log, task)
    for module, (mean, std) in summary["position"].items():
        print(f"position error module {module}: {mean * 100:.2f} +- {std * 100:.2f} cm")
    for module, (mean, std) in summary["orientation_z"].items():
        print(f"orientation error (z) module {module}: {mean:.2f} +- {std:.2f} deg")
    for module, (mean, std) in summary["orientation_x"].items():
        print(f"orientation error (x) module {module}: {mean:.2f} +- {std:.2f} deg")
    return 0


def cmd_report(args) -> int:
    geom = _load_geometry(args.geom)
    logs, tasks = [], []
    for path in args.logs:
        log = trajectory_read(path)
        preset = log.meta.get("preset")
        if preset not in PRESETS:
            print(f"{path}: unknown preset '{preset}' in log header", file=sys.stderr)
            return 2
        logs.append(log)
        tasks.append(PRESETS[preset].build_task(geom))
    report = build_report(logs, tasks)
    print(report_table(report))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(report_json(report))
        for i, (path, log) in enumerate(zip(args.logs, logs)):
            write_tick_series(log, out / (Path(path).stem + "_series.csv"))
        print(f"wrote report.json and {len(logs)} CSV series to {out}")
    return 0


def cmd_serve(args) -> int:
    from . import service  # fastapi/uvicorn imported only when serving

    geom = _load_geometry(args.geom)
    c2s = model_load(args.c2s)
    c2a = model_load(args.c2a) if args.c2a else None
    return service.serve(
        geom=geom,
        c2s=c2s,
        c2a=c2a,
        preset=args.preset,
        host=args.host,
        port=args.port,
        tick_hz=args.tick_hz,
        seed=args.seed,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="softarm",
        description="Planning and control for a simulated cable-driven modular soft arm",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("collect", help="babble the plant and write a dataset")
    _add_common(p)
    p.add_argument("--samples", type=int, default=9000)
    p.add_argument("--step-std", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("train", help="train a model from a dataset")
    _add_common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--kind", choices=("c2s", "c2a"), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--patience", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--curves", help="optional JSON file for training curves")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("plan", help="plan an offline configuration trajectory")
    _add_common(p)
    p.add_argument("--model", required=True, help="trained c2s bundle")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--preset", choices=sorted(PRESETS))
    group.add_argument("--task", help="task JSON file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("run", help="closed-loop run of a preset")
    _add_common(p)
    p.add_argument("--preset", required=True)
    p.add_argument("--controller", choices=("nn", "cc"), default="nn")
    p.add_argument("--c2s", required=False)
    p.add_argument("--c2a", required=False)
    p.add_argument("--ticks", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="pool logs into comparison tables")
    _add_common(p)
    p.add_argument("--logs", nargs="+", required=True)
    p.add_argument("--out", help="directory for report.json and CSV series")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the live interaction service")
    _add_common(p)
    p.add_argument("--c2s", required=True)
    p.add_argument("--c2a")
    p.add_argument("--preset", default="online-follow")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8734)
    p.add_argument("--tick-hz", type=float, default=10.0)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SoftArmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
