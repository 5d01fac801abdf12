"""Train the forward model and the controller on one babble dataset.

Writes bundles to models/ by default (used by demos 04-06). The full-size
run takes roughly 10-15 minutes on a laptop CPU; pass --quick for a small
sanity-check configuration.

Run:  python3 demos/03_train_models.py [--quick] [--out-dir models]
"""

import argparse
import time
from pathlib import Path

from softarm.bundles import model_save
from softarm.datasets import collect_dataset, estimation_errors_deg
from softarm.geometry import ArmGeometry
from softarm.networks import BiLstmSpec
from softarm.plant import BabbleSchedule, DisturbanceParams
from softarm.training import TrainConfig, train_c2a, train_c2s

parser = argparse.ArgumentParser()
parser.add_argument("--quick", action="store_true")
parser.add_argument("--samples", type=int, default=9000)
parser.add_argument("--seed", type=int, default=0)
parser.add_argument("--out-dir", default="models")
args = parser.parse_args()

out = Path(args.out_dir)
out.mkdir(parents=True, exist_ok=True)
geom = ArmGeometry()

samples = 1500 if args.quick else args.samples
print(f"collecting {samples} babble samples...")
dataset = collect_dataset(BabbleSchedule(total_samples=samples, seed=args.seed),
                          DisturbanceParams(seed=args.seed), geom)
print("estimation errors [deg]:", estimation_errors_deg(dataset).round(2))

if args.quick:
    c2s_spec = BiLstmSpec(2, 16, 3, 6)
    c2a_spec = BiLstmSpec(2, 16, 31, 3)
    config = TrainConfig(epochs=15, seed=args.seed)
else:
    from softarm.networks import C2A_SPEC, C2S_SPEC

    c2s_spec, c2a_spec = C2S_SPEC, C2A_SPEC
    config = TrainConfig(epochs=300, patience=40, seed=args.seed)

t0 = time.perf_counter()
c2s, curves = train_c2s(dataset, spec=c2s_spec, config=config)
print(f"forward model: {curves.epochs_run} epochs, "
      f"validation error {curves.final_val_mae_percent:.2f}% of range "
      f"({time.perf_counter() - t0:.0f}s)")
model_save(c2s, out / "c2s.model")

t0 = time.perf_counter()
c2a, curves_a = train_c2a(dataset, spec=c2a_spec, config=config)
print(f"controller: {curves_a.epochs_run} epochs, "
      f"validation error {curves_a.final_val_mae_percent:.2f}% of range "
      f"({time.perf_counter() - t0:.0f}s)")
model_save(c2a, out / "c2a.model")
print(f"wrote {out / 'c2s.model'} and {out / 'c2a.model'}")
