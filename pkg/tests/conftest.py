"""Shared fixtures: the 9000-sample dataset and full-size trained bundles.

Training the real models takes ~15 minutes, so bundles are cached under
.cache/ keyed by the dataset digest; delete the directory to force a cold
run. The recorded wall times always reflect a real training run (they are
written only when training actually happens).
"""

import hashlib
import json
import time
from pathlib import Path

import pytest

from softarm.bundles import model_load, model_save
from softarm.datasets import collect_dataset, dataset_read, dataset_write
from softarm.geometry import ArmGeometry
from softarm.plant import BabbleSchedule, DisturbanceParams
from softarm.training import TrainConfig, train_c2a, train_c2s

CACHE = Path(__file__).resolve().parents[1] / ".cache"
DATASET_PATH = CACHE / "babble9000.dat"
TRAIN_INFO = CACHE / "train_info.json"

C2S_CONFIG = TrainConfig(epochs=300, patience=40, seed=0)
C2A_CONFIG = TrainConfig(epochs=400, patience=40, seed=0)


@pytest.fixture(scope="session")
def geometry():
    return ArmGeometry()


@pytest.fixture(scope="session")
def babble_dataset(geometry):
    CACHE.mkdir(exist_ok=True)
    if DATASET_PATH.exists():
        return dataset_read(DATASET_PATH)
    dataset = collect_dataset(
        BabbleSchedule(total_samples=9000, seed=0), DisturbanceParams(seed=0), geometry
    )
    dataset_write(dataset, DATASET_PATH)
    return dataset


def _dataset_digest() -> str:
    return hashlib.sha256(DATASET_PATH.read_bytes()).hexdigest()


@pytest.fixture(scope="session")
def trained_models(babble_dataset):
    """(c2s bundle, c2a bundle, training info dict)."""
    digest = _dataset_digest()
    if TRAIN_INFO.exists():
        info = json.loads(TRAIN_INFO.read_text())
        if (
            info.get("dataset_sha256") == digest
            and (CACHE / "c2s.model").exists()
            and (CACHE / "c2a.model").exists()
        ):
            return model_load(CACHE / "c2s.model"), model_load(CACHE / "c2a.model"), info

    info = {"dataset_sha256": digest}
    start = time.perf_counter()
    c2s, c2s_curves = train_c2s(babble_dataset, config=C2S_CONFIG)
    info["c2s_seconds"] = time.perf_counter() - start
    info["c2s_val_mae_percent"] = c2s_curves.final_val_mae_percent
    info["c2s_epochs"] = c2s_curves.epochs_run

    start = time.perf_counter()
    c2a, c2a_curves = train_c2a(babble_dataset, config=C2A_CONFIG)
    info["c2a_seconds"] = time.perf_counter() - start
    info["c2a_val_mae_percent"] = c2a_curves.final_val_mae_percent
    info["c2a_epochs"] = c2a_curves.epochs_run

    model_save(c2s, CACHE / "c2s.model")
    model_save(c2a, CACHE / "c2a.model")
    TRAIN_INFO.write_text(json.dumps(info, indent=2))
    return c2s, c2a, info
