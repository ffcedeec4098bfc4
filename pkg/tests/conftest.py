"""Shared fixtures: datasets and trained checkpoints for the acceptance suite.

Full training runs take tens of minutes on one core, so trained models are
cached as checkpoints under tests/artifacts/ and only rebuilt when missing.
Delete the directory to force a from-scratch rebuild.
"""

from __future__ import annotations

import functools
import re
from pathlib import Path

import pytest

from awm.plantsim import DoeDataset, build_doe_dataset
from awm.trainloop import (TrainConfig, ablate_latent_predictor, exp1_plans,
                           exp2_plans, make_pairs, train)
from awm.worldmodel import WorldModel, init_model, load_model, save_model

ARTIFACTS = Path(__file__).parent / "artifacts"
FULL_EPOCHS = 500

_PLAN_FNS = {"exp1": exp1_plans, "exp2": exp2_plans, "exp3": exp1_plans}


@functools.lru_cache(maxsize=None)
def dataset(kind: str = "d1", seed: int = 0) -> DoeDataset:
    return build_doe_dataset(kind, seed)


def trained_model(plan: str, seed: int, epochs: int = FULL_EPOCHS) -> WorldModel:
    """Load (or train and cache) the checkpoint for one experiment arm."""
    ablated = plan == "exp3"
    path = ARTIFACTS / f"{plan}-seed{seed}.awm1"
    if path.exists():
        return load_model(path, ablated=ablated)
    ds = dataset("d1", 0)
    train_plan, _ = _PLAN_FNS[plan](ds)
    pairs = make_pairs(ds, train_plan)
    model = init_model(seed)
    if ablated:
        model = ablate_latent_predictor(model)
    model, _ = train(model, pairs, TrainConfig(epochs=epochs, seed=seed))
    ARTIFACTS.mkdir(exist_ok=True)
    save_model(model, path)
    return model


def ensure_all_artifacts() -> None:
    """Pre-build every checkpoint the acceptance suite needs (long)."""
    for plan, seed in [("exp1", 0), ("exp1", 1), ("exp1", 2), ("exp2", 0), ("exp3", 0)]:
        trained_model(plan, seed)
        print(f"{plan} seed {seed}: ready", flush=True)


@pytest.fixture(scope="session")
def d1_dataset() -> DoeDataset:
    return dataset("d1", 0)


@pytest.fixture(scope="session")
def exp1_models() -> list[WorldModel]:
    return [trained_model("exp1", s) for s in (0, 1, 2)]


# -- acceptance-criteria summary ---------------------------------------------

_criteria: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    m = re.search(r"test_acceptance\.py::test_(p\d)_", report.nodeid)
    if m:
        key = m.group(1).upper()
        # a criterion backed by several parametrized cases fails if any case does
        if _criteria.get(key) != "failed":
            _criteria[key] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    labels = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}
    for key in sorted(_criteria):
        terminalreporter.write_line(f"{key}: {labels.get(_criteria[key], _criteria[key])}")
