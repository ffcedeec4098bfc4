"""One-command reproduction of the four experiment setups on the synthetic
datasets, with per-seed artifacts and an aggregated results table.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .evalkit import ActionPair, MetricReport, aggregate_seeds, evaluate, report_to_json
from .plantsim import build_doe_dataset
from .trainloop import (FinetuneConfig, TrainConfig, TrainPair, ablate_latent_predictor,
                        all_pairs_plan, exp1_plans, exp2_plans, history_to_csv,
                        make_pairs, pretrain_then_finetune, train)
from .worldmodel import encode_batch, init_model, predict_action, save_model

import numpy as np

DEFAULT_SEEDS = (0, 1, 2, 3, 4, 5)


@dataclass(frozen=True)
class ExperimentSpec:
    id: str
    target_kind: str = "d1"
    source_kind: str | None = None      # pre-training dataset, exp4.x only
    ablated: bool = False               # drop the latent predictor
    pretrain: bool = False
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    data_seed: int = 1234
    epochs: int = 500
    plan: str = "exp1"                  # pairing plan family: exp1 | exp2

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("seeds list must be non-empty")
        if self.pretrain and self.source_kind is None:
            raise ValueError("pre-training requires a source dataset kind")


def experiment_spec(exp_id: str, target_kind: str = "d1",
                    seeds=DEFAULT_SEEDS, epochs: int = 500,
                    data_seed: int = 1234) -> ExperimentSpec:
    base = dict(target_kind=target_kind, seeds=tuple(seeds), epochs=epochs,
                data_seed=data_seed)
    table = {
        "exp1": dict(plan="exp1"),
        "exp2": dict(plan="exp2"),
        "exp3": dict(plan="exp1", ablated=True),
        "exp4.1": dict(plan="exp1", ablated=True, pretrain=True, source_kind="d3"),
        "exp4.2": dict(plan="exp1", pretrain=True, source_kind="d3"),
    }
    if exp_id not in table:
        raise ValueError(f"unknown experiment id {exp_id!r}")
    return ExperimentSpec(id=exp_id, **table[exp_id], **base)


def evaluate_model(model, dataset, test_plan) -> MetricReport:
    """Encode every test pair, predict actions, and score them grouped by
    reference vertex."""
    pairs = make_pairs(dataset, test_plan)
    # encode each unique curve once; pairs reuse them heavily
    ids = sorted({p.ref_id for p in pairs} | {p.obs_id for p in pairs})
    curves = np.stack([dataset.curves[si, ci] for si, ci in ids])
    latents = {}
    for start in range(0, len(ids), 256):
        z = encode_batch(model, curves[start:start + 256]).data
        for k, cid in enumerate(ids[start:start + 256]):
            latents[cid] = z[k]
    action_pairs = [ActionPair(truth=p.a,
                               pred=predict_action(model, latents[p.ref_id], latents[p.obs_id]),
                               vertex=p.ref_id[0])
                    for p in pairs]
    return evaluate(action_pairs)


def run_seed(spec: ExperimentSpec, seed: int, dataset, source_dataset=None,
             out_dir: Path | None = None) -> tuple[MetricReport, object]:
    plans = exp1_plans if spec.plan == "exp1" else exp2_plans
    train_plan, test_plan = plans(dataset)
    train_pairs = make_pairs(dataset, train_plan)

    model = init_model(seed)
    if spec.ablated:
        model = ablate_latent_predictor(model)
    cfg = TrainConfig(epochs=spec.epochs, seed=seed)
    if spec.pretrain:
        source_pairs = make_pairs(source_dataset, all_pairs_plan(source_dataset))
        fcfg = FinetuneConfig(finetune_epochs=spec.epochs)
        model, history = pretrain_then_finetune(model, source_pairs, train_pairs, fcfg, cfg)
    else:
        model, history = train(model, train_pairs, cfg)

    report = evaluate_model(model, dataset, test_plan)
    if out_dir is not None:
        seed_dir = out_dir / f"seed-{seed}"
        seed_dir.mkdir(parents=True, exist_ok=True)
        save_model(model, seed_dir / "ckpt.awm1")
        history_to_csv(history, seed_dir / "history.csv")
        report_to_json(report, seed_dir / "report.json")
    return report, model


def run_experiment(spec: ExperimentSpec, out_dir) -> dict:
    """generate -> pair -> (pretrain) -> train -> evaluate -> aggregate."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "config.json", "w", encoding="utf-8") as fh:
        json.dump(dataclasses.asdict(spec), fh, indent=2)

    dataset = build_doe_dataset(spec.target_kind, spec.data_seed)
    source = build_doe_dataset(spec.source_kind, spec.data_seed + 1) if spec.pretrain else None

    reports = []
    for seed in spec.seeds:
        report, _ = run_seed(spec, seed, dataset, source, out_dir)
        reports.append(report)
    agg = aggregate_seeds(reports)
    row = {"experiment": spec.id, "dataset": spec.target_kind, **agg.row()}
    with open(out_dir / "aggregate.json", "w", encoding="utf-8") as fh:
        json.dump(row, fh, indent=2)
    write_table([row], out_dir / "table.csv")
    return row


METRIC_COLS = ("theta_2d", "d_2d", "q_2d", "theta_3d", "d_3d", "q_3d")


def write_table(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("experiment,dataset," + ",".join(METRIC_COLS) + "\n")
        for row in rows:
            fh.write(f"{row['experiment']},{row['dataset']},"
                     + ",".join(f"{row[c]:.4f}" for c in METRIC_COLS) + "\n")


def results_table(rows: list[dict]) -> str:
    """Human-readable table in experiment-id order; the best (minimum) value
    in each metric column is starred."""
    if not rows:
        raise ValueError("no result rows")
    rows = sorted(rows, key=lambda r: (r["experiment"], r["dataset"]))
    best = {c: min(r[c] for r in rows) for c in METRIC_COLS}
    header = f"{'experiment':<10} {'dataset':<8}" + "".join(f"{c:>11}" for c in METRIC_COLS)
    lines = [header]
    for r in rows:
        cells = []
        for c in METRIC_COLS:
            mark = "*" if r[c] == best[c] else " "
            cells.append(f"{r[c]:>10.4f}{mark}")
        lines.append(f"{r['experiment']:<10} {r['dataset']:<8}" + "".join(cells))
    return "\n".join(lines)
