"""Command-line entry points: dataset generation, training, evaluation, PCA
export, experiment reproduction and the control service."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import controlsvc, expharness
from .evalkit import aggregate_seeds, report_to_csv, report_to_json, pca_project
from .plantsim import build_doe_dataset, load_dataset, save_dataset
from .trainloop import (FinetuneConfig, TrainConfig, ablate_latent_predictor,
                        all_pairs_plan, exp1_plans, exp2_plans, history_to_csv,
                        make_pairs, pretrain_then_finetune, train)
from .worldmodel import encode_batch, init_model, load_model, save_model

PLANS = ("exp1", "exp2", "exp3", "exp4.1", "exp4.2")


def _plan_fns(plan: str):
    return exp1_plans if plan in ("exp1", "exp3", "exp4.1", "exp4.2") else exp2_plans


def cmd_gen_data(args) -> int:
    ds = build_doe_dataset(args.kind, args.seed)
    save_dataset(ds, args.out)
    print(f"wrote {ds.n_curves} curves ({len(ds.settings)} settings) to {args.out}")
    return 0


def cmd_train(args) -> int:
    ds = load_dataset(args.data)
    train_plan, _ = _plan_fns(args.plan)(ds)
    pairs = make_pairs(ds, train_plan)
    model = init_model(args.seed)
    if args.plan in ("exp3", "exp4.1"):
        model = ablate_latent_predictor(model)
    cfg = TrainConfig(epochs=args.epochs, seed=args.seed)
    if args.plan.startswith("exp4"):
        if not args.source_data:
            print("error: exp4 plans need --source-data", file=sys.stderr)
            return 2
        source = load_dataset(args.source_data)
        source_pairs = make_pairs(source, all_pairs_plan(source))
        model, history = pretrain_then_finetune(
            model, source_pairs, pairs, FinetuneConfig(finetune_epochs=args.epochs), cfg)
    else:
        model, history = train(model, pairs, cfg)
    save_model(model, args.out)
    history_to_csv(history, str(args.out) + ".history.csv")
    print(f"trained on {len(pairs)} pairs for {args.epochs} epochs -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    ds = load_dataset(args.data)
    _, test_plan = _plan_fns(args.plan)(ds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    for ckpt in args.ckpt:
        model = load_model(ckpt)
        report = expharness.evaluate_model(model, ds, test_plan)
        reports.append(report)
        report_to_json(report, out / (Path(ckpt).stem + ".report.json"))
    agg = aggregate_seeds(reports)
    report_to_csv(agg, out / "report.csv", label=args.plan)
    report_to_json(agg, out / "report.json")
    print(f"theta_3d={agg.theta_3d:.2f} deg  d_3d={agg.d_3d:.3f}  q_3d={agg.q_3d:.3f} "
          f"({agg.n_evaluated} pairs, {agg.n_excluded} excluded)")
    return 0


def cmd_pca(args) -> int:
    ds = load_dataset(args.data)
    model = load_model(args.ckpt)
    rows = []
    for si, p in enumerate(ds.settings):
        z = encode_batch(model, ds.curves[si]).data
        for ci in range(ds.cycles_per_setting):
            rows.append((si, ci, z[ci]))
    latents = np.stack([z for _, _, z in rows])
    proj, _, var = pca_project(latents, k=2)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["setting", "cycle", "pc1", "pc2"])
        for (si, ci, _), pt in zip(rows, proj):
            writer.writerow([si, ci, f"{pt[0]:.6g}", f"{pt[1]:.6g}"])
    print(f"wrote {len(rows)} points to {args.out} (explained variance: {var})")
    return 0


def cmd_experiment(args) -> int:
    seeds = _parse_seeds(args.seeds)
    spec = expharness.experiment_spec(args.id, target_kind=args.dataset,
                                      seeds=seeds, epochs=args.epochs)
    row = expharness.run_experiment(spec, args.out)
    print(expharness.results_table([row]))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    app = controlsvc.create_app(default_ckpt=args.ckpt,
                                debug_expose_disturbance=args.debug_expose_disturbance)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def _parse_seeds(text: str) -> tuple[int, ...]:
    if ".." in text:
        lo, hi = text.split("..")
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(s) for s in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="awm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic DOE dataset")
    p.add_argument("--kind", choices=("d1", "d2", "d3"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen_data)

    p = sub.add_parser("train", help="train a world model on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--plan", choices=PLANS, default="exp1")
    p.add_argument("--source-data", help="pre-training dataset (exp4 plans)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate checkpoints on a plan's test pairs")
    p.add_argument("--ckpt", action="append", required=True,
                   help="checkpoint path; repeat for multi-seed aggregation")
    p.add_argument("--data", required=True)
    p.add_argument("--plan", choices=PLANS, default="exp1")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("pca", help="export 2D PCA latent coordinates")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_pca)

    p = sub.add_parser("experiment", help="run a full experiment end to end")
    p.add_argument("--id", choices=PLANS, required=True)
    p.add_argument("--dataset", choices=("d1", "d2"), default="d1")
    p.add_argument("--seeds", default="0..5", help="e.g. 0..5 or 0,1,2")
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_experiment)

    p = sub.add_parser("serve", help="start the control-loop HTTP service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--debug-expose-disturbance", action="store_true")
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
