"""Benchmark command line: train, attack, robust-train, eval, sweep-n.

Every command writes a deterministic ``report.json``, a volatile
``timing.json`` and a flat ``results.csv`` into ``--out``.  Budgets are given
as node-count fractions and resolved with a ceiling.  Exit codes: 0 success,
2 usage or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .attacks import AttackBudget, dice_attack, greedy_attack, zeroth_order_attack
from .data import Graph, load_dataset, make_splits, pseudo_labels, sha256_file
from .gcn import TrainConfig, misclassification, train_natural
from .reports import (load_checkpoint, masks_from_json, masks_to_json,
                      save_checkpoint, summarize, write_run_report)
from .robust import RobustTrainConfig, robust_train

TRAIN_KEYS = ("hidden", "learning_rate", "weight_decay", "dropout", "epochs",
              "early_stopping")
SPLIT_KEYS = ("train_per_class", "val_size", "test_size")
ROBUST_KEYS = ("iterations", "robust_learning_rate", "inner_attack", "hidden")


def _load_config_file(path):
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"config file not found: {p}")
    return json.loads(p.read_text())


def _seed_list(args) -> list:
    if args.seed is not None:
        return [args.seed]
    return list(range(args.seeds))


def _resolve_budget(graph: Graph, args) -> AttackBudget:
    max_edges = math.ceil(args.budget_frac * graph.n)
    step_edges = math.ceil(args.step_frac * graph.n)
    return AttackBudget(max_edges=max_edges, step_edges=max(step_edges, 1))


def _dataset_checksums(dataset_dir) -> dict:
    manifest = json.loads((Path(dataset_dir) / "manifest.json").read_text())
    return manifest["checksums"]


def _split_sizes(graph: Graph, config: dict) -> dict:
    return {
        "train_per_class": config.get("train_per_class", 20),
        "val_size": config.get("val_size", 500),
        "test_size": config.get("test_size", 1000),
    }


def _train_config(config: dict) -> TrainConfig:
    kwargs = {k: config[k] for k in TRAIN_KEYS if k in config}
    return TrainConfig(**kwargs)


def _load_graph(args) -> Graph:
    dataset_dir = Path(args.dataset)
    if not dataset_dir.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {dataset_dir}")
    return load_dataset(dataset_dir)


def _checkpoint_for_seed(root, seed):
    root = Path(root)
    if (root / "checkpoint.json").is_file():
        return root
    cand = root / f"seed-{seed}"
    if (cand / "checkpoint.json").is_file():
        return cand
    raise FileNotFoundError(
        f"no checkpoint for seed {seed} under {root} "
        f"(expected {cand}/checkpoint.json)")


def _graph_with_checkpoint_masks(graph: Graph, manifest: dict,
                                 dataset_dir) -> Graph:
    recorded = manifest.get("dataset", {}).get("checksums")
    current = _dataset_checksums(dataset_dir)
    if recorded is not None and recorded != current:
        raise ValueError(
            "checkpoint was trained on a different dataset "
            f"(checksums differ for {dataset_dir})")
    train_idx, val_idx, test_idx = masks_from_json(manifest["masks"])
    return graph.with_masks(train_idx, val_idx, test_idx)


def cmd_train(args) -> int:
    config = _load_config_file(args.config)
    graph = _load_graph(args)
    seeds = _seed_list(args)
    out = Path(args.out)
    sizes = _split_sizes(graph, config)
    tconf = _train_config(config)

    rows, csv_rows, per_seed_wall = [], [], {}
    for seed in seeds:
        masks = make_splits(graph, seed, **sizes)
        g = graph.with_masks(*masks)
        t0 = time.perf_counter()
        params = train_natural(g, tconf, seed=seed)
        wall = time.perf_counter() - t0
        ckpt_dir = save_checkpoint(
            out / f"seed-{seed}", params,
            {"seed": seed, "kind": "natural",
             "dataset": {"name": graph.name,
                         "checksums": _dataset_checksums(args.dataset)},
             "train_config": tconf.__dict__, "split_sizes": sizes,
             "masks": masks_to_json(*masks)})
        params, _ = load_checkpoint(ckpt_dir)  # evaluate what was persisted
        mis = misclassification(params, g, g.test_idx)
        rows.append({"seed": seed, "misclassification_pct": 100.0 * mis})
        per_seed_wall[str(seed)] = wall
        csv_rows.append({"command": "train", "dataset": graph.name,
                         "method": "clean", "budget_edges": 0, "step_edges": 0,
                         "seed": seed, "misclassification_pct": 100.0 * mis,
                         "wall_clock_s": wall})

    stats = summarize(r["misclassification_pct"] for r in rows)
    report = {
        "command": "train",
        "dataset": {"name": graph.name, "dir": str(args.dataset),
                    "checksums": _dataset_checksums(args.dataset)},
        "config": {"train": tconf.__dict__, "split_sizes": sizes,
                   "seeds": seeds},
        "rows": [{"method": "clean", "per_seed": rows,
                  "mean_pct": stats["mean"], "std_pct": stats["std"]}],
    }
    write_run_report(out, report, {"wall_clock_s": per_seed_wall}, csv_rows)
    print(f"train: clean misclassification "
          f"{stats['mean']:.2f} +- {stats['std']:.2f} % over {len(seeds)} seeds")
    return 0


def _run_attack_once(graph: Graph, params, method: str, budget: AttackBudget,
                     seed: int):
    labels_attack = pseudo_labels(graph, params)
    if method == "gta":
        return greedy_attack(graph, params, budget, graph.test_idx, labels_attack)
    if method == "zo-gta":
        return zeroth_order_attack(graph, params, budget, graph.test_idx,
                                   labels_attack, seed=seed)
    if method == "dice":
        return dice_attack(graph, labels_attack, budget.max_edges, seed=seed,
                           victim_params=params)
    raise ValueError(f"unknown attack method {method!r}")


def _attack_rows(graph_base: Graph, args, methods, budgets, out: Path):
    """Shared per-(method, budget, seed) attack loop for attack/eval/sweep-n."""
    seeds = _seed_list(args)
    rows, csv_rows, timing = [], [], {}
    for method, budget in ((m, b) for m in methods for b in budgets):
        per_seed, walls = [], {}
        for seed in seeds:
            ckpt_dir = _checkpoint_for_seed(args.checkpoint, seed)
            params, manifest = load_checkpoint(ckpt_dir)
            graph = _graph_with_checkpoint_masks(graph_base, manifest,
                                                 args.dataset)
            if method == "clean":
                mis = misclassification(params, graph, graph.test_idx)
                wall = 0.0
                iterations = 0
            else:
                rep = _run_attack_once(graph, params, method, budget, seed)
                mis = rep.misclassification
                wall = rep.wall_clock
                iterations = max(len(rep.loss_trace) - 1, 0)
                flips_name = (f"flips-{method}-n{budget.step_edges}"
                              f"-seed{seed}.txt")
                (out / flips_name).write_text(rep.perturbation.to_text())
            per_seed.append({"seed": seed,
                             "misclassification_pct": 100.0 * mis})
            walls[str(seed)] = wall
            csv_rows.append({"command": args.command, "dataset": graph.name,
                             "method": method,
                             "budget_edges": budget.max_edges,
                             "step_edges": budget.step_edges, "seed": seed,
                             "misclassification_pct": 100.0 * mis,
                             "wall_clock_s": wall})
        stats = summarize(r["misclassification_pct"] for r in per_seed)
        rows.append({"method": method, "budget_edges": budget.max_edges,
                     "step_edges": budget.step_edges, "per_seed": per_seed,
                     "mean_pct": stats["mean"], "std_pct": stats["std"]})
        timing[f"{method}-n{budget.step_edges}"] = walls
    return rows, csv_rows, timing


def cmd_attack(args) -> int:
    graph = _load_graph(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    budget = _resolve_budget(graph, args)
    rows, csv_rows, timing = _attack_rows(graph, args, [args.method], [budget], out)
    report = {
        "command": "attack",
        "dataset": {"name": graph.name, "dir": str(args.dataset),
                    "checksums": _dataset_checksums(args.dataset)},
        "config": {"method": args.method, "budget_frac": args.budget_frac,
                   "step_frac": args.step_frac,
                   "budget_edges": budget.max_edges,
                   "step_edges": budget.step_edges, "seeds": _seed_list(args),
                   "checkpoint": str(args.checkpoint)},
        "rows": rows,
    }
    write_run_report(out, report, {"wall_clock_s": timing}, csv_rows)
    r = rows[0]
    print(f"attack {args.method}: misclassification "
          f"{r['mean_pct']:.2f} +- {r['std_pct']:.2f} %")
    return 0


def cmd_robust_train(args) -> int:
    config = _load_config_file(args.config)
    graph = _load_graph(args)
    seeds = _seed_list(args)
    out = Path(args.out)
    sizes = _split_sizes(graph, config)
    budget_holder = []

    rows, csv_rows, per_seed_wall = [], [], {}
    for seed in seeds:
        masks = make_splits(graph, seed, **sizes)
        g = graph.with_masks(*masks)
        budget = _resolve_budget(g, args)
        budget_holder.append(budget)
        rconf = RobustTrainConfig(
            iterations=config.get("iterations", 1000),
            learning_rate=config.get("robust_learning_rate", 0.01),
            budget=budget,
            inner_attack=config.get("inner_attack", "gta"),
            hidden=config.get("hidden", 16),
            seed=seed)
        t0 = time.perf_counter()
        params = robust_train(g, rconf)
        wall = time.perf_counter() - t0
        ckpt_dir = save_checkpoint(
            out / f"seed-{seed}", params,
            {"seed": seed, "kind": "robust",
             "dataset": {"name": graph.name,
                         "checksums": _dataset_checksums(args.dataset)},
             "robust_config": {
                 "iterations": rconf.iterations,
                 "learning_rate": rconf.learning_rate,
                 "budget_edges": budget.max_edges,
                 "step_edges": budget.step_edges,
                 "inner_attack": str(rconf.inner_attack),
                 "hidden": rconf.hidden},
             "split_sizes": sizes, "masks": masks_to_json(*masks)})
        params, _ = load_checkpoint(ckpt_dir)
        mis = misclassification(params, g, g.test_idx)
        rows.append({"seed": seed, "misclassification_pct": 100.0 * mis})
        per_seed_wall[str(seed)] = wall
        csv_rows.append({"command": "robust-train", "dataset": graph.name,
                         "method": "clean-robust",
                         "budget_edges": budget.max_edges,
                         "step_edges": budget.step_edges, "seed": seed,
                         "misclassification_pct": 100.0 * mis,
                         "wall_clock_s": wall})

    stats = summarize(r["misclassification_pct"] for r in rows)
    budget = budget_holder[0]
    report = {
        "command": "robust-train",
        "dataset": {"name": graph.name, "dir": str(args.dataset),
                    "checksums": _dataset_checksums(args.dataset)},
        "config": {"iterations": config.get("iterations", 1000),
                   "robust_learning_rate": config.get("robust_learning_rate", 0.01),
                   "inner_attack": config.get("inner_attack", "gta"),
                   "hidden": config.get("hidden", 16),
                   "budget_frac": args.budget_frac,
                   "step_frac": args.step_frac,
                   "budget_edges": budget.max_edges,
                   "step_edges": budget.step_edges,
                   "split_sizes": sizes, "seeds": seeds},
        "rows": [{"method": "clean-robust", "per_seed": rows,
                  "mean_pct": stats["mean"], "std_pct": stats["std"]}],
    }
    write_run_report(out, report, {"wall_clock_s": per_seed_wall}, csv_rows)
    print(f"robust-train: clean misclassification "
          f"{stats['mean']:.2f} +- {stats['std']:.2f} %")
    return 0


def cmd_eval(args) -> int:
    graph = _load_graph(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    budget = _resolve_budget(graph, args)
    methods = [m.strip() for m in args.method.split(",") if m.strip()]
    rows, csv_rows, timing = _attack_rows(graph, args, methods, [budget], out)
    report = {
        "command": "eval",
        "dataset": {"name": graph.name, "dir": str(args.dataset),
                    "checksums": _dataset_checksums(args.dataset)},
        "config": {"methods": methods, "budget_frac": args.budget_frac,
                   "step_frac": args.step_frac,
                   "budget_edges": budget.max_edges,
                   "step_edges": budget.step_edges, "seeds": _seed_list(args),
                   "checkpoint": str(args.checkpoint)},
        "rows": rows,
    }
    write_run_report(out, report, {"wall_clock_s": timing}, csv_rows)
    for r in rows:
        print(f"eval {r['method']}: {r['mean_pct']:.2f} +- {r['std_pct']:.2f} %")
    return 0


def cmd_sweep_n(args) -> int:
    graph = _load_graph(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fracs = [float(tok) for tok in args.step_frac.split(",") if tok.strip()]
    if not fracs:
        raise ValueError("sweep-n needs a nonempty --step-frac grid")
    max_edges = math.ceil(args.budget_frac * graph.n)
    budgets = [AttackBudget(max_edges, max(math.ceil(f * graph.n), 1))
               for f in fracs]
    methods = [m.strip() for m in args.method.split(",") if m.strip()]
    rows, csv_rows, timing = _attack_rows(graph, args, methods, budgets, out)
    report = {
        "command": "sweep-n",
        "dataset": {"name": graph.name, "dir": str(args.dataset),
                    "checksums": _dataset_checksums(args.dataset)},
        "config": {"methods": methods, "budget_frac": args.budget_frac,
                   "step_fracs": fracs, "budget_edges": max_edges,
                   "seeds": _seed_list(args),
                   "checkpoint": str(args.checkpoint)},
        "rows": rows,
    }
    write_run_report(out, report, {"wall_clock_s": timing}, csv_rows)
    for r in rows:
        print(f"sweep-n {r['method']} n={r['step_edges']}: "
              f"{r['mean_pct']:.2f} +- {r['std_pct']:.2f} %")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topoattack",
        description="GCN topology-attack and robust-training benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, checkpoint=False, method=None):
        p.add_argument("--dataset", required=True, help="dataset directory")
        p.add_argument("--seed", type=int, default=None,
                       help="single seed (overrides --seeds)")
        p.add_argument("--seeds", type=int, default=5,
                       help="number of seeds 0..K-1 (default 5)")
        p.add_argument("--budget-frac", type=float, default=0.05,
                       help="edge budget as a fraction of node count")
        p.add_argument("--step-frac", type=str, default="0.05",
                       help="flips per iteration as a fraction of node count")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--config", default=None, help="JSON config file")
        if checkpoint:
            p.add_argument("--checkpoint", required=True,
                           help="checkpoint directory (train/robust-train output)")
        if method is not None:
            p.add_argument("--method", default=method,
                           help="attack method(s), comma separated")

    p_train = sub.add_parser("train", help="train the natural model")
    common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_attack = sub.add_parser("attack", help="attack a trained model")
    common(p_attack, checkpoint=True, method="gta")
    p_attack.set_defaults(func=cmd_attack)

    p_rob = sub.add_parser("robust-train", help="min-max adversarial training")
    common(p_rob)
    p_rob.set_defaults(func=cmd_robust_train)

    p_eval = sub.add_parser("eval", help="evaluate a model under attacks")
    common(p_eval, checkpoint=True, method="clean,gta,zo-gta,dice")
    p_eval.set_defaults(func=cmd_eval)

    p_sweep = sub.add_parser("sweep-n", help="sweep the greedy step size")
    common(p_sweep, checkpoint=True, method="gta,zo-gta")
    p_sweep.set_defaults(func=cmd_sweep_n)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in ("train", "attack", "robust-train", "eval"):
        # these accept a single fraction, not a grid
        try:
            args.step_frac = float(args.step_frac)
        except ValueError:
            parser.error(f"--step-frac must be a number, got {args.step_frac!r}")
    try:
        return args.func(args)
    except (FileNotFoundError, NotADirectoryError, ValueError,
            json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, FloatingPointError, OverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
