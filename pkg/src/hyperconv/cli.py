"""Command-line interface: partition, train, eval, query, sweep.

JSON and CSV outputs carry raw [0, 1] metrics; the human-readable
summaries format them as percentages with one decimal.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .checkpoint import load_checkpoint, save_checkpoint
from .data import load_knowledge, load_simple
from .partition import cut, partition
from .training import (
    TrainConfig,
    evaluate,
    predict_edge,
    predict_relation,
    train_classification,
    train_completion,
    train_prediction,
)

logger = logging.getLogger(__name__)

_PRIMARY_METRIC = {"completion": "mrr", "prediction": "auc", "classification": "accuracy"}


def _percent(x: float) -> str:
    return f"{100.0 * x:.1f}"


def _parse_ratios(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated fractions")
    return tuple(parts)


def _load_structure(path: Path):
    """Any dataset as a bare hypergraph: knowledge dir or edge-list file."""
    if path.is_dir():
        kh, _ = load_knowledge(path)
        return kh.base
    h, _, _ = load_simple(path)
    return h


def _config_from_args(args) -> TrainConfig:
    return TrainConfig(
        task=args.task,
        clusters=args.k,
        omega=args.omega,
        bilinear=args.bilinear == "on",
        hidden_dim=args.dim,
        epochs=args.epochs,
        patience=args.patience,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        seed=args.seed,
        split_ratios=args.ratios,
    )


def _run_training(cfg: TrainConfig, data_path: Path):
    """Load data for the task, train, and return (model, report)."""
    if cfg.task in ("completion", "classification"):
        kh, splits = load_knowledge(data_path)
        train_fn = train_completion if cfg.task == "completion" else train_classification
        model, report = train_fn(kh, cfg, splits)
    else:
        h, splits, vocab = load_simple(data_path, cfg.split_ratios, cfg.seed)
        model, report = train_prediction(h, cfg, splits=splits)
        model.entity_names = vocab
    return model, report


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--task", required=True, choices=list(_PRIMARY_METRIC))
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--k", type=int, default=16, help="cluster count")
    p.add_argument("--omega", choices=["mean", "var", "minmax"], default=None,
                   help="spread statistic (default depends on task)")
    p.add_argument("--bilinear", choices=["on", "off"], default="on")
    p.add_argument("--dim", type=int, default=64, help="hidden/representation width")
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--patience", type=int, default=20)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ratios", type=_parse_ratios, default=(0.7, 0.1, 0.2),
                   help="train,valid,test fractions for datasets without split files")


def _cmd_partition(args) -> int:
    h = _load_structure(args.data)
    c = partition(h, args.k, seed=args.seed, balance_epsilon=args.epsilon)
    lines = "".join(f"{v} {c.cluster_of[v]}\n" for v in range(h.num_nodes))
    if args.output:
        Path(args.output).write_text(lines, encoding="utf-8")
    else:
        sys.stdout.write(lines)
    print(f"cut: {cut(h, c)}", file=sys.stderr if not args.output else sys.stdout)
    return 0


def _cmd_train(args) -> int:
    cfg = _config_from_args(args)
    model, report = _run_training(cfg, args.data)
    doc = json.dumps(report.to_dict(), sort_keys=True, indent=2)
    if args.output:
        Path(args.output).write_text(doc + "\n", encoding="utf-8")
    else:
        print(doc)
    if args.checkpoint:
        save_checkpoint(model, args.checkpoint)
    summary = ", ".join(
        f"{name} {_percent(value)}%" for name, value in report.test_metrics.items()
    )
    print(
        f"{cfg.task}: {summary} (best epoch {report.best_epoch}, "
        f"{report.wall_seconds:.1f}s)",
        file=sys.stderr,
    )
    return 0


def _cmd_eval(args) -> int:
    model = load_checkpoint(args.checkpoint)
    if model.task in ("completion", "classification"):
        kh, splits = load_knowledge(args.data)
        metrics = evaluate(model, kh, splits)
    else:
        h, splits, _ = load_simple(
            args.data, model.config.split_ratios, model.config.seed
        )
        metrics = evaluate(model, h, splits)
    print(json.dumps(metrics, sort_keys=True))
    return 0


def _resolve_nodes(model, tokens: list[str]) -> list[int]:
    names = {name: i for i, name in enumerate(model.entity_names or ())}
    ids = []
    for tok in tokens:
        if tok in names:
            ids.append(names[tok])
        elif tok.isdigit():
            ids.append(int(tok))
        else:
            raise ValueError(f"unknown node {tok!r}")
    return ids


def _cmd_query(args) -> int:
    model = load_checkpoint(args.checkpoint)
    tokens = [t for t in args.nodes.split(",") if t]
    if not tokens:
        raise ValueError("empty candidate")
    ids = _resolve_nodes(model, tokens)
    if model.task == "prediction":
        score = predict_edge(model, ids)
        print(f"edge score: {score:.6f}")
        return 0
    ranked = predict_relation(model, ids)
    names = model.relation_names or tuple(
        str(i) for i in range(len(ranked))
    )
    for rel, score in ranked:
        print(f"{names[rel]}\t{score:.6f}")
    return 0


def _cmd_sweep(args) -> int:
    base = _config_from_args(args)
    values = [int(v) for v in args.values.split(",")]
    field_of = {"k": "clusters", "dim": "hidden_dim", "epochs": "epochs", "seed": "seed"}
    field = field_of[args.param]
    metric_name = _PRIMARY_METRIC[base.task]
    rows = []
    for value in values:
        cfg = replace(base, **{field: value})
        _, report = _run_training(cfg, args.data)
        rows.append((value, report.test_metrics[metric_name]))
        logger.info("%s=%d -> %s %.4f", args.param, value, metric_name, rows[-1][1])
    sink = open(args.output, "w", newline="", encoding="utf-8") if args.output else sys.stdout
    try:
        writer = csv.writer(sink)
        writer.writerow([args.param, metric_name])
        writer.writerows(rows)
    finally:
        if args.output:
            sink.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperconv",
        description="Hypergraph partitioning and hyperedge convolution tasks",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partition", help="cluster nodes, write `node cluster` lines")
    p.add_argument("data", type=Path, help="knowledge dir or hyperedge file")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", type=Path)
    p.set_defaults(func=_cmd_partition)

    p = sub.add_parser("train", help="train a task model")
    _add_train_flags(p)
    p.add_argument("-o", "--output", type=Path, help="report JSON path (default stdout)")
    p.add_argument("--checkpoint", type=Path, help="model checkpoint path")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="recompute test metrics from a checkpoint")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("query", help="score a node set against a checkpoint")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--nodes", required=True, help="comma-separated names or ids")
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("sweep", help="train across a parameter grid, emit CSV")
    _add_train_flags(p)
    p.add_argument("--param", required=True, choices=["k", "dim", "epochs", "seed"])
    p.add_argument("--values", required=True, help="comma-separated integers")
    p.add_argument("-o", "--output", type=Path, help="CSV path (default stdout)")
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
