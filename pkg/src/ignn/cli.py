"""Command-line entry point: ``ignn {generate,train,evaluate,sweep,hash-features}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .errors import IGNNError
from .graph import generate_communities, write_edge_list, write_labels
from .hashfeat import hash_matrix
from .models import load_checkpoint, save_checkpoint

log = logging.getLogger("ignn")


def _cmd_generate(args) -> int:
    if args.dataset != "communities":
        raise IGNNError(f"only the communities generator is built in, got {args.dataset!r}")
    g, part = generate_communities(args.cliques, args.size, args.p, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_edge_list(g, out / "edges.txt")
    write_labels(part, out / "labels.txt")
    print(f"wrote {g.num_nodes} nodes, {g.num_edges} edges to {out}")
    return 0


def _cmd_train(args) -> int:
    from .experiment.config import load_config, parse_override
    from .experiment.data import load_dataset, prepare
    from .experiment.train import run

    cfg = load_config(args.config, [parse_override(o) for o in args.override])
    out = Path(args.out or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = prepare(load_dataset(cfg.data), cfg.task, cfg.seed, cfg.train_frac, cfg.val_frac, cfg.negative_ratio)
    weights, history, record = run(cfg, data)
    save_checkpoint(
        out / "checkpoint.json",
        cfg.model,
        weights,
        extra={"train_config": cfg.to_dict(), "best_epoch": history.best_epoch},
    )
    (out / "metrics.json").write_text(record.to_json() + "\n")
    rows = history.to_rows()
    with open(out / "history.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    print(record.to_json())
    return 0


def _cmd_evaluate(args) -> int:
    from .experiment.config import TrainConfig
    from .experiment.data import load_dataset_dir, prepare
    from .experiment.train import evaluate

    model_cfg, weights, extra = load_checkpoint(args.checkpoint)
    if "train_config" not in extra:
        raise IGNNError(f"{args.checkpoint}: checkpoint carries no training config")
    cfg = TrainConfig.from_dict(extra["train_config"])
    if cfg.model != model_cfg:
        raise IGNNError(f"{args.checkpoint}: model section disagrees with the stored training config")
    dataset = load_dataset_dir(args.data, name=cfg.data.dataset)
    data = prepare(dataset, cfg.task, cfg.seed, cfg.train_frac, cfg.val_frac, cfg.negative_ratio)
    record = evaluate(weights, cfg, data, split=args.split)
    print(record.to_json())
    return 0


def _cmd_sweep(args) -> int:
    from .experiment.sweep import load_sweep, sweep, write_csv

    base, axes, seeds, workers = load_sweep(args.config)
    out = Path(args.out)
    cells_dir = Path(args.cells) if args.cells else out.with_name(out.stem + "_cells")
    result = sweep(base, axes, seeds, cells_dir=cells_dir, workers=args.workers or workers)
    write_csv(out, result.cells)
    for row in result.best.values():
        print(json.dumps(row))
    print(f"wrote {len(result.cells)} rows to {out} ({len(result.skipped)} invalid cells skipped)")
    return 0


def _cmd_hash_features(args) -> int:
    with open(args.ids, encoding="utf-8") as fh:
        ids = [line.strip() for line in fh if line.strip()]
    if not ids:
        raise IGNNError(f"{args.ids}: no ids")
    h = hash_matrix(ids, args.n)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in h:
            w.writerow([repr(float(v)) for v in row])
    print(f"wrote {len(ids)} x {args.n} hash features to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ignn", description="Distance-aware GNN embeddings")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic community graph")
    g.add_argument("--dataset", default="communities")
    g.add_argument("--cliques", type=int, default=20)
    g.add_argument("--size", type=int, default=20)
    g.add_argument("--p", type=float, default=0.01)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=_cmd_generate)

    t = sub.add_parser("train", help="train one model and write checkpoint, metrics and history")
    t.add_argument("--config", required=True)
    t.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    t.add_argument("--out", help="output directory (default: train.out_dir)")
    t.set_defaults(fn=_cmd_train)

    e = sub.add_parser("evaluate", help="evaluate a checkpoint on a dataset directory")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--split", choices=("val", "test"), default="test")
    e.set_defaults(fn=_cmd_evaluate)

    s = sub.add_parser("sweep", help="run a hyperparameter grid")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--cells", help="directory for per-cell results (default: next to --out)")
    s.add_argument("--workers", type=int, default=0, help="parallel processes (default: from config, else 1)")
    s.set_defaults(fn=_cmd_sweep)

    h = sub.add_parser("hash-features", help="hash vectors for ids listed one per line")
    h.add_argument("--ids", required=True)
    h.add_argument("--n", type=int, required=True)
    h.add_argument("--out", required=True)
    h.set_defaults(fn=_cmd_hash_features)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.fn(args)
    except (IGNNError, OSError) as exc:
        print(f"ignn: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
