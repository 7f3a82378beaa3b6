"""Train the four variants of one architecture on Communities and print mean ± std.

    python demos/variant_table.py GCN --seeds 0 1 2

A full run on the 400-node graph takes a few minutes per architecture.
"""

import argparse
import logging

from ignn.experiment.config import DataConfig, TrainConfig
from ignn.experiment.sweep import format_suite, run_variant_suite
from ignn.objective import LossConfig


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("arch", choices=("GCN", "SAGE", "GIN"))
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--cliques", type=int, default=20)
    p.add_argument("--size", type=int, default=20)
    p.add_argument("--max-epochs", type=int, default=2000)
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    data = DataConfig(num_cliques=args.cliques, clique_size=args.size)
    base = TrainConfig(loss=LossConfig(1.0, 1.0), max_epochs=args.max_epochs)
    rows = run_variant_suite(data, args.arch, seeds=args.seeds, base_cfg=base)
    print(format_suite(args.arch, rows))


if __name__ == "__main__":
    main()
