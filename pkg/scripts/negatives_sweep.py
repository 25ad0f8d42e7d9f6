"""Sweep the number of negatives per positive for every strategy on the QA world."""

import argparse
from dataclasses import dataclass

from qgrank.encoder import EncoderConfig
from qgrank.pipeline import PipelineConfig, ablation_grid, ablation_table, run_ablation
from qgrank.ranking import TrainConfig
from qgrank.synthetic import qa_world


@dataclass
class SweepConfig:
    seed: int = 0
    countries: int = 100
    negatives: tuple = (1, 5, 10, 20)
    epochs: int = 10
    learning_rate: float = 1e-3
    dim: int = 32
    depth: int = 1


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", help="TSV output path")
    args = ap.parse_args()
    cfg = SweepConfig(seed=args.seed)
    world = qa_world(n_countries=cfg.countries, seed=cfg.seed)
    base = PipelineConfig(train=TrainConfig(epochs=cfg.epochs, learning_rate=cfg.learning_rate, seed=cfg.seed,
                                            encoder=EncoderConfig(dim=cfg.dim, depth=cfg.depth)))
    rows = run_ablation(world.dataset(), world.kb, world.lexicon, ablation_grid(negatives=cfg.negatives), base)
    table = ablation_table(rows)
    print(table, end="")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(table)


if __name__ == "__main__":
    main()
