"""Write a templated QA world (kb.tsv, lexicon.tsv, dataset.jsonl) to a directory."""

import argparse

from qgrank.synthetic import qa_world


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", help="output directory")
    ap.add_argument("--countries", type=int, default=60)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for name, path in qa_world(n_countries=args.countries, seed=args.seed).save(args.out).items():
        print(f"{name}\t{path}")


if __name__ == "__main__":
    main()
