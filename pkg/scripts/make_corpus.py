#!/usr/bin/env python3
"""Generate synthetic annotated log CSVs for experiments.

Examples:
    python scripts/make_corpus.py --templates 10 --lines 20 --seed 101 --out train.csv
    python scripts/make_corpus.py --unique 300 --seed 505 --out unique.csv
"""

import argparse

from bcdlog.synth import corpus_to_csv, generate_corpus, generate_unique_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--templates", type=int, default=10)
    parser.add_argument("--lines", type=int, default=20, help="lines per template")
    parser.add_argument("--unique", type=int, default=0,
                        help="emit N single-line unique templates instead")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True)
    args = parser.parse_args()

    if args.unique:
        rows = generate_unique_corpus(args.unique, seed=args.seed)
    else:
        rows = generate_corpus(args.templates, args.lines, seed=args.seed)
    corpus_to_csv(rows, args.out)
    print(f"wrote {len(rows)} lines to {args.out}")


if __name__ == "__main__":
    main()
