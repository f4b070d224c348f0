#!/usr/bin/env python3
"""End-to-end walkthrough on synthetic data: train, parse, eval, bench.

Creates a working directory, trains the default tagger on 200 lines from 10
templates, then parses and scores 100 held-out lines and benchmarks cached
versus cacheless throughput. Takes a minute or two on a laptop CPU.

    python scripts/overfit_demo.py --workdir /tmp/bcdlog-demo
"""

import argparse
import sys
from pathlib import Path

from bcdlog.cli import main as bcdlog
from bcdlog.synth import corpus_to_csv, generate_corpus


def run(argv: list[str]) -> None:
    print(f"$ bcdlog {' '.join(argv)}")
    code = bcdlog(argv)
    if code != 0:
        sys.exit(code)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="demo-run")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    work = Path(args.workdir)
    work.mkdir(parents=True, exist_ok=True)
    corpus_to_csv(generate_corpus(10, 20, seed=101), work / "train.csv")
    corpus_to_csv(generate_corpus(10, 10, seed=202), work / "heldout.csv")
    corpus_to_csv(generate_corpus(10, 60, seed=404), work / "bench.csv")
    checkpoint = work / "model.ckpt"

    run(["train", "--input", str(work / "train.csv"),
         "--checkpoint", str(checkpoint), "--seed", str(args.seed)])
    run(["parse", "--input", str(work / "heldout.csv"),
         "--checkpoint", str(checkpoint), "--out", str(work / "parsed")])
    run(["eval", "--input", str(work / "heldout.csv"),
         "--checkpoint", str(checkpoint), "--out", str(work / "evaled")])
    run(["bench", "--input", str(work / "bench.csv"),
         "--checkpoint", str(checkpoint), "--out", str(work / "benched")])
    print(f"\nartifacts under {work}/")


if __name__ == "__main__":
    main()
