#!/usr/bin/env python3
"""Run the desk-scale learnability experiment (both annealing arms) and print
the comparison. Takes on the order of an hour on two CPU cores; logs land
next to the given prefix."""

import argparse
import sys

from colorgrid_training.smoke import run_smoke


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--log-prefix", default="smoke", help="JSONL log path prefix")
    args = parser.parse_args()
    with open(f"{args.log_prefix}_anneal_on.jsonl", "w") as log_on, open(
        f"{args.log_prefix}_anneal_off.jsonl", "w"
    ) as log_off:
        result = run_smoke(log_on=log_on, log_off=log_off)
    print(f"anneal on : {result.anneal_on:+.3f}")
    print(f"anneal off: {result.anneal_off:+.3f}")
    print(f"random    : {result.random:+.3f}")
    print(f"learned: {result.learned}  annealing_helped: {result.annealing_helped}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
