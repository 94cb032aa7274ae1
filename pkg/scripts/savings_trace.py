"""Sort a few uniform keys with coupled Quicksort/BitsQuick and print the savings trace.

Each trace line is "i L R b": pivot rank i, the rank range [L, R] of its
subarray, and b(X_(L-1), X_(R+1)) with sentinels 0 and 1.
"""
import argparse

import numpy as np

from qsbits.bitkeys import sample_uniform_key
from qsbits.sorters import coupled_run, trace_lines


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    keys = [sample_uniform_key(rng) for _ in range(args.n)]
    res = coupled_run(keys, rng)
    ordered = sorted(keys, key=lambda k: k.prefix(128))
    for k in ordered:
        print(k.prefix(24))
    print("i L R b")
    for line in trace_lines(ordered, res.trace):
        print(line)
    print(f"B = {res.B}, Q = {res.Q}, B - Q = {res.B - res.Q}, trace savings = {res.savings_check}")


if __name__ == "__main__":
    main()
