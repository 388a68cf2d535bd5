"""Regenerate the Euclid step-count reference table used by the GCD test.

Pairs of nonzero 32-bit words come from numpy's PCG64, so the table does not
depend on any generator in this package. Prints a Python literal to paste
into ``src/trident/_gcd_table.py``.
"""

import argparse

import numpy as np

from trident._kernels import euclid_steps


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--pairs", type=int, default=400_000_000)
    ap.add_argument("--chunk", type=int, default=10_000_000)
    ap.add_argument("--seed", type=int, default=20020101)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    counts = np.zeros(64, dtype=np.int64)
    done = 0
    while done < args.pairs:
        size = min(args.chunk, args.pairs - done)
        u = rng.integers(1, 1 << 32, size, dtype=np.uint64)
        v = rng.integers(1, 1 << 32, size, dtype=np.uint64)
        g = np.empty(size, dtype=np.uint64)
        k = np.empty(size, dtype=np.int64)
        euclid_steps(u, v, g, k)
        counts += np.bincount(k, minlength=64)[:64]
        done += size
    last = int(np.nonzero(counts)[0][-1])
    print(f"STEP_TABLE_PAIRS = {args.pairs}")
    print(f"STEP_TABLE_SEED = {args.seed}")
    print("STEP_COUNTS = (")
    for i in range(0, last + 1, 6):
        print("    " + " ".join(f"{int(c)}," for c in counts[i:i + 6]))
    print(")")


if __name__ == "__main__":
    main()
