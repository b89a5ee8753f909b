"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py --degrees 20,50,100 --samples 20

Both backends see the same Wronskians and seeds; the last column checks
that they return identical counts and bit-identical Gaussian blocks.
"""

import argparse

from kcov.bench import format_table, run_benchmark


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--degrees", default="20,50,100")
    ap.add_argument("--samples", type=int, default=20)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    rows = run_benchmark([int(d) for d in args.degrees.split(",")], args.samples, args.seed)
    print(format_table(rows))


if __name__ == "__main__":
    main()
