"""Write exact / asymptotic / simulated comparison tables for a few grids as CSV files."""
import argparse
from pathlib import Path

from qsbits.cli import main as cli_main

RUNS = {
    "fixed_n.csv": ["--grid", "10,100,1000", "--algorithms", "bitsquick"],
}
# the Poisson model takes one --lambda per call
RUNS.update({f"poisson_lam{lam}.csv": ["--lambda", str(lam), "--algorithms", "quicksort"]
             for lam in (10, 100, 1000)})


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="tables")
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, extra in RUNS.items():
        argv = ["compare", *extra, "--trials", str(args.trials), "--seed", str(args.seed),
                "--format", "csv", "--out", str(out / name)]
        code = cli_main(argv)
        print(f"{name}: exit {code}")
        if code:
            raise SystemExit(code)


if __name__ == "__main__":
    main()
