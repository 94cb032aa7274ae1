"""Fit exact - unrefined of the Poisson bit mean against a log(lam) + b.

Prints the residual of the refinement -2 log lam - c4 for both bases of the
logarithm and the least-squares slope against ln lam.
"""
import argparse

from qsbits.poisson_model import CONSTANTS, calibrate_refinement_base, poisson_bit_mean_asymptotic, poisson_bit_mean_exact


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lo", type=int, default=10, help="smallest exponent e in lam = 2^e")
    ap.add_argument("--hi", type=int, default=20, help="largest exponent")
    args = ap.parse_args()
    lams = [2.0**e for e in range(args.lo, args.hi + 1)]
    print(f"{'lam':>10} {'exact - unrefined':>20} {'exact - refined':>18}")
    for lam in lams:
        exact = poisson_bit_mean_exact(lam)
        print(f"{lam:10.0f} {exact - poisson_bit_mean_asymptotic(lam):20.10f} "
              f"{exact - poisson_bit_mean_asymptotic(lam, refined=True):18.3e}")
    cal = calibrate_refinement_base(lams)
    print(f"slope vs ln lam = {cal['slope_ln']:.10f}, intercept = {cal['intercept']:.10f} (c4 = {CONSTANTS.c4:.10f})")
    print(f"rms residual: ln {cal['rms_ln']:.3e}, lg {cal['rms_lg']:.3e} -> base {cal['base']}")


if __name__ == "__main__":
    main()
