"""Fitted constants for arc-count covariances with shared or touching endpoints.

For arcs sharing their left endpoint the covariance grows like c * sqrt(N);
this script fits c over an N grid and reports it against both candidate
closed forms, sqrt(N / pi^3) / 2 and sqrt(N * pi^3) / 2 (they differ by a
factor pi^3; only one can match).  Abutting arcs mirror the shared case
with the opposite sign, and disjoint / strictly nested pairs stay O(1).
A second table shows the exponential-in-N decay of radial covariances for
well-separated modulus windows.
"""

import argparse
import math

from ginfluct.angular import ArcWindow, angular_count_cov
from ginfluct.radial import radial_count_cov


def angular_table(powers: list[int]) -> None:
    print("# arc pairs: shared-left [0,0.8]&[0,1.6], abutting [-0.8,0]&[0,0.8],")
    print("# disjoint [-1.6,-0.8]&[0.8,1.6], nested [-0.4,0.4] in [-1.2,1.2]")
    print("n,shared,abutting,disjoint,nested,shared/sqrtN,"
          "fit_over_sqrt_N_pi3,fit_over_sqrt_Npi3")
    for p in powers:
        n = 2**p
        shared = angular_count_cov(n, ArcWindow(0.0, 0.8), ArcWindow(0.0, 1.6))
        abut = angular_count_cov(n, ArcWindow(-0.8, 0.0), ArcWindow(0.0, 0.8))
        disj = angular_count_cov(n, ArcWindow(-1.6, -0.8), ArcWindow(0.8, 1.6))
        nest = angular_count_cov(n, ArcWindow(-0.4, 0.4), ArcWindow(-1.2, 1.2))
        c = shared / math.sqrt(n)
        r1 = c / (0.5 * math.sqrt(1.0 / math.pi**3))
        r2 = c / (0.5 * math.sqrt(math.pi**3))
        print(f"{n},{shared:.6f},{abut:.6f},{disj:.6f},{nest:.6f},"
              f"{c:.6f},{r1:.4f},{r2:.6f}")


def radial_table(ns: list[int]) -> None:
    print("# separated modulus windows [0.2,0.4] x [0.6,0.8]")
    print("n,cov,log_ratio_to_prev")
    prev = None
    for n in ns:
        cov = radial_count_cov(n, (0.2, 0.4), (0.6, 0.8))
        ratio = "" if prev is None or cov == 0.0 else f"{math.log(abs(prev / cov)):.3f}"
        print(f"{n},{cov:.6e},{ratio}")
        prev = cov


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-power", type=int, default=13,
                    help="largest N = 2^p for the angular fit")
    args = ap.parse_args()

    angular_table(list(range(6, args.max_power + 1)))
    print()
    radial_table([100, 200, 400, 800])


if __name__ == "__main__":
    main()
