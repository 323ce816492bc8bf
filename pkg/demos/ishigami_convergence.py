"""Held-out error of the three sparse solvers on the Ishigami function.

Prints the median test MSE over seeds for each budget. The default settings
are small enough to finish in under a minute; pass ``--full`` for the
10-seed, 200-sample configuration used by the acceptance suite.

    python demos/ishigami_convergence.py [--full]
"""
import argparse

from rankpce.benchmarks import SOLVERS, ishigami_problem, run_convergence


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--full", action="store_true")
    args = parser.parse_args()
    seeds = range(10) if args.full else range(3)
    grid = list(range(5, 55, 5))
    report = run_convergence(ishigami_problem(), nd_grid=grid, n_train=200, n_test=2000, seeds=seeds)
    print("N_D  " + "  ".join(f"{s:>10}" for s in SOLVERS))
    for nd in grid:
        print(f"{nd:3d}  " + "  ".join(f"{report.median(s, nd):10.3e}" for s in SOLVERS))


if __name__ == "__main__":
    main()
