"""Root Q-value convergence of POSS and POWSS on CO-tiger.

Writes the aggregated CSV (one row per solver, width and action) and prints
the Listen/Wait means next to the exact and QMDP values. Plot q_mean against
width with a q_std ribbon to get the convergence figure.

    python scripts/convergence_sweep.py --out results/convergence.csv
"""
import argparse
import logging

from powss.harness import SweepConfig, default_workers, run_root_sweep
from powss.problems import co_tiger
from powss.solvers import exact_q_values, qmdp_q_values


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--widths", default="1,5,10,20,40")
    parser.add_argument("--runs", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="convergence.csv")
    parser.add_argument("--workers", type=int, default=default_workers())
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO)

    config = SweepConfig(
        widths=tuple(int(w) for w in args.widths.split(",")),
        runs_per_cell=args.runs,
        base_seed=args.seed,
        output_path=args.out,
        workers=args.workers,
    )
    rows = run_root_sweep(config)

    tiger = co_tiger()
    exact = exact_q_values(tiger, tiger.initial_belief)
    qmdp = qmdp_q_values(tiger, tiger.initial_belief)
    print(f"exact: listen {exact[3]:.4f} wait {exact[2]:.4f} | qmdp: listen {qmdp[3]:.4f} wait {qmdp[2]:.4f}")
    for r in rows:
        if r.action in ("listen", "wait"):
            print(f"{r.solver:>5} C={r.width:<3} {r.action:<6} {r.q_mean:8.4f} ± {r.q_std:.4f}  chosen {r.select_rate:.2f}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
