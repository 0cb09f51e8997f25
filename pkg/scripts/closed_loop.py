"""Closed-loop return of POSS and POWSS on CO-tiger with an exact belief filter.

    python scripts/closed_loop.py --widths 5,10,30 --episodes 1000
"""
import argparse

from powss.harness import default_workers, run_closed_loop
from powss.problems import co_tiger
from powss.solvers import exact_value


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--widths", default="5,10,30")
    parser.add_argument("--episodes", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=default_workers())
    args = parser.parse_args()

    tiger = co_tiger()
    print(f"optimal value V*(b0) = {exact_value(tiger, tiger.initial_belief):.4f}")
    for kind in ("poss", "powss"):
        for width in (int(w) for w in args.widths.split(",")):
            res = run_closed_loop(tiger, kind, width, args.episodes, args.seed, workers=args.workers)
            print(f"{kind:>5} C={width:<3} mean return {res.mean:8.4f} ± {res.stderr:.4f} (s.e.)")


if __name__ == "__main__":
    main()
