"""Sweep random small KBs and report how often each measure property fails.

For every KB all sub-KB values are computed once; then each constraint is
treated as "added last" and the (Independence)/(Penalty) conditions are checked
against whether it is free. Disagreements with the grid oracle are listed too.
"""

import argparse
import time

import numpy as np

from probinc import SolverConfig, grid_oracle, minimal_inconsistent_subsets
from probinc.kb import serialize_kb
from probinc.randkb import random_kb
from probinc.shapley import coalition_values


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--count", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--resolution", type=int, default=100, help="grid oracle resolution, 0 to skip")
    parser.add_argument("--slack", type=float, default=1e-6 + 1 / 200)
    parser.add_argument("--show", type=int, default=3, help="examples printed per violated property")
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    cfg = SolverConfig()
    checks = {"independence": 0, "penalty": 0, "superadditivity": 0, "oracle": 0}
    bad = {k: [] for k in checks}
    start = time.perf_counter()
    for _ in range(args.count):
        kb = random_kb(rng)
        values = coalition_values(kb, cfg)
        full = (1 << len(kb)) - 1
        for i, free in enumerate(minimal_inconsistent_subsets(kb).free):
            before, after = values[full ^ (1 << i)], values[full]
            key = "independence" if free else "penalty"
            checks[key] += 1
            ok = abs(after - before) <= args.slack if free else after > before + args.slack
            if not ok:
                bad[key].append(f"{serialize_kb(kb)}  adding r{i + 1}: {before:.6g} -> {after:.6g}")
        for s in range(1, full):
            if s < full ^ s:
                checks["superadditivity"] += 1
                if values[s] + values[full ^ s] > values[full] + args.slack:
                    bad["superadditivity"].append(serialize_kb(kb))
        if args.resolution and kb.signature.world_count <= 4:
            checks["oracle"] += 1
            oracle = grid_oracle(kb, args.resolution)
            if abs(oracle - values[full]) > 2e-2:
                bad["oracle"].append(f"{serialize_kb(kb)}  Inc*={values[full]:.6g} oracle={oracle:.6g}")

    print(f"{args.count} KBs in {time.perf_counter() - start:.1f}s (seed {args.seed})")
    for key, n in checks.items():
        print(f"{key:>16}: {len(bad[key])} / {n} violated")
    for key, cases in bad.items():
        for case in cases[: args.show]:
            print(f"\n[{key}]\n{case}")


if __name__ == "__main__":
    main()
