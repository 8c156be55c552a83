"""Print Inc*, deviations, repairs and Shapley blame for the bundled example KBs."""

import argparse
from pathlib import Path

from probinc import SolverConfig, inc_star, load_kb, minimal_inconsistent_subsets, repair, shapley_inconsistency
from probinc.kb import format_constraint

KBS = Path(__file__).resolve().parent.parent / "kbs"


def describe(path: Path, cfg: SolverConfig) -> None:
    kb = load_kb(path)
    result = inc_star(kb, cfg)
    blame = shapley_inconsistency(kb, cfg)
    fixed = repair(kb, result)
    mis = minimal_inconsistent_subsets(kb)
    print(f"== {path.name}: Inc* = {result.value:.6g}, Inc*_0 = {result.value / len(kb):.6g}")
    print("   MIS:", [[kb.display_label(i) for i in s] for s in mis.subsets])
    for i, c in enumerate(kb):
        print(
            f"   {kb.display_label(i):>3}  {format_constraint(c, kb.signature):<22}"
            f" eta={result.deviations.eta[i]:.4g}  tau={result.deviations.tau[i]:.4g}"
            f"  -> {fixed[i].probability:.6g}  shapley={blame.values[i]:.6g}"
        )
    print(f"   sum of Shapley values = {sum(blame.values):.6g}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("files", nargs="*", type=Path, help="defaults to every kbs/*.kb")
    parser.add_argument("--starts", type=int, default=SolverConfig.starts)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    cfg = SolverConfig(starts=args.starts, seed=args.seed)
    for path in args.files or sorted(KBS.glob("*.kb")):
        describe(path, cfg)


if __name__ == "__main__":
    main()
