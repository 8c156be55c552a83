"""``probinc`` command line: check, measure, blame, repair and mis on ``.kb`` files.

Exit status: ``check`` returns 0 for consistent and 1 for inconsistent input;
every subcommand returns 2 on file, parse or solver errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

from .feasibility import Distribution, is_consistent, minimal_inconsistent_subsets
from .kb import KnowledgeBase, format_constraint, load_kb, serialize_kb
from .logic import DEFAULT_MAX_WORLDS, World
from .measure import MeasureResult, SolverConfig, grid_oracle, inc_star, repair
from .shapley import shapley_inconsistency

SIGNIFICANT_DIGITS = 12


def _num(x: Optional[float]) -> Optional[float]:
    if x is None:
        return None
    return float(f"{x:.{SIGNIFICANT_DIGITS}g}") + 0.0


@dataclass
class ConstraintRow:
    label: str
    constraint: str
    d: float
    eta: Optional[float] = None
    tau: Optional[float] = None
    adjusted_d: Optional[float] = None
    shapley: Optional[float] = None


@dataclass
class AnalysisReport:
    consistent: bool
    inc_star: Optional[float] = None
    inc_star_normalized: Optional[float] = None
    per_constraint: list[ConstraintRow] = field(default_factory=list)
    mis: Optional[list[list[str]]] = None
    witness: Optional[list[tuple[str, float]]] = None
    repaired: Optional[str] = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        rows = []
        for r in self.per_constraint:
            row = {"label": r.label, "constraint": r.constraint, "d": _num(r.d)}
            if r.eta is not None:
                row.update(eta=_num(r.eta), tau=_num(r.tau), adjustedD=_num(r.adjusted_d))
            if r.shapley is not None:
                row["shapley"] = _num(r.shapley)
            rows.append(row)
        out: dict[str, Any] = {
            "consistent": self.consistent,
            "incStar": _num(self.inc_star),
            "incStarNormalized": _num(self.inc_star_normalized),
            "perConstraint": rows,
        }
        if self.mis is not None:
            out["mis"] = self.mis
        if self.witness is not None:
            out["witness"] = [{"world": w, "p": _num(p)} for w, p in self.witness]
        if self.repaired is not None:
            out["repaired"] = self.repaired
        out["diagnostics"] = self.diagnostics
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)


def _witness(kb: KnowledgeBase, dist: Distribution) -> list[tuple[str, float]]:
    return [(str(World(kb.signature, k)), float(p)) for k, p in enumerate(dist.alpha)]


def _rows(kb: KnowledgeBase) -> list[ConstraintRow]:
    return [
        ConstraintRow(kb.display_label(i), format_constraint(c, kb.signature), c.probability)
        for i, c in enumerate(kb)
    ]


def _with_measure(report: AnalysisReport, kb: KnowledgeBase, result: MeasureResult) -> None:
    report.inc_star = result.value
    report.inc_star_normalized = result.value / len(kb) if len(kb) else 0.0
    for row, eta, tau, adj in zip(
        report.per_constraint,
        result.deviations.eta,
        result.deviations.tau,
        result.repaired.probabilities,
    ):
        row.eta, row.tau, row.adjusted_d = eta, tau, adj
    report.witness = _witness(kb, result.witness)
    d = result.diagnostics
    report.diagnostics.update(
        startsUsed=d.starts_used,
        iterations=d.iterations,
        converged=d.converged,
        bestStart=d.best_start,
        residual=_num(d.residual),
        notes=list(d.notes),
    )


def _config(args) -> SolverConfig:
    return SolverConfig(starts=args.starts, tolerance=args.tol, seed=args.seed)


def _base_report(kb: KnowledgeBase, cfg: SolverConfig, consistent: bool) -> AnalysisReport:
    report = AnalysisReport(consistent, per_constraint=_rows(kb))
    report.diagnostics.update(
        worlds=kb.signature.world_count,
        seed=cfg.seed,
        starts=cfg.starts,
        tolerance=cfg.tolerance,
    )
    return report


# --- text rendering -------------------------------------------------------


def _fmt(x: Optional[float]) -> str:
    return "-" if x is None else f"{_num(x):.6g}"


def _table(headers: Sequence[str], rows: list[Sequence[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    for r in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(lines)


def render_text(report: AnalysisReport, command: str, normalized: bool = False) -> str:
    out = []
    if command == "check":
        out.append("consistent" if report.consistent else "inconsistent")
        if report.witness:
            out.append("witness:")
            out.extend(f"  {w}: {_fmt(p)}" for w, p in report.witness)
        return "\n".join(out)
    if command == "mis":
        if not report.mis:
            out.append("consistent: no minimal inconsistent subsets")
        else:
            out.append(f"{len(report.mis)} minimal inconsistent subset(s):")
            out.extend("  {" + ", ".join(s) + "}" for s in report.mis)
        free = report.diagnostics.get("free", [])
        rows = [[r.label, r.constraint, "yes" if f else "no"] for r, f in zip(report.per_constraint, free)]
        out.append(_table(["label", "constraint", "free"], rows))
        return "\n".join(out)

    head = f"Inc* = {_fmt(report.inc_star)}    Inc*_0 = {_fmt(report.inc_star_normalized)}"
    if normalized:
        head = f"Inc*_0 = {_fmt(report.inc_star_normalized)}    Inc* = {_fmt(report.inc_star)}"
    out.append(head + f"    ({len(report.per_constraint)} constraints)")
    if "oracle" in report.diagnostics:
        out.append(f"grid oracle (resolution {report.diagnostics['resolution']}) = {_fmt(report.diagnostics['oracle'])}")
    rows = list(report.per_constraint)
    headers = ["label", "constraint", "eta", "tau", "adjusted"]
    if command == "blame":
        rows.sort(key=lambda r: -r.shapley)
        headers = ["label", "constraint", "shapley", "eta", "tau", "adjusted"]
    table = []
    for r in rows:
        cells = [r.label, r.constraint]
        if command == "blame":
            cells.append(_fmt(r.shapley))
        cells += [_fmt(r.eta), _fmt(r.tau), _fmt(r.adjusted_d)]
        table.append(cells)
    out.append(_table(headers, table))
    if not report.diagnostics.get("converged", True):
        out.append("warning: solver did not converge on any start")
    for w in report.diagnostics.get("shapleyWarnings", []):
        out.append(f"warning: {w}")
    if "output" in report.diagnostics:
        out.append(f"repaired knowledge base written to {report.diagnostics['output']}")
    elif report.repaired is not None:
        out.append("repaired knowledge base:")
        out.append(report.repaired.rstrip("\n"))
    return "\n".join(out)


# --- commands -------------------------------------------------------------


def _cmd_check(kb, cfg, args) -> tuple[AnalysisReport, int]:
    ok, witness = is_consistent(kb)
    report = _base_report(kb, cfg, ok)
    if witness is not None:
        report.witness = _witness(kb, witness)
    return report, 0 if ok else 1


def _cmd_measure(kb, cfg, args) -> tuple[AnalysisReport, int]:
    result = inc_star(kb, cfg)
    report = _base_report(kb, cfg, is_consistent(kb)[0])
    _with_measure(report, kb, result)
    if getattr(args, "oracle", False):
        report.diagnostics["resolution"] = args.resolution
        report.diagnostics["oracle"] = _num(grid_oracle(kb, args.resolution))
    return report, 0


def _cmd_blame(kb, cfg, args) -> tuple[AnalysisReport, int]:
    report, _ = _cmd_measure(kb, cfg, args)
    blame = shapley_inconsistency(kb, cfg, parallel=args.parallel)
    for row, v in zip(report.per_constraint, blame.values):
        row.shapley = v
    report.diagnostics.update(
        subsetsEvaluated=blame.subsets_evaluated,
        shapleyTotal=_num(blame.total),
        shapleyWarnings=list(blame.warnings),
    )
    return report, 0


def _cmd_repair(kb, cfg, args) -> tuple[AnalysisReport, int]:
    result = inc_star(kb, cfg)
    repaired = repair(kb, result)
    report = _base_report(kb, cfg, is_consistent(kb)[0])
    _with_measure(report, kb, result)
    report.repaired = serialize_kb(repaired)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(report.repaired)
        report.diagnostics["output"] = args.output
    return report, 0


def _cmd_mis(kb, cfg, args) -> tuple[AnalysisReport, int]:
    mis = minimal_inconsistent_subsets(kb)
    report = _base_report(kb, cfg, not mis.subsets)
    report.mis = [[kb.display_label(i) for i in s] for s in mis.subsets]
    report.diagnostics["free"] = list(mis.free)
    return report, 0


COMMANDS = {
    "check": _cmd_check,
    "measure": _cmd_measure,
    "blame": _cmd_blame,
    "repair": _cmd_repair,
    "mis": _cmd_mis,
}


def build_parser() -> argparse.ArgumentParser:
    defaults = SolverConfig()

    def add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
        def default(v):
            return argparse.SUPPRESS if suppress else v

        p.add_argument("--json", action="store_true", default=default(False), help="emit a JSON report")
        p.add_argument("--tol", type=float, default=default(defaults.tolerance), help="solver convergence tolerance")
        p.add_argument("--starts", type=int, default=default(defaults.starts), help="solver start points")
        p.add_argument("--seed", type=int, default=default(defaults.seed), help="random seed")
        p.add_argument("--max-worlds", type=int, default=default(DEFAULT_MAX_WORLDS), help="cap on |Omega|")
        p.add_argument("--auto-declare", action="store_true", default=default(False),
                       help="treat undeclared names as binary variables")

    parser = argparse.ArgumentParser(
        prog="probinc", description="Consistency, inconsistency measures and blame for probabilistic knowledge bases."
    )
    add_globals(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    add_globals(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="decide consistency")
    p.add_argument("file")
    p = sub.add_parser("measure", parents=[common], help="compute Inc* and Inc*_0")
    p.add_argument("file")
    p.add_argument("--normalized", action="store_true", help="lead with the normalized measure")
    p.add_argument("--oracle", action="store_true", help="also run the brute-force grid oracle")
    p.add_argument("--resolution", type=int, default=100, help="grid oracle resolution")
    p = sub.add_parser("blame", parents=[common], help="Shapley blame per constraint")
    p.add_argument("file")
    p.add_argument("--parallel", type=int, default=1, help="worker threads for subset evaluation")
    p = sub.add_parser("repair", parents=[common], help="write a minimally adjusted consistent KB")
    p.add_argument("file")
    p.add_argument("-o", "--output", help="write the repaired KB here")
    p = sub.add_parser("mis", parents=[common], help="minimal inconsistent subsets and free constraints")
    p.add_argument("file")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        kb = load_kb(args.file, auto_declare=args.auto_declare, max_worlds=args.max_worlds)
        report, status = COMMANDS[args.command](kb, cfg, args)
    except (OSError, ValueError, RuntimeError) as e:
        print(f"probinc: error: {e}", file=sys.stderr)
        return 2
    if args.json:
        print(report.to_json())
    else:
        print(render_text(report, args.command, getattr(args, "normalized", False)))
    return status


if __name__ == "__main__":
    sys.exit(main())
