"""Command-line interface.

Subcommands::

    farmcoop validate   --situation FILE          # schema + model checks
    farmcoop solve      --situation FILE          # per-coalition table
    farmcoop allocate   --situation FILE --rule {altruistic|fc|mpc|all}
    farmcoop check      --situation FILE          # assumptions + structure
    farmcoop check-core --situation FILE (--rule R | --payoffs "a,b,...")
    farmcoop sweep-bbar --situation FILE --from A --to B [--steps N]

Common flags: ``--tol`` (order tolerance, default 1e-6*Q), ``--grid``
(oracle points per axis, default 2048), ``--oracle {off,small,all}``,
``--seed`` (default 42), ``--format {text,csv,json}``, ``--out FILE``.

Exit status: 0 success, 1 validation/model failure, 2 usage error.
``--situation`` accepts a path or the name of a bundled dataset
(two_distributors, three_distributors, two_distributors_low_comp).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .allocations import RULES, Allocation, allocation_by_rule
from .game import build_game, verify_structure
from .piecewise import check_shape
from .report import (
    allocate_payload,
    allocation_table,
    check_payload,
    core_payload,
    emit_csv,
    emit_json,
    emit_text,
    solve_payload,
    solve_table,
    sweep_payload,
    sweep_table,
    ResultTable,
)
from .situation import (
    BUILTIN_SITUATIONS,
    SituationError,
    builtin_situation,
    load_situation,
)
from .stability import check_core, compensation_interval, mpc_core_condition, sweep_bbar


class UsageError(Exception):
    pass


def _load(args):
    name = args.situation
    if name in BUILTIN_SITUATIONS:
        return builtin_situation(name)
    path = Path(name)
    if not path.exists():
        raise UsageError(f"situation file not found: {path}")
    return load_situation(path)


def _write(args, text: str):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_table(args, table: ResultTable, payload: dict):
    if args.format == "text":
        _write(args, emit_text(table))
    elif args.format == "csv":
        _write(args, emit_csv(table))
    else:
        _write(args, emit_json(payload))


def _build(args):
    return build_game(
        _load(args),
        tol=args.tol,
        seed=args.seed,
        oracle=args.oracle,
        oracle_grid=args.grid,
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    sit = _load(args)   # schema + static inequalities
    problems = []
    curves = [("b", sit.purchase_cost)]
    curves += [(f"t{i}", sit.transport[i - 1]) for i in range(1, sit.n + 1)]
    curves += [(f"p{i}", sit.price[i - 1]) for i in range(1, sit.n + 1)]
    lines = [f"situation {sit.name or args.situation}: "
             f"n={sit.n} Q={sit.Q} C={sit.C} bbar={sit.bbar}"]
    for name, fn in curves:
        rep = check_shape(fn, upper=sit.Q)
        flavor = ("strictly decreasing" if rep.strictly_decreasing
                  else "non-increasing" if rep.non_increasing
                  else "INCREASING")
        prod = "ok" if rep.product_non_decreasing else "FAIL"
        lines.append(f"  {name}: {flavor}; q*{name}(q) non-decreasing: {prod}")
        if not rep.acceptable:
            problems.append(f"{name}: shape check failed {rep.witnesses}")
    if problems:
        lines.append("INVALID: " + "; ".join(problems))
        _write(args, "\n".join(lines) + "\n")
        return 1
    lines.append("valid")
    _write(args, "\n".join(lines) + "\n")
    return 0


def cmd_solve(args) -> int:
    game = _build(args)
    _emit_table(args, solve_table(game), solve_payload(game))
    return 0


def cmd_allocate(args) -> int:
    game = _build(args)
    rules = list(RULES) if args.rule == "all" else [args.rule]
    results, breakdowns = {}, {}
    for rule in rules:
        alloc, breakdown = allocation_by_rule(game, rule)
        results[rule] = alloc
        if breakdown is not None:
            breakdowns[rule] = breakdown
    table = allocation_table(game, results)
    if args.format == "text":
        out = [emit_text(table)]
        for rule, bd in breakdowns.items():
            parts = []
            for i in sorted(bd.terms):
                extra = (f" (defining {bd.defining[i].label()})"
                         if bd.defining else "")
                parts.append(f"  {rule} compensation {i}: "
                             f"{bd.terms[i]:.2f}{extra}")
            out.append("\n".join(parts) + "\n")
        _write(args, "".join(out))
    else:
        _emit_table(args, table, allocate_payload(game, results, breakdowns))
    return 0


def cmd_check(args) -> int:
    game = _build(args)
    structure = verify_structure(game, seed=args.seed) if game.assumptions.ok else None
    payload = check_payload(game, structure)
    if args.format == "json":
        _write(args, emit_json(payload))
    else:
        a = game.assumptions
        lines = [
            f"SC bound: {a.sc_bound:.6g} (binding coalition {a.sc_argmin.label()})",
            f"SC holds at bbar={game.situation.bbar:.6g}: {'yes' if a.sc_holds else 'NO'}",
            f"NDH holds: {'yes' if a.ndh_holds else 'NO'}",
        ]
        if a.ndh_witnesses:
            lines.append("NDH witnesses: "
                         + ", ".join(c.label() for c in a.ndh_witnesses))
        if structure is not None:
            lines.append(structure.summary())
        if game.assumptions.ok:
            window = compensation_interval(game)
            lines.append(
                f"bbar window for max revenue at N0: "
                f"[{window.lower:.6g}, {window.upper:.6g}] "
                f"({'empty' if not window.nonempty else 'nonempty'}; "
                f"actual bbar {'inside' if window.contains_actual else 'outside'})"
            )
            cond = mpc_core_condition(game)
            lines.append(f"mpc core condition: {'holds' if cond.holds else 'fails'}")
            for c, rev, bound in cond.witnesses:
                lines.append(f"  violated for {c.label()}: "
                             f"max revenue {rev:.2f} > bound {bound:.2f}")
        _write(args, "\n".join(lines) + "\n")
    ok = game.assumptions.ok and (structure is None or structure.ok)
    return 0 if ok else 1


def cmd_check_core(args) -> int:
    game = _build(args)
    if args.payoffs:
        try:
            values = tuple(float(x) for x in args.payoffs.split(","))
        except ValueError as exc:
            raise UsageError(f"bad --payoffs: {exc}") from exc
        alloc = Allocation(payoffs=values, rule="custom")
    else:
        alloc, _ = allocation_by_rule(game, args.rule)
    report = check_core(game, alloc)
    payload = core_payload(game, alloc, report)
    if args.format == "json":
        _write(args, emit_json(payload))
    else:
        lines = [
            f"rule: {alloc.rule}",
            "payoffs: " + ", ".join(f"{x:.2f}" for x in alloc.payoffs),
            f"in core: {'yes' if report.in_core else 'NO'}",
            f"efficiency gap: {report.efficiency_gap:.6g}",
        ]
        for c, shortfall in report.violations:
            lines.append(f"  blocked by {c.label()}: shortfall {shortfall:.2f}")
        _write(args, "\n".join(lines) + "\n")
    return 0


def cmd_sweep(args) -> int:
    sit = _load(args)
    points = sweep_bbar(sit, args.start, args.stop, args.steps,
                        tol=args.tol, seed=args.seed)
    _emit_table(args, sweep_table(points), sweep_payload(sit, points))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(sub):
    sub.add_argument("--situation", required=True,
                     help="situation JSON file or bundled dataset name")
    sub.add_argument("--tol", type=float, default=None,
                     help="order tolerance in kg (default 1e-6*Q)")
    sub.add_argument("--grid", type=int, default=2048,
                     help="oracle grid points per axis")
    sub.add_argument("--oracle", choices=("off", "small", "all"),
                     default="off", help="grid-oracle certification mode")
    sub.add_argument("--seed", type=int, default=42)
    sub.add_argument("--format", choices=("text", "csv", "json"),
                     default="text")
    sub.add_argument("--out", default=None, help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="farmcoop",
        description="Cooperative-game analysis of farmer/distributor "
                    "supply chains",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("validate", help="validate a situation file")
    _add_common(sub)
    sub.set_defaults(fn=cmd_validate)

    sub = subs.add_parser("solve", help="solve every coalition")
    _add_common(sub)
    sub.set_defaults(fn=cmd_solve)

    sub = subs.add_parser("allocate", help="profit allocations")
    _add_common(sub)
    sub.add_argument("--rule", choices=RULES + ("all",), default="all")
    sub.set_defaults(fn=cmd_allocate)

    sub = subs.add_parser("check", help="assumption and structure report")
    _add_common(sub)
    sub.set_defaults(fn=cmd_check)

    sub = subs.add_parser("check-core", help="core membership of an allocation")
    _add_common(sub)
    group = sub.add_mutually_exclusive_group(required=True)
    group.add_argument("--rule", choices=RULES)
    group.add_argument("--payoffs", help="comma-separated payoff vector, farmer first")
    sub.set_defaults(fn=cmd_check_core)

    sub = subs.add_parser("sweep-bbar", help="sweep the compensation rate")
    _add_common(sub)
    sub.add_argument("--from", dest="start", type=float, required=True)
    sub.add_argument("--to", dest="stop", type=float, required=True)
    sub.add_argument("--steps", type=int, default=11)
    sub.set_defaults(fn=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SituationError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
