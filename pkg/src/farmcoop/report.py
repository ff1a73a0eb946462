"""Result tables and deterministic text/CSV/JSON emission.

Text tables round to 2 decimals for human comparison; CSV and JSON carry
full precision (floats printed with ``repr``, which round-trips).  The
``r(S)-C`` column (the farmer's net against harvest cost) is printed with
an explicit sign in text mode; identical inputs always produce identical
bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

from .allocations import Allocation
from .game import CoalitionGame
from .situation import Coalition

__all__ = [
    "ResultTable",
    "solve_table",
    "allocation_table",
    "sweep_table",
    "emit_text",
    "emit_csv",
    "emit_json",
    "read_table_csv",
    "solve_payload",
    "allocate_payload",
    "check_payload",
    "core_payload",
    "sweep_payload",
]

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ResultTable:
    """Headers plus rows of cells (str, float, or None for blank)."""

    headers: tuple
    rows: tuple
    signed_columns: tuple = ()   # text mode prints these with explicit sign

    def __eq__(self, other):
        return (
            isinstance(other, ResultTable)
            and self.headers == other.headers
            and self.rows == other.rows
        )


# ---------------------------------------------------------------------------
# table builders
# ---------------------------------------------------------------------------


def solve_table(game: CoalitionGame) -> ResultTable:
    """Per-coalition orders, farmer revenue, net revenue and value."""
    n = game.n
    headers = (["S"] + [f"q{i}" for i in range(1, n + 1)]
               + ["r(S)", "r(S)-C", "v(S)"])
    rows = []
    for c in game.coalitions():
        orders = game.orders[c]
        cells = [c.label()]
        cells += [orders.get(i) for i in range(1, n + 1)]
        r = game.revenue(c)
        cells += [r, r - game.situation.C, game.value(c)]
        rows.append(tuple(cells))
    return ResultTable(headers=tuple(headers), rows=tuple(rows),
                       signed_columns=(n + 2,))


def allocation_table(game: CoalitionGame, results: dict) -> ResultTable:
    """Players as rows, one column per allocation rule."""
    rules = list(results.keys())
    headers = ["player"] + rules
    rows = []
    for player in range(game.n + 1):
        label = "farmer" if player == 0 else f"distributor {player}"
        rows.append(tuple([label] + [results[r].payoffs[player]
                                     for r in rules]))
    return ResultTable(headers=tuple(headers), rows=tuple(rows))


def sweep_table(points) -> ResultTable:
    headers = ("bbar", "sc_holds", "r(N0)", "max r", "max at N0",
               "fc in core", "mpc in core")
    rows = []
    for pt in points:
        rows.append((
            pt.bbar,
            "yes" if pt.sc_holds else "no",
            pt.grand_revenue,
            pt.max_revenue,
            _yesno(pt.max_at_grand),
            _yesno(pt.fc_in_core),
            _yesno(pt.mpc_in_core),
        ))
    return ResultTable(headers=headers, rows=tuple(rows))


def _yesno(flag) -> str | None:
    if flag is None:
        return None
    return "yes" if flag else "no"


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------


def _text_cell(cell, signed: bool) -> str:
    if cell is None:
        return "-"
    if isinstance(cell, float):
        if math.isinf(cell):
            return "inf" if cell > 0 else "-inf"
        return f"{cell:+.2f}" if signed else f"{cell:.2f}"
    return str(cell)


def emit_text(table: ResultTable) -> str:
    """Aligned text with 2-decimal rounding."""
    signed = set(table.signed_columns)
    grid = [list(table.headers)]
    for row in table.rows:
        grid.append([_text_cell(c, k in signed) for k, c in enumerate(row)])
    widths = [max(len(r[k]) for r in grid) for k in range(len(table.headers))]
    lines = []
    for ridx, row in enumerate(grid):
        cells = []
        for k, cell in enumerate(row):
            if k == 0:
                cells.append(cell.ljust(widths[k]))
            else:
                cells.append(cell.rjust(widths[k]))
        lines.append(" | ".join(cells).rstrip())
    lines.insert(1, "-+-".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _csv_cell(cell) -> str:
    if cell is None:
        return ""
    if isinstance(cell, float):
        return repr(cell)
    return str(cell)


def emit_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.headers)
    for row in table.rows:
        writer.writerow([_csv_cell(c) for c in row])
    return buf.getvalue()


def read_table_csv(text: str) -> ResultTable:
    """Inverse of :func:`emit_csv` at full precision."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty CSV")
    headers = tuple(rows[0])
    parsed = []
    for row in rows[1:]:
        cells = []
        for cell in row:
            if cell == "":
                cells.append(None)
            else:
                try:
                    cells.append(float(cell))
                except ValueError:
                    cells.append(cell)
        parsed.append(tuple(cells))
    return ResultTable(headers=headers, rows=tuple(parsed))


def emit_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# JSON payloads (schemas in docs/schemas/)
# ---------------------------------------------------------------------------


def _finite(x: float | None):
    if x is None:
        return None
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)   # "inf" / "-inf"; JSON has no literal for these
    return x


def _coalition_dict(game: CoalitionGame, c: Coalition) -> dict:
    r = game.revenue(c)
    return {
        "coalition": c.label(),
        "members": list(c.members),
        "with_farmer": c.with_farmer,
        "orders": {str(i): game.orders[c][i] for i in c.members},
        "revenue": r,
        "revenue_minus_cost": r - game.situation.C,
        "value": game.value(c),
    }


def _assumptions_dict(game: CoalitionGame) -> dict:
    a = game.assumptions
    return {
        "sc_bound": _finite(a.sc_bound),
        "sc_holds": a.sc_holds,
        "sc_argmin": a.sc_argmin.label(),
        "sc_terms": {c.label(): _finite(t) for c, t in
                     sorted(a.sc_terms.items(), key=lambda kv: kv[0].sort_key())},
        "ndh_holds": a.ndh_holds,
        "ndh_witnesses": [c.label() for c in a.ndh_witnesses],
    }


def _meta(game: CoalitionGame) -> dict:
    sit = game.situation
    return {
        "schema_version": SCHEMA_VERSION,
        "situation": sit.name,
        "n": sit.n,
        "Q": sit.Q,
        "C": sit.C,
        "bbar": sit.bbar,
    }


def solve_payload(game: CoalitionGame) -> dict:
    payload = _meta(game)
    payload["kind"] = "solve"
    payload["coalitions"] = [_coalition_dict(game, c) for c in game.coalitions()]
    payload["assumptions"] = _assumptions_dict(game)
    if game.oracles:
        payload["oracle"] = [
            {
                "coalition": c.label(),
                "value": o.value,
                "tol": o.tol,
                "grid": o.grid,
                "gap": game.results[c].value - o.value,
            }
            for c, o in sorted(game.oracles.items(),
                               key=lambda kv: kv[0].sort_key())
        ]
    return payload


def allocate_payload(game: CoalitionGame, results: dict,
                     breakdowns: dict) -> dict:
    payload = _meta(game)
    payload["kind"] = "allocate"
    payload["grand_value"] = game.grand_value
    rules = {}
    for rule, alloc in results.items():
        entry = {"payoffs": list(alloc.payoffs)}
        bd = breakdowns.get(rule)
        if bd is not None:
            entry["compensation"] = {str(i): t for i, t in sorted(bd.terms.items())}
            if bd.defining:
                entry["defining"] = {str(i): c.label()
                                     for i, c in sorted(bd.defining.items())}
        rules[rule] = entry
    payload["rules"] = rules
    return payload


def check_payload(game: CoalitionGame, structure=None) -> dict:
    payload = _meta(game)
    payload["kind"] = "check"
    payload["assumptions"] = _assumptions_dict(game)
    if structure is not None:
        payload["structure"] = {
            "ok": structure.ok,
            "checked": dict(sorted(structure.checked.items())),
            "failures": {k: list(v) for k, v in
                         sorted(structure.failures.items()) if v},
        }
    return payload


def core_payload(game: CoalitionGame, alloc: Allocation, report) -> dict:
    payload = _meta(game)
    payload["kind"] = "check-core"
    payload["rule"] = alloc.rule
    payload["payoffs"] = list(alloc.payoffs)
    payload["in_core"] = report.in_core
    payload["efficiency_gap"] = report.efficiency_gap
    payload["violations"] = [
        {"coalition": c.label(), "shortfall": s} for c, s in report.violations
    ]
    return payload


def sweep_payload(sit, points) -> dict:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "situation": sit.name,
        "n": sit.n,
        "Q": sit.Q,
        "C": sit.C,
        "kind": "sweep-bbar",
        "points": [
            {
                "bbar": pt.bbar,
                "sc_holds": pt.sc_holds,
                "grand_revenue": pt.grand_revenue,
                "max_revenue": pt.max_revenue,
                "max_at_grand": pt.max_at_grand,
                "fc_in_core": pt.fc_in_core,
                "mpc_in_core": pt.mpc_in_core,
            }
            for pt in points
        ],
    }
    return payload
