"""Coalitional stability: core membership and compensation-rate analysis.

An allocation is in the core when it is efficient and no coalition (with
or without the farmer) could do better on its own:
``sum of payoffs over S >= v(S)`` for every coalition.  With at most 16
distributors the 2*(2^n - 1) constraints are checked exhaustively.

The compensation rate ``bbar`` also determines whether the farmer's best
revenue is reached in the grand coalition.  That happens exactly when

    (max_S b(q_S)*q_S  -  (C/Q)*q_N) / (Q - q_N)  <=  bbar  <=  C/Q

with ``q_N`` the grand-coalition cooperative total; `compensation_interval`
computes this window, and `sweep_bbar` re-solves the situation across a
grid of rates (reusing the farmer-less solves, which do not depend on
bbar).

The proportional rule (`mpc`) is in the core if and only if, for every
distributor group S with positive grand-coalition orders,

    max revenue  <=  (q_N / q_S) * (sum_{i in S} (p_i - t_i)*q_i  -  v(S))

evaluated at the grand-coalition orders; `mpc_core_condition` checks this
directly and lists the violating groups.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .allocations import Allocation, fc_allocation, mpc_allocation
from .game import CoalitionGame, _rtol, build_game
from .situation import Situation

__all__ = [
    "CoreReport",
    "CompensationInterval",
    "MpcCoreCondition",
    "SweepPoint",
    "check_core",
    "compensation_interval",
    "mpc_core_condition",
    "sweep_bbar",
]


@dataclass(frozen=True)
class CoreReport:
    """Result of the exhaustive core check.

    ``violations`` lists (coalition, shortfall) with shortfall =
    v(S) - allocation total over S, for every constraint failed beyond the
    tolerance; ``efficiency_gap`` is allocation total minus v(N0).
    """

    in_core: bool
    violations: tuple
    efficiency_gap: float

    def violated_labels(self) -> list:
        return [c.label() for c, _ in self.violations]


def check_core(game: CoalitionGame, alloc: Allocation) -> CoreReport:
    """Evaluate every coalition constraint plus efficiency."""
    if len(alloc) != game.n + 1:
        raise ValueError(
            f"allocation has {len(alloc)} payoffs; game needs {game.n + 1}"
        )
    violations = []
    for c in game.coalitions():
        v = game.value(c)
        got = alloc.coalition_total(c)
        shortfall = v - got
        if shortfall > _rtol(v):
            violations.append((c, shortfall))
    gap = alloc.total() - game.grand_value
    in_core = not violations and abs(gap) <= _rtol(game.grand_value)
    return CoreReport(in_core=in_core, violations=tuple(violations),
                      efficiency_gap=gap)


@dataclass(frozen=True)
class CompensationInterval:
    """The bbar window in which the farmer's maximum revenue is r(N0)."""

    lower: float
    upper: float
    actual: float

    @property
    def nonempty(self) -> bool:
        return self.lower <= self.upper

    @property
    def contains_actual(self) -> bool:
        return self.lower <= self.actual <= self.upper


def compensation_interval(game: CoalitionGame) -> CompensationInterval:
    """Compute the bbar interval; requires NDH (q_N < Q)."""
    sit = game.situation
    q_n = game.order_total(game.grand)
    if q_n >= sit.Q:
        raise ValueError("harvest depleted at the grand optimum; interval undefined")
    best_market = max(
        game.revenue(c) for c in game.coalitions() if not c.with_farmer
    )
    lower = (best_market - sit.cost_rate * q_n) / (sit.Q - q_n)
    return CompensationInterval(lower=lower, upper=sit.cost_rate,
                                actual=sit.bbar)


@dataclass(frozen=True)
class MpcCoreCondition:
    """Outcome of the direct core condition for the proportional rule.

    ``witnesses`` are (coalition, max_revenue, bound) triples where the
    condition fails; ``skipped`` lists groups with zero grand-coalition
    orders, for which the bound is undefined (they are excluded from the
    verdict and should be reviewed by hand -- they cannot occur when every
    distributor orders a positive amount in the grand coalition).
    """

    holds: bool
    witnesses: tuple
    skipped: tuple
    max_revenue: float


def mpc_core_condition(game: CoalitionGame) -> MpcCoreCondition:
    """Check the revenue bound for every distributor group."""
    if game.assumptions is None or not game.assumptions.ok:
        raise ValueError("condition requires SC and NDH to hold")
    sit = game.situation
    grand_orders = game.grand_orders()
    q_n = game.order_total(game.grand)
    max_rev, _ = game.max_revenue()

    witnesses, skipped = [], []
    for c in game.coalitions():
        if c.with_farmer:
            continue
        q_s = sum(grand_orders[i] for i in c.members)
        if q_s <= 0.0:
            skipped.append(c)
            continue
        gross = sum(
            (sit.price[i - 1](grand_orders[i])
             - sit.transport[i - 1](grand_orders[i])) * grand_orders[i]
            for i in c.members if grand_orders[i] > 0.0
        )
        bound = (q_n / q_s) * (gross - game.value(c))
        if max_rev > bound + _rtol(bound):
            witnesses.append((c, max_rev, bound))
    return MpcCoreCondition(holds=not witnesses, witnesses=tuple(witnesses),
                            skipped=tuple(skipped), max_revenue=max_rev)


@dataclass(frozen=True)
class SweepPoint:
    """One row of a compensation-rate sweep.  Fields after ``sc_holds``
    are None when SC fails at this rate (the point is marked, not solved)."""

    bbar: float
    sc_holds: bool
    grand_revenue: float | None = None
    max_revenue: float | None = None
    max_at_grand: bool | None = None
    fc_in_core: bool | None = None
    mpc_in_core: bool | None = None


def sweep_bbar(sit: Situation, start: float, stop: float, steps: int,
               tol: float | None = None, seed: int = 42) -> list:
    """Solve the situation across a grid of compensation rates.

    Farmer-less optima do not depend on bbar, so they are solved once and
    reused.  Rates violating SC (or NDH, or bbar <= 0) are reported as
    unsolved points.
    """
    if steps < 2:
        raise ValueError("sweep needs at least 2 steps")
    market_cache: dict = {}
    rows = []
    for bbar in np.linspace(start, stop, steps):
        bbar = float(bbar)
        if bbar <= 0.0:
            rows.append(SweepPoint(bbar=bbar, sc_holds=False))
            continue
        try:
            game = build_game(sit.replace_bbar(bbar), tol=tol, seed=seed,
                              market_results=market_cache)
        except Exception:
            rows.append(SweepPoint(bbar=bbar, sc_holds=False))
            continue
        if not game.assumptions.ok:
            rows.append(SweepPoint(bbar=bbar, sc_holds=game.assumptions.sc_holds))
            continue
        max_rev, _ = game.max_revenue()
        r_grand = game.revenue(game.grand)
        fc_alloc, _ = fc_allocation(game)
        mpc_alloc, _ = mpc_allocation(game)
        rows.append(SweepPoint(
            bbar=bbar,
            sc_holds=True,
            grand_revenue=r_grand,
            max_revenue=max_rev,
            max_at_grand=bool(max_rev <= r_grand + _rtol(r_grand)),
            fc_in_core=check_core(game, fc_alloc).in_core,
            mpc_in_core=check_core(game, mpc_alloc).in_core,
        ))
    return rows
