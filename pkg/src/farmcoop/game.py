"""The cooperative game induced by a supply-chain situation.

Every coalition of distributors, with or without the farmer (player 0),
is assigned the maximal joint profit it can reach:

* ``v(S)``   -- market-purchase optimum of S without the farmer;
* ``v(S0)``  -- cooperation optimum of S together with the farmer;
* ``v({}) = v({0}) = 0`` by definition.

Alongside the characteristic function the builder records optimal orders
and the farmer's revenue for every coalition:

* ``r(S)  = b(q_S) * q_S``                 (selling to S at market price);
* ``r(S0) = (C/Q) * q_S + bbar * (Q - q_S)`` (cost price + compensation).

Two standing assumptions are verified on the built game:

* sustainable compensation (SC): ``0 < bbar <= min over S of
  (b(q_S) - C/Q) * q_S / (Q - q_S)``, i.e. the compensation rate never
  exceeds any coalition's per-unsold-kg revenue gain from cooperating;
* no depleted harvest (NDH): every optimal coalition total stays strictly
  below Q.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

_log = logging.getLogger(__name__)

from .optimize import (
    OracleResult,
    SolveResult,
    coop_term,
    coop_value,
    default_tol,
    grid_oracle,
    market_term,
    market_value,
    solve_with_farmer,
    solve_without_farmer,
)
from .situation import Coalition, Situation

__all__ = [
    "CoalitionGame",
    "AssumptionReport",
    "StructureReport",
    "build_game",
    "farmer_revenue",
    "check_assumptions",
    "verify_structure",
    "NDH_MARGIN_FACTOR",
]

# NDH is a strict inequality; totals within this margin of Q count as
# violations rather than numerical luck.
NDH_MARGIN_FACTOR = 1e-9


def _rtol(x: float, rel: float = 1e-6) -> float:
    return rel * max(1.0, abs(x))


@dataclass(frozen=True)
class AssumptionReport:
    """SC/NDH verdicts for a built game.

    ``sc_terms`` maps each farmer-less coalition to its SC bound term;
    ``sc_bound`` is their minimum.  ``ndh_witnesses`` lists coalitions
    whose optimal total reaches Q (within the strictness margin).
    """

    sc_bound: float
    sc_holds: bool
    sc_argmin: Coalition
    sc_terms: dict
    ndh_holds: bool
    ndh_witnesses: tuple

    @property
    def ok(self) -> bool:
        return self.sc_holds and self.ndh_holds


@dataclass
class CoalitionGame:
    """Characteristic function plus per-coalition solve data."""

    situation: Situation
    values: dict = field(default_factory=dict)      # Coalition -> v
    orders: dict = field(default_factory=dict)      # Coalition -> {i: kg}
    revenues: dict = field(default_factory=dict)    # Coalition -> r
    results: dict = field(default_factory=dict)     # Coalition -> SolveResult
    oracles: dict = field(default_factory=dict)     # Coalition -> OracleResult
    assumptions: AssumptionReport | None = None
    tol: float = 0.0
    seed: int = 42

    @property
    def n(self) -> int:
        return self.situation.n

    def coalitions(self) -> list:
        return sorted(self.values.keys(), key=Coalition.sort_key)

    def value(self, coalition: Coalition) -> float:
        """v; the empty set and the farmer alone are worth 0."""
        if coalition.mask == 0:
            return 0.0
        return self.values[coalition]

    def revenue(self, coalition: Coalition) -> float:
        return self.revenues[coalition]

    def order_total(self, coalition: Coalition) -> float:
        return float(sum(self.orders[coalition].values()))

    @property
    def grand(self) -> Coalition:
        return Coalition((1 << self.n) - 1, True)

    @property
    def grand_value(self) -> float:
        return self.values[self.grand]

    def grand_orders(self) -> dict:
        return self.orders[self.grand]

    def max_revenue(self) -> tuple:
        """Largest farmer revenue over all coalitions, both with and
        without the farmer; returns (revenue, coalition)."""
        best = max(self.revenues.items(), key=lambda kv: (kv[1], ))
        # deterministic tie-break: canonical coalition order
        top = best[1]
        ties = [c for c, r in self.revenues.items()
                if r >= top - _rtol(top)]
        ties.sort(key=Coalition.sort_key)
        c = ties[0]
        return self.revenues[c], c


def farmer_revenue(game: CoalitionGame, coalition: Coalition) -> float:
    """Farmer revenue for a solved coalition, from its stored orders."""
    if coalition not in game.orders:
        raise KeyError(f"coalition {coalition} has not been solved")
    sit = game.situation
    total = game.order_total(coalition)
    if coalition.with_farmer:
        return sit.cost_rate * total + sit.bbar * (sit.Q - total)
    if total == 0.0:
        return 0.0
    return sit.purchase_cost(min(total, sit.purchase_cost.domain_end)) * total


def oracle_axis_points(size: int, grid: int) -> int:
    """Per-axis oracle resolution for a ``size``-distributor coalition,
    capped so the full grid stays within the memory guard."""
    cap = {1: 1 << 22, 2: 4096, 3: 256}[size]
    return max(2, min(grid, cap))


def build_game(sit: Situation, tol: float | None = None, seed: int = 42,
               oracle: str = "off", oracle_grid: int = 801,
               market_results: dict | None = None) -> CoalitionGame:
    """Solve every coalition and assemble the game.

    ``oracle`` controls the independent grid certificate: "off", "small"
    (only coalitions of <= 3 distributors), or "all" (every coalition; an
    error if any is too large for the grid).  ``oracle_grid`` is the
    requested points per axis, capped per coalition size.
    ``market_results`` (mask -> SolveResult) reuses farmer-less solves,
    which do not depend on bbar -- used by the compensation-rate sweep.
    """
    xtol = default_tol(sit) if tol is None else tol
    game = CoalitionGame(situation=sit, tol=xtol, seed=seed)
    coop_cache: dict = {}

    for coalition in sit.coalitions():
        if coalition.with_farmer:
            res = solve_with_farmer(sit, coalition, tol=xtol, _cache=coop_cache)
        elif market_results is not None and coalition.mask in market_results:
            prev = market_results[coalition.mask]
            res = SolveResult(orders=dict(prev.orders), value=prev.value,
                              iterations=0)
        else:
            res = solve_without_farmer(sit, coalition, tol=xtol, seed=seed)
            if market_results is not None:
                market_results[coalition.mask] = res

        if oracle != "off":
            small = coalition.size <= 3
            if oracle == "all" and not small:
                raise ValueError(
                    f"oracle 'all' requested but {coalition} is too large"
                )
            if small:
                cert = grid_oracle(
                    sit, coalition, coalition.with_farmer,
                    grid=oracle_axis_points(coalition.size, oracle_grid),
                )
                game.oracles[coalition] = cert
                res.oracle_gap = res.value - cert.value

        game.results[coalition] = res
        game.values[coalition] = res.value
        game.orders[coalition] = dict(res.orders)
        game.revenues[coalition] = farmer_revenue(game, coalition)
        _log.info(
            "solved coalition=%s value=%.6f total=%.6f evals=%d",
            coalition.label(), res.value, res.total, res.iterations,
        )

    game.assumptions = check_assumptions(game)
    return game


def check_assumptions(game: CoalitionGame) -> AssumptionReport:
    """Verify SC and NDH on a built game (report only; never raises)."""
    sit = game.situation
    eps = NDH_MARGIN_FACTOR * sit.Q

    sc_terms: dict = {}
    for coalition in game.coalitions():
        if coalition.with_farmer:
            continue
        total = game.order_total(coalition)
        if total >= sit.Q:
            sc_terms[coalition] = math.inf
            continue
        b_at = sit.purchase_cost(min(total, sit.purchase_cost.domain_end))
        sc_terms[coalition] = (b_at - sit.cost_rate) * total / (sit.Q - total)
    sc_argmin = min(sc_terms, key=lambda c: (sc_terms[c], c.sort_key()))
    sc_bound = sc_terms[sc_argmin]
    sc_holds = 0.0 < sit.bbar <= sc_bound + _rtol(sc_bound, 1e-9)

    ndh_witnesses = tuple(
        c for c in game.coalitions()
        if game.order_total(c) >= sit.Q - eps
    )
    return AssumptionReport(
        sc_bound=sc_bound,
        sc_holds=bool(sc_holds),
        sc_argmin=sc_argmin,
        sc_terms=sc_terms,
        ndh_holds=not ndh_witnesses,
        ndh_witnesses=ndh_witnesses,
    )


@dataclass
class StructureReport:
    """Outcome of the structural property checks; ``failures`` maps check
    name to human-readable witnesses (empty when everything holds)."""

    failures: dict
    checked: dict

    @property
    def ok(self) -> bool:
        return not any(self.failures.values())

    def summary(self) -> str:
        lines = []
        for name in sorted(self.checked):
            bad = self.failures.get(name, [])
            status = "ok" if not bad else f"FAIL ({len(bad)} witnesses)"
            lines.append(f"{name}: {status} [{self.checked[name]} checks]")
            for w in bad[:5]:
                lines.append(f"  - {w}")
        return "\n".join(lines)


def verify_structure(game: CoalitionGame, samples: int = 64,
                     seed: int = 42) -> StructureReport:
    """Check the structural properties a valid game must satisfy.

    (a) superadditivity over all disjoint coalition pairs;
    (b) monotonicity of v over all nested coalition pairs;
    (c) the collective-compensation identity
        ``v(S0) = sum_i v({0,i}) + (|S|-1) * bbar * Q``;
    (d) sampled per-distributor optimality of the cooperation orders
        (``samples`` random feasible orders per coalition, seeded);
    (e) per-distributor dominance relations between cooperation and
        market profits at the stored optima, including the coalition
        independence of cooperation orders.

    Requires SC and NDH; exhaustive pair checks are quadratic in the
    number of coalitions, so n is capped at 10.
    """
    sit = game.situation
    if sit.n > 10:
        raise ValueError("structure verification is limited to n <= 10")
    if game.assumptions is None or not game.assumptions.ok:
        raise ValueError("structure checks require SC and NDH to hold")

    failures: dict = {name: [] for name in
                      ("positivity", "superadditive", "monotone",
                       "collective_identity", "sampled_optimality",
                       "term_dominance")}
    checked = dict.fromkeys(failures, 0)
    coalitions = game.coalitions()
    farmer_alone = Coalition(0, True)
    everyone = coalitions + [farmer_alone]

    def v(c: Coalition) -> float:
        return game.value(c)

    # positivity: 0 < v(S) <= v(S0)
    for c in coalitions:
        if c.with_farmer:
            continue
        checked["positivity"] += 1
        if not v(c) > 0.0:
            failures["positivity"].append(f"v({c}) = {v(c)} is not positive")
        up = c.with_farmer_added()
        if v(c) > v(up) + _rtol(v(up)):
            failures["positivity"].append(
                f"v({c}) = {v(c)} exceeds v({up}) = {v(up)}"
            )

    # (a) superadditivity
    for a in everyone:
        for b in coalitions:
            if b.with_farmer or not a.isdisjoint(b) or a.mask == b.mask == 0:
                continue
            union = Coalition(a.mask | b.mask, a.with_farmer or b.with_farmer)
            checked["superadditive"] += 1
            lhs = v(a) + v(b)
            if lhs > v(union) + _rtol(v(union)):
                failures["superadditive"].append(
                    f"v({a}) + v({b}) = {lhs} > v({union}) = {v(union)}"
                )

    # (b) monotonicity
    for a in everyone:
        for b in everyone:
            if a is b or not a.issubset(b):
                continue
            checked["monotone"] += 1
            if v(a) > v(b) + _rtol(v(b)):
                failures["monotone"].append(
                    f"v({a}) = {v(a)} > v({b}) = {v(b)}"
                )

    # (c) collective-compensation identity
    singles = {i: v(Coalition.of([i], with_farmer=True))
               for i in range(1, sit.n + 1)}
    for c in coalitions:
        if not c.with_farmer:
            continue
        checked["collective_identity"] += 1
        expect = (sum(singles[i] for i in c.members)
                  + (c.size - 1) * sit.bbar * sit.Q)
        if abs(v(c) - expect) > _rtol(expect):
            failures["collective_identity"].append(
                f"v({c}) = {v(c)} vs identity value {expect}"
            )

    # (d) sampled optimality of cooperation orders, per distributor term
    rng = np.random.default_rng(seed)
    c_eff = sit.cost_rate - sit.bbar

    def coop_lambda(i: int, q: float) -> float:
        if q == 0.0:
            return 0.0
        return (sit.price[i - 1](q) - sit.transport[i - 1](q) - c_eff) * q

    for c in coalitions:
        if not c.with_farmer:
            continue
        opt = game.orders[c]
        caps = {i: min(sit.order_cap(i), sit.Q) for i in c.members}
        for _ in range(samples):
            u = rng.uniform(0.0, 1.0, c.size)
            pt = {i: float(u[k] * caps[i]) for k, i in enumerate(c.members)}
            total = sum(pt.values())
            if total > sit.Q:
                pt = {i: q * sit.Q / total * 0.999 for i, q in pt.items()}
            checked["sampled_optimality"] += 1
            for i in c.members:
                lhs = coop_lambda(i, opt[i])
                rhs = coop_lambda(i, pt[i])
                if lhs < rhs - _rtol(rhs):
                    failures["sampled_optimality"].append(
                        f"{c}: distributor {i} term {lhs} < {rhs} "
                        f"at q={pt[i]}"
                    )

    # (e) dominance relations at stored optima
    grand = game.grand
    grand_orders = game.orders[grand]
    grand_total = game.order_total(grand)
    for c in coalitions:
        if c.with_farmer:
            continue
        s0 = c.with_farmer_added()
        coop_orders = game.orders[s0]
        coop_total = game.order_total(s0)
        mkt_orders = game.orders[c]
        mkt_total = game.order_total(c)
        checked["term_dominance"] += 1
        for i in c.members:
            grand_term = coop_term(sit, i, grand_orders[i], grand_total)
            sub_term = coop_term(sit, i, coop_orders[i], coop_total)
            mkt = market_term(sit, i, mkt_orders[i], mkt_total)
            coop_at_mkt = coop_term(sit, i, mkt_orders[i], mkt_total)
            if grand_term < sub_term - _rtol(sub_term):
                failures["term_dominance"].append(
                    f"grand-coalition term for {i} below its {s0} term"
                )
            if coop_at_mkt < mkt - _rtol(mkt):
                failures["term_dominance"].append(
                    f"{c}: cooperation term for {i} below market term "
                    f"at the market optimum"
                )
            if grand_term < mkt - _rtol(mkt):
                failures["term_dominance"].append(
                    f"grand-coalition term for {i} below market term of {c}"
                )
            if abs(coop_orders[i] - grand_orders[i]) > max(10 * game.tol, 1e-9 * sit.Q):
                failures["term_dominance"].append(
                    f"cooperation order for {i} differs between {s0} and grand"
                )

    return StructureReport(failures=failures, checked=checked)
