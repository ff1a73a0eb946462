"""Profit allocations over the grand coalition (farmer = player 0).

Three rules split the grand-coalition profit ``v(N0)``:

* ``altruistic`` -- the distributors keep everything: distributor i gets
  its own profit term at the grand-coalition optimum, the farmer gets 0.
* ``fc`` (farmer compensation) -- each distributor passes the farmer its
  cheapest per-capita share of the farmer's marginal contribution over the
  distributor groups it belongs to:
  ``beta_i = min over S containing i of (v(S0) - v(S)) / |S|``.
  The farmer collects ``sum beta_i``.  This is the unique rule satisfying
  efficiency (EF), a distributor-reduction form (DR), and a cap on the
  farmer's take (MD); `axiom_witnesses` exhibits the independence of the
  three properties.
* ``mpc`` (minimal proportional compensation) -- the farmer is topped up
  exactly to the best revenue any distributor group could give him, funded
  by the distributors in proportion to their grand-coalition orders:
  ``alpha_i = (q_i / q_N) * (max revenue - r(N0))``.

All three are efficient; ``fc`` is always coalitionally stable, ``mpc``
need not be (see the stability module for the exact condition).
"""

from __future__ import annotations

from dataclasses import dataclass

from .game import CoalitionGame, _rtol
from .optimize import coop_term
from .situation import Coalition

__all__ = [
    "Allocation",
    "CompensationBreakdown",
    "altruistic_allocation",
    "fc_allocation",
    "mpc_allocation",
    "allocation_by_rule",
    "axiom_flags",
    "axiom_witnesses",
    "RULES",
]

RULES = ("altruistic", "fc", "mpc")


@dataclass(frozen=True)
class Allocation:
    """A payoff vector over the n+1 players; index 0 is the farmer."""

    payoffs: tuple
    rule: str = "custom"

    @property
    def farmer(self) -> float:
        return self.payoffs[0]

    def distributor(self, i: int) -> float:
        return self.payoffs[i]

    def total(self) -> float:
        return float(sum(self.payoffs))

    def coalition_total(self, coalition: Coalition) -> float:
        acc = self.payoffs[0] if coalition.with_farmer else 0.0
        return acc + sum(self.payoffs[i] for i in coalition.members)

    def __len__(self) -> int:
        return len(self.payoffs)


@dataclass(frozen=True)
class CompensationBreakdown:
    """Per-distributor compensation terms behind an allocation.

    For ``fc`` the ``defining`` map records, per distributor, a coalition
    attaining its minimum (smallest bitmask on ties).
    """

    terms: dict
    defining: dict | None = None

    def total(self) -> float:
        return float(sum(self.terms.values()))


def _require_assumptions(game: CoalitionGame):
    if game.assumptions is None or not game.assumptions.ok:
        raise ValueError(
            "allocation rules require the SC and NDH assumptions to hold"
        )


def _grand_terms(game: CoalitionGame) -> list:
    """Per-distributor cooperation profit at the grand-coalition optimum."""
    sit = game.situation
    orders = game.grand_orders()
    total = game.order_total(game.grand)
    return [coop_term(sit, i, orders[i], total) for i in range(1, sit.n + 1)]


def altruistic_allocation(game: CoalitionGame) -> Allocation:
    """Farmer gets 0; distributor i keeps its grand-coalition profit term."""
    _require_assumptions(game)
    return Allocation(payoffs=(0.0, *_grand_terms(game)), rule="altruistic")


def _marginal_per_capita(game: CoalitionGame, i: int):
    """min over farmer-less S containing i of (v(S0) - v(S)) / |S|,
    with the smallest-bitmask argmin on (near-)ties."""
    cands = [
        ((game.value(c.with_farmer_added()) - game.value(c)) / c.size, c)
        for c in game.coalitions()
        if not c.with_farmer and c.contains(i)
    ]
    best = min(term for term, _ in cands)
    near = [c for term, c in cands if term <= best + _rtol(best)]
    return best, min(near, key=lambda c: c.mask)


def fc_allocation(game: CoalitionGame):
    """Farmer-compensation rule; returns (allocation, breakdown)."""
    _require_assumptions(game)
    terms = _grand_terms(game)
    betas, defining = {}, {}
    for i in range(1, game.n + 1):
        betas[i], defining[i] = _marginal_per_capita(game, i)
    payoffs = [sum(betas.values())]
    payoffs += [terms[i - 1] - betas[i] for i in range(1, game.n + 1)]
    return (
        Allocation(payoffs=tuple(payoffs), rule="fc"),
        CompensationBreakdown(terms=betas, defining=defining),
    )


def mpc_allocation(game: CoalitionGame):
    """Minimal-proportional-compensation rule; returns (allocation,
    breakdown).  Collapses to the altruistic rule when the farmer already
    earns his maximum revenue in the grand coalition."""
    _require_assumptions(game)
    sit = game.situation
    terms = _grand_terms(game)
    orders = game.grand_orders()
    q_total = game.order_total(game.grand)
    max_rev, _ = game.max_revenue()
    alphas = {}
    for i in range(1, sit.n + 1):
        share = orders[i] / q_total
        alphas[i] = (share * max_rev
                     - (sit.cost_rate - sit.bbar) * orders[i]
                     - sit.bbar * sit.Q * share)
    payoffs = [sum(alphas.values())]
    payoffs += [terms[i - 1] - alphas[i] for i in range(1, sit.n + 1)]
    return (
        Allocation(payoffs=tuple(payoffs), rule="mpc"),
        CompensationBreakdown(terms=alphas),
    )


def allocation_by_rule(game: CoalitionGame, rule: str):
    """Dispatch by rule id; returns (allocation, breakdown-or-None)."""
    if rule == "altruistic":
        return altruistic_allocation(game), None
    if rule == "fc":
        return fc_allocation(game)
    if rule == "mpc":
        return mpc_allocation(game)
    raise ValueError(f"unknown allocation rule {rule!r}; have {RULES}")


# ---------------------------------------------------------------------------
# the three defining properties and their independence
# ---------------------------------------------------------------------------


def axiom_flags(game: CoalitionGame, alloc: Allocation) -> dict:
    """Which of the three defining properties the payoff vector satisfies.

    EF: payoffs sum to v(N0).
    DR: every distributor's payoff is the altruistic payoff reduced by
        (v(S0) - v(S))/|S| for some distributor group S containing it.
    MD: the farmer's payoff does not exceed the sum of the per-distributor
        minima of those reduction terms.
    """
    base = altruistic_allocation(game)
    vN0 = game.grand_value
    ef = abs(alloc.total() - vN0) <= _rtol(vN0)

    dr = True
    for i in range(1, game.n + 1):
        reduction = base.payoffs[i] - alloc.payoffs[i]
        hit = False
        for c in game.coalitions():
            if c.with_farmer or not c.contains(i):
                continue
            term = (game.value(c.with_farmer_added()) - game.value(c)) / c.size
            if abs(term - reduction) <= _rtol(term):
                hit = True
                break
        if not hit:
            dr = False
            break

    cap = sum(_marginal_per_capita(game, i)[0] for i in range(1, game.n + 1))
    md = alloc.farmer <= cap + _rtol(cap)
    return {"EF": ef, "DR": dr, "MD": md}


def axiom_witnesses(game: CoalitionGame) -> list:
    """Three payoff vectors, each dropping exactly one of EF/DR/MD.

    Returns [(name, allocation, flags)]:
    * the farmer-compensation payoffs with the farmer's share withheld
      (breaks EF only);
    * every distributor's reduction shifted down by 1 with the farmer
      taking the corresponding smaller total (breaks DR only);
    * reductions taken as the per-distributor maximum instead of minimum
      (breaks MD only).
    """
    _require_assumptions(game)
    base = altruistic_allocation(game)
    _, breakdown = fc_allocation(game)
    betas = breakdown.terms
    n = game.n

    witnesses = []

    kept = [0.0] + [base.payoffs[i] - betas[i] for i in range(1, n + 1)]
    witnesses.append(("withheld_farmer_share", Allocation(tuple(kept))))

    shifted = [sum(betas.values()) - n]
    shifted += [base.payoffs[i] - (betas[i] - 1.0) for i in range(1, n + 1)]
    witnesses.append(("shifted_reductions", Allocation(tuple(shifted))))

    worst = {}
    for i in range(1, n + 1):
        worst[i] = max(
            (game.value(c.with_farmer_added()) - game.value(c)) / c.size
            for c in game.coalitions()
            if not c.with_farmer and c.contains(i)
        )
    maxed = [sum(worst.values())]
    maxed += [base.payoffs[i] - worst[i] for i in range(1, n + 1)]
    witnesses.append(("maximal_reductions", Allocation(tuple(maxed))))

    return [(name, alloc, axiom_flags(game, alloc))
            for name, alloc in witnesses]
