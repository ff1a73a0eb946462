"""Coalition profit maximization.

Two problems arise per distributor coalition S:

* market purchase (no farmer deal): maximize
  ``sum_i (p_i(q_i) - t_i(q_i) - b(q_S)) * q_i`` -- coupled through the
  bulk purchase price ``b(q_S)``;
* farmer cooperation deal: maximize
  ``sum_i (p_i(q_i) - t_i(q_i) - C/Q - bbar*(Q - q_S)/q_S) * q_i``.

The cooperation objective rearranges to
``sum_i (p_i - t_i - (C/Q - bbar)) * q_i  -  bbar*Q``, a sum of independent
one-variable terms plus a constant, so it decomposes into per-distributor
1-D problems (valid while the optimal total stays below Q).  The rearranged
form is also what we evaluate: it has no 0/0 at ``q_S = 0`` and extends
continuously to ``-bbar*Q`` at the all-zero order.

Orders are restricted to ``[0, order_cap(i)]`` per distributor: the harvest
``Q`` tightened to the start of the price curve's flat tail, beyond which
the price quote carries no market information (see Situation.order_cap).

The per-coordinate objectives are piecewise smooth but not concave in
general (sqrt and 1/q pieces), so the 1-D solver does a dense scan of each
smooth piece followed by golden-section refinement, and the coupled solver
runs projected coordinate ascent from multiple starts.  A dense-grid oracle
provides an independent optimality certificate for small coalitions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .situation import Coalition, Situation

__all__ = [
    "SolveResult",
    "OracleResult",
    "HarvestDepletedError",
    "solve_1d",
    "solve_with_farmer",
    "solve_without_farmer",
    "grid_oracle",
    "market_value",
    "coop_value",
    "market_term",
    "coop_term",
    "default_tol",
    "SCAN_SAMPLES",
    "RANDOM_STARTS",
]

SCAN_SAMPLES = 1024          # samples per smooth piece in the 1-D scan
RANDOM_STARTS = 8            # extra random starts for the coupled solver
SWEEP_RTOL = 1e-9            # coordinate-ascent stop: relative sweep gain
_MAX_SWEEPS = 500
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class HarvestDepletedError(RuntimeError):
    """Optimal orders meet or exceed the harvest Q, so the separable
    treatment of the cooperation problem is invalid.  Reported rather than
    clamped; such situations are outside this model's scope."""

    def __init__(self, members, total, Q):
        super().__init__(
            f"cooperation optimum for {set(members)} orders {total:.6g} kg "
            f"of a {Q:.6g} kg harvest; model requires totals strictly below Q"
        )
        self.members = tuple(members)
        self.total = total
        self.Q = Q


def default_tol(sit: Situation) -> float:
    """Default order tolerance: 1e-6 of the harvest."""
    return 1e-6 * sit.Q


@dataclass
class SolveResult:
    """Optimum of one coalition problem.

    ``orders`` maps distributor id -> kg; ``value`` is the objective
    re-evaluated at the optimum; ``iterations`` counts objective
    evaluations; ``oracle_gap`` is ``value - oracle.value`` when a grid
    oracle was run for this coalition.
    """

    orders: dict
    value: float
    iterations: int = 0
    oracle_gap: float | None = None

    @property
    def total(self) -> float:
        return float(sum(self.orders.values()))


@dataclass
class OracleResult:
    """Best point on a dense feasible grid, with an honest resolution bound:
    the true optimum exceeds ``value`` by at most ``tol`` (Lipschitz
    estimate times grid step)."""

    orders: dict
    value: float
    tol: float
    grid: int
    evaluations: int = 0


# ---------------------------------------------------------------------------
# profit terms and objectives
# ---------------------------------------------------------------------------


def market_term(sit: Situation, i: int, q_i: float, total: float) -> float:
    """Distributor i's profit when the coalition buys ``total`` kg at the
    market purchase price: (p_i - t_i - b(total)) * q_i."""
    if q_i == 0.0:
        return 0.0
    bulk = sit.purchase_cost(min(total, sit.purchase_cost.domain_end))
    return (sit.price[i - 1](q_i) - sit.transport[i - 1](q_i) - bulk) * q_i


def coop_term(sit: Situation, i: int, q_i: float, total: float) -> float:
    """Distributor i's profit under the farmer deal (cost price plus a
    pro-rata share of the compensation for the ``Q - total`` unsold kg)."""
    if q_i == 0.0:
        return 0.0
    share = sit.bbar * (sit.Q - total) / total
    return (sit.price[i - 1](q_i) - sit.transport[i - 1](q_i)
            - sit.cost_rate - share) * q_i


def market_value(sit: Situation, members, orders: dict) -> float:
    """Coalition objective without the farmer, at the given orders."""
    total = float(sum(orders.get(i, 0.0) for i in members))
    acc = 0.0
    for i in members:
        q = orders.get(i, 0.0)
        if q > 0.0:
            acc += (sit.price[i - 1](q) - sit.transport[i - 1](q)) * q
    if total > 0.0:
        bulk = sit.purchase_cost(min(total, sit.purchase_cost.domain_end))
        acc -= bulk * total
    return acc


def coop_value(sit: Situation, members, orders: dict) -> float:
    """Coalition objective with the farmer, rearranged form (defined as
    ``-bbar*Q`` at the all-zero order)."""
    c = sit.cost_rate - sit.bbar
    acc = -sit.bbar * sit.Q
    for i in members:
        q = orders.get(i, 0.0)
        if q > 0.0:
            acc += (sit.price[i - 1](q) - sit.transport[i - 1](q) - c) * q
    return acc


# ---------------------------------------------------------------------------
# 1-D global maximization: per-piece scan + golden-section polish
# ---------------------------------------------------------------------------


def _golden_max(fn, a: float, b: float, xtol: float):
    """Golden-section maximization of a scalar function on [a, b]."""
    evals = 0
    if b - a <= xtol:
        x = 0.5 * (a + b)
        return x, fn(x), 1
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fn(c), fn(d)
    evals += 2
    while b - a > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fn(d)
        evals += 1
    x = c if fc >= fd else d
    return x, max(fc, fd), evals


def _pick_best(candidates):
    """Max value with ties (relative 1e-12) broken toward smaller x."""
    vmax = max(v for _, v in candidates)
    if not math.isfinite(vmax):
        return min(candidates, key=lambda c: c[0])
    cutoff = vmax - 1e-12 * max(1.0, abs(vmax))
    near = [(x, v) for x, v in candidates if v >= cutoff]
    return min(near, key=lambda c: c[0])


def _maximize_piecewise(fn_scalar, fn_array, lo: float, hi: float,
                        breakpoints, xtol: float, samples: int = SCAN_SAMPLES):
    """Global max of a piecewise-smooth function on [lo, hi].

    ``breakpoints`` are the potential kinks; each smooth piece is scanned
    densely and the best bracket is polished by golden section.  Ties break
    toward smaller argument.  Returns (x, value, evaluations).
    """
    if hi <= lo:
        return lo, float(fn_scalar(lo)), 1
    cuts = sorted({lo, hi, *(float(x) for x in breakpoints if lo < x < hi)})
    candidates = []
    evals = 0
    for a, b in zip(cuts, cuts[1:]):
        xs = np.linspace(a, b, samples)
        ys = np.asarray(fn_array(xs), dtype=float)
        ys = np.where(np.isnan(ys), -np.inf, ys)
        evals += samples
        k = int(np.argmax(ys))           # first index on ties -> smaller x
        candidates.append((float(xs[k]), float(ys[k])))
        blo = float(xs[max(k - 1, 0)])
        bhi = float(xs[min(k + 1, samples - 1)])
        if bhi - blo > xtol:
            gx, gv, ge = _golden_max(fn_scalar, blo, bhi, xtol)
            evals += ge
            candidates.append((float(gx), float(gv)))
    x, v = _pick_best(candidates)
    return x, v, evals


def _margin_objective(sit: Situation, i: int, c: float):
    """Scalar/array callables for q -> (p_i(q) - t_i(q) - c) * q, defined
    as 0 at q = 0, plus the kink locations."""
    p = sit.price[i - 1]
    t = sit.transport[i - 1]

    def scalar(q: float) -> float:
        if q == 0.0:
            return 0.0
        return (p(q) - t(q) - c) * q

    def array(qs: np.ndarray) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            out = (p.eval_array(qs) - t.eval_array(qs) - c) * qs
        out[qs == 0.0] = 0.0
        return out

    breaks = set(p.breakpoints) | set(t.breakpoints)
    return scalar, array, breaks


def solve_1d(sit: Situation, i: int, c: float, cap: float | None = None,
             tol: float | None = None):
    """Maximize (p_i(q) - t_i(q) - c) * q over [0, cap] for a constant
    per-kg cost c.  Returns (q*, value, evaluations); ties break toward
    smaller q*."""
    xtol = default_tol(sit) if tol is None else tol
    hi = sit.order_cap(i) if cap is None else min(cap, sit.order_cap(i))
    scalar, array, breaks = _margin_objective(sit, i, c)
    return _maximize_piecewise(scalar, array, 0.0, hi, breaks, xtol)


# ---------------------------------------------------------------------------
# cooperation (with farmer): separable
# ---------------------------------------------------------------------------


def solve_with_farmer(sit: Situation, coalition, tol: float | None = None,
                      _cache: dict | None = None) -> SolveResult:
    """Solve the farmer-cooperation problem for a distributor set.

    Decomposes into per-distributor 1-D problems with constant effective
    cost ``C/Q - bbar``; the per-distributor optimum is therefore the same
    in every coalition the distributor joins.  ``_cache`` (distributor ->
    (q*, evals)) lets a game builder reuse those solves.  Raises
    :class:`HarvestDepletedError` if the optimal total reaches Q.
    """
    members = _members_of(coalition)
    c = sit.cost_rate - sit.bbar
    orders, evals = {}, 0
    for i in members:
        hit = _cache.get(i) if _cache is not None else None
        if hit is None:
            q, _, ev = solve_1d(sit, i, c, tol=tol)
            hit = (q, ev)
            if _cache is not None:
                _cache[i] = hit
        orders[i] = hit[0]
        evals += hit[1]
    total = sum(orders.values())
    if total >= sit.Q:
        raise HarvestDepletedError(members, total, sit.Q)
    return SolveResult(orders=orders, value=coop_value(sit, members, orders),
                       iterations=evals)


# ---------------------------------------------------------------------------
# market purchase (no farmer): multistart projected coordinate ascent
# ---------------------------------------------------------------------------


def _members_of(coalition):
    members = (coalition.members if isinstance(coalition, Coalition)
               else tuple(sorted(coalition)))
    if not members:
        raise ValueError("coalition must contain at least one distributor")
    if 0 in members:
        members = tuple(i for i in members if i != 0)
    return members


def _coordinate_objective(sit: Situation, i: int, rest: float):
    """Scalar/array callables for the 1-D slice of the market objective in
    distributor i's order q, other members' total fixed at ``rest``:
    (p_i - t_i)(q)*q - b(q + rest)*(q + rest)."""
    p = sit.price[i - 1]
    t = sit.transport[i - 1]
    b = sit.purchase_cost
    bend = b.domain_end

    def scalar(q: float) -> float:
        own = 0.0 if q == 0.0 else (p(q) - t(q)) * q
        tot = min(q + rest, bend)
        bulk = 0.0 if tot == 0.0 else b(tot) * tot
        return own - bulk

    def array(qs: np.ndarray) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            own = (p.eval_array(qs) - t.eval_array(qs)) * qs
        own[qs == 0.0] = 0.0
        tot = np.minimum(qs + rest, bend)
        return own - b.eval_array(tot) * tot

    breaks = set(p.breakpoints) | set(t.breakpoints)
    breaks |= {x - rest for x in b.breakpoints if x - rest > 0.0}
    return scalar, array, breaks


def _coordinate_ascent(sit: Situation, members, caps, start, tol: float):
    """Projected coordinate ascent from one start; each coordinate step is
    a global 1-D solve of the slice and never accepts a worse point, so the
    objective is monotone along the sweep."""
    x = dict(start)
    evals = 0
    value = market_value(sit, members, x)
    for _ in range(_MAX_SWEEPS):
        for i in members:
            rest = sum(x[j] for j in members if j != i)
            ub = max(0.0, min(caps[i], sit.Q - rest))
            scalar, array, breaks = _coordinate_objective(sit, i, rest)
            q, v, ev = _maximize_piecewise(scalar, array, 0.0, ub, breaks, tol)
            evals += ev + 1
            if v >= scalar(x[i]) or x[i] > ub:
                x[i] = q
        new_value = market_value(sit, members, x)
        if new_value - value <= SWEEP_RTOL * (1.0 + abs(new_value)):
            value = new_value
            break
        value = new_value
    return x, value, evals


def _project_feasible(orders: dict, members, Q: float) -> dict:
    """Remove any float-roundoff excess so the total is <= Q exactly."""
    total = sum(orders[i] for i in members)
    if total > Q:
        excess = total - Q
        big = max(members, key=lambda i: orders[i])
        orders[big] = max(0.0, orders[big] - excess)
    return orders


def solve_without_farmer(sit: Situation, coalition, tol: float | None = None,
                         seed: int = 42) -> SolveResult:
    """Solve the coupled market-purchase problem for a distributor set.

    Multistart (origin, each single-distributor optimum, 8 seeded random
    interior points) projected coordinate ascent.  The returned orders are
    exactly feasible (q_i >= 0, total <= Q); among value ties the smallest
    total and then the lexicographically smallest order vector wins.  The
    random starts are seeded per coalition, so results do not depend on the
    order in which coalitions are solved.
    """
    members = _members_of(coalition)
    mask = (coalition.mask if isinstance(coalition, Coalition)
            else Coalition.of(members).mask)
    xtol = default_tol(sit) if tol is None else tol
    caps = {i: min(sit.order_cap(i), sit.Q) for i in members}

    solo = {}
    evals = 0
    for i in members:
        scalar, array, breaks = _coordinate_objective(sit, i, 0.0)
        q, v, ev = _maximize_piecewise(scalar, array, 0.0, caps[i], breaks, xtol)
        solo[i] = q
        evals += ev
    if len(members) == 1:
        i = members[0]
        orders = _project_feasible({i: solo[i]}, members, sit.Q)
        return SolveResult(orders=orders,
                           value=market_value(sit, members, orders),
                           iterations=evals)

    starts = [{i: 0.0 for i in members}]
    for i in members:
        s = {j: 0.0 for j in members}
        s[i] = solo[i]
        starts.append(s)
    rng = np.random.default_rng([seed, mask])
    for _ in range(RANDOM_STARTS):
        u = rng.uniform(0.0, 1.0, len(members))
        pt = {i: float(u[k] * caps[i]) for k, i in enumerate(members)}
        total = sum(pt.values())
        if total > 0.95 * sit.Q:
            scale = 0.95 * sit.Q / total
            pt = {i: q * scale for i, q in pt.items()}
        starts.append(pt)

    best_x, best_v = None, -math.inf
    for start in starts:
        x, v, ev = _coordinate_ascent(sit, members, caps, start, xtol)
        evals += ev
        if best_x is None or v > best_v + 1e-9 * (1.0 + abs(best_v)):
            best_x, best_v = x, v
        elif v >= best_v - 1e-9 * (1.0 + abs(best_v)):
            cand = [x[i] for i in members]
            incumbent = [best_x[i] for i in members]
            if (sum(cand), cand) < (sum(incumbent), incumbent):
                best_x, best_v = x, max(v, best_v)

    orders = _project_feasible(dict(best_x), members, sit.Q)
    return SolveResult(orders=orders,
                       value=market_value(sit, members, orders),
                       iterations=evals)


# ---------------------------------------------------------------------------
# dense-grid oracle
# ---------------------------------------------------------------------------

_MAX_GRID_POINTS = 1 << 26


def grid_oracle(sit: Situation, coalition, with_farmer: bool,
                grid: int = 801) -> OracleResult:
    """Best objective over a dense feasible grid (``grid`` points per axis).

    Independent of the solvers: it evaluates the joint objective directly,
    with no separability or concavity assumptions.  Limited to coalitions
    of at most 3 distributors.  ``tol`` is ``2 * (Q/grid) * L`` with ``L``
    a sampled Lipschitz estimate of the objective along the axes.
    """
    members = _members_of(coalition)
    k = len(members)
    if k > 3:
        raise ValueError(f"coalition of {k} distributors too large for grid oracle")
    if grid < 1:
        raise ValueError("grid must be at least 1 point per axis")
    if grid ** k > _MAX_GRID_POINTS:
        raise ValueError(f"grid of {grid}^{k} points exceeds the memory guard")

    axes = [np.linspace(0.0, min(sit.order_cap(i), sit.Q), grid) for i in members]
    own_terms = []
    for ax, i in zip(axes, members):
        with np.errstate(invalid="ignore"):
            term = (sit.price[i - 1].eval_array(ax)
                    - sit.transport[i - 1].eval_array(ax)) * ax
        term[ax == 0.0] = 0.0
        own_terms.append(term)

    mesh = np.meshgrid(*axes, indexing="ij")
    total = sum(mesh)
    feasible = total <= sit.Q * (1.0 + 1e-12)
    own = own_terms[0].reshape([-1] + [1] * (k - 1))
    for j in range(1, k):
        own = own + own_terms[j].reshape([1] * j + [-1] + [1] * (k - 1 - j))

    if with_farmer:
        # joint objective written without the q_S denominator; equals
        # -bbar*Q at the all-zero order by continuity
        values = own - sit.cost_rate * total - sit.bbar * (sit.Q - total)
    else:
        clipped = np.minimum(total, sit.purchase_cost.domain_end)
        values = own - sit.purchase_cost.eval_array(clipped) * clipped
    values = np.where(feasible, values, -np.inf)

    flat = int(np.argmax(values))
    idx = np.unravel_index(flat, values.shape)
    orders = {i: float(axes[j][idx[j]]) for j, i in enumerate(members)}
    value = float(values[idx])

    # sampled Lipschitz estimate along each axis, ignoring infeasible cells
    finite = np.where(np.isfinite(values), values, np.nan)
    lip = 0.0
    for j in range(k):
        if len(axes[j]) < 2:
            continue
        step = float(axes[j][1] - axes[j][0])
        if step <= 0.0:
            continue
        d = np.abs(np.diff(finite, axis=j)) / step
        if np.isfinite(d).any():
            lip = max(lip, float(np.nanmax(d)))
    tol = 2.0 * (sit.Q / grid) * lip
    return OracleResult(orders=orders, value=value, tol=tol, grid=grid,
                        evaluations=int(values.size))
