import math

import numpy as np
import pytest

from farmcoop import (
    Coalition,
    HarvestDepletedError,
    coop_value,
    grid_oracle,
    market_value,
    situation_from_dict,
    solve_1d,
    solve_with_farmer,
    solve_without_farmer,
)
from farmcoop.optimize import _maximize_piecewise


# Closed-form oracles for the two-distributor dataset: with effective cost
# c the per-distributor cooperation term is a downward parabola
# (a - s*q)*q with vertex q* = a/(2s) and value a^2/(4s).
def vertex(a, s):
    return a / (2.0 * s), a * a / (4.0 * s)


def test_solve_1d_first_distributor(sit_two):
    # p1 - t1 - 0.8 = 5.2 - 0.0019 q on the active range
    q_star, value = vertex(5.2, 0.0019)
    q, v, _ = solve_1d(sit_two, 1, c=0.8)
    assert q == pytest.approx(q_star, abs=0.01)
    assert v == pytest.approx(value, abs=1e-4)
    assert q == pytest.approx(1368.42, abs=0.01)


def test_solve_1d_second_distributor(sit_two):
    q_star, value = vertex(5.2, 0.0029)
    q, v, _ = solve_1d(sit_two, 2, c=0.8)
    assert q == pytest.approx(q_star, abs=0.01)
    assert v == pytest.approx(value, abs=1e-4)
    assert q == pytest.approx(896.55, abs=0.01)


def test_solve_1d_zero_cap(sit_two):
    q, v, _ = solve_1d(sit_two, 1, c=0.8, cap=0.0)
    assert q == 0.0
    assert v == 0.0


def test_maximize_ties_break_toward_smaller_argument():
    # two equal peaks at x=1 and x=3
    def f(x):
        return -((x - 1.0) ** 2) * ((x - 3.0) ** 2)

    x, v, _ = _maximize_piecewise(f, f, 0.0, 4.0, {2.0}, xtol=1e-9)
    assert x == pytest.approx(1.0, abs=1e-6)
    assert v == pytest.approx(0.0, abs=1e-12)


def test_with_farmer_matches_closed_form(sit_two):
    res = solve_with_farmer(sit_two, Coalition.of([1, 2]))
    _, v1 = vertex(5.2, 0.0019)
    _, v2 = vertex(5.2, 0.0029)
    expected = v1 + v2 - sit_two.bbar * sit_two.Q
    assert res.value == pytest.approx(expected, abs=1e-3)
    assert res.value == pytest.approx(5288.92, abs=0.5)
    # value is re-evaluated from the orders
    assert res.value == pytest.approx(
        coop_value(sit_two, (1, 2), res.orders), abs=1e-9
    )


def test_with_farmer_orders_are_coalition_independent(sit_two, game_two):
    solo = solve_with_farmer(sit_two, Coalition.of([1]))
    pair = solve_with_farmer(sit_two, Coalition.of([1, 2]))
    assert solo.orders[1] == pytest.approx(pair.orders[1], abs=1e-9)
    grand = game_two.orders[game_two.grand]
    assert grand[1] == pytest.approx(pair.orders[1], abs=1e-9)


def test_without_farmer_singleton(sit_two):
    # margin 1 - 0.0014 q: vertex oracle
    q_star, value = vertex(1.0, 0.0014)
    res = solve_without_farmer(sit_two, Coalition.of([1]))
    assert res.orders[1] == pytest.approx(q_star, abs=0.01)
    assert res.value == pytest.approx(value, abs=1e-4)


def test_without_farmer_pair_matches_stationary_point(sit_two):
    # coupled quadratic: F = q1 + q2 - 0.0014 q1^2 - 0.0024 q2^2
    #                        + 0.001 q1 q2 (concave); solve the FOCs exactly
    a = np.array([[0.0028, -0.001], [-0.001, 0.0048]])
    q1, q2 = np.linalg.solve(a, np.array([1.0, 1.0]))
    res = solve_without_farmer(sit_two, Coalition.of([1, 2]))
    assert res.orders[1] == pytest.approx(q1, abs=0.05)
    assert res.orders[2] == pytest.approx(q2, abs=0.05)
    expected = (q1 + q2 - 0.0014 * q1 ** 2 - 0.0024 * q2 ** 2
                + 0.001 * q1 * q2)
    assert res.value == pytest.approx(expected, abs=1e-3)
    assert res.value == pytest.approx(385.85, abs=0.5)


def test_without_farmer_feasibility(sit_three):
    for members in ([1], [2], [3], [1, 2], [1, 3], [2, 3], [1, 2, 3]):
        res = solve_without_farmer(sit_three, Coalition.of(members))
        assert all(q >= 0.0 for q in res.orders.values())
        assert res.total <= sit_three.Q
        for i in members:
            assert res.orders[i] <= sit_three.order_cap(i) + 1e-9


def test_solver_deterministic(sit_three):
    a = solve_without_farmer(sit_three, Coalition.of([1, 2, 3]))
    b = solve_without_farmer(sit_three, Coalition.of([1, 2, 3]))
    assert a.orders == b.orders
    assert a.value == b.value


def test_harvest_depletion_reported():
    doc = {
        "Q": 100.0,
        "C": 10.0,
        "bbar": 0.09,   # effective cost 0.01; margin stays positive at Q
        "b": [{"lo": 0, "hi": 100, "expr": "2 - 0.005*q"}],
        "distributors": [{
            "t": [{"lo": 0, "hi": 250, "expr": "0.5 - 0.001*q"},
                  {"lo": 250, "hi": None, "expr": "0.25"}],
            "p": [{"lo": 0, "hi": 100, "expr": "4 - 0.02*q"},
                  {"lo": 100, "hi": None, "expr": "2"}],
        }],
    }
    sit = situation_from_dict(doc)
    with pytest.raises(HarvestDepletedError, match="strictly below Q"):
        solve_with_farmer(sit, Coalition.of([1]))


# -- grid oracle --------------------------------------------------------------


def test_oracle_singleton(sit_two):
    cert = grid_oracle(sit_two, Coalition.of([1]), with_farmer=False,
                       grid=3001)
    assert cert.value == pytest.approx(178.57, abs=0.5)
    res = solve_without_farmer(sit_two, Coalition.of([1]))
    assert res.value >= cert.value - cert.tol
    assert abs(res.value - cert.value) <= cert.tol


def test_oracle_forced_zero_order(sit_two):
    cert = grid_oracle(sit_two, Coalition.of([1, 2]), with_farmer=False,
                       grid=1)
    assert cert.value == 0.0
    assert cert.orders == {1: 0.0, 2: 0.0}


def test_oracle_pair_low_comp(sit_low):
    cert = grid_oracle(sit_low, Coalition.of([1, 2]), with_farmer=False,
                       grid=801)
    assert cert.value == pytest.approx(3424.46, abs=1.0)
    res = solve_without_farmer(sit_low, Coalition.of([1, 2]))
    assert res.value >= cert.value - cert.tol


def test_oracle_with_farmer_agrees(sit_two):
    cert = grid_oracle(sit_two, Coalition.of([1, 2]), with_farmer=True,
                       grid=801)
    res = solve_with_farmer(sit_two, Coalition.of([1, 2]))
    assert res.value >= cert.value - cert.tol
    assert abs(res.value - cert.value) <= cert.tol


def test_oracle_rejects_large_coalitions(sit_three):
    with pytest.raises(ValueError, match="too large"):
        grid_oracle(sit_three, Coalition((1 << 4) - 1, False),
                    with_farmer=False, grid=11)


def test_market_value_zero_orders(sit_two):
    assert market_value(sit_two, (1, 2), {1: 0.0, 2: 0.0}) == 0.0
    assert coop_value(sit_two, (1, 2), {1: 0.0, 2: 0.0}) == pytest.approx(
        -sit_two.bbar * sit_two.Q
    )
