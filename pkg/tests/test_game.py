import math

import pytest

from farmcoop import (
    Coalition,
    HarvestDepletedError,
    build_game,
    check_assumptions,
    farmer_revenue,
    situation_from_dict,
    verify_structure,
)

from golden import (
    CELL_TOL,
    LOW_COMP_SC_BOUND,
    LOW_COMP_TABLE,
    THREE_DIST_TABLE,
    TWO_DIST_SC_TERMS,
    TWO_DIST_TABLE,
)


def lab(game):
    return {c.label(): c for c in game.coalitions()}


def test_two_distributor_values(game_two):
    by = lab(game_two)
    for label, (_, _, _, value) in TWO_DIST_TABLE.items():
        assert game_two.value(by[label]) == pytest.approx(value, abs=CELL_TOL)


def test_three_distributor_select_cells(game_three):
    by = lab(game_three)
    assert game_three.value(by["{1,3}"]) == pytest.approx(5808.82, abs=CELL_TOL)
    assert game_three.value(by["{0,2,3}"]) == pytest.approx(5869.18, abs=CELL_TOL)
    for label, (orders, revenue, _, value) in THREE_DIST_TABLE.items():
        c = by[label]
        assert game_three.value(c) == pytest.approx(value, abs=CELL_TOL)
        assert game_three.revenue(c) == pytest.approx(revenue, abs=CELL_TOL)
        for i, q in orders.items():
            assert game_three.orders[c][i] == pytest.approx(q, abs=CELL_TOL)


def test_low_comp_values(game_low):
    by = lab(game_low)
    for label, (_, revenue, _, value) in LOW_COMP_TABLE.items():
        assert game_low.value(by[label]) == pytest.approx(value, abs=CELL_TOL)
        assert game_low.revenue(by[label]) == pytest.approx(revenue, abs=CELL_TOL)


def test_single_distributor_closed_form():
    # margin p - t - b = 1.5 - 0.014 q; quadratic vertex is the oracle
    doc = {
        "Q": 100.0, "C": 10.0, "bbar": 0.05,
        "b": [{"lo": 0, "hi": 100, "expr": "2 - 0.005*q"}],
        "distributors": [{
            "t": [{"lo": 0, "hi": 250, "expr": "0.5 - 0.001*q"},
                  {"lo": 250, "hi": None, "expr": "0.25"}],
            "p": [{"lo": 0, "hi": 100, "expr": "4 - 0.02*q"},
                  {"lo": 100, "hi": None, "expr": "2"}],
        }],
    }
    game = build_game(situation_from_dict(doc))
    c = Coalition.of([1])
    assert game.value(c) == pytest.approx(1.5 ** 2 / (4 * 0.014), abs=1e-4)
    assert game.orders[c][1] == pytest.approx(1.5 / 0.028, abs=0.01)


def test_empty_and_farmer_alone_are_zero(game_two):
    assert game_two.value(Coalition(0, False)) == 0.0
    assert game_two.value(Coalition(0, True)) == 0.0


def test_farmer_revenue_matches_table(game_two):
    by = lab(game_two)
    assert game_two.revenue(by["{1,2}"]) == pytest.approx(3560.75, abs=CELL_TOL)
    assert game_two.revenue(by["{0,1,2}"]) == pytest.approx(2411.98, abs=CELL_TOL)


def test_farmer_revenue_recompute_is_bit_exact(game_three):
    for c in game_three.coalitions():
        assert farmer_revenue(game_three, c) == game_three.revenue(c)


def test_farmer_revenue_at_full_harvest_equals_cost(game_two):
    # algebraic consequence of the cooperation revenue formula at q = Q
    sit = game_two.situation
    c = Coalition.of([1], with_farmer=True)
    orders = dict(game_two.orders[c])
    game_two.orders[c] = {1: sit.Q}
    try:
        assert farmer_revenue(game_two, c) == pytest.approx(sit.C)
    finally:
        game_two.orders[c] = orders


def test_unsolved_coalition_raises(game_two):
    with pytest.raises(KeyError):
        farmer_revenue(game_two, Coalition.of([1, 2, 3]))


# -- assumptions --------------------------------------------------------------


def test_sc_terms_two_distributors(game_two):
    a = game_two.assumptions
    by = {c.label(): t for c, t in a.sc_terms.items()}
    for label, expect in zip(("{1}", "{2}", "{1,2}"), TWO_DIST_SC_TERMS):
        assert by[label] == pytest.approx(expect, abs=0.005)
    assert a.sc_bound == pytest.approx(min(TWO_DIST_SC_TERMS), abs=0.005)
    assert a.sc_holds and a.ndh_holds
    assert a.sc_argmin.label() == "{2}"


def test_sc_bound_low_comp(game_low):
    assert game_low.assumptions.sc_bound == pytest.approx(
        LOW_COMP_SC_BOUND, abs=0.001
    )
    assert game_low.assumptions.sc_holds


def test_sc_violation_names_witness(sit_two):
    game = build_game(sit_two.replace_bbar(0.35))
    a = game.assumptions
    assert not a.sc_holds
    assert a.ndh_holds
    assert a.sc_argmin.label() == "{2}"
    assert 0.35 > a.sc_bound


def test_huge_bbar_depletes_harvest(sit_two):
    # at bbar = 10 the effective cost is negative and optimal orders hit
    # the caps, whose sum exceeds Q: reported as depletion, not clamped
    with pytest.raises(HarvestDepletedError):
        build_game(sit_two.replace_bbar(10.0))


def test_sc_boundary_inclusive(sit_two, game_two):
    bound = game_two.assumptions.sc_bound
    game = build_game(sit_two.replace_bbar(bound))
    assert game.assumptions.sc_holds


def test_check_assumptions_is_idempotent(game_three):
    again = check_assumptions(game_three)
    assert again.sc_bound == game_three.assumptions.sc_bound
    assert again.ndh_holds == game_three.assumptions.ndh_holds


# -- structure ----------------------------------------------------------------


@pytest.mark.parametrize("fixture", ["game_two", "game_three", "game_low"])
def test_structure_holds(fixture, request):
    game = request.getfixturevalue(fixture)
    report = verify_structure(game, samples=32, seed=7)
    assert report.ok, report.summary()


def test_collective_identity_example(game_two):
    by = lab(game_two)
    sit = game_two.situation
    lhs = game_two.value(by["{0,1,2}"])
    rhs = (game_two.value(by["{0,1}"]) + game_two.value(by["{0,2}"])
           + sit.bbar * sit.Q)
    assert lhs == pytest.approx(rhs, rel=1e-6)
    assert lhs == pytest.approx(5288.92, abs=CELL_TOL)


def test_singleton_identity_has_no_compensation_term(game_two):
    # |S| = 1 kills the (|S|-1) * bbar * Q term
    by = lab(game_two)
    assert game_two.value(by["{0,1}"]) == pytest.approx(
        game_two.value(by["{0,1}"]), rel=0
    )
    sit = game_two.situation
    lhs = game_two.value(by["{0,1}"])
    assert lhs == pytest.approx(lhs + 0 * sit.bbar * sit.Q)


def test_superadditivity_example(game_two):
    by = lab(game_two)
    lhs = game_two.value(by["{1}"]) + game_two.value(by["{2}"])
    assert lhs == pytest.approx(282.74, abs=CELL_TOL)
    assert lhs <= game_two.value(by["{1,2}"]) + 1e-9


def test_positivity_and_farmer_gain(game_three):
    for c in game_three.coalitions():
        if c.with_farmer:
            continue
        v = game_three.value(c)
        assert v > 0.0
        assert v <= game_three.value(c.with_farmer_added()) + 1e-6
