import math

import numpy as np
import pytest

from farmcoop import PiecewiseError, PiecewiseFunction, check_shape


def pw(*segs):
    return PiecewiseFunction(segs)


def test_eval_picks_correct_segment():
    b = pw((0, 6000, "3 - q/4000"), (6000, 8000, "1.5"))
    assert b(0.0) == pytest.approx(3.0)
    assert b(4000.0) == pytest.approx(2.0)
    assert b(7000.0) == pytest.approx(1.5)
    assert b(8000.0) == pytest.approx(1.5)


def test_halfopen_convention_at_breakpoint():
    # continuity makes the value identical from either side
    b = pw((0, 6000, "3 - q/4000"), (6000, 8000, "1.5"))
    left = b.segments[0].expr(6000.0)
    right = b.segments[1].expr(6000.0)
    assert b(6000.0) == pytest.approx(left) == pytest.approx(right)


def test_domain_errors():
    b = pw((0, 3000, "5 - q/2000"))
    with pytest.raises(PiecewiseError):
        b(-1.0)
    with pytest.raises(PiecewiseError):
        b(3000.1)


def test_rejects_gap():
    with pytest.raises(PiecewiseError, match="contiguous"):
        pw((0, 100, "1"), (200, 300, "1"))


def test_rejects_nonzero_start():
    with pytest.raises(PiecewiseError, match="start at 0"):
        pw((10, 100, "1"))


def test_rejects_discontinuity():
    with pytest.raises(PiecewiseError, match="discontinuity at q=1000"):
        pw((0, 1000, "7 - 3*q/1000"), (1000, None, "3"))


def test_accepts_tight_continuity():
    f = pw((0, 1333.3333333333333, "7 - 3*q/1000"),
           (1333.3333333333333, None, "3"))
    assert f(1333.3333333333333) == pytest.approx(3.0)


def test_infinite_tail_domain():
    f = pw((0, 1000, "2 - q/1000"), (1000, None, "1"))
    assert f.domain_end == math.inf
    assert f(1e9) == 1.0


def test_saturation_start():
    f = pw((0, 2000, "8 - 2*q/1000"), (2000, None, "4"))
    assert f.saturation_start() == 2000.0
    g = pw((0, 1000, "9 - 4.5*q/1000"), (1000, None, "4500/q"))
    assert g.saturation_start() == math.inf
    h = pw((0, 3000, "5 - q/2000"))
    assert h.saturation_start() == math.inf


def test_eval_array_matches_scalar():
    f = pw((0, 100, "9.85"),
           (100, 1850, "5 - 1.5*q/1000 + 50/sqrt(q)"),
           (1850, None, "5 - 1.5*1850/1000 + 50/sqrt(1850)"))
    qs = np.array([0.0, 50.0, 100.0, 500.0, 1850.0, 4000.0])
    out = f.eval_array(qs)
    for q, v in zip(qs, out):
        assert v == pytest.approx(f(float(q)))


def test_equality_and_roundtrip_dicts():
    f = pw((0, 2000, "8 - 2*q/1000"), (2000, None, "4"))
    g = PiecewiseFunction([(d["lo"], d["hi"], d["expr"])
                           for d in f.to_dicts()])
    assert f == g
    assert hash(f) == hash(g)


def test_immutable():
    f = pw((0, 3000, "5 - q/2000"))
    with pytest.raises(AttributeError):
        f.segments = ()


# -- shape diagnostics --------------------------------------------------------


def test_shape_of_decreasing_purchase_curve():
    # independently verify both monotonicity claims on a dense sample,
    # then compare with the checker's verdict
    b = pw((0, 3000, "5 - q/2000"))
    qs = np.linspace(0.0, 3000.0, 2001)
    ys = 5.0 - qs / 2000.0
    assert np.all(np.diff(ys) < 0)
    assert np.all(np.diff(ys * qs) >= -1e-9)

    rep = check_shape(b, grid=2001)
    assert rep.strictly_decreasing
    assert rep.non_increasing
    assert rep.product_non_decreasing
    assert rep.acceptable


def test_shape_constant_function():
    c = pw((0, 8000, "1.5"))
    rep = check_shape(c)
    assert rep.non_increasing
    assert not rep.strictly_decreasing       # flat everywhere
    assert rep.product_non_decreasing
    assert rep.acceptable                     # non-increasing is acceptable
    assert "strictly_decreasing" in rep.witnesses


def test_shape_increasing_function_reports_witness():
    f = pw((0, 100, "q"))
    rep = check_shape(f)
    assert not rep.non_increasing
    assert not rep.acceptable
    lo, hi = rep.witnesses["non_increasing"]
    assert 0.0 <= lo < hi <= 100.0


def test_shape_decreasing_product_reports_witness():
    # 1/q^2 decreases but q/q^2 = 1/q decreases too
    f = pw((0.0, 100.0, "100/(q*q + 1)"))
    rep = check_shape(f)
    assert rep.non_increasing
    assert not rep.product_non_decreasing
    assert not rep.acceptable


def test_shape_needs_finite_upper():
    f = pw((0, 1000, "2 - q/1000"), (1000, None, "1"))
    with pytest.raises(PiecewiseError):
        check_shape(f)
    rep = check_shape(f, upper=3000.0)
    assert rep.non_increasing
