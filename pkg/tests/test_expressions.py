import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from farmcoop import ExpressionError, parse_expression


def test_linear_form():
    e = parse_expression("5 - q/2000")
    assert e(2000.0) == pytest.approx(4.0)
    assert e(0.0) == pytest.approx(5.0)


def test_identity_at_zero():
    assert parse_expression("q")(0) == 0.0


def test_sqrt_mix_continuity_value():
    e = parse_expression("5 - 1.5*q/1000 + 50/sqrt(q)")
    assert e(100.0) == pytest.approx(9.85)


def test_power_operator():
    assert parse_expression("q^2 + 1")(3.0) == pytest.approx(10.0)
    # right-associative
    assert parse_expression("2^3^2")(0.0) == pytest.approx(512.0)


def test_unary_minus():
    assert parse_expression("-q + 3")(1.0) == pytest.approx(2.0)


def test_constant_detection():
    assert parse_expression("(1/10)*(2*sqrt(5) + 15)").is_constant
    assert not parse_expression("5 - q/2000").is_constant


def test_constant_value_matches_closed_form():
    e = parse_expression("(1/10)*(2*sqrt(5) + 15)")
    assert e(123.0) == pytest.approx((2.0 * math.sqrt(5.0) + 15.0) / 10.0)


def test_division_by_zero_gives_inf():
    e = parse_expression("20/sqrt(2*q)")
    assert e(0.0) == math.inf
    assert e(50.0) == pytest.approx(2.0)


def test_syntax_error_carries_offset():
    with pytest.raises(ExpressionError) as err:
        parse_expression("5 + * q")
    assert err.value.offset == 4


def test_unknown_identifier():
    with pytest.raises(ExpressionError, match="unknown identifier 'foo'"):
        parse_expression("5 + foo")


def test_trailing_garbage():
    with pytest.raises(ExpressionError):
        parse_expression("5 5")


def test_unbalanced_paren():
    with pytest.raises(ExpressionError):
        parse_expression("sqrt(q")


def test_roundtrip_is_idempotent():
    for text in ("5 - q/2000", "50/sqrt(q)", "q^2 - 3*q + 1",
                 "(1/10)*(2*sqrt(5) + 15)", "-q"):
        once = parse_expression(text)
        twice = parse_expression(str(once))
        assert once == twice
        assert str(once) == str(twice)


def test_array_eval_matches_scalar():
    e = parse_expression("5 - 1.5*q/1000 + 50/sqrt(q)")
    qs = np.linspace(100.0, 1850.0, 7)
    out = e(qs)
    assert out.shape == qs.shape
    for q, v in zip(qs, out):
        assert v == pytest.approx(e(float(q)))


def test_compiled_matches_ast_walker():
    e = parse_expression("(5 - q/2000) * sqrt(q + 1) / (q + 2)")
    for q in (0.0, 1.0, 10.0, 2999.0):
        assert e(q) == pytest.approx(float(e.eval_ast(q)), rel=1e-15)


def test_eval_is_deterministic():
    e = parse_expression("5 - 1.5*q/1000 + 50/sqrt(q)")
    assert e(123.456) == e(123.456)


def test_immutable():
    e = parse_expression("q")
    with pytest.raises(AttributeError):
        e.text = "other"


# -- randomized round trip ---------------------------------------------------

_exprs = st.deferred(
    lambda: st.one_of(
        st.floats(min_value=0.0, max_value=100.0,
                  allow_nan=False).map(lambda v: f"{v!r}"),
        st.just("q"),
        st.tuples(_exprs, st.sampled_from("+-*/"), _exprs).map(
            lambda t: f"({t[0]} {t[1]} {t[2]})"
        ),
        _exprs.map(lambda s: f"sqrt(({s}) * ({s}) + 1)"),
    )
)


@settings(max_examples=60, deadline=None)
@given(_exprs, st.floats(min_value=0.01, max_value=1000.0, allow_nan=False))
def test_roundtrip_random(text, q):
    e = parse_expression(text)
    again = parse_expression(str(e))
    assert e == again
    v1, v2 = e(q), again(q)
    if math.isfinite(v1) and math.isfinite(v2):
        assert v1 == pytest.approx(v2, rel=1e-12, abs=1e-12)
    else:
        assert repr(v1) == repr(v2)
