import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fraclap.core import Ball, FieldEvaluationError
from fraclap.expr import (ArityError, ExprSyntaxError, FieldSpec, UnknownIdentifierError, compile, parse, unparse,
                          variables)


def ev(src, P):
    return compile(FieldSpec(src, 2)).evaluate(np.atleast_2d(np.asarray(P, float)))


def test_precedence_and_associativity():
    assert ev("2 + 3 * 4", [0, 0])[0] == 14
    assert ev("2 ^ 3 ^ 2", [0, 0])[0] == 512
    assert ev("-2 ^ 2", [0, 0])[0] == -4
    assert ev("8 / 4 / 2", [0, 0])[0] == 1


def test_variables_and_functions():
    P = [[3.0, 4.0]]
    assert ev("rnorm", P)[0] == 5
    assert ev("max(x1, x2, 1)", P)[0] == 4
    assert ev("pospart(x1 - 5) + sqrt(abs(-x2))", P)[0] == 2
    assert variables(parse("x1 * cos(x2)")) == {"x1", "x2"}


@pytest.mark.parametrize("src,offset", [("2 + * 3", 5), ("(1 + 2", 7), ("1 $ 2", 3), ("", 1)])
def test_syntax_errors_carry_offsets(src, offset):
    with pytest.raises(ExprSyntaxError) as e:
        parse(src)
    assert e.value.offset == offset


def test_unknown_names_and_arity():
    with pytest.raises(UnknownIdentifierError) as e:
        parse("1 + foo")
    assert e.value.offset == 5
    with pytest.raises(ArityError):
        parse("sin(1, 2)")
    with pytest.raises(ArityError):
        parse("min(1)")
    with pytest.raises(ExprSyntaxError):
        parse("sin + 1")


def test_nesting_limits():
    parse("(" * 90 + "1" + ")" * 90)
    with pytest.raises(ExprSyntaxError):
        parse("(" * 150 + "1" + ")" * 150)
    with pytest.raises(ExprSyntaxError):
        parse("-" * 5000 + "1")
    with pytest.raises(ExprSyntaxError):
        parse("1" + "+1" * 300)  # left-deep tree beyond the depth cap


def test_non_finite_values_are_errors():
    with pytest.raises(ExprSyntaxError):
        parse("1e999")
    with pytest.raises(FieldEvaluationError) as e:
        ev("log(x1)", [[0.0, 1.0]])
    assert e.value.point == (0.0, 1.0)
    with pytest.raises(FieldEvaluationError):
        ev("1 / x2", [[1.0, 0.0]])


def test_dimension_check():
    with pytest.raises(Exception):
        FieldSpec("x3", 2)


def test_field_metadata():
    f = compile(FieldSpec("rnorm ^ 0.5", 2, support=Ball((0, 0), 2), holder_hint=0.5, interface_radii=(0.0,)))
    assert f.support.radius == 2 and f.holder_alpha == 0.5 and f.interfaces[0].radius == 0.0


_leaf = st.one_of(st.floats(0, 1e6, allow_nan=False).map(repr), st.sampled_from(["x1", "x2", "rnorm"]))


def _combine(children):
    return st.one_of(
        st.tuples(children, st.sampled_from("+-*/^"), children).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
        children.map(lambda c: f"-{c}"),
        children.map(lambda c: f"cos({c})"),
        st.tuples(children, children).map(lambda t: f"max({t[0]}, {t[1]})"),
    )


@settings(max_examples=200)
@given(st.recursive(_leaf, _combine, max_leaves=12))
def test_unparse_round_trip(src):
    tree = parse(src)
    assert parse(unparse(tree)) == tree
