import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resum.complexfn import (
    BinOp,
    BranchError,
    BranchedFunction,
    Call,
    ExprSyntaxError,
    Side,
    compile_expr,
    eval_branched,
    log_slit,
    parse_expr,
    pretty,
    sqrt_slit,
)


def slit(src):
    return BranchedFunction.from_expr(src)


def test_parse_division_and_sqrt():
    e = parse_expr("1/(2*sqrt(pi*p))")
    assert isinstance(e, BinOp) and e.op == "/"
    assert isinstance(e.right, BinOp) and isinstance(e.right.right, Call)
    assert e.right.right.name == "sqrt"
    assert pretty(e).count("/") == 1


def test_parse_ln():
    e = parse_expr("ln(1+p)")
    assert e == Call("ln", (BinOp("+", parse_expr("1"), parse_expr("p")),), "principal")


def test_syntax_error_position():
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr("1+")
    assert info.value.position == 2


@pytest.mark.parametrize("src", ["", "foo(p)", "q+1", "pow(p)", "1 $ 2"])
def test_bad_input(src):
    with pytest.raises(ExprSyntaxError):
        parse_expr(src)


def test_every_branched_node_has_tag():
    e = parse_expr("ln(p)+sqrt_slit(p)*pow(p,2)")
    tags = []

    def walk(n):
        if isinstance(n, Call):
            tags.append(n.branch)
            for a in n.args:
                walk(a)
        elif isinstance(n, BinOp):
            walk(n.left)
            walk(n.right)

    walk(e)
    assert sorted(tags) == ["principal", "principal", "slit"]


def test_sqrt_sides():
    f = slit("sqrt_slit(p)")
    assert eval_branched(f, 4, Side.UPPER) == pytest.approx(2)
    assert eval_branched(f, 4, Side.LOWER) == pytest.approx(-2)


def test_log_lower_side():
    f = slit("ln_slit(p)")
    x = 3.7
    assert f(x, Side.LOWER) == pytest.approx(math.log(x) + 2j * math.pi)
    assert f(x, Side.UPPER) == pytest.approx(math.log(x))


def test_branch_point_and_off_on_cut():
    f = slit("sqrt_slit(p)")
    with pytest.raises(BranchError):
        f(0, Side.UPPER)
    with pytest.raises(BranchError):
        f(2.0, Side.OFF)


def test_cut_tolerance():
    f = slit("sqrt_slit(p)")
    assert f.on_cut(5 + 1e-13j)
    assert not f.on_cut(5 + 1e-9j)
    assert not f.on_cut(-5)


CORPUS = [
    "p", "1+p", "1-p-p", "1-(p-p)", "2*p/3", "2/(3*p)", "(1+p)*(2+p)", "-p", "-(1+p)",
    "exp(-p)", "ln(1+p)", "sqrt(pi*p)", "1/(2*sqrt(pi*p))", "pow(p,0.5)", "pow(1+p,-2)",
    "ln_slit(p)", "sqrt_slit(p)*2", "pow_slit(p,pi)", "e*p", "2i*p", "p*i", "1.5e-3*p",
    "exp(p)/(1+exp(p))", "ln(ln(2+p))", "p/(p/(p/2))", "3-(-p)", "pow(p,1/3)",
    "sqrt(1+p)-1", "(p+1)/(p-1)", "exp(-p*p/2)",
]


@pytest.mark.parametrize("src", CORPUS)
def test_pretty_roundtrip(src):
    e = parse_expr(src)
    assert parse_expr(pretty(e)) == e


def test_corpus_size():
    assert len(CORPUS) == 30


def test_compiled_values():
    f = compile_expr(parse_expr("1/(2*sqrt(pi*p))"))
    p = np.array([0.5, 2.0, 1 + 1j])
    np.testing.assert_allclose(f(p), 1 / (2 * np.sqrt(np.pi * p)))


finite = st.floats(min_value=-50, max_value=50, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(x=finite, y=finite.filter(lambda v: abs(v) > 1e-6))
def test_off_cut_consistency(x, y):
    f = slit("pow_slit(p,0.3)+ln_slit(p)")
    z = complex(x, y)
    vals = [f(z, s) for s in Side]
    assert vals[0] == vals[1] == vals[2]


@settings(max_examples=20, deadline=None)
@given(x=st.floats(min_value=1e-6, max_value=1e6))
def test_jump_closure(x):
    s = slit("sqrt_slit(p)")
    l = slit("ln_slit(p)")
    assert s.jump(x) == pytest.approx(2 * s(x, Side.UPPER), rel=1e-14)
    assert l.jump(x) == pytest.approx(-2j * math.pi, rel=1e-14)


def test_slit_primitives_match_cmath():
    for w in (1j, -1 + 1e-3j, -2, 3 - 1j):
        expected = cmath.log(w)
        if expected.imag < 0:
            expected += 2j * math.pi
        assert complex(log_slit(w)) == pytest.approx(expected)
        assert complex(sqrt_slit(w)) ** 2 == pytest.approx(w)


def test_rotated_cut():
    f = BranchedFunction(lambda z: sqrt_slit((np.asarray(z) - 1j) / 1j), 1j, 1j)
    assert f.on_cut(3j)
    up, lo = f(3j, Side.UPPER), f(3j, Side.LOWER)
    assert up == pytest.approx(-lo)
