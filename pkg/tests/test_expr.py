import numpy as np
import pytest

from ndlab.errors import ExpressionError
from ndlab.expr import compile_expression


@pytest.mark.parametrize("text,x,expected", [
    ("1 + 2*3", 0.0, 7.0),
    ("2^3^2", 0.0, 512.0),            # right-associative
    ("-x^2", 3.0, -9.0),              # unary binds looser than ^
    ("(1 + x)/(1 - x)", 0.5, 3.0),
    ("exp(0) + cos(0)", 1.0, 2.0),
    ("abs(-3.5) * x", 2.0, 7.0),
    ("1/(1+x^2)", 2.0, 0.2),
    ("exp(-0.5*x^2)", 1.0, np.exp(-0.5)),
    ("1.5e2 - 50", 0.0, 100.0),
])
def test_evaluates(text, x, expected):
    f = compile_expression(text)
    assert f(x) == pytest.approx(expected, rel=1e-14)


def test_vectorized():
    f = compile_expression("x^2 + 1")
    xs = np.linspace(-2, 2, 7)
    np.testing.assert_allclose(f(xs), xs ** 2 + 1)


def test_log_matches_numpy():
    f = compile_expression("log(x)")
    assert f(np.e) == pytest.approx(1.0)


def test_custom_variable_name():
    f = compile_expression("z * 2", variable="z")
    assert f(4.0) == 8.0


@pytest.mark.parametrize("bad", [
    "", "1 +", "(1", "sin()", "foo(2)", "1 @ 2", "x y", "exp 2",
])
def test_rejects_malformed(bad):
    with pytest.raises(ExpressionError):
        compile_expression(bad)


def test_error_carries_position():
    with pytest.raises(ExpressionError) as err:
        compile_expression("1 + $")
    assert "position" in str(err.value)
