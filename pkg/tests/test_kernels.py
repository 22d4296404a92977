import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ndlab.errors import DivergentMomentError
from ndlab.kernels import (
    kernel_from_expression,
    kernel_from_name,
    kernel_from_table,
    make_gaussian,
    make_heavy_tail,
    make_laplace,
    make_quartic,
    moment,
    quantile,
)

ALL_BUILTINS = [make_gaussian, make_laplace, make_quartic, make_heavy_tail]


@pytest.fixture(scope="module")
def kernels():
    return {fn.__name__: fn() for fn in ALL_BUILTINS}


def test_gaussian_values():
    k = make_gaussian()
    assert k.density(0.0) == pytest.approx(1.0 / math.pi, rel=1e-15)
    assert k.second_moment == pytest.approx(math.pi / 2.0, rel=1e-15)
    assert k.params["C1"] == pytest.approx(1.0 / math.pi)


def test_laplace_values():
    k = make_laplace()
    assert k.density(0.0) == 0.5
    assert k.second_moment == 2.0
    assert moment(k, 0) == pytest.approx(1.0, abs=1e-12)


def test_quartic_values():
    k = make_quartic()
    assert k.density(0.0) == pytest.approx(1.0 / math.pi, rel=1e-15)
    # closed forms: int_0^inf z/(1+z^4/4) dz = pi/2, substitution gives k3 = 2
    assert moment(k, 1, absolute=True) == pytest.approx(1.0, abs=1e-8)
    assert moment(k, 2) == pytest.approx(2.0, abs=1e-6)


def test_heavy_tail_constants_and_shape():
    k = make_heavy_tail()
    A, B, C = k.params["A"], k.params["B"], k.params["C"]
    # frozen values of the full-line moment solve (quadrature verified to 1e-12)
    assert A == pytest.approx(2.313839, abs=2e-5)
    assert B == pytest.approx(2.367064, abs=2e-5)
    assert C == pytest.approx(0.615238, abs=2e-5)
    L = math.log(2.0)
    expected0 = A / L ** 3 - B / L ** 5 + C / L ** 7
    assert k.density(0.0) == pytest.approx(expected0, rel=1e-12)
    zs = np.linspace(0.0, 1000.0, 100001)
    vals = k.density(zs)
    assert vals.min() >= 0.0
    diffs = np.diff(k.density(np.linspace(0.0, 20.0, 4001)))
    assert (diffs > 0).any() and (diffs < 0).any()  # not radially decreasing


@pytest.mark.parametrize("factory,second", [
    (make_gaussian, math.pi / 2.0),
    (make_laplace, 2.0),
    (make_quartic, 2.0),
    (make_heavy_tail, 2.0),
])
def test_normalization_by_quadrature(factory, second):
    k = factory()
    assert moment(k, 0) == pytest.approx(1.0, abs=1e-7)
    assert moment(k, 1, absolute=True) == pytest.approx(1.0, abs=1e-7)
    assert moment(k, 2) == pytest.approx(second, abs=1e-5)


@given(z=st.floats(min_value=-1e3, max_value=1e3, allow_nan=False))
def test_evenness(z):
    for k in (make_gaussian(), make_laplace()):
        assert k.density(z) == k.density(-z)


def test_evenness_rational_kernels():
    zs = np.linspace(-50, 50, 1001)
    for factory in (make_quartic, make_heavy_tail):
        k = factory()
        np.testing.assert_array_equal(k.density(zs), k.density(-zs))


def test_odd_moments_vanish():
    assert moment(make_laplace(), 3) == 0.0
    assert moment(make_gaussian(), 1) == 0.0


@pytest.mark.parametrize("factory", [make_quartic, make_heavy_tail])
def test_divergent_moments_flagged(factory):
    k = factory()
    with pytest.raises(DivergentMomentError):
        moment(k, 3, absolute=True)
    with pytest.raises(DivergentMomentError):
        moment(k, 3)  # signed version is only conditionally convergent


def test_custom_expression_normalized():
    k = kernel_from_expression("exp(-abs(z)/3)")
    assert moment(k, 0) == pytest.approx(1.0, abs=1e-7)
    assert moment(k, 1, absolute=True) == pytest.approx(1.0, abs=1e-7)
    # rescaled two-sided exponential keeps the laplace second moment
    assert k.second_moment == pytest.approx(2.0, rel=1e-6)


def test_custom_expression_rejects_negative():
    with pytest.raises(ValueError):
        kernel_from_expression("cos(z)")


def test_tabulated_kernel():
    zs = np.linspace(0.0, 2.0, 21)
    vals = np.clip(1.0 - zs / 2.0, 0.0, None)  # tent on [-2, 2]
    k = kernel_from_table(np.column_stack([zs, vals]))
    assert moment(k, 0) == pytest.approx(1.0, abs=1e-7)
    assert moment(k, 1, absolute=True) == pytest.approx(1.0, abs=1e-7)
    assert k.support is not None
    assert k.density(10.0) == 0.0


def test_kernel_from_name_builtins():
    for name in ("gaussian", "laplace", "quartic", "heavy_tail"):
        assert kernel_from_name(name).name.value in name


def test_kernel_from_name_custom(tmp_path):
    spec = tmp_path / "kern.json"
    spec.write_text('{"expr": "exp(-z^2)"}')
    k = kernel_from_name(f"custom:{spec}")
    assert moment(k, 0) == pytest.approx(1.0, abs=1e-7)
    with pytest.raises(ValueError):
        kernel_from_name("nope")


def test_quantile():
    k = make_gaussian()
    q = quantile(k, 0.999)
    assert q == pytest.approx(4.124, abs=1e-2)
    assert quantile(k, 0.5) < q
