import math

import numpy as np
import pytest

from ndlab.analysis import (
    SteadyRegime,
    diffusivity,
    focus,
    limit_study,
    limiting_law,
    material_sign_changes,
    model_diffusivity,
    predict_steady,
    smooth_bump,
    strat_equivalence,
    tail_concentration_index,
    um_rela_residual,
)
from ndlab.errors import EpsilonRangeError, MomentDivergenceError
from ndlab.grid import Grid1D
from ndlab.jumpmodel import homogeneous, single_factor, two_factor
from ndlab.kernels import make_gaussian, make_laplace
from ndlab.profiles import (
    constant,
    exponential,
    from_expression,
    gaussian,
    quadratic_growth,
    rational_bump,
    two_patch,
)

K1 = make_gaussian()


# ---------------------------------------------------------------------------
# diffusivity


def test_single_factor_diffusivity_is_half_m_k():
    model = single_factor(K1, rational_bump(), alpha=0.3)
    for p in (0.0, 2.0, -4.5):
        expected = 0.5 * float(rational_bump()(p)) * (math.pi / 2.0)
        assert model_diffusivity(model, p) == pytest.approx(expected, rel=1e-9)


def test_two_factor_diffusivity_scales_with_rate_and_length():
    nu, g = rational_bump(), quadratic_growth()
    model = two_factor(K1, nu, g, alpha=0.5, alpha_prime=1.0)
    p = 3.0
    expected = 0.5 * float(nu(p)) * float(g(p)) ** 2 * (math.pi / 2.0)
    assert model_diffusivity(model, p) == pytest.approx(expected, rel=1e-9)


def test_product_kernel_matrix_diagonal():
    def kern(Z):
        return (np.exp(-Z[..., 0] ** 2 / math.pi) / math.pi
                * np.exp(-Z[..., 1] ** 2 / math.pi) / math.pi)

    dm = diffusivity(kern, 1.0, [0.0, 0.0], half_width=30.0)
    assert dm.dim == 2
    assert abs(dm.entries[0, 1]) < 1e-12
    assert dm.entries[0, 0] == pytest.approx(0.5 * math.pi / 2.0, rel=1e-8)
    np.testing.assert_allclose(dm.entries, dm.entries.T, atol=1e-15)


def test_random_product_kernels_symmetric_psd():
    rng = np.random.default_rng(42)

    def mixture(weights, sigmas):
        def f(t):
            out = np.zeros_like(t)
            for w, s in zip(weights, sigmas):
                out += w * np.exp(-0.5 * (t / s) ** 2) / (s * math.sqrt(2 * math.pi))
            return out
        return f

    for _ in range(100):
        fa = mixture(rng.uniform(0.2, 1.0, 2), rng.uniform(1.0, 2.5, 2))
        fb = mixture(rng.uniform(0.2, 1.0, 2), rng.uniform(1.0, 2.5, 2))

        def kern(Z, fa=fa, fb=fb):
            return fa(Z[..., 0]) * fb(Z[..., 1])

        dm = diffusivity(kern, 1.0, [0.0, 0.0], half_width=25.0,
                         points_per_axis=501)
        np.testing.assert_allclose(dm.entries, dm.entries.T, atol=1e-13)
        assert np.linalg.eigvalsh(dm.entries).min() >= -1e-12


def test_diffusivity_flags_unresolved_tail():
    def slow(Z):
        return 1.0 / (1.0 + Z[..., 0] ** 2)  # no finite second moment

    with pytest.raises(MomentDivergenceError):
        diffusivity(slow, 1.0, [0.0], half_width=40.0)


# ---------------------------------------------------------------------------
# focusing


def test_focus_identity_at_one():
    model = single_factor(K1, rational_bump(), alpha=0.5)
    assert focus(model, 1.0) == model


def test_focus_range_guard():
    model = homogeneous(K1)
    with pytest.raises(EpsilonRangeError):
        focus(model, 0.0)
    with pytest.raises(EpsilonRangeError):
        focus(model, 1.5)


def test_focus_scales_rate_and_length():
    from ndlab.analysis import path_rate_and_length

    model = two_factor(K1, rational_bump(), quadratic_growth(),
                       alpha=0.5, alpha_prime=1.0)
    eps = 0.25
    focused = focus(model, eps)  # internal quadrature check runs here
    rate0, len0 = path_rate_and_length(model, 0.0)
    rate_f, len_f = path_rate_and_length(focused, 0.0)
    assert rate_f == pytest.approx(rate0 / eps ** 2, rel=1e-9)
    assert len_f == pytest.approx(eps * len0, rel=1e-9)
    # the observable out-rate follows the same scaling up to tail truncation
    W = (-60.0, 60.0)
    assert focused.total_jump_rate(0.0, W) == pytest.approx(
        model.total_jump_rate(0.0, W) / eps ** 2, rel=2e-2)


def test_focus_preserves_diffusivity():
    model = single_factor(K1, two_patch(), alpha=0.25)
    base = model_diffusivity(model, 1.0)
    for eps in (0.5, 0.1):
        focused = focus(model, eps, check=False)
        assert model_diffusivity(focused, 1.0) == pytest.approx(base, rel=1e-9)


def test_limiting_law_exponents():
    law = limiting_law(single_factor(K1, rational_bump(), alpha=0.25))
    assert law.q == pytest.approx(1.5)
    assert law.q_prime is None
    law2 = limiting_law(two_factor(K1, rational_bump(), constant(1.0),
                                   alpha=0.5, alpha_prime=1.0))
    assert (law2.q, law2.q_prime) == (1.0, 0.0)
    # diffusivity field: half of m (or nu g^2) times the kernel second moment
    assert law.D(0.0) == pytest.approx(math.pi / 4.0)


def test_limit_study_smoke():
    model = single_factor(K1, rational_bump(), alpha=0.5)
    grid = Grid1D(10.0, 800)
    study = limit_study(model, limiting_law(model), grid, T=1.0,
                        epsilons=[0.4, 0.2])
    assert study.errors[1] < study.errors[0]
    assert study.estimated_order >= 1.0
    assert study.interior_margin > 0.0


def test_limit_study_validates_ladder():
    model = homogeneous(K1)
    grid = Grid1D(10.0, 800)
    with pytest.raises(ValueError):
        limit_study(model, limiting_law(model), grid, 1.0, [0.2, 0.4])
    with pytest.raises(ValueError):
        limit_study(model, limiting_law(model), grid, 1.0, [0.1])  # h too big


# ---------------------------------------------------------------------------
# steady-state predictions


def test_predict_steady_regimes():
    g = Grid1D(10.0, 201)
    m = rational_bump()
    for alpha, regime in ((0.0, SteadyRegime.ALPHA_ZERO),
                          (1.0, SteadyRegime.ALPHA_ONE),
                          (0.5, SteadyRegime.ALPHA_HALF)):
        pred = predict_steady(single_factor(K1, m, alpha), g, mass=4.0)
        assert pred.regime is regime
        assert g.h * pred.profile.sum() == pytest.approx(4.0, rel=1e-12)
        assert um_rela_residual(m, alpha, pred.profile, g) <= 1e-12
    assert predict_steady(single_factor(K1, m, 0.25), g, 4.0) is None
    assert predict_steady(homogeneous(K1), g, 4.0) is None


def test_predict_steady_exponential_profile():
    g = Grid1D(10.0, 201)
    a = math.log(2.0) / 10.0
    m = exponential(a)
    pred = predict_steady(single_factor(K1, m, alpha=0.25), g, mass=4.0)
    assert pred.regime is SteadyRegime.EXPONENTIAL_M
    # u ~ m^(beta - alpha) = e^(a x / 2)
    ratio = pred.profile / np.exp(0.5 * a * g.nodes)
    np.testing.assert_allclose(ratio, ratio[0], rtol=1e-13)
    assert um_rela_residual(m, 0.25, pred.profile, g) <= 1e-12
    assert not pred.integrable_on_line


@pytest.mark.parametrize("alpha,integrable,sign", [
    (0.25, True, -1.0),   # u ~ exp(-a x^2 / 2): decays
    (0.75, False, +1.0),  # u ~ exp(+a x^2 / 2): grows toward the boundary
])
def test_predict_steady_gaussian_profile(alpha, integrable, sign):
    g = Grid1D(10.0, 201)
    a = math.log(100.0) / 100.0
    m = gaussian(a)
    pred = predict_steady(single_factor(K1, m, alpha=alpha), g, mass=4.0)
    assert pred.regime is SteadyRegime.GAUSSIAN_M
    assert pred.integrable_on_line is integrable
    ratio = pred.profile / np.exp(sign * 0.5 * a * g.nodes ** 2)
    np.testing.assert_allclose(ratio, ratio[0], rtol=1e-12)
    assert um_rela_residual(m, alpha, pred.profile, g) <= 1e-12


def test_integrability_metadata():
    g = Grid1D(10.0, 101)
    assert predict_steady(single_factor(K1, rational_bump(), 0.0), g,
                          1.0).integrable_on_line
    assert not predict_steady(single_factor(K1, quadratic_growth(), 0.0), g,
                              1.0).integrable_on_line
    assert predict_steady(single_factor(K1, quadratic_growth(), 1.0), g,
                          1.0).integrable_on_line
    assert not predict_steady(single_factor(K1, rational_bump(), 0.5), g,
                              1.0).integrable_on_line


def test_um_rela_residual_cases():
    g = Grid1D(10.0, 101)
    # constants at the symmetric barycenter
    assert um_rela_residual(rational_bump(), 0.5,
                            np.full(g.M, 2.3), g) <= 1e-14
    # |x| admits no positive steady state away from alpha = 1/2
    m_abs = from_expression("abs(x)")
    rng = np.random.default_rng(5)
    for _ in range(5):
        u = rng.uniform(0.1, 10.0, g.M)
        assert um_rela_residual(m_abs, 0.25, u, g) > 1e-3


# ---------------------------------------------------------------------------
# whole-path equivalence and tail diagnostics


def test_strat_equivalence_identity_cases():
    g = Grid1D(5.0, 200)
    u0 = lambda x: np.exp(-np.square(x))
    assert strat_equivalence(constant(1.0), K1, g, u0, T=1.0) <= 1e-12
    assert strat_equivalence(constant(2.0), K1, g, u0, T=1.0) <= 1e-12


def test_strat_equivalence_refines_second_order():
    u0 = lambda x: np.exp(-np.square(x))
    h_prof = from_expression("1 + x^2/20")
    d_coarse = strat_equivalence(h_prof, K1, Grid1D(5.0, 100), u0, T=1.0)
    d_fine = strat_equivalence(h_prof, K1, Grid1D(5.0, 200), u0, T=1.0)
    assert 2.5 <= d_coarse / d_fine <= 6.0


def test_material_sign_changes():
    x = np.linspace(0.0, 10.0, 1001)
    clean = np.sin(x)                     # 3 crossings on (0, 10)
    assert material_sign_changes(clean) == 3
    noisy = clean.copy()
    noisy[x > 9.8] = 1e-6 * np.sin(40 * x[x > 9.8])  # sub-floor wiggles
    assert material_sign_changes(noisy, rel_floor=0.005) == 3
    assert material_sign_changes(noisy, rel_floor=0.0) > 3
    assert material_sign_changes(np.zeros(5)) == 0


def test_tail_concentration_index():
    g = Grid1D(10.0, 101)
    states = {
        "a": np.full(g.M, 1.0),
        "b": np.full(g.M, 2.0),
        "c": np.full(g.M, 1.5),
    }
    out = tail_concentration_index(states, g, x0=0.0)
    assert out["ordering"] == ["b", "c", "a"]
    assert out["values"]["b"] == 2.0


def test_smooth_bump_support():
    x = np.linspace(-5, 5, 101)
    u = smooth_bump(x, 2.0)
    assert np.all(u[np.abs(x) >= 2.0] == 0.0)
    assert u[np.abs(x) < 2.0].max() > 0.0
