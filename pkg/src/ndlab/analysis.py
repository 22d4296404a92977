"""Analytical apparatus: diffusivity quadrature, focusing limits, steady states.

This module ties the pieces together: it computes the diffusivity (half the
second-moment tensor of the local kernel), produces focused models whose jump
lengths shrink while rates inflate, runs nonlocal-vs-local convergence
studies, evaluates the closed-form steady-state predictions, and quantifies
the change-of-variables reduction of the whole-path (metric-distorted) model.
"""

from __future__ import annotations

import dataclasses
import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from . import local_solver, nonlocal_solver
from .errors import (
    EpsilonRangeError,
    FocusScalingError,
    InconclusiveOrderError,
    MomentDivergenceError,
)
from .grid import Grid1D
from .jumpmodel import JumpRateModel, Variant, homogeneous
from .kernels import quantile
from .local_solver import LocalDiffusionSpec, assemble_local, evolve_local
from .profiles import HeterogeneityProfile, ProfileName
from .timestepping import Trajectory

# ---------------------------------------------------------------------------
# diffusivity


@dataclass(frozen=True)
class DiffusivityMatrix:
    """Half the second-moment tensor of the local kernel at a point."""

    dim: int
    entries: np.ndarray
    point: np.ndarray

    @property
    def scalar(self) -> float:
        """Isotropic value: trace / (2N) convention gives entries[0, 0] in 1-D."""
        return float(self.entries.trace() / self.dim)


def diffusivity(kernel_nd, nu_at_p: float, p, half_width: float = 40.0,
                points_per_axis: int = 201) -> DiffusivityMatrix:
    """d_ij = (1/2) nu(p) ∫ z_i z_j K(z) dz by tensor-product quadrature.

    ``kernel_nd`` maps arrays of shape (..., N) to densities; N is inferred
    from ``p`` (N <= 3).  A box-shrink comparison guards against unresolved
    tails.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    N = p.size
    if N > 3:
        raise ValueError("tensor-product quadrature supports N <= 3 only")

    def tensor_moment(L):
        xs, ws = leggauss(points_per_axis)
        xs = xs * L
        ws = ws * L
        grids = np.meshgrid(*([xs] * N), indexing="ij")
        Z = np.stack(grids, axis=-1)
        W = ws
        for _ in range(N - 1):
            W = np.multiply.outer(W, ws)
        dens = np.asarray(kernel_nd(Z), dtype=float)
        out = np.empty((N, N))
        for i in range(N):
            for j in range(N):
                out[i, j] = np.sum(W * grids[i] * grids[j] * dens)
        return out

    full = tensor_moment(half_width)
    inner = tensor_moment(0.8 * half_width)
    scale = max(np.abs(full).max(), 1e-300)
    if np.abs(full - inner).max() > 1e-6 * scale:
        raise MomentDivergenceError(
            "second-moment box integral has not converged; widen half_width "
            "or check that the kernel has finite second moments")
    return DiffusivityMatrix(dim=N, entries=0.5 * nu_at_p * full, point=p)


def _rate_and_scale(model: JumpRateModel, p: float) -> tuple[float, float]:
    """Prefactor r and length scale s with K(p,p;z) = r K((z)/s)/s."""
    eps = model.epsilon
    if model.variant is Variant.HOMOGENEOUS:
        return 1.0 / eps ** 2, eps
    if model.variant is Variant.SINGLE_FACTOR:
        return float(model.m_profile.eval(p)) / eps ** 2, eps
    if model.variant is Variant.TWO_FACTOR:
        g = float(model.g_profile.eval(p))
        return float(model.nu_profile.eval(p)) / eps ** 2, eps * g
    return 1.0, float(model.h_profile.eval(p))


def model_diffusivity(model: JumpRateModel, p: float) -> float:
    """Scalar diffusivity (1/2) ∫ z^2 K(p,p;z) dz of a 1-D model, by quadrature."""
    r, s = _rate_and_scale(model, p)
    kern = model.kernel
    upper = s * (kern.support if kern.support is not None else kern.finite_split)
    val, _ = quad(lambda z: z * z * float(model.path_kernel(p, p, z)),
                  0.0, upper, limit=300, epsabs=1e-13, epsrel=1e-12)
    if kern.support is None and kern.tail_moment is not None:
        # tail of z^2 * r*K(z/s)/s beyond s*split, via the kernel's own tail
        val += r * s * s * kern.tail_moment(2, upper / s)
    return val  # one-sided doubled and halved: (1/2) * 2 * val


# ---------------------------------------------------------------------------
# focusing


def path_rate_and_length(model: JumpRateModel, p: float,
                         window: float = 60.0) -> tuple[float, float]:
    """Fictive total rate m(p) and mean jump length g(p) of the path (p, p).

    These are the moments of the kernel assigned to the point, computed by
    quadrature on [-window, window]; they scale exactly under focusing
    (unlike the domain-restricted out-rate, whose deciding point moves with
    the arrival variable).
    """
    mass, _ = quad(lambda z: float(model.path_kernel(p, p, z)),
                   -window, window, points=[0.0], limit=300)
    first, _ = quad(lambda z: abs(z) * float(model.path_kernel(p, p, z)),
                    -window, window, points=[0.0], limit=300)
    return mass, first / mass


def focus(model: JumpRateModel, epsilon: float, check: bool = True,
          check_tol: float = 1e-2) -> JumpRateModel:
    """Scaled model: rates inflated by eps^-2, jump lengths shrunk by eps.

    With ``check`` the path-kernel rate and mean-jump-length scalings are
    verified by quadrature at p = 0.  Kernel-tail truncation limits the
    comparison, hence the loose default tolerance.
    """
    if not 0.0 < epsilon <= 1.0:
        raise EpsilonRangeError(f"epsilon must lie in (0, 1], got {epsilon}")
    if model.variant is Variant.STRATONOVICH:
        raise ValueError("focusing is defined for the kernel-per-point models")
    focused = dataclasses.replace(model, epsilon=model.epsilon * epsilon)
    if check and epsilon < 1.0:
        base_rate, base_len = path_rate_and_length(model, 0.0)
        foc_rate, foc_len = path_rate_and_length(focused, 0.0)
        rate_ratio = foc_rate / base_rate * epsilon ** 2
        len_ratio = foc_len / (epsilon * base_len)
        if abs(rate_ratio - 1.0) > check_tol or abs(len_ratio - 1.0) > check_tol:
            raise FocusScalingError(
                f"focused model scaling off: rate ratio {rate_ratio:.4f}, "
                f"length ratio {len_ratio:.4f} (both should be 1)")
    return focused


def limiting_law(model: JumpRateModel) -> LocalDiffusionSpec:
    """Local law reached in the focusing limit: exponents from the barycenters.

    The jump-length weight alpha gives q = 2 - 2 alpha; the rate weight
    alpha' gives q' = 2 - 2 alpha'.  The diffusivity is half the local second
    moment: D = m k/2 (single factor) or D = nu g^2 k/2 (two factors).
    """
    k = model.kernel.second_moment
    if model.variant is Variant.HOMOGENEOUS:
        D = HeterogeneityProfile(ProfileName.CONSTANT,
                                 lambda x, c=0.5 * k: np.full_like(
                                     np.asarray(x, dtype=float), c)
                                 if np.ndim(x) else c,
                                 {"value": 0.5 * k})
        return LocalDiffusionSpec(q=1.0, D=D)
    if model.variant is Variant.SINGLE_FACTOR:
        m = model.m_profile
        D = HeterogeneityProfile(
            ProfileName.CUSTOM, lambda x, m=m, c=0.5 * k: c * m.eval(x),
            {"derived": "m * k / 2"})
        return LocalDiffusionSpec(q=2.0 - 2.0 * model.alpha, D=D)
    if model.variant is Variant.TWO_FACTOR:
        nu, g = model.nu_profile, model.g_profile
        D = HeterogeneityProfile(
            ProfileName.CUSTOM,
            lambda x, nu=nu, g=g, c=0.5 * k: c * nu.eval(x) * np.square(g.eval(x)),
            {"derived": "nu * g^2 * k / 2"})
        return LocalDiffusionSpec(q=2.0 - 2.0 * model.alpha,
                                  q_prime=2.0 - 2.0 * model.alpha_prime, nu=nu, D=D)
    raise ValueError("the whole-path model has no single-point limiting law here")


@dataclass(frozen=True)
class FocusingStudy:
    """Interior nonlocal-vs-local errors along a decreasing epsilon ladder."""

    epsilons: list
    errors: list
    estimated_order: float
    interior_margin: float
    fit_residual: float


def smooth_bump(x, width: float, center: float = 0.0) -> np.ndarray:
    """C-infinity bump supported on (center - width, center + width)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    s = (x - center) / width
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def limit_study(model: JumpRateModel, expected: LocalDiffusionSpec,
                grid: Grid1D, T: float, epsilons, u0=None,
                margin: float | None = None, workers: int = 1) -> FocusingStudy:
    """Evolve focused nonlocal models against the expected local law.

    Both solvers share the grid and initial state; errors are sup norms over
    the interior window [-R + margin, R - margin].  The reported order is the
    least-squares slope of log error against log epsilon over the last three
    ladder points.  Ladder members are independent solves and may run
    concurrently (``workers`` > 1); results merge in epsilon order either way.
    """
    eps = [float(e) for e in epsilons]
    if any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
        raise ValueError("epsilons must be strictly decreasing")
    if not all(0.0 < e <= 1.0 for e in eps):
        raise EpsilonRangeError("epsilons must lie in (0, 1]")
    if grid.h > min(eps) / 8.0 * (1.0 + 1e-9):
        raise ValueError(
            f"grid spacing h={grid.h:g} too coarse for epsilon={min(eps)}; "
            f"need h <= eps/8 so quadrature resolves the focused kernel")

    if margin is None:
        q999 = quantile(model.kernel, 0.999)
        gmax = 1.0
        if model.g_profile is not None:
            gmax = float(np.max(model.g_profile.eval(grid.nodes)))
        margin = 5.0 * max(eps) * q999 * gmax + 5.0 * grid.h
    window = np.abs(grid.nodes) <= grid.R - margin
    if not np.any(window):
        raise ValueError(f"interior margin {margin:g} leaves no window")

    x = grid.nodes
    if u0 is None:
        width = 0.9 * (grid.R - margin)
        u0 = smooth_bump(x, width)
        u0 = u0 / (grid.h * u0.sum())
    else:
        u0 = np.asarray(u0, dtype=float)
        if np.any(u0[~window] != 0.0):
            raise ValueError("u0 must be supported inside the interior window")

    op_loc = assemble_local(expected, grid)
    u_loc = evolve_local(op_loc, u0, T).final

    def run_eps(e: float) -> float:
        focused = focus(model, e, check=False)
        op = nonlocal_solver.assemble(focused, grid)
        u_nl = nonlocal_solver.evolve(op, u0, T).final
        return float(np.abs(u_nl - u_loc)[window].max())

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            errors = list(pool.map(run_eps, eps))
    else:
        errors = [run_eps(e) for e in eps]

    floor = 1e-12 * max(float(np.abs(u_loc).max()), 1e-300)
    relevant = [err for err in errors if err > floor]
    if any(e2 >= e1 for e1, e2 in zip(relevant, relevant[1:])):
        raise InconclusiveOrderError(
            f"interior errors are not monotone decreasing: {errors}")
    npts = min(3, len(eps))
    le, lerr = np.log(eps[-npts:]), np.log(errors[-npts:])
    slope, intercept = np.polyfit(le, lerr, 1)
    resid = float(np.abs(lerr - (slope * le + intercept)).max())
    if resid > 0.2:
        raise InconclusiveOrderError(
            f"order fit residual {resid:.3f} exceeds 0.2 in log space")
    return FocusingStudy(epsilons=eps, errors=errors,
                         estimated_order=float(slope),
                         interior_margin=float(margin), fit_residual=resid)


# ---------------------------------------------------------------------------
# steady states


class SteadyRegime(str, enum.Enum):
    ALPHA_ZERO = "alpha_zero"
    ALPHA_ONE = "alpha_one"
    ALPHA_HALF = "alpha_half"
    EXPONENTIAL_M = "exponential_m"
    GAUSSIAN_M = "gaussian_m"


@dataclass(frozen=True)
class SteadyPrediction:
    """Closed-form equilibrium on the bounded domain, discretely normalized."""

    profile: np.ndarray
    normalization: float
    regime: SteadyRegime
    integrable_on_line: bool


_L1_TABLE = {
    # profile name -> (m integrable on R, 1/m integrable on R)
    ProfileName.RATIONAL_BUMP: (True, False),
    ProfileName.QUADRATIC_GROWTH: (False, True),
    ProfileName.EXPONENTIAL: (False, False),
    ProfileName.GAUSSIAN: (True, False),
    ProfileName.TWO_PATCH: (True, False),
    ProfileName.CONSTANT: (False, False),
}


def _numerically_integrable(fn) -> bool:
    try:
        val, err = quad(lambda t: abs(float(fn(t))), 0.0, np.inf, limit=200)
    except Exception:
        return False
    return np.isfinite(val) and err < max(1e-6, 1e-4 * abs(val))


def predict_steady(model: JumpRateModel, grid: Grid1D,
                   mass: float) -> SteadyPrediction | None:
    """Closed-form steady profile for recognized single-factor regimes.

    Returns None when no closed form is known (signal to fall back on the
    stationary solver).  The normalization constant uses the same uniform
    quadrature weight as the solvers, so the discrete mass matches exactly.
    """
    if model.variant is not Variant.SINGLE_FACTOR:
        return None
    m = model.m_profile
    alpha = model.alpha
    x = grid.nodes
    tol = 1e-12

    regime = None
    if abs(alpha) <= tol:
        regime, raw = SteadyRegime.ALPHA_ZERO, np.asarray(m.eval(x), dtype=float)
        integrable = _table_l1(m, inverse=False)
    elif abs(alpha - 1.0) <= tol:
        regime, raw = SteadyRegime.ALPHA_ONE, 1.0 / np.asarray(m.eval(x), dtype=float)
        integrable = _table_l1(m, inverse=True)
    elif abs(alpha - 0.5) <= tol:
        regime, raw = SteadyRegime.ALPHA_HALF, np.ones_like(x)
        integrable = False
    elif m.name is ProfileName.EXPONENTIAL:
        a = m.params["a"]
        regime = SteadyRegime.EXPONENTIAL_M
        raw = np.exp((1.0 - 2.0 * alpha) * a * x)
        integrable = False
    elif m.name is ProfileName.GAUSSIAN:
        a = m.params["a"]
        beta = 1.0 - alpha
        regime = SteadyRegime.GAUSSIAN_M
        raw = np.exp(-(beta ** 2 - alpha ** 2) * a * x * x)
        integrable = alpha < 0.5
    else:
        return None

    if np.any(~np.isfinite(raw)) or np.any(raw <= 0.0):
        return None
    C = mass / (grid.h * raw.sum())
    return SteadyPrediction(profile=C * raw, normalization=float(C),
                            regime=regime, integrable_on_line=bool(integrable))


def _table_l1(m: HeterogeneityProfile, inverse: bool) -> bool:
    if m.name in _L1_TABLE:
        return _L1_TABLE[m.name][1 if inverse else 0]
    fn = (lambda t: 1.0 / m.eval(t)) if inverse else m.eval
    return _numerically_integrable(fn)


def um_rela_residual(m_profile: HeterogeneityProfile, alpha: float,
                     u: np.ndarray, grid: Grid1D) -> float:
    """Normalized residual of the pairwise stationarity identity.

    Checks m(a x_j + b x_i) u_j = m(a x_i + b x_j) u_i over all node pairs;
    an exact zero certifies u as a pointwise steady state of the assembled
    generator regardless of quadrature resolution.
    """
    beta = 1.0 - alpha
    x = grid.nodes
    u = np.asarray(u, dtype=float)
    P = np.asarray(m_profile.eval(alpha * x[None, :] + beta * x[:, None]), dtype=float)
    A = P * u[None, :]
    resid = float(np.abs(A - A.T).max())
    scale = max(float(np.abs(P).max()) * float(np.abs(u).max()), 1e-300)
    return resid / scale


# ---------------------------------------------------------------------------
# whole-path (metric) equivalence


def strat_equivalence(h_profile: HeterogeneityProfile, kernel, grid: Grid1D,
                      u0, T: float, interior_margin: float = 1.0) -> float:
    """Interior discrepancy of the metric change-of-variables reduction.

    Evolves (i) the whole-path model on the physical grid and (ii) the
    homogeneous model on the metric-transformed grid with density u' = h u
    (the measure pushforward, so mass is preserved), then pulls (ii) back and
    returns the interior sup difference.  Both runs start from samples of the
    same ``u0`` callable.
    """
    from .jumpmodel import stratonovich

    model = stratonovich(kernel, h_profile, grid)
    op = nonlocal_solver.assemble(model, grid)
    x = grid.nodes
    u_strat = nonlocal_solver.evolve(op, np.asarray(u0(x), dtype=float), T).final

    metric = model.metric
    f_lo = float(metric.forward(-grid.R))
    f_hi = float(metric.forward(grid.R))
    center = 0.5 * (f_lo + f_hi)
    half = 0.5 * (f_hi - f_lo)
    tgrid = Grid1D(half, grid.M)
    xp = center + tgrid.nodes          # metric coordinates of the second run
    x_phys = metric.inverse(xp)
    hvals = np.asarray(h_profile.eval(x_phys), dtype=float)
    u0p = hvals * np.asarray(u0(x_phys), dtype=float)
    # homogeneous generator depends on coordinate differences only, so the
    # centered grid stands in for the shifted interval
    op_hom = nonlocal_solver.assemble(homogeneous(kernel), tgrid)
    u_hom = nonlocal_solver.evolve(op_hom, u0p, T).final

    pullback = CubicSpline(xp, u_hom)
    u_back = pullback(np.asarray(metric.forward(x), dtype=float)) \
        / np.asarray(h_profile.eval(x), dtype=float)
    margin = max(interior_margin, 3.0 * grid.h)
    window = np.abs(x) <= grid.R - margin
    return float(np.abs(u_strat - u_back)[window].max())


# ---------------------------------------------------------------------------
# kernel-tail diagnostics


def material_sign_changes(values: np.ndarray, rel_floor: float = 0.005) -> int:
    """Sign alternations of ``values`` ignoring entries below rel_floor * max."""
    v = np.asarray(values, dtype=float)
    scale = float(np.abs(v).max())
    if scale == 0.0:
        return 0
    kept = v[np.abs(v) >= rel_floor * scale]
    if kept.size < 2:
        return 0
    return int(np.count_nonzero(np.diff(np.sign(kept))))


def tail_concentration_index(states: dict, grid: Grid1D, x0: float) -> dict:
    """Per-kernel state values at x0 and the induced descending ordering."""
    idx = int(np.argmin(np.abs(grid.nodes - x0)))
    values = {name: float(np.asarray(u)[idx]) for name, u in states.items()}
    ordering = sorted(values, key=values.get, reverse=True)
    return {"x0": float(grid.nodes[idx]), "values": values, "ordering": ordering}
