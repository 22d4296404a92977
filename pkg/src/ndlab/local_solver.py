"""Conservative finite-difference solver for the limiting local diffusion laws.

The equations solved are u_t = d/dx ( a(x) d/dx ( b(x) u ) ) with zero-flux
boundaries, where the coefficient split (a, b) encodes the one-parameter
family of divergence-form laws

    single factor   a = D^q,              b = D^(1-q)
    two factor      a = nu^(q'-q) D^q,    b = nu^(q-q') D^(1-q)

Fick's law is q = 1, Chapman's q = 0, Wereide's q = 1/2.  The flux form has
an exact discrete null vector: whenever b*u is constant all fluxes vanish
identically, so u ~ b^(-1) = D^(q-1) (single factor) is stationary to
roundoff, not merely to truncation order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NonpositiveCoefficientError, StabilityError
from .grid import Grid1D
from .profiles import HeterogeneityProfile
from .timestepping import SCHEMES, Trajectory, _step, evolve_linear

logger = logging.getLogger(__name__)

_COEFF_FLOOR = 1e-12
_EULER_FACTOR = 0.9    # fraction of the explicit stability interval
_RK4_FACTOR = 2.5 / 2.0


@dataclass(frozen=True)
class LocalDiffusionSpec:
    """Diffusion law selector: exponents plus the coefficient fields."""

    q: float
    D: HeterogeneityProfile
    q_prime: float | None = None
    nu: HeterogeneityProfile | None = None

    def __post_init__(self):
        if (self.q_prime is None) != (self.nu is None):
            raise ValueError("two-factor laws need both q_prime and nu")

    @property
    def two_factor(self) -> bool:
        return self.q_prime is not None


def _positive_field(profile: HeterogeneityProfile, x: np.ndarray,
                    label: str) -> np.ndarray:
    vals = np.asarray(profile.eval(x), dtype=float)
    if np.any(~np.isfinite(vals)) or np.any(vals <= 0.0):
        raise NonpositiveCoefficientError(
            f"{label} must be strictly positive on the grid "
            f"(min {vals.min():.3e})")
    small = vals < _COEFF_FLOOR
    if np.any(small):
        logger.warning("%s clamped at %.0e on %d nodes", label, _COEFF_FLOOR,
                       int(small.sum()))
        vals = np.maximum(vals, _COEFF_FLOOR)
    return vals


def flux_form(spec: LocalDiffusionSpec) -> tuple[Callable, Callable]:
    """Coefficient fields (a, b) such that the law reads u_t = (a (b u)')'."""

    def a(x):
        D = _positive_field(spec.D, np.asarray(x, dtype=float), "diffusivity D")
        if spec.two_factor:
            nu = _positive_field(spec.nu, np.asarray(x, dtype=float), "rate field nu")
            return nu ** (spec.q_prime - spec.q) * D ** spec.q
        return D ** spec.q

    def b(x):
        D = _positive_field(spec.D, np.asarray(x, dtype=float), "diffusivity D")
        if spec.two_factor:
            nu = _positive_field(spec.nu, np.asarray(x, dtype=float), "rate field nu")
            return nu ** (spec.q - spec.q_prime) * D ** (1.0 - spec.q)
        return D ** (1.0 - spec.q)

    return a, b


@dataclass(frozen=True)
class LocalOperator:
    """Tridiagonal zero-flux discretization of u_t = (a (b u)')'."""

    grid: Grid1D
    a_face: np.ndarray   # interior faces, length M - 1
    b_node: np.ndarray   # length M

    def apply(self, u: np.ndarray) -> np.ndarray:
        h = self.grid.h
        bu = self.b_node * u
        flux = np.zeros(self.grid.M + 1)
        flux[1:-1] = self.a_face * (bu[1:] - bu[:-1]) / h
        return (flux[1:] - flux[:-1]) / h

    def as_matrix(self) -> np.ndarray:
        h2 = self.grid.h ** 2
        M = self.grid.M
        L = np.zeros((M, M))
        up = self.a_face * self.b_node[1:] / h2
        lo = self.a_face * self.b_node[:-1] / h2
        diag = np.zeros(M)
        diag[:-1] -= lo
        diag[1:] -= up
        L[np.arange(M - 1), np.arange(1, M)] = up
        L[np.arange(1, M), np.arange(M - 1)] = lo
        L[np.diag_indices(M)] = diag
        return L

    def spectral_rate(self) -> float:
        """Gershgorin bound on |lambda|; the sharp replacement for the
        conservative product max(a) * max(b) / h^2 stiffness estimate."""
        h2 = self.grid.h ** 2
        up = np.concatenate([self.a_face * self.b_node[1:], [0.0]])
        lo = np.concatenate([[0.0], self.a_face * self.b_node[:-1]])
        diag = -(np.concatenate([self.a_face, [0.0]])
                 + np.concatenate([[0.0], self.a_face])) * self.b_node
        return float((np.abs(diag) + up + lo).max() / h2)

    def dt_limit(self, scheme: str = "euler") -> float:
        rate = self.spectral_rate()
        if rate <= 0.0:
            return np.inf
        factor = _EULER_FACTOR if scheme == "euler" else _RK4_FACTOR
        return factor * 2.0 / rate

    def default_dt(self, scheme: str = "euler") -> float:
        return 0.5 * self.dt_limit(scheme)


def assemble_local(spec: LocalDiffusionSpec, grid: Grid1D) -> LocalOperator:
    """Flux-form tridiagonal operator with arithmetic-mean face coefficients."""
    a_fn, b_fn = flux_form(spec)
    a = np.asarray(a_fn(grid.nodes), dtype=float)
    b = np.asarray(b_fn(grid.nodes), dtype=float)
    return LocalOperator(grid=grid, a_face=0.5 * (a[1:] + a[:-1]), b_node=b)


def assemble_expanded(spec: LocalDiffusionSpec, grid: Grid1D) -> LocalOperator | "_ExpandedOperator":
    """Operator in the expanded form u_t = d/dx( d/dx((a b) u) - N u ).

    Uses the face form of the correction (difference of a times the face mean
    of b u), which makes it algebraically identical to the flux form: the
    discrete product rule x1 y1 - x0 y0 = mean(x) dy + mean(y) dx is exact.
    """
    a_fn, b_fn = flux_form(spec)
    a = np.asarray(a_fn(grid.nodes), dtype=float)
    b = np.asarray(b_fn(grid.nodes), dtype=float)
    return _ExpandedOperator(grid=grid, a_node=a, b_node=b)


@dataclass(frozen=True)
class _ExpandedOperator:
    grid: Grid1D
    a_node: np.ndarray
    b_node: np.ndarray

    def apply(self, u: np.ndarray) -> np.ndarray:
        h = self.grid.h
        bu = self.b_node * u
        d_ab_u = np.diff(self.a_node * bu) / h
        correction = (np.diff(self.a_node) / h) * 0.5 * (bu[1:] + bu[:-1])
        flux = np.zeros(self.grid.M + 1)
        flux[1:-1] = d_ab_u - correction
        return (flux[1:] - flux[:-1]) / h


def correction_vector(spec: LocalDiffusionSpec, grid: Grid1D) -> np.ndarray:
    """Drift-like correction field N(x) of the expanded (non-Fickian) form.

    Single factor: N = (D^q)' D^(1-q); two factor:
    N = (nu^(q'-q-1) D^q)' nu^(q-q') D^(1-q).  Derivatives are centered
    differences (one-sided at the ends), so analytic comparisons hold to
    O(h^2) in the interior.
    """
    x = grid.nodes
    D = _positive_field(spec.D, x, "diffusivity D")
    if spec.two_factor:
        nu = _positive_field(spec.nu, x, "rate field nu")
        left = nu ** (spec.q_prime - spec.q - 1.0) * D ** spec.q
        right = nu ** (spec.q - spec.q_prime) * D ** (1.0 - spec.q)
    else:
        left = D ** spec.q
        right = D ** (1.0 - spec.q)
    return np.gradient(left, grid.h) * right


def _check_dt(op: LocalOperator, dt: float, scheme: str) -> None:
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    limit = op.dt_limit(scheme)
    if dt > limit * (1.0 + 1e-12):
        raise StabilityError(
            f"dt={dt:g} exceeds the {scheme} diffusion bound {limit:g}")


def evolve_local(op: LocalOperator, u0: np.ndarray, T: float,
                 dt: float | None = None, scheme: str = "euler",
                 snapshot_times=()) -> Trajectory:
    """Integrate the local law to time T with zero-flux mass conservation."""
    if dt is None:
        dt = op.default_dt(scheme)
    _check_dt(op, dt, scheme)
    return evolve_linear(op.apply, op.grid.h, u0, T, dt, scheme, snapshot_times)


def step_local(op: LocalOperator, u: np.ndarray, dt: float,
               scheme: str = "euler") -> np.ndarray:
    _check_dt(op, dt, scheme)
    return _step(op.apply, np.asarray(u, dtype=float), dt, scheme)
