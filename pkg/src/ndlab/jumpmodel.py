"""Jump-rate models J(x, y) built from dispersal kernels and heterogeneity profiles.

Variants
--------
homogeneous      J(x,y) = K(y-x)
single_factor    J(x,y) = m(a x + b y) K(y-x),                    a + b = 1
two_factor       J(x,y) = nu(a' x + b' y) K((y-x)/g(p)) / g(p),   p = a x + b y
stratonovich     J(x,y) = K(F(y) - F(x)) / h(y),                  F' = 1/h

The barycentric weight ``alpha`` picks the point whose local environment
decides the jump-length statistics; ``alpha_prime`` does the same for the
rate factor of the two-factor form (it may leave [0, 1]).  ``epsilon`` is the
focusing scale: rates are inflated by 1/eps^2 while jump lengths shrink by
eps, which keeps the diffusivity fixed as eps -> 0.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, NonpositiveProfileError, ZeroRateError
from .grid import Grid1D
from .kernels import DispersalKernel
from .profiles import HeterogeneityProfile, check_positive


class Variant(str, enum.Enum):
    HOMOGENEOUS = "homogeneous"
    SINGLE_FACTOR = "single_factor"
    TWO_FACTOR = "two_factor"
    STRATONOVICH = "stratonovich"


# ---------------------------------------------------------------------------
# food metric (cumulative resource-weighted distance)


def food_metric_table(h_profile: HeterogeneityProfile, grid: Grid1D,
                      refinement: int = 8) -> np.ndarray:
    """Cumulative metric x'_i = ∫_0^{x_i} ds / h(s) at the grid nodes.

    Composite trapezoid on a subgrid refined by ``refinement`` (>= 8); the
    result is strictly increasing for positive h.
    """
    if refinement < 8:
        raise ValueError("refinement factor must be at least 8")
    metric = _FoodMetric.build(h_profile, -grid.R, grid.R, grid.M * refinement)
    return metric.forward(grid.nodes)


@dataclass(frozen=True)
class _FoodMetric:
    """Frozen cumulative table with monotone cubic interpolation."""

    lo: float
    hi: float
    points: np.ndarray
    values: np.ndarray
    _fwd: Callable = field(repr=False)
    _inv: Callable = field(repr=False)

    @staticmethod
    def build(h_profile: HeterogeneityProfile, lo: float, hi: float,
              n: int) -> "_FoodMetric":
        check_positive(h_profile, lo, hi, strict=True)
        pts = np.linspace(lo, hi, n + 1)
        inv_h = 1.0 / np.asarray(h_profile.eval(pts), dtype=float)
        if np.any(~np.isfinite(inv_h)) or np.any(inv_h <= 0.0):
            raise NonpositiveProfileError("metric profile must be strictly positive")
        step = (hi - lo) / n
        cum = np.concatenate([[0.0], np.cumsum(0.5 * step * (inv_h[1:] + inv_h[:-1]))])
        cum -= np.interp(0.0, pts, cum)  # anchor the integral at x = 0
        fwd = PchipInterpolator(pts, cum)
        inv = PchipInterpolator(cum, pts)
        return _FoodMetric(lo, hi, pts, cum, fwd, inv)

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lo - 1e-12) or np.any(x > self.hi + 1e-12):
            raise DomainError(
                f"food-metric table covers [{self.lo}, {self.hi}] only")
        return self._fwd(np.clip(x, self.lo, self.hi))

    def inverse(self, xp):
        return self._inv(np.clip(xp, self.values[0], self.values[-1]))


# ---------------------------------------------------------------------------
# the model


@dataclass(frozen=True)
class JumpRateModel:
    """Immutable jump-rate rule (x, y) -> J(x, y) >= 0."""

    variant: Variant
    kernel: DispersalKernel
    alpha: float = 0.5
    alpha_prime: float | None = None
    m_profile: HeterogeneityProfile | None = None
    nu_profile: HeterogeneityProfile | None = None
    g_profile: HeterogeneityProfile | None = None
    h_profile: HeterogeneityProfile | None = None
    epsilon: float = 1.0
    metric: _FoodMetric | None = None

    # -- evaluation ---------------------------------------------------------

    def jump_rate(self, x, y):
        """J(x, y): rate of jumps departing x and arriving at y (vectorized)."""
        return self.path_kernel(x, y, np.subtract(y, x))

    def path_kernel(self, x, y, z):
        """Dispersal kernel assigned to the path (x, y), evaluated at z."""
        eps = self.epsilon
        K = self.kernel.density
        if self.variant is Variant.HOMOGENEOUS:
            return K(np.divide(z, eps)) / eps ** 3
        if self.variant is Variant.SINGLE_FACTOR:
            p = self.alpha * np.asarray(x, dtype=float) + (1.0 - self.alpha) * np.asarray(y, dtype=float)
            return self.m_profile.eval(p) * K(np.divide(z, eps)) / eps ** 3
        if self.variant is Variant.TWO_FACTOR:
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            g = self.g_profile.eval(self.alpha * x + (1.0 - self.alpha) * y)
            ap = self.alpha_prime
            nu = self.nu_profile.eval(ap * x + (1.0 - ap) * y)
            scale = eps * g
            return nu / eps ** 2 * K(np.divide(z, scale)) / scale
        # stratonovich: metric distance in place of euclidean displacement
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        fx, fy = self.metric.forward(x), self.metric.forward(y)
        dx = y - x
        with np.errstate(invalid="ignore", divide="ignore"):
            slope = np.where(dx == 0.0,
                             1.0 / np.asarray(self.h_profile.eval(x), dtype=float),
                             (fy - fx) / np.where(dx == 0.0, 1.0, dx))
        return K(np.asarray(z) * slope) / self.h_profile.eval(y)

    # -- integral functionals -------------------------------------------------

    def total_jump_rate(self, x: float, domain: tuple[float, float]) -> float:
        """Out-rate from x restricted to the interval ``domain``."""
        lo, hi = float(domain[0]), float(domain[1])
        pts = [x] if lo < x < hi else None
        val, _ = quad(lambda y: float(self.jump_rate(x, y)), lo, hi,
                      points=pts, limit=300)
        return val

    def mean_jump_length(self, x: float, domain: tuple[float, float],
                         rate_floor: float = 1e-12) -> float:
        """Average |y - x| over jumps from x landing inside ``domain``."""
        total = self.total_jump_rate(x, domain)
        if total <= rate_floor:
            raise ZeroRateError(
                f"total jump rate {total:.3e} at x={x} below {rate_floor:.1e}")
        lo, hi = float(domain[0]), float(domain[1])
        pts = [x] if lo < x < hi else None
        num, _ = quad(lambda y: abs(y - x) * float(self.jump_rate(x, y)),
                      lo, hi, points=pts, limit=300)
        return num / total

    def validate_on(self, lo: float, hi: float) -> None:
        """Check profile positivity requirements on [lo, hi] by sampling."""
        if self.m_profile is not None:
            check_positive(self.m_profile, lo, hi, strict=False)
        for prof in (self.nu_profile, self.g_profile, self.h_profile):
            if prof is not None:
                check_positive(prof, lo, hi, strict=True)


# ---------------------------------------------------------------------------
# constructors


def homogeneous(kernel: DispersalKernel) -> JumpRateModel:
    """Translation-invariant model J(x, y) = K(y - x)."""
    return JumpRateModel(Variant.HOMOGENEOUS, kernel)


def single_factor(kernel: DispersalKernel, m_profile: HeterogeneityProfile,
                  alpha: float) -> JumpRateModel:
    """Rate-heterogeneous model J(x, y) = m(alpha x + (1-alpha) y) K(y - x)."""
    _check_alpha(alpha)
    return JumpRateModel(Variant.SINGLE_FACTOR, kernel, alpha=alpha,
                         m_profile=m_profile)


def two_factor(kernel: DispersalKernel, nu_profile: HeterogeneityProfile,
               g_profile: HeterogeneityProfile, alpha: float,
               alpha_prime: float) -> JumpRateModel:
    """Model with separately decided total rate (alpha') and jump length (alpha).

    alpha is restricted to [0, 1]; alpha' may leave [0, 1] (e.g. 3/2, which
    realizes the exponent pair (q, q') = (0, -1)).
    """
    _check_alpha(alpha)
    return JumpRateModel(Variant.TWO_FACTOR, kernel, alpha=alpha,
                         alpha_prime=float(alpha_prime),
                         nu_profile=nu_profile, g_profile=g_profile)


def stratonovich(kernel: DispersalKernel, h_profile: HeterogeneityProfile,
                 domain: tuple[float, float] | Grid1D,
                 refinement: int = 16) -> JumpRateModel:
    """Whole-path model J(x, y) = K(∫_x^y ds/h) / h(y) on a bounded domain.

    The cumulative metric is tabulated once on ``domain`` and frozen into the
    model; evaluations outside it raise :class:`DomainError`.
    """
    if isinstance(domain, Grid1D):
        lo, hi, n = -domain.R, domain.R, domain.M * refinement
    else:
        lo, hi = float(domain[0]), float(domain[1])
        n = max(int((hi - lo) * 64), 1024)
    metric = _FoodMetric.build(h_profile, lo, hi, n)
    return JumpRateModel(Variant.STRATONOVICH, kernel, h_profile=h_profile,
                         metric=metric)


def _check_alpha(alpha: float) -> None:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("the jump-length deciding weight alpha must be in [0, 1]")
