"""Dense bounded-domain generator of the nonlocal equation, and its solvers.

The generator acts on cell averages of u over a uniform grid: gains are
``gain[i, j] = h * J(x_j, x_i)`` and losses are the column sums of the gain
matrix.  Because both use the same uniform weight, the column-sum identity
makes the discrete mass an algebraic invariant (the double sum telescopes),
independent of quadrature accuracy.  Jumps that would leave the domain are
omitted, mirroring the bounded-domain convention of the continuum model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import (
    AllocationError,
    NonConvergenceError,
    ReducibleOperatorError,
    StabilityError,
)
from .grid import Grid1D
from .jumpmodel import JumpRateModel
from .timestepping import SCHEMES, Trajectory, _step, evolve_linear

MAX_DENSE_NODES = 4001

_EULER_RATE_LIMIT = 0.9   # dt * max(outrate) bounds for the explicit schemes
_RK4_RATE_LIMIT = 2.5


@dataclass(frozen=True)
class NonlocalOperator:
    """Assembled generator: (Lu)_i = sum_j gain[i,j] u_j - outrate_i u_i."""

    grid: Grid1D
    gain: np.ndarray
    outrate: np.ndarray

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.gain @ u - self.outrate * u

    def as_matrix(self) -> np.ndarray:
        L = self.gain.copy()
        L[np.diag_indices_from(L)] -= self.outrate
        return L

    def dt_limit(self, scheme: str = "rk4") -> float:
        rate = float(self.outrate.max())
        if rate <= 0.0:
            return np.inf
        limit = _EULER_RATE_LIMIT if scheme == "euler" else _RK4_RATE_LIMIT
        return limit / rate

    def default_dt(self) -> float:
        rate = float(self.outrate.max())
        return 0.5 / rate if rate > 0.0 else 1.0


def assemble(model: JumpRateModel, grid: Grid1D,
             max_nodes: int = MAX_DENSE_NODES) -> NonlocalOperator:
    """Dense assembly of the bounded-domain generator on ``grid``."""
    if grid.M > max_nodes:
        raise AllocationError(
            f"dense operator with M={grid.M} exceeds the limit {max_nodes}")
    model.validate_on(-grid.R, grid.R)
    x = grid.nodes
    # rows are arrival points, columns departure points
    gain = grid.h * model.jump_rate(x[None, :], x[:, None])
    gain = np.ascontiguousarray(gain, dtype=float)
    outrate = gain.sum(axis=0)
    return NonlocalOperator(grid=grid, gain=gain, outrate=outrate)


def _check_dt(op: NonlocalOperator, dt: float, scheme: str) -> None:
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    limit = op.dt_limit(scheme)
    if dt > limit * (1.0 + 1e-12):
        raise StabilityError(
            f"dt={dt:g} exceeds the {scheme} bound {limit:g} "
            f"(dt * max outrate must stay below "
            f"{_EULER_RATE_LIMIT if scheme == 'euler' else _RK4_RATE_LIMIT})")


def step(op: NonlocalOperator, u: np.ndarray, dt: float,
         scheme: str = "rk4") -> np.ndarray:
    """Advance one explicit step; every stage is mass-neutral."""
    _check_dt(op, dt, scheme)
    return _step(op.apply, np.asarray(u, dtype=float), dt, scheme)


def evolve(op: NonlocalOperator, u0: np.ndarray, T: float,
           dt: float | None = None, scheme: str = "rk4",
           snapshot_times=()) -> Trajectory:
    """Integrate to time T with snapshots; the final state is always recorded."""
    if dt is None:
        dt = op.default_dt()
    _check_dt(op, dt, scheme)
    return evolve_linear(op.apply, op.grid.h, u0, T, dt, scheme, snapshot_times)


def solve_steady(op: NonlocalOperator, mass: float, tol: float = 1e-12,
                 max_iter: int = 100_000) -> np.ndarray:
    """Stationary state of prescribed mass, by shifted inverse-power iteration.

    The generator is singular by construction; iterating with (tau L - delta I)
    isolates its null vector, which is then sign-fixed and mass-normalized.
    """
    rate = float(op.outrate.max())
    if rate <= 0.0 or not np.any(op.gain > 0.0):
        raise ReducibleOperatorError(
            "generator has no jumps inside the domain (empty support graph)")
    tau = 0.5 / rate
    shifted = tau * op.as_matrix()
    shifted[np.diag_indices_from(shifted)] -= 1e-10
    lu = lu_factor(shifted)
    u = np.ones(op.grid.M)
    scale = rate
    for _ in range(max_iter):
        v = lu_solve(lu, u)
        v /= np.abs(v).max()
        if np.abs(op.apply(v)).max() <= tol * scale * np.abs(v).max():
            break
        u = v
    else:
        raise NonConvergenceError(
            f"inverse-power iteration did not reach tol={tol:g} "
            f"in {max_iter} iterations")
    vmax, vmin = float(v.max()), float(v.min())
    if vmin * vmax < 0.0 and min(abs(vmin), abs(vmax)) > 1e-8 * max(abs(vmin), abs(vmax)):
        raise ReducibleOperatorError(
            "null vector changes sign: the support graph appears disconnected")
    u = np.abs(v)
    u *= mass / (op.grid.h * u.sum())
    return u


def second_moment(grid: Grid1D, u: np.ndarray) -> float:
    """Discrete second spatial moment h * sum x_i^2 u_i."""
    return float(grid.h * np.sum(grid.nodes ** 2 * u))
