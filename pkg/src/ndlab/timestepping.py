"""Explicit time integration shared by the nonlocal and local solvers."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NegativityWarning

SCHEMES = ("euler", "rk4")


@dataclass
class Trajectory:
    """Snapshots of an evolution, with the discrete mass at each snapshot."""

    times: list[float] = field(default_factory=list)
    states: list[np.ndarray] = field(default_factory=list)
    mass_history: list[float] = field(default_factory=list)
    mass_min: float = np.inf
    mass_max: float = -np.inf

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def record(self, t: float, u: np.ndarray, mass: float) -> None:
        self.times.append(float(t))
        self.states.append(u.copy())
        self.mass_history.append(float(mass))

    def track_mass(self, mass: float) -> None:
        self.mass_min = min(self.mass_min, mass)
        self.mass_max = max(self.mass_max, mass)


def _step(apply_op, u: np.ndarray, dt: float, scheme: str) -> np.ndarray:
    if scheme == "euler":
        return u + dt * apply_op(u)
    if scheme == "rk4":
        k1 = apply_op(u)
        k2 = apply_op(u + 0.5 * dt * k1)
        k3 = apply_op(u + 0.5 * dt * k2)
        k4 = apply_op(u + dt * k3)
        return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def evolve_linear(apply_op, weight: float, u0: np.ndarray, T: float, dt: float,
                  scheme: str, snapshot_times=()) -> Trajectory:
    """Integrate u' = L u to time T, landing exactly on each snapshot time.

    Segments between snapshots are subdivided into equal steps no longer than
    ``dt``, so runs are deterministic for a given configuration.  The discrete
    mass (weight * sum u) is tracked every step.
    """
    if T < 0.0:
        raise ValueError("final time T must be nonnegative")
    u = np.array(u0, dtype=float, copy=True)
    traj = Trajectory()
    mass = weight * float(u.sum())
    traj.track_mass(mass)
    targets = sorted({float(s) for s in snapshot_times if 0.0 <= s <= T} | {T})
    if not targets or targets[0] > 0.0:
        traj.record(0.0, u, mass)
    t = 0.0
    warned = False
    for target in targets:
        span = target - t
        if span > 0.0:
            nsteps = max(1, int(np.ceil(span / dt - 1e-12)))
            step_dt = span / nsteps
            for _ in range(nsteps):
                u = _step(apply_op, u, step_dt, scheme)
                traj.track_mass(weight * float(u.sum()))
        t = target
        mass = weight * float(u.sum())
        traj.record(t, u, mass)
        if not warned and u.min() < -1e-10 * max(abs(u).max(), 1e-300):
            warnings.warn(
                f"state developed negative entries (min {u.min():.3e}) at t={t:g}",
                NegativityWarning, stacklevel=3)
            warned = True
    return traj
