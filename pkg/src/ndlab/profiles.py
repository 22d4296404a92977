"""Scalar heterogeneity profiles on the line (total jump rate, jump length, ...)."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NonpositiveProfileError
from .expr import compile_expression


class ProfileName(str, enum.Enum):
    RATIONAL_BUMP = "rational_bump"
    QUADRATIC_GROWTH = "quadratic_growth"
    EXPONENTIAL = "exponential"
    GAUSSIAN = "gaussian"
    TWO_PATCH = "two_patch"
    CONSTANT = "constant"
    CUSTOM = "custom"


@dataclass(frozen=True)
class HeterogeneityProfile:
    """A nonnegative scalar field x -> value with named parameters."""

    name: ProfileName
    eval: Callable
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.eval(x)


def rational_bump() -> HeterogeneityProfile:
    """m(x) = 1 / (1 + x^2)."""
    return HeterogeneityProfile(
        ProfileName.RATIONAL_BUMP,
        lambda x: 1.0 / (1.0 + np.square(x)))


def quadratic_growth(scale: float = 100.0) -> HeterogeneityProfile:
    """m(x) = 1 + x^2 / scale."""
    return HeterogeneityProfile(
        ProfileName.QUADRATIC_GROWTH,
        lambda x: 1.0 + np.square(x) / scale,
        {"scale": scale})


def exponential(a: float) -> HeterogeneityProfile:
    """m(x) = exp(a x)."""
    return HeterogeneityProfile(
        ProfileName.EXPONENTIAL,
        lambda x: np.exp(a * np.asarray(x, dtype=float) if np.ndim(x) else a * x),
        {"a": a})


def gaussian(a: float) -> HeterogeneityProfile:
    """m(x) = exp(-a x^2)."""
    if a <= 0.0:
        raise ValueError("gaussian profile needs a > 0")
    return HeterogeneityProfile(
        ProfileName.GAUSSIAN,
        lambda x: np.exp(-a * np.square(x)),
        {"a": a})


def two_patch() -> HeterogeneityProfile:
    """Asymmetric two-patch field g(x+5) + 2 g(x-5), g(x) = 1/(1+x^2)."""

    def f(x):
        x = np.asarray(x, dtype=float) if np.ndim(x) else x
        return 1.0 / (1.0 + np.square(x + 5.0)) + 2.0 / (1.0 + np.square(x - 5.0))

    return HeterogeneityProfile(ProfileName.TWO_PATCH, f)


def constant(value: float = 1.0) -> HeterogeneityProfile:
    """m(x) = value."""
    if value < 0.0:
        raise ValueError("constant profile must be nonnegative")

    def f(x, value=float(value)):
        return np.full_like(np.asarray(x, dtype=float), value) if np.ndim(x) else value

    return HeterogeneityProfile(ProfileName.CONSTANT, f, {"value": float(value)})


def from_expression(text: str) -> HeterogeneityProfile:
    """Custom profile from an arithmetic expression in x."""
    return HeterogeneityProfile(
        ProfileName.CUSTOM, compile_expression(text, "x"), {"expr": text})


_FACTORIES = {
    ProfileName.RATIONAL_BUMP.value: rational_bump,
    ProfileName.QUADRATIC_GROWTH.value: quadratic_growth,
    ProfileName.EXPONENTIAL.value: exponential,
    ProfileName.GAUSSIAN.value: gaussian,
    ProfileName.TWO_PATCH.value: two_patch,
    ProfileName.CONSTANT.value: constant,
}


def profile_from_spec(spec) -> HeterogeneityProfile:
    """Build a profile from a config mapping: {name, params...} or {expr}."""
    if isinstance(spec, HeterogeneityProfile):
        return spec
    if isinstance(spec, str):
        return from_expression(spec)
    if not isinstance(spec, dict):
        raise ValueError(f"cannot build a profile from {spec!r}")
    if "expr" in spec:
        return from_expression(spec["expr"])
    name = spec.get("name")
    if name not in _FACTORIES:
        raise ValueError(f"unknown profile name {name!r}; "
                         f"expected one of {sorted(_FACTORIES)} or an 'expr'")
    params = {k: v for k, v in spec.items() if k != "name"}
    return _FACTORIES[name](**params)


def check_positive(profile: HeterogeneityProfile, lo: float, hi: float,
                   strict: bool = True, samples: int = 2048) -> None:
    """Sample-based positivity check on [lo, hi]; raises on failure.

    Custom profiles are opaque callables, so positivity is only verified on a
    dense sample, not proven.
    """
    x = np.linspace(lo, hi, samples)
    vals = np.asarray(profile.eval(x), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NonpositiveProfileError(
            f"profile {profile.name.value} is not finite on [{lo}, {hi}]")
    if strict:
        if vals.min() <= 0.0:
            raise NonpositiveProfileError(
                f"profile {profile.name.value} must be strictly positive on "
                f"[{lo}, {hi}] (min sampled value {vals.min():.3e})")
    elif vals.min() < 0.0:
        raise NonpositiveProfileError(
            f"profile {profile.name.value} is negative on [{lo}, {hi}]")
