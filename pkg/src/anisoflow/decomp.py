"""Axis-aligned decomposition of a rotated anisotropic Gaussian.

A rotated 2D Gaussian factors into a 1D Gaussian along one grid axis and a
1D Gaussian along an oblique lattice line. For the x1-aligned plan the
line advances one row per step and ``mu`` columns sideways; its per-step
standard deviation is ``sqrt(c22)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class Axis(str, Enum):
    X1 = "x1"
    X2 = "x2"


@dataclass(frozen=True)
class AnisoKernelSpec:
    """Target kernel: major/minor standard deviations (pixels) and the angle
    of the major axis in degrees, counted from the x1 (column) axis."""

    sigma1: float
    sigma2: float
    theta: float

    def __post_init__(self):
        if not (self.sigma2 > 0 and self.sigma1 > self.sigma2):
            raise ValueError(
                f"need sigma1 > sigma2 > 0, got ({self.sigma1}, {self.sigma2})")
        if not math.isfinite(self.theta):
            raise ValueError("theta must be finite")

    @property
    def omega(self) -> float:
        return self.sigma2 / self.sigma1

    @property
    def theta_mod(self) -> float:
        return self.theta % 180.0

    def transposed(self) -> "AnisoKernelSpec":
        return AnisoKernelSpec(self.sigma1, self.sigma2, 90.0 - self.theta)


@dataclass(frozen=True)
class Covariance2:
    c11: float
    c12: float
    c22: float

    @property
    def det(self) -> float:
        return self.c11 * self.c22 - self.c12 * self.c12


@dataclass(frozen=True)
class DecompPlan:
    """Everything the two-pass filter needs.

    ``phi`` is the line angle in degrees, measured from the filter axis'
    perpendicular grid axis frame: for ``Axis.X1`` it is the usual angle
    from x1; for ``Axis.X2`` the plan lives in the transposed frame.
    ``mu`` is the sideways offset per unit step along the line.
    """

    axis: Axis
    sigma_axis: float
    sigma_line: float
    phi: float
    mu: float

    @property
    def sigma_step(self) -> float:
        """Standard deviation of the line filter in lattice steps."""
        return self.sigma_line * math.sin(math.radians(self.phi))


def covariance_of(spec: AnisoKernelSpec) -> Covariance2:
    t = math.radians(spec.theta)
    c, s = math.cos(t), math.sin(t)
    v1, v2 = spec.sigma1 ** 2, spec.sigma2 ** 2
    return Covariance2(v1 * c * c + v2 * s * s, (v1 - v2) * c * s, v1 * s * s + v2 * c * c)


def plan_x1(spec: AnisoKernelSpec, as_printed: bool = False) -> DecompPlan:
    """Plan with the axis filter along x1 (rows).

    ``as_printed=True`` swaps in the alternative axis-sigma expression
    ``s1*s2/sqrt(s1^2 cos^2 + s2^2 sin^2)``; it does not reproduce the target
    kernel and exists for comparison runs only.
    """
    cov = covariance_of(spec)
    c12 = cov.c12
    # the c12 = 0 cases (0 and 90 degrees) are exact, not round-off
    tm = spec.theta_mod
    if tm == 0.0 or tm == 90.0:
        c12 = 0.0
    phi = math.degrees(math.atan2(cov.c22, c12))
    if phi <= 0.0:
        phi += 180.0
    root22 = math.sqrt(cov.c22)
    sigma_line = root22 / math.sin(math.radians(phi))
    if as_printed:
        t = math.radians(spec.theta)
        sigma_axis = spec.sigma1 * spec.sigma2 / math.sqrt(
            spec.sigma1 ** 2 * math.cos(t) ** 2 + spec.sigma2 ** 2 * math.sin(t) ** 2)
    else:
        sigma_axis = spec.sigma1 * spec.sigma2 / root22
    return DecompPlan(Axis.X1, sigma_axis, sigma_line, phi, c12 / cov.c22)


def plan_x2(spec: AnisoKernelSpec, as_printed: bool = False) -> DecompPlan:
    """Plan with the axis filter along x2 (columns), built in the transposed frame."""
    p = plan_x1(spec.transposed(), as_printed)
    return DecompPlan(Axis.X2, p.sigma_axis, p.sigma_line, p.phi, p.mu)


def uses_x2(theta: float) -> bool:
    """Angle rule of the major-axis modification: x2 axis for 45 <= theta <= 135."""
    return 45.0 <= theta % 180.0 <= 135.0


def plan_auto(spec: AnisoKernelSpec, modification: bool,
              as_printed: bool = False) -> DecompPlan:
    if modification and uses_x2(spec.theta):
        return plan_x2(spec, as_printed)
    return plan_x1(spec, as_printed)
