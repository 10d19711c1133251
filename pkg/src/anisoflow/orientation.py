"""Per-pixel fibre direction estimation.

Three estimators share one output type:

* maximal response (MR): the filter angle whose anisotropic Gaussian
  response is largest wins;
* structure tensor: smoothed outer product of the smoothed gradient, fibre
  direction along the eigenvector of the smaller eigenvalue;
* Hessian: second derivatives of the smoothed image, fibre direction along
  the eigenvector whose eigenvalue is smallest in magnitude (curvature is
  minimal along the fibre).

Angles are in degrees in [0, 180), counted from the x1 (column) axis
towards x2 (rows), i.e. the same convention as ``AnisoKernelSpec.theta``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from matplotlib.colors import hsv_to_rgb

from .decomp import AnisoKernelSpec
from .filters import HYBRID_CUBIC, FilterAlgorithm, anisotropic_filter
from .gauss1d import coeffs_for_sigma, smooth_cols, smooth_rows

VALID_EPS = 1e-12
# responses closer than this (relative) count as ties; filters round at ~1e-15
TIE_RTOL = 1e-12


@dataclass
class OrientationField:
    angle: np.ndarray
    response: np.ndarray
    valid: np.ndarray

    @property
    def shape(self):
        return self.angle.shape


def default_angles(step: float = 1.0) -> np.ndarray:
    return np.arange(0.0, 180.0, step)


@dataclass
class MRParams:
    sigma1: float = 20.0
    sigma2: float | None = None
    angles: Sequence[float] = field(default_factory=default_angles)
    algo: FilterAlgorithm = HYBRID_CUBIC
    fiber_radius: float | None = None
    fiber_length: float | None = None

    def __post_init__(self):
        if self.sigma2 is None:
            if self.fiber_radius is None:
                raise ValueError("give sigma2 or fiber_radius")
            self.sigma2 = self.fiber_radius / 2.0
        a = np.asarray(self.angles, dtype=np.float64)
        if a.ndim != 1 or a.size == 0:
            raise ValueError("angle set must be a non-empty list")
        if np.any(np.diff(a) <= 0) or a[0] < 0 or a[-1] >= 180:
            raise ValueError("angles must be strictly increasing within [0, 180)")
        self.angles = a
        if self.fiber_length is not None and not self.sigma1 < self.fiber_length / 4.0:
            raise ValueError(
                f"sigma1={self.sigma1} must stay below fibre length / 4 = {self.fiber_length / 4}")
        # validates sigma1 > sigma2 > 0
        AnisoKernelSpec(self.sigma1, self.sigma2, 0.0)


@dataclass
class TensorParams:
    sigma: float
    rho: float = 6.0

    def __post_init__(self):
        if self.sigma < 0.5 or self.rho < 0.5:
            raise ValueError("sigma and rho must be >= 0.5")


# --------------------------------------------------------------------------
# maximal response

def mr_responses(img, p: MRParams, **filter_kw) -> Iterator[tuple[float, np.ndarray]]:
    """Yield ``(angle, response)`` for every angle of the grid, in order."""
    for a in p.angles:
        spec = AnisoKernelSpec(p.sigma1, p.sigma2, float(a))
        yield float(a), anisotropic_filter(img, spec, p.algo, **filter_kw)


def mr_reduce(responses: Iterator[tuple[float, np.ndarray]]) -> OrientationField:
    """Running argmax; ties (within ``TIE_RTOL``) keep the earlier angle."""
    best = angle = None
    for a, r in responses:
        if best is None:
            best = r.copy()
            angle = np.full(r.shape, a)
            continue
        better = r > best + TIE_RTOL * np.maximum(np.abs(best), np.abs(r))
        best[better] = r[better]
        angle[better] = a
    return OrientationField(angle, best, np.ones(best.shape, dtype=bool))


def mr_estimate(img, p: MRParams, **filter_kw) -> OrientationField:
    return mr_reduce(mr_responses(img, p, **filter_kw))


# --------------------------------------------------------------------------
# gradient-based estimators

def eig2x2_symmetric(a, b, c):
    """Closed-form eigen-analysis of ``[[a, b], [b, c]]``.

    Returns ``(lambda_min, lambda_max, angle_min)`` with the angle of the
    ``lambda_min`` eigenvector in degrees in [0, 180). Works elementwise on
    arrays. A multiple of the identity gets angle 0 by convention.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    mean = 0.5 * (a + c)
    rad = np.hypot(0.5 * (a - c), b)
    degenerate = (a == c) & (b == 0)
    # lambda_max eigenvector sits at half the angle of (a - c, 2b)
    psi = 0.5 * np.degrees(np.arctan2(2.0 * b, a - c))
    ang = np.where(degenerate, 0.0, np.mod(psi + 90.0, 180.0))
    ang = np.where(ang >= 180.0, 0.0, ang)
    out = (mean - rad, mean + rad, ang)
    if out[0].ndim == 0:
        return tuple(float(v) for v in out)
    return out


def _angle_of(vx, vy):
    return np.mod(np.degrees(np.arctan2(vy, vx)), 180.0)


def gaussian_smooth(img, sigma: float) -> np.ndarray:
    """Isotropic recursive Gaussian smoothing (edge-extended)."""
    out = np.array(img, dtype=np.float64, order="C")
    c = coeffs_for_sigma(sigma).packed()
    smooth_rows(out, c)
    smooth_cols(out, c)
    return out


def _d1(f, axis):
    """Central difference with weights [-1/2, 0, 1/2], edge-replicated."""
    pad = [(0, 0), (0, 0)]
    pad[axis] = (1, 1)
    g = np.pad(f, pad, mode="edge")
    if axis == 1:
        return 0.5 * (g[:, 2:] - g[:, :-2])
    return 0.5 * (g[2:, :] - g[:-2, :])


def structure_tensor(img, p: TensorParams):
    """Components ``(J11, J12, J22)`` of the structure tensor."""
    f = gaussian_smooth(img, p.sigma)
    g1 = _d1(f, 1)
    g2 = _d1(f, 0)
    return (gaussian_smooth(g1 * g1, p.rho),
            gaussian_smooth(g1 * g2, p.rho),
            gaussian_smooth(g2 * g2, p.rho))


def structure_tensor_estimate(img, p: TensorParams, eps: float = VALID_EPS) -> OrientationField:
    j11, j12, j22 = structure_tensor(img, p)
    lmin, _, ang = eig2x2_symmetric(j11, j12, j22)
    valid = (j11 + j22) > eps
    return OrientationField(np.where(valid, ang, 0.0), np.abs(lmin), valid)


def hessian(img, sigma: float):
    f = gaussian_smooth(img, sigma)
    f1 = _d1(f, 1)
    f2 = _d1(f, 0)
    return _d1(f1, 1), _d1(f1, 0), _d1(f2, 0)


def hessian_estimate(img, sigma: float, eps: float = VALID_EPS) -> OrientationField:
    if sigma < 0.5:
        raise ValueError("sigma must be >= 0.5")
    h11, h12, h22 = hessian(img, sigma)
    lmin, lmax, ang_min = eig2x2_symmetric(h11, h12, h22)
    small_is_min = np.abs(lmin) <= np.abs(lmax)
    ang = np.where(small_is_min, ang_min, np.mod(ang_min + 90.0, 180.0))
    valid = (np.abs(lmin) > eps) | (np.abs(lmax) > eps)
    resp = np.minimum(np.abs(lmin), np.abs(lmax))
    return OrientationField(np.where(valid, ang, 0.0), resp, valid)


# --------------------------------------------------------------------------
# presentation

def colorize(field: OrientationField) -> np.ndarray:
    """RGB rendering: hue = 2*angle, value = response normalised to [0, 1]."""
    resp = np.where(field.valid, field.response, 0.0)
    lo = resp[field.valid].min() if field.valid.any() else 0.0
    hi = resp[field.valid].max() if field.valid.any() else 0.0
    if hi > lo:
        val = (resp - lo) / (hi - lo)
    else:
        val = np.ones_like(resp)
    hsv = np.stack([np.mod(2.0 * field.angle, 360.0) / 360.0,
                    np.ones_like(resp), val], axis=-1)
    rgb = hsv_to_rgb(hsv)
    rgb[~field.valid] = 0.0
    return rgb


def angle_histogram(field: OrientationField, mask, bin_width: float = 1.0):
    """Counts of masked, valid angles per bin; returns ``(bin_starts, counts)``."""
    nbins = 180.0 / bin_width
    if bin_width <= 0 or abs(nbins - round(nbins)) > 1e-9:
        raise ValueError(f"bin width {bin_width} does not divide 180")
    nbins = int(round(nbins))
    sel = np.asarray(mask, dtype=bool) & field.valid
    idx = np.floor(field.angle[sel] / bin_width + 1e-9).astype(np.int64)
    counts = np.bincount(np.clip(idx, 0, nbins - 1), minlength=nbins)
    return np.arange(nbins) * bin_width, counts
