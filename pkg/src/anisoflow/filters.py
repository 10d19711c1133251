"""Two-dimensional anisotropic Gaussian filters.

Four approximations of ``g_{s1,s2,theta} * img`` built from the recursive
1D engine, plus a dense-convolution oracle:

* ``hybrid``: axis pass on the grid, then each oblique lattice line is
  gathered once (one interpolation per pixel), filtered causally and
  anticausally without leaving the line, and written back once.
* ``linebuffer``: same decomposition, but the causal and anticausal passes
  each read from and write to the grid, i.e. four interpolations per pixel.
* ``geometric``: shear the whole image onto a wider canvas, filter both
  grid axes there, shear back.
* ``naive``: rotate the image onto the kernel's principal axes, filter,
  rotate back.
* ``oracle``: FFT convolution with the sampled, truncated and renormalised
  true kernel.

Images are 2D float64 arrays indexed ``[row, column]`` = ``[x2, x1]``.
Outside the image the signal is continued with its edge values.

Lattice lines of the x1-aligned plan: the line with index ``k`` visits row
``y`` at column ``k + mu*y``. With ``F[y] = floor(mu*y)`` and
``s[y] = mu*y - F[y]`` its sample in row ``y`` is stored at ``j = k + F[y]``
of a row-aligned buffer, and sits at column ``j + s[y]`` of the image. Each
buffer row therefore holds exactly ``width`` samples, so gathers and
scatters both cost exactly one interpolation per pixel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numba import njit
from scipy import fft as sfft

from .decomp import AnisoKernelSpec, Axis, plan_auto, DecompPlan
from .gauss1d import (MIN_LENGTH, coeffs_for_sigma, smooth_cols, smooth_rows,
                      UnsupportedSigmaError)
from .image import sample_true_kernel
from .interp import (LINEAR, SPLINE, InterpScheme, keys_weights, sample_at,
                     spline_at, spline_moments)


class Algorithm(str, Enum):
    NAIVE = "naive"
    GEOMETRIC = "geometric"
    LINEBUFFER = "linebuffer"
    HYBRID = "hybrid"
    ORACLE = "oracle"


@dataclass(frozen=True)
class FilterAlgorithm:
    kind: Algorithm = Algorithm.HYBRID
    interp: InterpScheme = InterpScheme.LINEAR
    modification: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", Algorithm(self.kind))
        object.__setattr__(self, "interp", InterpScheme(self.interp))

    @property
    def label(self) -> str:
        if self.kind is Algorithm.ORACLE:
            return "oracle"
        mod = "+mod" if self.modification and self.kind is not Algorithm.NAIVE else ""
        return f"{self.kind.value}{mod}-{self.interp.value}"


HYBRID_LINEAR = FilterAlgorithm(Algorithm.HYBRID, InterpScheme.LINEAR)
HYBRID_CUBIC = FilterAlgorithm(Algorithm.HYBRID, InterpScheme.CUBIC)
HYBRID_MOD_LINEAR = FilterAlgorithm(Algorithm.HYBRID, InterpScheme.LINEAR, True)
HYBRID_MOD_CUBIC = FilterAlgorithm(Algorithm.HYBRID, InterpScheme.CUBIC, True)
LINEBUFFER_LINEAR = FilterAlgorithm(Algorithm.LINEBUFFER, InterpScheme.LINEAR)
ORACLE = FilterAlgorithm(Algorithm.ORACLE)

# Table 1 of the reference work: (multiplications, additions) per pixel.
# Documentation only; never compared against this code.
_OP_COUNTS = {
    LINEBUFFER_LINEAR: (21, 16),
    HYBRID_LINEAR: (17, 14),
    HYBRID_CUBIC: (27, 20),
}


def op_counts(algo: FilterAlgorithm) -> tuple[int, int]:
    """Theoretical (multiplications, additions) per pixel."""
    key = FilterAlgorithm(algo.kind, algo.interp, False)
    if algo.modification or key not in _OP_COUNTS:
        raise KeyError(f"no tabulated operation count for {algo.label}")
    return _OP_COUNTS[key]


class InterpCounter:
    """Accumulates interpolation calls made by the oblique passes."""

    def __init__(self):
        self.calls = 0
        self.pixels = 0

    @property
    def per_pixel(self) -> float:
        return self.calls / self.pixels if self.pixels else 0.0


# --------------------------------------------------------------------------
# numba kernels for the oblique (lattice-line) pass

@njit(cache=True, nogil=True)
def _floors(mu, h, y0):
    """Lattice offsets per row; lines pass through integer columns at row ``y0``."""
    F = np.empty(h, dtype=np.int64)
    s = np.empty(h)
    for y in range(h):
        v = mu * (y - y0)
        f = math.floor(v)
        F[y] = f
        s[y] = v - f
    return F, s


@njit(cache=True, nogil=True)
def _at(row, n, M, pos, mode):
    if mode == SPLINE:
        return spline_at(row, M, n, pos)
    return sample_at(row, n, pos, mode != LINEAR)


@njit(cache=True, nogil=True)
def _prepare(row, n, M, cp, mode):
    if mode == SPLINE:
        spline_moments(row, n, M, cp)


@njit(cache=True, nogil=True)
def _gather(img, S, s, mode):
    h, w = img.shape
    M = np.zeros(w)
    cp = np.empty(w)
    for y in range(h):
        row = img[y]
        _prepare(row, w, M, cp, mode)
        for j in range(w):
            S[y, j] = _at(row, w, M, j + s[y], mode)
    return h * w


@njit(cache=True, nogil=True)
def _scatter(S, out, s, mode):
    h, w = S.shape
    M = np.zeros(w)
    cp = np.empty(w)
    for y in range(h):
        row = S[y]
        _prepare(row, w, M, cp, mode)
        for x in range(w):
            out[y, x] = _at(row, w, M, x - s[y], mode)
    return h * w


@njit(cache=True, nogil=True)
def _causal_sweep(S, F, c, k0, nlines, uplus, h1s, h2s, h3s):
    """Causal pass along every lattice line, row by row, in place.

    For each line the raw input at its last sample and its last three causal
    outputs are stored for the anticausal initialisation.
    """
    h, w = S.shape
    g, a1, a2, a3 = c[0], c[1], c[2], c[3]
    w1 = np.empty(nlines)
    w2 = np.empty(nlines)
    w3 = np.empty(nlines)
    for y in range(h):
        for j in range(w):
            k = j - F[y]
            li = k - k0
            x = S[y, j]
            jp = k + F[y - 1] if y > 0 else -1
            if y == 0 or jp < 0 or jp >= w:
                w1[li] = x
                w2[li] = x
                w3[li] = x
            v = g * x + a1 * w1[li] + a2 * w2[li] + a3 * w3[li]
            w3[li] = w2[li]
            w2[li] = w1[li]
            w1[li] = v
            S[y, j] = v
            jn = k + F[y + 1] if y + 1 < h else -1
            if jn < 0 or jn >= w:
                uplus[li] = x
                h1s[li] = w1[li]
                h2s[li] = w2[li]
                h3s[li] = w3[li]


@njit(cache=True, nogil=True)
def _anticausal_sweep(S, F, c, k0, nlines, uplus, h1s, h2s, h3s):
    h, w = S.shape
    g, a1, a2, a3 = c[0], c[1], c[2], c[3]
    y1 = np.empty(nlines)
    y2 = np.empty(nlines)
    y3 = np.empty(nlines)
    for y in range(h - 1, -1, -1):
        for j in range(w):
            k = j - F[y]
            li = k - k0
            jn = k + F[y + 1] if y + 1 < h else -1
            if jn < 0 or jn >= w:
                u = uplus[li]
                d0 = h1s[li] - u
                d1 = h2s[li] - u
                d2 = h3s[li] - u
                y1[li] = u + c[4] * d0 + c[5] * d1 + c[6] * d2
                y2[li] = u + c[7] * d0 + c[8] * d1 + c[9] * d2
                y3[li] = u + c[10] * d0 + c[11] * d1 + c[12] * d2
            v = g * S[y, j] + a1 * y1[li] + a2 * y2[li] + a3 * y3[li]
            y3[li] = y2[li]
            y2[li] = y1[li]
            y1[li] = v
            S[y, j] = v


@njit(cache=True, nogil=True)
def _oblique_x1(img, ca, cl, mu, mode, four, y0):
    """Axis pass along rows followed by the lattice-line pass; in place.

    ``four`` selects the line-buffer schedule (grid round trip between the
    causal and anticausal passes). Returns the number of interpolations.
    """
    h, w = img.shape
    smooth_rows(img, ca)
    F, s = _floors(mu, h, y0)
    fmin = F.min()
    fmax = F.max()
    k0 = -fmax
    nlines = (w - 1 - fmin) - k0 + 1
    uplus = np.empty(nlines)
    h1s = np.empty(nlines)
    h2s = np.empty(nlines)
    h3s = np.empty(nlines)
    S = np.empty((h, w))
    count = _gather(img, S, s, mode)
    _causal_sweep(S, F, cl, k0, nlines, uplus, h1s, h2s, h3s)
    if four:
        count += _scatter(S, img, s, mode)
        count += _gather(img, S, s, mode)
    _anticausal_sweep(S, F, cl, k0, nlines, uplus, h1s, h2s, h3s)
    count += _scatter(S, img, s, mode)
    return count


@njit(cache=True, nogil=True)
def _geometric_x1(img, ca, cl, mu, mode, y0):
    h, w = img.shape
    F, s = _floors(mu, h, y0)
    k0 = -F.max()
    wc = (w - 1 - F.min()) - k0 + 1
    canvas = np.empty((h, wc))
    M = np.zeros(wc)
    cp = np.empty(wc)
    for y in range(h):
        row = img[y]
        _prepare(row, w, M, cp, mode)
        base = k0 + F[y] + s[y]
        for jc in range(wc):
            canvas[y, jc] = _at(row, w, M, jc + base, mode)
    smooth_rows(canvas, ca)
    smooth_cols(canvas, cl)
    for y in range(h):
        base = k0 + F[y] + s[y]
        row = canvas[y]
        _prepare(row, wc, M, cp, mode)
        for x in range(w):
            img[y, x] = _at(row, wc, M, x - base, mode)
    # two transformations per output pixel; canvas padding is not counted
    return 2 * h * w


@njit(cache=True, nogil=True)
def _sample2d(img, px, py, cubic):
    h, w = img.shape
    if px < 0.0:
        px = 0.0
    elif px > w - 1:
        px = w - 1.0
    if py < 0.0:
        py = 0.0
    elif py > h - 1:
        py = h - 1.0
    ix = int(math.floor(px))
    iy = int(math.floor(py))
    tx = px - ix
    ty = py - iy
    if not cubic:
        ix1 = min(ix + 1, w - 1)
        iy1 = min(iy + 1, h - 1)
        top = img[iy, ix] + tx * (img[iy, ix1] - img[iy, ix])
        bot = img[iy1, ix] + tx * (img[iy1, ix1] - img[iy1, ix])
        return top + ty * (bot - top)
    wx = keys_weights(tx)
    wy = keys_weights(ty)
    acc = 0.0
    for a in range(4):
        yy = min(max(iy - 1 + a, 0), h - 1)
        racc = 0.0
        for b in range(4):
            xx = min(max(ix - 1 + b, 0), w - 1)
            racc += wx[b] * img[yy, xx]
        acc += wy[a] * racc
    return acc


@njit(cache=True, nogil=True)
def _naive(img, c1, c2, theta_rad, cubic):
    h, w = img.shape
    cx = (w - 1) / 2.0
    cy = (h - 1) / 2.0
    ct = math.cos(theta_rad)
    st = math.sin(theta_rad)
    # canvas axes: u along the major axis (columns), v along the minor axis (rows)
    half_u = 0.5 * (abs(ct) * (w - 1) + abs(st) * (h - 1))
    half_v = 0.5 * (abs(st) * (w - 1) + abs(ct) * (h - 1))
    nu = int(math.ceil(2.0 * half_u)) + 3
    nv = int(math.ceil(2.0 * half_v)) + 3
    cu = (nu - 1) / 2.0
    cv = (nv - 1) / 2.0
    canvas = np.empty((nv, nu))
    for i in range(nv):
        v = i - cv
        for j in range(nu):
            u = j - cu
            px = cx + u * ct - v * st
            py = cy + u * st + v * ct
            canvas[i, j] = _sample2d(img, px, py, cubic)
    smooth_rows(canvas, c1)
    smooth_cols(canvas, c2)
    for y in range(h):
        dy = y - cy
        for x in range(w):
            dx = x - cx
            u = dx * ct + dy * st
            v = -dx * st + dy * ct
            img[y, x] = _sample2d(canvas, u + cu, v + cv, cubic)
    return nv * nu + h * w


# --------------------------------------------------------------------------
# dense oracle

def oracle_kernel(spec: AnisoKernelSpec) -> np.ndarray:
    """Sampled true kernel truncated at 4*sigma1, renormalised to unit sum."""
    radius = int(math.ceil(4.0 * spec.sigma1))
    k = sample_true_kernel(2 * radius + 1, spec)
    return k / k.sum()


def dense_filter(img: np.ndarray, spec: AnisoKernelSpec) -> np.ndarray:
    """Direct convolution with :func:`oracle_kernel`, edge-extended borders.

    Accepts a single image or a stack ``(n, h, w)``.
    """
    arr = np.asarray(img, dtype=np.float64)
    k = oracle_kernel(spec)
    r = k.shape[0] // 2
    pad = [(0, 0)] * (arr.ndim - 2) + [(r, r), (r, r)]
    padded = np.pad(arr, pad, mode="edge")
    ph, pw = padded.shape[-2:]
    shape = (sfft.next_fast_len(ph + 2 * r), sfft.next_fast_len(pw + 2 * r))
    spec_img = sfft.rfft2(padded, shape)
    spec_k = sfft.rfft2(k, shape)
    full = sfft.irfft2(spec_img * spec_k, shape)
    h, w = arr.shape[-2:]
    return np.ascontiguousarray(full[..., 2 * r:2 * r + h, 2 * r:2 * r + w])


# --------------------------------------------------------------------------
# public entry points

# padding in standard deviations; matches the oracle's kernel truncation
KERNEL_REACH = 4.0


def _line_coeffs(plan: DecompPlan, variant: str):
    return (coeffs_for_sigma(plan.sigma_axis, variant).packed(),
            coeffs_for_sigma(plan.sigma_step, variant).packed())


def anisotropic_filter(img, spec: AnisoKernelSpec,
                       algo: FilterAlgorithm = HYBRID_LINEAR, *,
                       variant: str = "2002", as_printed: bool = False,
                       boundary: str = "nearest",
                       counter: InterpCounter | None = None) -> np.ndarray:
    """Approximate ``g_{sigma1, sigma2, theta} * img``.

    ``variant`` selects the recursive coefficient set; ``as_printed`` swaps in
    the alternative axis-sigma formula (comparison runs only).

    ``boundary="nearest"`` treats the image as extended by its edge values in
    2D, like the dense oracle. Sheared lines clipped at the border would
    otherwise extend their own end value along the line direction, so the
    image is padded by the kernel reach before the oblique pass and cropped
    afterwards. ``boundary="line"`` skips the padding (per-line constant
    extension, no extra memory).
    """
    if boundary not in ("nearest", "line"):
        raise ValueError(f"unknown boundary mode {boundary!r}")
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("expected a 2D image")
    if min(arr.shape) < 2 * MIN_LENGTH:
        raise ValueError(f"image {arr.shape} smaller than 8x8")
    if algo.kind is Algorithm.ORACLE:
        return dense_filter(arr, spec)

    mode = algo.interp.code
    if algo.kind is Algorithm.NAIVE:
        # 2D resampling has no spline variant; both cubic schemes use Keys
        cubic = mode != LINEAR
        c1 = coeffs_for_sigma(spec.sigma1, variant).packed()
        c2 = coeffs_for_sigma(spec.sigma2, variant).packed()
        out = arr.copy()
        n = _naive(out, c1, c2, math.radians(spec.theta), cubic)
        npix = arr.size
    else:
        plan = plan_auto(spec, algo.modification, as_printed)
        ca, cl = _line_coeffs(plan, variant)
        # the x2 plan is the x1 plan of the transposed image
        out = np.ascontiguousarray(arr.T if plan.axis is Axis.X2 else arr, dtype=np.float64)
        if out is arr:
            out = arr.copy()
        h, w = out.shape
        py = px = 0
        if boundary == "nearest" and plan.mu != 0.0:
            py = math.ceil(KERNEL_REACH * plan.sigma_step)
            px = math.ceil(KERNEL_REACH * math.hypot(plan.sigma_axis, plan.sigma_step * plan.mu))
            out = np.pad(out, ((py, py), (px, px)), mode="edge")
        # the lattice stays anchored to the first image row either way
        if algo.kind is Algorithm.GEOMETRIC:
            n = _geometric_x1(out, ca, cl, plan.mu, mode, py)
        else:
            n = _oblique_x1(out, ca, cl, plan.mu, mode, algo.kind is Algorithm.LINEBUFFER, py)
        npix = out.size
        if py or px:
            out = out[py:py + h, px:px + w]
        out = np.ascontiguousarray(out.T if plan.axis is Axis.X2 else out)
    if counter is not None:
        counter.calls += int(n)
        counter.pixels += npix
    return out


def reconstruct_kernel(spec: AnisoKernelSpec, algo: FilterAlgorithm,
                       N: int = 512, **kwargs) -> np.ndarray:
    """Unit-impulse response of ``algo`` on an ``N x N`` grid."""
    from .image import unit_impulse

    if N < 8 * spec.sigma1:
        raise ValueError(f"N={N} too small for sigma1={spec.sigma1} (need >= 8*sigma1)")
    return anisotropic_filter(unit_impulse(N), spec, algo, **kwargs)


__all__ = [
    "Algorithm", "FilterAlgorithm", "InterpCounter", "UnsupportedSigmaError",
    "HYBRID_LINEAR", "HYBRID_CUBIC", "HYBRID_MOD_LINEAR", "HYBRID_MOD_CUBIC",
    "LINEBUFFER_LINEAR", "ORACLE", "anisotropic_filter", "dense_filter",
    "oracle_kernel", "op_counts", "reconstruct_kernel",
]
