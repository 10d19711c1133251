"""Third-order recursive (IIR) Gaussian smoothing along 1D lines.

The filter is a causal pass followed by an anticausal pass with identical
feedback coefficients (Young & van Vliet). Boundaries use constant
extension: the causal pass starts from the steady state of the first
sample, and the anticausal pass is initialised with the Triggs & Sdika
matrix so that the constant continuation past the last sample is
accounted for exactly.

All heavy loops are numba kernels operating on caller-owned float64
buffers; the thin Python wrappers validate input.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numba import njit

MIN_SIGMA = 0.5
MIN_LENGTH = 4


class UnsupportedSigmaError(ValueError):
    """Raised for standard deviations outside the recursive filter's range."""


@dataclass(frozen=True)
class RecursiveCoeffs:
    """Coefficients of one causal/anticausal pass.

    The recursion is ``w[n] = gain*x[n] + (b1*w[n-1] + b2*w[n-2] + b3*w[n-3]) / b0``.
    """

    sigma: float
    b0: float
    b1: float
    b2: float
    b3: float
    gain: float
    variant: str = "2002"
    boundary: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def a(self) -> tuple[float, float, float]:
        return self.b1 / self.b0, self.b2 / self.b0, self.b3 / self.b0

    def packed(self) -> np.ndarray:
        """``[gain, a1, a2, a3, M00, ..., M22]`` for the numba kernels."""
        a1, a2, a3 = self.a
        return np.concatenate(([self.gain, a1, a2, a3], self.boundary.ravel()))


def _q_1995(sigma: float) -> float:
    if sigma >= 2.5:
        return 0.98711 * sigma - 0.96330
    return 3.97156 - 4.14554 * np.sqrt(1.0 - 0.26891 * sigma)


def _coeffs_1995(sigma: float) -> tuple[float, float, float, float]:
    q = _q_1995(sigma)
    q2, q3 = q * q, q * q * q
    b0 = 1.57825 + 2.44413 * q + 1.4281 * q2 + 0.422205 * q3
    b1 = 2.44413 * q + 2.85619 * q2 + 1.26661 * q3
    b2 = -(1.4281 * q2 + 1.26661 * q3)
    b3 = 0.422205 * q3
    return b0, b1, b2, b3


def _q_2002(sigma: float) -> float:
    if sigma < 3.556:
        return -0.2568 + 0.5784 * sigma + 0.0561 * sigma * sigma
    return 2.5091 + 0.9804 * (sigma - 3.556)


def _q_2002_exact(sigma: float) -> float:
    # matches the impulse-response variance to sigma^2
    return 1.31564 * (np.sqrt(1.0 + 0.490811 * sigma * sigma) - 1.0)


def _coeffs_2002(sigma: float, exact: bool = False) -> tuple[float, float, float, float]:
    # pole-based parameterisation; coefficients returned with b0 = 1
    m0, m1, m2 = 1.16680, 1.10783, 1.40586
    q = _q_2002_exact(sigma) if exact else _q_2002(sigma)
    m12 = m1 * m1 + m2 * m2
    scale = (m0 + q) * (m12 + 2.0 * m1 * q + q * q)
    b1 = q * (2.0 * m0 * m1 + m12 + (2.0 * m0 + 4.0 * m1) * q + 3.0 * q * q) / scale
    b2 = -q * q * (m0 + 2.0 * m1 + 3.0 * q) / scale
    b3 = q ** 3 / scale
    return 1.0, b1, b2, b3


def _companion(a1: float, a2: float, a3: float) -> np.ndarray:
    return np.array([[a1, a2, a3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def boundary_matrix(a1: float, a2: float, a3: float, gain: float) -> np.ndarray:
    """Anticausal initialisation matrix for constant right extension.

    With ``d`` the causal outputs ``(w[N-1], w[N-2], w[N-3])`` minus the
    boundary value ``u``, the anticausal outputs just past the end are
    ``(y[N], y[N+1], y[N+2]) = u + M @ d``.

    ``M`` solves the Stein equation ``M = A M A + gain * e1 e1^T A`` where
    ``A`` is the companion matrix shared by both passes; this is the closed
    system behind Triggs & Sdika's formula, solved here by a 9x9 linear
    system instead of their expanded expression.
    """
    A = _companion(a1, a2, a3)
    E = np.zeros((3, 3))
    E[0, 0] = gain
    rhs = E @ A
    # vec(A M A) = (A^T kron A) vec(M) for column-major vec
    lhs = np.eye(9) - np.kron(A.T, A)
    m = np.linalg.solve(lhs, rhs.ravel(order="F"))
    return m.reshape((3, 3), order="F")


@lru_cache(maxsize=4096)
def _cached(sigma: float, variant: str) -> RecursiveCoeffs:
    if variant == "1995":
        b0, b1, b2, b3 = _coeffs_1995(sigma)
    elif variant == "2002":
        b0, b1, b2, b3 = _coeffs_2002(sigma)
    elif variant == "2002-exact":
        b0, b1, b2, b3 = _coeffs_2002(sigma, exact=True)
    else:
        raise ValueError(f"unknown coefficient variant {variant!r}")
    gain = 1.0 - (b1 + b2 + b3) / b0
    M = boundary_matrix(b1 / b0, b2 / b0, b3 / b0, gain)
    M.setflags(write=False)
    return RecursiveCoeffs(float(sigma), b0, b1, b2, b3, gain, variant, M)


def coeffs_for_sigma(sigma: float, variant: str = "2002") -> RecursiveCoeffs:
    """Recursive filter coefficients approximating a Gaussian of std ``sigma``."""
    sigma = float(sigma)
    if not np.isfinite(sigma) or sigma < MIN_SIGMA:
        raise UnsupportedSigmaError(
            f"sigma={sigma!r} below the supported minimum {MIN_SIGMA}")
    return _cached(sigma, variant)


# --------------------------------------------------------------------------
# numba kernels. ``c`` is RecursiveCoeffs.packed().

@njit(cache=True, nogil=True)
def _forward(x, out, c):
    n = x.shape[0]
    g, a1, a2, a3 = c[0], c[1], c[2], c[3]
    w1 = w2 = w3 = x[0]
    for i in range(n):
        w0 = g * x[i] + a1 * w1 + a2 * w2 + a3 * w3
        out[i] = w0
        w3 = w2
        w2 = w1
        w1 = w0


@njit(cache=True, nogil=True)
def _backward(w, out, c, u, h1, h2, h3):
    """Anticausal pass. ``h1..h3`` are the causal outputs at n-1, n-2, n-3
    (they differ from ``w`` only for lines shorter than three samples)."""
    n = w.shape[0]
    g, a1, a2, a3 = c[0], c[1], c[2], c[3]
    d0 = h1 - u
    d1 = h2 - u
    d2 = h3 - u
    y1 = u + c[4] * d0 + c[5] * d1 + c[6] * d2
    y2 = u + c[7] * d0 + c[8] * d1 + c[9] * d2
    y3 = u + c[10] * d0 + c[11] * d1 + c[12] * d2
    for i in range(n - 1, -1, -1):
        y0 = g * w[i] + a1 * y1 + a2 * y2 + a3 * y3
        out[i] = y0
        y3 = y2
        y2 = y1
        y1 = y0


@njit(cache=True, nogil=True)
def _smooth(x, out, c):
    """Causal then anticausal pass; ``out`` may alias ``x``."""
    n = x.shape[0]
    u = x[n - 1]
    first = x[0]
    _forward(x, out, c)
    h1 = out[n - 1]
    h2 = out[n - 2] if n >= 2 else first
    h3 = out[n - 3] if n >= 3 else first
    _backward(out, out, c, u, h1, h2, h3)


@njit(cache=True, nogil=True)
def smooth_rows(img, c):
    """In-place recursive smoothing of every row of a 2D array."""
    for r in range(img.shape[0]):
        _smooth(img[r], img[r], c)


@njit(cache=True, nogil=True)
def smooth_cols(img, c):
    """In-place recursive smoothing of every column of a 2D array."""
    h = img.shape[0]
    buf = np.empty(h)
    for col in range(img.shape[1]):
        for r in range(h):
            buf[r] = img[r, col]
        _smooth(buf, buf, c)
        for r in range(h):
            img[r, col] = buf[r]


# --------------------------------------------------------------------------
# validated public API

def _check_line(line) -> np.ndarray:
    arr = np.asarray(line)
    if arr.ndim != 1:
        raise ValueError("expected a 1D line")
    if arr.shape[0] < MIN_LENGTH:
        raise ValueError(f"line length {arr.shape[0]} < {MIN_LENGTH}")
    return arr


def forward_pass(line: np.ndarray, coeffs: RecursiveCoeffs) -> None:
    """Causal pass, in place. The line is assumed to continue with its first
    value to the left."""
    arr = _check_line(line)
    _forward(arr, arr, coeffs.packed())


def backward_pass(line: np.ndarray, coeffs: RecursiveCoeffs,
                  boundary_value: float | None = None) -> None:
    """Anticausal pass, in place.

    Without ``boundary_value`` the line is continued with its last value and
    the pass is the mirror image of :func:`forward_pass`. When ``line`` holds
    causal outputs of a signal whose raw input ends in ``boundary_value``,
    pass that value to get the exact constant-extension initialisation.
    """
    arr = _check_line(line)
    if boundary_value is None:
        u = arr[-1]
        _backward(arr, arr, coeffs.packed(), u, u, u, u)
    else:
        _backward(arr, arr, coeffs.packed(), float(boundary_value),
                  arr[-1], arr[-2], arr[-3])


def gauss1d_inplace(line: np.ndarray, coeffs: RecursiveCoeffs) -> None:
    """Recursive Gaussian smoothing of ``line`` in place (float64 required)."""
    arr = _check_line(line)
    if arr.dtype != np.float64:
        raise TypeError("gauss1d_inplace needs a float64 buffer")
    _smooth(arr, arr, coeffs.packed())


def gauss1d(line, sigma: float, variant: str = "2002") -> np.ndarray:
    """Out-of-place convenience wrapper."""
    out = np.array(_check_line(line), dtype=np.float64)
    gauss1d_inplace(out, coeffs_for_sigma(sigma, variant))
    return out
