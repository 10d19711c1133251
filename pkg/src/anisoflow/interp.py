"""Sub-pixel sampling along a line of samples.

Three schemes:

* ``linear``: two taps.
* ``cubic``: natural cubic spline through the whole line (second derivative
  zero at both ends). One tridiagonal solve per line, then each sample reads
  two values and two second derivatives.
* ``keys``: Keys' cubic convolution with a = -1/2 on four taps; a missing tap
  next to either end is synthesised as ``3*s0 - 3*s1 + s2`` (Keys' end
  condition), so quadratics are reproduced everywhere on the line.
"""
from __future__ import annotations

import math
from enum import Enum

import numpy as np
from numba import njit


class InterpScheme(str, Enum):
    LINEAR = "linear"
    CUBIC = "cubic"
    KEYS = "keys"

    @property
    def taps(self) -> int:
        return 2 if self is InterpScheme.LINEAR else 4

    @property
    def code(self) -> int:
        """Integer tag used by the compiled kernels."""
        return {"linear": LINEAR, "keys": KEYS, "cubic": SPLINE}[self.value]


LINEAR, KEYS, SPLINE = 0, 1, 2


@njit(cache=True, nogil=True)
def keys_weights(t):
    """Cubic-convolution weights for taps -1, 0, 1, 2 at fractional offset t."""
    t2 = t * t
    t3 = t2 * t
    w0 = 0.5 * (-t3 + 2.0 * t2 - t)
    w1 = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0)
    w2 = 0.5 * (-3.0 * t3 + 4.0 * t2 + t)
    w3 = 0.5 * (t3 - t2)
    return w0, w1, w2, w3


@njit(cache=True, nogil=True)
def sample_at(line, n, pos, cubic):
    """Value of ``line[:n]`` at ``pos``; positions outside [0, n-1] are
    clamped (constant extension)."""
    if pos <= 0.0 or n == 1:
        return line[0]
    if pos >= n - 1:
        return line[n - 1]
    i = int(math.floor(pos))
    t = pos - i
    if t == 0.0:
        return line[i]
    if not cubic or n == 2:
        return line[i] + t * (line[i + 1] - line[i])
    w0, w1, w2, w3 = keys_weights(t)
    s1 = line[i]
    s2 = line[i + 1]
    if i == 0:
        s0 = 3.0 * line[0] - 3.0 * line[1] + line[2]
    else:
        s0 = line[i - 1]
    if i + 2 >= n:
        s3 = 3.0 * line[n - 1] - 3.0 * line[n - 2] + line[n - 3]
    else:
        s3 = line[i + 2]
    return w0 * s0 + w1 * s1 + w2 * s2 + w3 * s3


@njit(cache=True, nogil=True)
def spline_moments(line, n, M, cp):
    """Second derivatives of the natural cubic spline through ``line[:n]``.

    Solves ``M[i-1] + 4 M[i] + M[i+1] = 6 (s[i+1] - 2 s[i] + s[i-1])`` with
    ``M[0] = M[n-1] = 0`` by the Thomas algorithm; ``cp`` is scratch.
    """
    M[0] = 0.0
    M[n - 1] = 0.0
    if n < 3:
        return
    prev_m = 0.0
    prev_c = 0.0
    for i in range(1, n - 1):
        den = 4.0 - prev_c
        cp[i] = 1.0 / den
        prev_m = (6.0 * (line[i + 1] - 2.0 * line[i] + line[i - 1]) - prev_m) / den
        M[i] = prev_m
        prev_c = cp[i]
    for i in range(n - 3, 0, -1):
        M[i] -= cp[i] * M[i + 1]


@njit(cache=True, nogil=True)
def spline_at(line, M, n, pos):
    """Natural spline value at ``pos``, clamped outside [0, n-1]."""
    if pos <= 0.0 or n == 1:
        return line[0]
    if pos >= n - 1:
        return line[n - 1]
    i = int(math.floor(pos))
    t = pos - i
    if t == 0.0:
        return line[i]
    a = 1.0 - t
    return (a * line[i] + t * line[i + 1]
            + ((a * a * a - a) * M[i] + (t * t * t - t) * M[i + 1]) * (1.0 / 6.0))


def sample(line, pos: float, scheme: InterpScheme = InterpScheme.LINEAR) -> float:
    """Interpolated value of ``line`` at fractional index ``pos``."""
    arr = np.ascontiguousarray(line, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise ValueError("expected a non-empty 1D line")
    n = arr.shape[0]
    if not (0.0 <= pos <= n - 1):
        raise IndexError(f"position {pos} outside [0, {n - 1}]")
    scheme = InterpScheme(scheme)
    if scheme is InterpScheme.CUBIC:
        M = np.empty(n)
        spline_moments(arr, n, M, np.empty(n))
        return float(spline_at(arr, M, n, float(pos)))
    return float(sample_at(arr, n, float(pos), scheme is InterpScheme.KEYS))
