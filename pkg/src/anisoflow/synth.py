"""Synthetic fibre images and the experiments run on them.

Fibre images are sinusoids whose crests are the fibres. Pixel ``(row, col)``
maps to ``x = col``, ``y = -row`` (y axis pointing up, origin at the
top-left pixel), which makes the fibres of ``F_theta`` run along the same
direction as an ``AnisoKernelSpec`` with angle ``theta``.

The MR method is linear in the image, so for blends ``(1-c) B + c F`` the
responses to ``B`` (once per seed) and ``F`` (once per angle) are computed
separately and combined per contrast. Median preprocessing breaks that
linearity; those cells are filtered directly.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit
from scipy.stats import trim_mean

from .decomp import AnisoKernelSpec
from .filters import (HYBRID_CUBIC, HYBRID_LINEAR, HYBRID_MOD_LINEAR, HYBRID_MOD_CUBIC,
                      LINEBUFFER_LINEAR, FilterAlgorithm, anisotropic_filter,
                      reconstruct_kernel)
from .image import l2_distance, median3x3, sample_true_kernel
from .orientation import (TIE_RTOL, MRParams, OrientationField, TensorParams,
                          default_angles, hessian_estimate, mr_estimate,
                          structure_tensor_estimate)

DEFAULT_CONTRASTS = (0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5, 0.75, 1.0)
EVAL_RADIUS = 206.0
MR_SIGMA1 = 20.0
RHO = 6.0


def workers() -> int:
    """Worker count: ``ANISOFLOW_WORKERS`` or the available CPUs."""
    env = os.environ.get("ANISOFLOW_WORKERS")
    if env:
        n = int(env)
        if n < 1:
            raise ValueError("ANISOFLOW_WORKERS must be >= 1")
        return n
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def _pmap(fn, items, nworkers=None):
    nworkers = workers() if nworkers is None else nworkers
    if nworkers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(nworkers) as ex:
        return list(ex.map(fn, items))


# --------------------------------------------------------------------------
# images

@dataclass(frozen=True)
class FiberImageSpec:
    N: int
    theta: float
    w: float
    frequency_scaled: bool = True

    @property
    def radius(self) -> float:
        return math.pi * self.w / 2.0


def make_fiber_image(spec: FiberImageSpec) -> np.ndarray:
    if spec.N < 8:
        raise ValueError("fibre image needs N >= 8")
    if not spec.w > 0:
        raise ValueError("w must be positive")
    t = math.radians(spec.theta)
    x = np.arange(spec.N, dtype=np.float64)[None, :]
    y = -np.arange(spec.N, dtype=np.float64)[:, None]
    arg = x * math.sin(t) + y * math.cos(t)
    if spec.frequency_scaled:
        img = np.sin(arg / spec.w) / 2.0 + 0.5
    else:
        img = np.sin(arg) / (2.0 * spec.w) + 0.5
    return np.clip(img, 0.0, 1.0)


def make_noise(N: int, seed: int) -> np.ndarray:
    """i.i.d. Uniform[0, 1] pixels from PCG64 seeded with ``seed``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return np.random.default_rng(np.random.SeedSequence(seed)).random((N, N))


def blend(B, F, c: float) -> np.ndarray:
    B = np.asarray(B, dtype=np.float64)
    F = np.asarray(F, dtype=np.float64)
    if B.shape != F.shape:
        raise ValueError(f"shape mismatch {B.shape} vs {F.shape}")
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"contrast {c} outside [0, 1]")
    if c == 1.0:
        return F.copy()
    if c == 0.0:
        return B.copy()
    return (1.0 - c) * B + c * F


def disk_mask(N: int, radius: float = EVAL_RADIUS) -> np.ndarray:
    """Pixels within ``radius`` of the centre pixel ``(N//2, N//2)``."""
    d = np.arange(N) - N // 2
    return d[:, None] ** 2 + d[None, :] ** 2 <= radius * radius


def fiber_mask(F, threshold: float = 0.75, radius: float = EVAL_RADIUS) -> np.ndarray:
    F = np.asarray(F)
    if F.ndim != 2 or F.shape[0] != F.shape[1]:
        raise ValueError("fibre mask needs a square image")
    return (F > threshold) & disk_mask(F.shape[0], radius)


def angular_distance(a, b):
    d = np.abs(np.asarray(a, dtype=np.float64) - b) % 180.0
    return np.minimum(d, 180.0 - d)


def mae(est: OrientationField, truth_theta: float, mask) -> float:
    """Mean circular (mod 180) angular error over masked valid pixels."""
    sel = np.asarray(mask, dtype=bool) & est.valid
    if not sel.any():
        raise ValueError("empty evaluation mask")
    return float(angular_distance(est.angle[sel], truth_theta).mean())


# --------------------------------------------------------------------------
# contrast experiment

@dataclass(frozen=True)
class Method:
    """One estimator configuration of the contrast experiment."""

    kind: str  # "mr", "tensor" or "hessian"
    algo: FilterAlgorithm | None = None
    median: bool = False

    @property
    def label(self) -> str:
        base = f"mr:{self.algo.label}" if self.kind == "mr" else self.kind
        return base + ("+median" if self.median else "")


DEFAULT_METHODS = (
    Method("mr", HYBRID_CUBIC),
    Method("mr", HYBRID_MOD_LINEAR),
    Method("mr", HYBRID_MOD_CUBIC),
    Method("mr", HYBRID_LINEAR),
    Method("mr", LINEBUFFER_LINEAR),
    Method("tensor"),
    Method("hessian"),
)


@dataclass
class ContrastConfig:
    seeds: Sequence[int] = tuple(range(10))
    contrasts: Sequence[float] = DEFAULT_CONTRASTS
    widths: Sequence[float] = (1.0, 2.0)
    theta_step: float = 5.0
    methods: Sequence[Method] = DEFAULT_METHODS
    N: int = 512
    mr_angles: np.ndarray = field(default_factory=default_angles)
    frequency_scaled: bool = True
    # float32 bytes allowed for cached noise responses before seeds are chunked
    memory_budget: int = 1_200_000_000

    @property
    def thetas(self) -> np.ndarray:
        return np.arange(0.0, 180.0, self.theta_step)


@dataclass
class ExperimentReport:
    header: list
    rows: list

    def summary(self, key_cols: Sequence[str], value_col: str):
        """Mean and std of ``value_col`` grouped by ``key_cols``, sorted by key."""
        ki = [self.header.index(k) for k in key_cols]
        vi = self.header.index(value_col)
        groups: dict = {}
        for r in self.rows:
            groups.setdefault(tuple(r[i] for i in ki), []).append(r[vi])
        out = []
        for k in sorted(groups, key=lambda t: tuple(str(v) for v in t)):
            v = np.asarray(groups[k], dtype=np.float64)
            out.append((*k, float(v.mean()), float(v.std()), len(v)))
        return out


@njit(cache=True, nogil=True)
def _blend_argmax(RB, RF, idx, c):
    """Per masked pixel, the first angle index maximising (1-c) RB + c RF.

    ``RB`` is (angles, disk pixels), ``RF`` is (angles, masked pixels) and
    ``idx`` maps masked pixels to disk-pixel columns of ``RB``.
    """
    na, npx = RF.shape
    out = np.empty(npx, dtype=np.int64)
    cb = 1.0 - c
    for p in range(npx):
        q = idx[p]
        best = cb * RB[0, q] + c * RF[0, p]
        bi = 0
        for a in range(1, na):
            v = cb * RB[a, q] + c * RF[a, p]
            if v > best + TIE_RTOL * max(abs(best), abs(v)):
                best = v
                bi = a
        out[p] = bi
    return out


def _mr_params(w: float, algo: FilterAlgorithm, angles) -> MRParams:
    return MRParams(MR_SIGMA1, 0.75 * w, angles, algo)


def _responses(img, p: MRParams, pixels, dtype=np.float64):
    """Response stack (angles, len(pixels)) restricted to flat ``pixels``."""
    def one(a):
        r = anisotropic_filter(img, AnisoKernelSpec(p.sigma1, p.sigma2, float(a)), p.algo)
        return r.ravel()[pixels].astype(dtype)
    return np.stack(_pmap(one, list(p.angles)))


def _mr_linear(cfg: ContrastConfig, method: Method, w: float, log):
    """MAE per (seed, theta, c) for an MR method via response linearity."""
    p = _mr_params(w, method.algo, cfg.mr_angles)
    disk = np.flatnonzero(disk_mask(cfg.N))
    pos_in_disk = np.full(cfg.N * cfg.N, -1, dtype=np.int64)
    pos_in_disk[disk] = np.arange(disk.size)
    per_seed = len(p.angles) * disk.size * 4
    chunk = max(1, min(len(cfg.seeds), cfg.memory_budget // max(per_seed, 1)))
    out = {}
    for s0 in range(0, len(cfg.seeds), chunk):
        seeds = list(cfg.seeds)[s0:s0 + chunk]
        # c = 1 ignores the noise image, so skip its responses when possible
        need_noise = any(float(c) < 1.0 for c in cfg.contrasts)
        zero = np.zeros((len(p.angles), disk.size), dtype=np.float32)
        RB = {s: _responses(make_noise(cfg.N, s), p, disk, np.float32) if need_noise else zero
              for s in seeds}
        for th in cfg.thetas:
            F = make_fiber_image(FiberImageSpec(cfg.N, float(th), w, cfg.frequency_scaled))
            m = np.flatnonzero(fiber_mask(F))
            RF = _responses(F, p, m)
            idx = pos_in_disk[m]
            for s in seeds:
                for c in cfg.contrasts:
                    best = _blend_argmax(RB[s], RF, idx, float(c))
                    err = angular_distance(p.angles[best], th)
                    out[(s, float(th), float(c))] = float(err.mean())
            log(f"{method.label} w={w} theta={th:g} done")
    return out


def _estimate_direct(method: Method, img, w: float, angles) -> OrientationField:
    r = math.pi * w / 2.0
    if method.kind == "tensor":
        return structure_tensor_estimate(img, TensorParams(r, RHO))
    if method.kind == "hessian":
        return hessian_estimate(img, r)
    return mr_estimate(img, _mr_params(w, method.algo, angles))


def _direct(cfg: ContrastConfig, method: Method, w: float, log):
    out = {}
    for th in cfg.thetas:
        F = make_fiber_image(FiberImageSpec(cfg.N, float(th), w, cfg.frequency_scaled))
        mask = fiber_mask(F)
        shared = {}
        for s in cfg.seeds:
            B = make_noise(cfg.N, s)
            for c in cfg.contrasts:
                c = float(c)
                # c = 1 does not depend on the noise image
                if c == 1.0 and c in shared:
                    out[(s, float(th), c)] = shared[c]
                    continue
                img = blend(B, F, c)
                if method.median:
                    img = median3x3(img)
                e = mae(_estimate_direct(method, img, w, cfg.mr_angles), th, mask)
                out[(s, float(th), c)] = e
                if c == 1.0:
                    shared[c] = e
        log(f"{method.label} w={w} theta={th:g} done")
    return out


PER_THETA_HEADER = ["method", "w", "c", "seed", "theta", "mae_deg"]
MAX_HEADER = ["method", "w", "c", "seed", "max_mae_deg"]


def run_contrast_experiment(cfg: ContrastConfig, log=lambda msg: None):
    """Returns ``(per_theta, maxima)`` reports.

    ``maxima`` holds one row per (method, w, c, seed) with the maximum MAE
    over the angle grid; aggregate with ``maxima.summary``.
    """
    per_theta = []
    maxima = []
    for method in cfg.methods:
        if method.kind == "mr" and method.algo is None:
            raise ValueError("MR method needs a filter algorithm")
        for w in cfg.widths:
            if method.kind == "mr" and not method.median:
                res = _mr_linear(cfg, method, float(w), log)
            else:
                res = _direct(cfg, method, float(w), log)
            for c in cfg.contrasts:
                for s in cfg.seeds:
                    errs = [res[(s, float(th), float(c))] for th in cfg.thetas]
                    for th, e in zip(cfg.thetas, errs):
                        per_theta.append([method.label, float(w), float(c), s, float(th), e])
                    maxima.append([method.label, float(w), float(c), s, max(errs)])
    return (ExperimentReport(PER_THETA_HEADER, per_theta),
            ExperimentReport(MAX_HEADER, maxima))


# --------------------------------------------------------------------------
# kernel accuracy

REFERENCE_SPECS = ((2.0, 1.0), (5.0, 2.0), (7.0, 2.0), (7.0, 4.0), (10.0, 0.5),
                (10.0, 1.25), (10.0, 2.0), (20.0, 0.5), (20.0, 1.25), (20.0, 2.0),
                (25.0, 0.5), (25.0, 1.25), (25.0, 2.0))
REFERENCE_ALGOS = (LINEBUFFER_LINEAR, HYBRID_LINEAR, HYBRID_CUBIC,
                HYBRID_MOD_LINEAR, HYBRID_MOD_CUBIC)


def kernel_errors(s1: float, s2: float, algos=REFERENCE_ALGOS, thetas=None,
                  N: int = 512, **kw) -> np.ndarray:
    """l2 kernel error per (algo, theta), same order as the inputs."""
    thetas = np.arange(180.0) if thetas is None else np.asarray(thetas, dtype=np.float64)
    # the impulse sits far from the border, where both boundary modes agree
    kw.setdefault("boundary", "line")

    def one(th):
        spec = AnisoKernelSpec(s1, s2, float(th))
        truth = sample_true_kernel(N, spec)
        return [l2_distance(reconstruct_kernel(spec, a, N, **kw), truth) for a in algos]

    return np.array(_pmap(one, list(thetas))).T


def kernel_accuracy_experiment(specs=REFERENCE_SPECS, algos=REFERENCE_ALGOS,
                               theta_step: float = 1.0, N: int = 512, **kw):
    """Returns ``(table, curves)``: mean and max error over theta per spec
    (one mean/max column pair per algorithm, in units of 1e-3), and the
    per-theta errors."""
    thetas = np.arange(0.0, 180.0, theta_step)
    head = ["sigma1", "sigma2"]
    for a in algos:
        head += [f"{a.label}_mean", f"{a.label}_max"]
    rows, curves = [], []
    for s1, s2 in specs:
        e = kernel_errors(s1, s2, algos, thetas, N, **kw) * 1e3
        row = [s1, s2]
        for i in range(len(algos)):
            row += [float(e[i].mean()), float(e[i].max())]
        rows.append(row)
        for j, th in enumerate(thetas):
            curves.append([s1, s2, float(th)] + [float(v) for v in e[:, j]])
    curve_head = ["sigma1", "sigma2", "theta"] + [a.label for a in algos]
    return ExperimentReport(head, rows), ExperimentReport(curve_head, curves)


# --------------------------------------------------------------------------
# throughput

def throughput_noise(N: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return np.clip(rng.normal(0.5, 0.15, (N, N)), 0.0, 1.0)


def throughput_benchmark(sizes: Sequence[int], reps: int = 50, trim: float = 0.10,
                         algos=(LINEBUFFER_LINEAR, HYBRID_LINEAR, HYBRID_CUBIC),
                         theta: float = 30.0, sigma1: float = 20.0, sigma2: float = 0.5,
                         log=lambda msg: None) -> ExperimentReport:
    """Trimmed-mean throughput in megapixels per second, single-threaded."""
    if reps < 10:
        raise ValueError("reps must be >= 10")
    spec = AnisoKernelSpec(sigma1, sigma2, theta)
    rows = []
    for N in sizes:
        img = throughput_noise(int(N))
        for a in algos:
            # compile outside the timing; time the bare algorithm without padding
            anisotropic_filter(img[:16, :16], spec, a, boundary="line")
            rates = []
            for _ in range(reps):
                t0 = time.perf_counter()
                anisotropic_filter(img, spec, a, boundary="line")
                rates.append(N * N / (time.perf_counter() - t0) / 1e6)
            rows.append([int(N), a.label, float(trim_mean(rates, trim))])
            log(f"N={N} {a.label} {rows[-1][2]:.1f} MPix/s")
    return ExperimentReport(["N", "algo", "mpix_per_s"], rows)
