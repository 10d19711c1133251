import math

import numpy as np
import pytest

from anisoflow.decomp import (AnisoKernelSpec, Axis, covariance_of, plan_auto, plan_x1,
                              plan_x2, uses_x2)


def reconstructed_cov(plan):
    """Covariance of axis Gaussian * line Gaussian, in image (x1, x2) terms."""
    sa2 = plan.sigma_axis ** 2
    ss2 = plan.sigma_step ** 2
    mu = plan.mu
    # frame where the axis filter runs along the first coordinate
    c11 = sa2 + ss2 * mu * mu
    c12 = ss2 * mu
    c22 = ss2
    if plan.axis is Axis.X2:
        c11, c22 = c22, c11
    return c11, c12, c22


@pytest.mark.property
def test_covariance_reconstruction_random_specs():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(10_000):
        s2 = rng.uniform(0.3, 10)
        s1 = s2 * rng.uniform(1.001, 60)
        spec = AnisoKernelSpec(s1, s2, rng.uniform(-360, 360))
        cov = covariance_of(spec)
        for plan in (plan_x1(spec), plan_x2(spec)):
            got = reconstructed_cov(plan)
            ref = (cov.c11, cov.c12, cov.c22)
            scale = s1 * s1
            worst = max(worst, max(abs(g - r) for g, r in zip(got, ref)) / scale)
    assert worst <= 1e-9


def test_theta_zero_is_separable():
    p = plan_x1(AnisoKernelSpec(10, 2, 0))
    assert p.mu == 0.0
    assert p.sigma_axis == pytest.approx(10)
    assert p.sigma_step == pytest.approx(2)
    assert p.phi == pytest.approx(90)


def test_theta_ninety_x1_plan():
    p = plan_x1(AnisoKernelSpec(10, 2, 90))
    assert p.mu == 0.0
    assert p.sigma_axis == pytest.approx(2)
    assert p.sigma_step == pytest.approx(10)


def test_x2_plan_is_transposed_x1():
    spec = AnisoKernelSpec(20, 1, 70)
    a = plan_x2(spec)
    b = plan_x1(AnisoKernelSpec(20, 1, 20))
    assert a.axis is Axis.X2
    assert (a.sigma_axis, a.sigma_line, a.mu) == pytest.approx((b.sigma_axis, b.sigma_line, b.mu))


def test_modification_rule_boundaries():
    assert uses_x2(45) and uses_x2(135) and uses_x2(90)
    assert not uses_x2(44.999) and not uses_x2(135.001) and not uses_x2(0)
    assert uses_x2(225) and uses_x2(-90)


def test_plan_auto():
    spec = AnisoKernelSpec(20, 1, 60)
    assert plan_auto(spec, False).axis is Axis.X1
    assert plan_auto(spec, True).axis is Axis.X2
    assert plan_auto(AnisoKernelSpec(20, 1, 30), True).axis is Axis.X1


def test_as_printed_axis_sigma_differs_off_axis():
    spec = AnisoKernelSpec(10, 2, 30)
    assert plan_x1(spec, as_printed=True).sigma_axis != pytest.approx(plan_x1(spec).sigma_axis)
    # at 0 degrees the printed expression collapses to sigma2 instead of sigma1
    s0 = AnisoKernelSpec(10, 2, 0)
    assert plan_x1(s0, as_printed=True).sigma_axis == pytest.approx(2)
    assert plan_x1(s0).sigma_axis == pytest.approx(10)


def test_line_angle_in_range():
    for th in range(0, 360, 7):
        p = plan_x1(AnisoKernelSpec(5, 1, th))
        assert 0 < p.phi <= 180
        assert p.mu == pytest.approx(1 / math.tan(math.radians(p.phi)), abs=1e-9)


@pytest.mark.parametrize("s1,s2", [(1, 1), (1, 2), (1, 0), (1, -1)])
def test_invalid_specs(s1, s2):
    with pytest.raises(ValueError):
        AnisoKernelSpec(s1, s2, 0)


def test_nonfinite_theta():
    with pytest.raises(ValueError):
        AnisoKernelSpec(2, 1, float("inf"))
