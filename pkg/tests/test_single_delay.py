import math

import numpy as np
import pytest
from scipy.optimize import root

from fdde_stab.case_tau1_zero import b_of_tau
from fdde_stab.char_eq import char_value_single
from fdde_stab.errors import DomainError
from fdde_stab.single_delay import (
    SingleDelayTag as T,
    analyze,
    classify,
    crossing_frequency,
    hopf_delay,
    hopf_delay_array,
)


@pytest.mark.parametrize(
    "a,b,tag",
    [
        (-1.0, 0.0, T.STABLE_ALL),
        (1.4, -2.0, T.SSR),
        (0.35, -0.23, T.UNSTABLE_ALL),
        (-1.0, 1.0, T.BOUNDARY),
        (-1.0, -1.0, T.BOUNDARY),
        (2.0, -2.0, T.BOUNDARY),
    ],
)
def test_classify(a, b, tag):
    assert classify(a, b) is tag


def test_analyze_carries_delay_only_in_ssr():
    assert analyze(1.4, -2.0, 0.4).hopf_delay > 0
    assert analyze(-1.0, 0.0, 0.4).hopf_delay is None


def test_omega_classical():
    assert crossing_frequency(0.0, -1.0, 1.0) == pytest.approx(1.0)
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = rng.uniform(-3, 3)
        b = -abs(a) - rng.uniform(0.1, 3)
        assert crossing_frequency(a, b, 1.0) == pytest.approx(math.sqrt(b * b - a * a), rel=1e-12)


def test_hopf_delay_classical():
    assert hopf_delay(0.0, -1.0, 1.0) == pytest.approx(math.pi / 2)
    rng = np.random.default_rng(4)
    for _ in range(50):
        a = rng.uniform(-3, 3)
        b = -abs(a) - rng.uniform(0.05, 3)
        expected = math.acos(-a / b) / math.sqrt(b * b - a * a)
        assert abs(hopf_delay(a, b, 1.0) - expected) <= 1e-12


def test_fixed_point_delay_fourth_quadrant():
    tau = 5.4386
    assert hopf_delay(0.35, b_of_tau(0.23, -0.12, tau), 0.4) == pytest.approx(tau, abs=1e-3)


def test_hopf_residual_random():
    rng = np.random.default_rng(5)
    checked = 0
    for _ in range(200):
        alpha = rng.uniform(0.1, 1.0)
        a = rng.uniform(-3, 3)
        b = -abs(a) - rng.uniform(0.01, 3)
        try:
            w = crossing_frequency(a, b, alpha)
            tau = hopf_delay(a, b, alpha)
        except DomainError:
            continue
        checked += 1
        assert abs(char_value_single(1j * w, a, b, tau, alpha)) <= 1e-9
    assert checked > 100


def test_domain_errors():
    with pytest.raises(DomainError):
        crossing_frequency(2.0, 0.1, 0.5)
    with pytest.raises(DomainError):
        hopf_delay(-2.0, 0.0, 1.0)


def test_array_matches_scalar():
    rng = np.random.default_rng(6)
    a = rng.uniform(-2, 2, 100)
    b = -np.abs(a) - rng.uniform(0.01, 2, 100)
    vec = hopf_delay_array(a, b, 0.6)
    for ai, bi, vi in zip(a, b, vec):
        try:
            assert vi == pytest.approx(hopf_delay(ai, bi, 0.6), rel=1e-12)
        except DomainError:
            assert np.isnan(vi)


@pytest.mark.parametrize("a", [-1.5, -0.3, 0.4, 2.0])
def test_tag_sweep_in_b(a):
    seq = []
    for b in np.linspace(4.0, -4.0, 801):
        tag = classify(a, b)
        if tag is T.BOUNDARY:
            continue
        if not seq or seq[-1] is not tag:
            seq.append(tag)
    expected = [T.UNSTABLE_ALL, T.STABLE_ALL, T.SSR] if a < 0 else [T.UNSTABLE_ALL, T.SSR]
    assert seq == expected


def _single_roots(a, b, tau, alpha):
    # Newton-type solves of lam^alpha - a - b e^{-lam tau} from a seed grid in the right half plane
    def f(z):
        d = char_value_single(z[0] + 1j * z[1], a, b, tau, alpha)
        return [d.real, d.imag]

    found = []
    for re_ in np.linspace(0.05, 5, 8):
        for im in np.linspace(0, 6, 8):
            sol = root(f, [re_, im])
            lam = sol.x[0] + 1j * sol.x[1]
            if sol.success and abs(char_value_single(lam, a, b, tau, alpha)) < 1e-9:
                found.append(lam)
    return found


def test_unstable_region_has_right_half_plane_root():
    rng = np.random.default_rng(7)
    for _ in range(4):
        a = rng.uniform(-1, 1)
        b = -a + rng.uniform(0.2, 1.5)
        assert classify(a, b) is T.UNSTABLE_ALL
        for tau in (0.0, 1.0, 10.0):
            assert any(r.real > 0 for r in _single_roots(a, b, tau, 0.7))
