import math

import numpy as np
import pytest

from fdde_stab.char_eq import (
    ROOT_TOL,
    SystemParams,
    char_derivative,
    char_value,
    char_value_single,
    delta_at_zero,
    find_real_positive_root,
    frac_power,
    newton_root,
    oracle_roots,
    root_verdict,
    scan_roots,
)
from fdde_stab.errors import BracketError, DerivativeVanished, InconclusiveVerdict, NonConvergence
from fdde_stab import single_delay as sd

UNSTABLE_POINT = SystemParams(0.4, 1.02, 0.3, 2.9, 1.1)


def test_params_validation():
    with pytest.raises(ValueError):
        SystemParams(0.0, 1, 1)
    with pytest.raises(ValueError):
        SystemParams(1.2, 1, 1)
    with pytest.raises(ValueError):
        SystemParams(0.5, 1, 1, -1.0, 0)
    p = SystemParams(0.5, 1, 2, 0.5, 1.5)
    assert p.decay == pytest.approx(math.exp(-3))
    assert p.replace(tau1=2.0).tau1 == 2.0


def test_frac_power_branch():
    assert frac_power(0, 0.4) == 0
    assert frac_power(-1.0, 0.5) == pytest.approx(1j)
    # negative real axis with a signed zero still maps to arg = +pi
    assert frac_power(complex(-4.0, -0.0), 0.5) == pytest.approx(2j)
    assert frac_power(1j, 1.0) == pytest.approx(1j)


@pytest.mark.parametrize("p", [SystemParams(0.4, 1.02, 0.3, 1.0, 2.0), SystemParams(0.8, -3, 1.5, 0, 0.7)])
def test_value_at_zero_is_closed_form(p):
    assert char_value(0.0, p) == pytest.approx(p.gamma - p.k + p.k * math.exp(-p.gamma * p.tau2), abs=1e-14)
    assert delta_at_zero(p) == pytest.approx(char_value(0.0, p).real, abs=1e-14)


def test_value_vanishes_on_zero_root_branch():
    assert abs(char_value(0.0, SystemParams(0.7, 1.02, 0.3, 3.0, 1.16102))) < 1e-5


def test_reported_root_is_near_zero():
    assert abs(char_value(0.00200287 + 2.10566j, UNSTABLE_POINT)) < 1e-4


def test_single_delay_form():
    assert char_value_single(0, -1, 1, 2.0, 0.5) == 0
    assert abs(char_value_single(1j, 0, -1, math.pi / 2, 1.0)) < 1e-15
    a, b, alpha = 1.4, -2.0, 0.4
    w, tau = sd.crossing_frequency(a, b, alpha), sd.hopf_delay(a, b, alpha)
    assert abs(char_value_single(1j * w, a, b, tau, alpha)) < 1e-9


def test_conjugate_symmetry():
    rng = np.random.default_rng(11)
    lam = rng.uniform(-3, 3, 200) + 1j * rng.uniform(0.1, 6, 200)
    p = SystemParams(0.6, 2.0, -0.5, 0.8, 1.3)
    assert np.allclose(char_value(np.conj(lam), p), np.conj(char_value(lam, p)), atol=1e-13)


def test_derivative_matches_finite_difference():
    rng = np.random.default_rng(12)
    p = SystemParams(0.4, 1.02, 0.3, 2.9, 1.1)
    h = 1e-6
    for lam in rng.uniform(-1, 1, 20) + 1j * rng.uniform(0.5, 5, 20):
        fd = (char_value(lam + h, p) - char_value(lam - h, p)) / (2 * h)
        assert char_derivative(lam, p) == pytest.approx(fd, rel=1e-6, abs=1e-8)


@pytest.mark.parametrize("p", [SystemParams(0.3, 1.4, 0.8, 2.3, 1.2), SystemParams(0.8, 3.4, -1.6, 3.4, 0.15)])
def test_real_positive_root_when_delta0_negative(p):
    x = find_real_positive_root(p)
    assert x is not None and x > 0
    assert abs(char_value(x, p)) <= 1e-10


def test_no_real_positive_root():
    assert find_real_positive_root(SystemParams(1.0, 0, 1.0), lambda_max=10) is None


def test_bracket_error_when_window_too_small():
    p = SystemParams(0.8, 3.4, -1.6, 3.4, 0.15)
    with pytest.raises(BracketError):
        find_real_positive_root(p, lambda_max=1e-3)


def test_newton_reproduces_reported_root():
    r = newton_root(UNSTABLE_POINT, 0.1 + 2j)
    assert r.converged and r.residual_norm <= ROOT_TOL
    assert r.root.real == pytest.approx(0.00200287, abs=1e-8)
    assert r.root.imag == pytest.approx(2.10566, abs=1e-5)


@pytest.mark.parametrize("gamma", [-0.5, -2.0])
def test_newton_without_feedback(gamma):
    alpha = 0.6
    r = newton_root(SystemParams(alpha, 0.0, gamma), 1.0)
    assert r.root == pytest.approx((-gamma) ** (1 / alpha), abs=1e-9)


def test_newton_near_slice_endpoint():
    r = newton_root(SystemParams(0.4, 1.02, 0.3, 2.11, 1.1), 2.1j)
    assert abs(r.root.real) <= 5e-3


def test_newton_flags_flat_start():
    # Delta = lam + 1 - 1 = lam has a constant derivative; a seed on a flat spot of a flat function fails
    with pytest.raises(NonConvergence):
        newton_root(SystemParams(1.0, 0.0, 0.0), complex(np.nan, 0))


def test_derivative_vanished_is_nonconvergence():
    assert issubclass(DerivativeVanished, NonConvergence)


def test_scan_single_root():
    roots = scan_roots(SystemParams(1.0, 0, 1.0), (-3, 1), (0, 5), 20)
    assert len(roots) == 1
    assert roots[0].root == pytest.approx(-1.0, abs=1e-10)


def test_scan_sorted_and_residuals():
    roots = scan_roots(UNSTABLE_POINT, (-1, 0.5), (0, 6), 25)
    assert roots
    reals = [r.root.real for r in roots]
    assert reals == sorted(reals, reverse=True)
    assert all(r.residual_norm <= ROOT_TOL for r in roots)
    assert all(abs(char_value(r.root, UNSTABLE_POINT)) <= ROOT_TOL for r in roots)
    assert any(r.root.real > 0 for r in roots)


def test_scan_stable_window():
    roots = scan_roots(SystemParams(0.4, 1.02, 0.3, 1.8, 1.1), (-1, 0.5), (0, 6), 25)
    assert all(r.root.real < 0 for r in roots)


def test_scan_grid_validation():
    with pytest.raises(ValueError):
        scan_roots(UNSTABLE_POINT, (-1, 1), (0, 1), 1)


def test_oracle_verdicts():
    assert root_verdict(UNSTABLE_POINT) == "Unstable"
    assert root_verdict(SystemParams(0.4, 1.02, 0.3, 1.8, 1.1)) == "Stable"
    assert root_verdict(SystemParams(0.4, 1.02, 0.3, 3.5, 1.1)) == "Stable"


def test_oracle_inconclusive_at_boundary():
    # lam = 0 is a root on the zero-root branch
    from fdde_stab.two_delay import zero_root_branch

    with pytest.raises(InconclusiveVerdict):
        root_verdict(SystemParams(0.4, 1.02, 0.3, 0.5, zero_root_branch(1.02, 0.3)))


def test_oracle_finds_real_root():
    roots = oracle_roots(SystemParams(0.3, 1.4, 0.8, 2.3, 1.2))
    assert roots[0].root.real > 0 and abs(roots[0].root.imag) < 1e-8
