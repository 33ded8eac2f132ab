import math

import numpy as np
import pytest

from fdde_stab import single_delay as sd
from fdde_stab.case_tau1_zero import (
    PatternTag,
    SwitchPattern,
    b_of_tau,
    classify_pattern,
    find_intersections,
    hopf_curve,
    hopf_domain,
    segment_probes,
    tau_star_pp,
    trace_h1,
    trace_h2,
    verdict_at,
)
from fdde_stab.char_eq import SystemParams, char_value, root_verdict
from fdde_stab.errors import DegenerateInput, DomainError, InconclusiveVerdict


def test_b_of_tau_values():
    assert b_of_tau(2.0, 0.6, 0.0) == -2.0
    assert b_of_tau(4.62, 3.69, 0.4344) == pytest.approx(-0.93, abs=1e-3)
    assert np.allclose(b_of_tau(2.0, 0.6, [0.0, 1.0]), [-2.0, -2.0 * math.exp(-0.6)])


def test_b_of_tau_slope():
    rng = np.random.default_rng(21)
    h = 1e-6
    for _ in range(50):
        k, g, t = rng.uniform(0.1, 5), rng.uniform(-3, 3), rng.uniform(0, 3)
        fd = (b_of_tau(k, g, t + h) - b_of_tau(k, g, t - h)) / (2 * h)
        assert fd == pytest.approx(k * g * math.exp(-g * t), rel=1e-5, abs=1e-9)
        assert (fd > 0) == (g > 0)


@pytest.mark.parametrize("k,gamma,expected", [(4.62, 3.69, 0.4344), (0.23, -0.12, 3.4987), (2.0, 0.6, 0.5945)])
def test_tau_star_pp_values(k, gamma, expected):
    assert tau_star_pp(k, gamma) == pytest.approx(expected, abs=1e-4)


def test_tau_star_pp_closed_form():
    t = tau_star_pp(2.0, 0.6)
    assert t == pytest.approx(-math.log(0.7) / 0.6, rel=1e-14)
    assert abs(b_of_tau(2.0, 0.6, t) + 1.4) <= 1e-12


def test_tau_star_pp_residual_random():
    rng = np.random.default_rng(22)
    for _ in range(100):
        k = rng.uniform(0.2, 5)
        gamma = rng.choice([rng.uniform(0.01, 0.99), rng.uniform(1.01, 1.99), -rng.uniform(0.01, 2)]) * k
        a = k - gamma
        target = a if k < gamma else -a
        assert abs(b_of_tau(k, gamma, tau_star_pp(k, gamma)) - target) <= 1e-12 * max(1.0, k)


def test_tau_star_pp_limits_and_errors():
    assert tau_star_pp(2.0, 0.0) == 0.5
    assert tau_star_pp(2.0, 1e-9) == pytest.approx(0.5, rel=1e-6)
    with pytest.raises(DomainError):
        tau_star_pp(1.0, 1.0)
    with pytest.raises(DomainError):
        tau_star_pp(-1.0, 0.5)


def test_hopf_curve_domain():
    assert hopf_curve(2.0, 0.6, 0.4, 0.0) is not None
    assert hopf_curve(1.0, 1.35, 0.4, 50.0) is None
    dom = hopf_domain(2.0, 0.6, 0.4)
    assert dom is not None and dom[0] == 0.0
    assert hopf_curve(2.0, 0.6, 0.4, 0.5 * dom[1]) is not None
    if math.isfinite(dom[1]):
        assert hopf_curve(2.0, 0.6, 0.4, dom[1] * 1.01) is None


@pytest.mark.parametrize(
    "k,gamma,expected",
    [(2.0, 0.6, [0.1630]), (4.62, 3.69, [0.0560, 0.2925]), (9.8, 10.56, [0.0157, 0.0619]), (0.23, -0.12, [5.4386])],
)
def test_intersections(k, gamma, expected):
    got = find_intersections(k, gamma, 0.4)
    assert len(got) >= 1
    assert got[: len(expected)] == pytest.approx(expected, abs=5e-3)
    for t in got:
        assert hopf_curve(k, gamma, 0.4, t) == pytest.approx(t, abs=1e-8)


@pytest.mark.parametrize(
    "k,gamma,tag,delays",
    [
        (2.0, 0.6, PatternTag.SSR, [0.1630]),
        (4.62, 3.69, PatternTag.SUSU, [0.0560, 0.2925, 0.4344]),
        (0.23, -0.12, PatternTag.USU, [3.4987, 5.4386]),
        (9.8, 10.56, PatternTag.SUS, [0.0157, 0.0619]),
    ],
)
def test_classify_examples(k, gamma, tag, delays):
    pat = classify_pattern(k, gamma, 0.4)
    assert pat.tag is tag
    assert list(pat.critical_delays) == pytest.approx(delays, abs=5e-3)


@pytest.mark.parametrize(
    "k,gamma,tag",
    [(-1.0, 0.5, PatternTag.STABLE_ALL), (-1.0, -0.5, PatternTag.UNSTABLE_ALL), (1.0, 2.5, PatternTag.STABLE_ALL)],
)
def test_classify_delay_independent(k, gamma, tag):
    assert classify_pattern(k, gamma, 0.6).tag is tag


@pytest.mark.parametrize("k,gamma", [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 2.0)])
def test_classify_degenerate_lines(k, gamma):
    with pytest.raises(DegenerateInput):
        classify_pattern(k, gamma, 0.5)


def test_switch_pattern_invariants():
    with pytest.raises(ValueError):
        SwitchPattern(PatternTag.SSR, (1.0,), ("Stable", "Stable"))
    with pytest.raises(ValueError):
        SwitchPattern(PatternTag.SUS, (2.0, 1.0), ("Stable", "Unstable", "Stable"))
    pat = SwitchPattern(PatternTag.SSR, (1.0,), ("Stable", "Unstable"))
    assert pat.segments() == [(0.0, 1.0, "Stable"), (1.0, math.inf, "Unstable")]
    assert pat.to_dict()["tag"] == "SSR"


def _random_kg(rng, region):
    # sub-regions where switches actually occur (SSR/SUSU, SUS, USU respectively)
    if region == "band_low":
        k = rng.uniform(0.3, 6)
        return k, rng.uniform(0.05, 0.95) * k
    if region == "band_high":
        k = rng.uniform(3, 12)
        return k, rng.uniform(1.02, 1.2) * k
    k = rng.uniform(0.05, 0.3)
    return k, -rng.uniform(0.1, 0.6) * k


@pytest.mark.parametrize("region", ["band_low", "band_high", "q4"])
def test_critical_delays_put_root_on_axis(region):
    rng = np.random.default_rng(23)
    alpha = 0.4
    checked = 0
    for _ in range(20):
        k, gamma = _random_kg(rng, region)
        try:
            pat = classify_pattern(k, gamma, alpha)
        except DegenerateInput:
            continue
        for tc in pat.critical_delays:
            p = SystemParams(alpha, k, gamma, 0.0, tc)
            res = abs(char_value(0.0, p))
            try:
                w = sd.crossing_frequency(k - gamma, b_of_tau(k, gamma, tc), alpha)
                res = min(res, abs(char_value(1j * w, p)))
            except DomainError:
                pass
            assert res <= 1e-7
            checked += 1
    assert checked > 0


@pytest.mark.parametrize("region", ["band_low", "band_high", "q4"])
def test_segment_verdicts_match_roots(region):
    rng = np.random.default_rng(24)
    alpha = 0.4
    decided = undecided = 0
    for _ in range(20):
        k, gamma = _random_kg(rng, region)
        try:
            pat = classify_pattern(k, gamma, alpha)
        except DegenerateInput:
            continue
        for (lo, hi, v), t in zip(pat.segments(), segment_probes(pat, gamma)):
            assert lo < t < hi
            assert verdict_at(k, gamma, alpha, t) == v
            try:
                assert root_verdict(SystemParams(alpha, k, gamma, 0.0, t)) == v
                decided += 1
            except InconclusiveVerdict:
                # rightmost root within the oracle margin of the axis
                undecided += 1
    assert undecided <= 0.1 * (decided + undecided)


def test_h1_points():
    pts = trace_h1(0.4, (1.5, 4.5), 4)
    assert pts
    h = 1e-6
    for p in pts:
        assert 0 < p.gamma < 2 * p.k
        assert abs(hopf_curve(p.k, p.gamma, 0.4, p.tau_tangency) - p.tau_tangency) <= 1e-8
        slope = (hopf_curve(p.k, p.gamma, 0.4, p.tau_tangency + h) - hopf_curve(p.k, p.gamma, 0.4, p.tau_tangency - h)) / (
            2 * h
        )
        assert abs(slope - 1) <= 1e-5
        n_below = len(find_intersections(p.k, p.gamma - 1e-3, 0.4))
        n_above = len(find_intersections(p.k, p.gamma + 1e-3, 0.4))
        assert {n_below, n_above} == {0, 2}


def test_h1_separates_examples():
    assert len(find_intersections(4.62, 3.69, 0.4)) == 2
    assert len(find_intersections(1.13, 0.83, 0.4)) == 0
    # along k the h1 curve passes between the two example points
    pts = [p for p in trace_h1(0.4, (1.13, 1.13), 1) + trace_h1(0.4, (4.62, 4.62), 1)]
    by_k = {p.k: p.gamma for p in pts}
    assert by_k[1.13] < 0.83 or by_k[4.62] > 3.69


def test_h2_points():
    pts = trace_h2(0.4, (0.2, 3.0), 5)
    assert pts
    for p in pts:
        assert p.gamma < p.k
        t = tau_star_pp(p.k, p.gamma)
        assert abs(hopf_curve(p.k, p.gamma, 0.4, t) - t) <= 1e-8


def test_h2_separates_fourth_quadrant():
    pts = [p for p in trace_h2(0.4, (0.23, 0.23), 1) if p.gamma < 0]
    assert len(pts) == 1
    g2 = pts[0].gamma
    assert classify_pattern(0.23, g2 + 1e-3, 0.4).tag != classify_pattern(0.23, g2 - 1e-3, 0.4).tag
    tags = {classify_pattern(0.23, g, 0.4).tag for g in (g2 + 1e-3, g2 - 1e-3)}
    assert tags == {PatternTag.USU, PatternTag.UNSTABLE_ALL}
