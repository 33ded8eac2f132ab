"""Switch patterns of the equation with ``tau1 = 0`` over the (k, gamma)-plane.

With ``tau1 = 0`` and ``tau2 = tau`` the linearization is the single-delay
equation with ``a = k - gamma`` and the delay-dependent coefficient
``b(tau) = -k e^{-gamma tau}``. At delay ``tau`` the equilibrium is stable iff
``(a, b(tau))`` lies in the all-delay stable region, or lies in the SSR with
``tau`` below the Hopf delay of ``(a, b(tau))``. The Hopf delay therefore
becomes a curve ``tau -> hopf_curve(tau)`` and its fixed points, together with
the delay where ``b(tau)`` meets ``+-a``, are the candidate switches.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import single_delay as sd
from ._parallel import ordered_map
from .errors import DegenerateInput, DomainError, FddeStabError

log = logging.getLogger(__name__)

DEGENERATE_EPS = 1e-12
TIE_EPS = 1e-9
BISECT_ITER = 200


class PatternTag(str, Enum):
    STABLE_ALL = "StableAll"
    UNSTABLE_ALL = "UnstableAll"
    SSR = "SSR"
    SUS = "SUS"
    SUSU = "SUSU"
    USU = "USU"


STABLE, UNSTABLE = "Stable", "Unstable"

_CATALOG = {
    (STABLE,): PatternTag.STABLE_ALL,
    (UNSTABLE,): PatternTag.UNSTABLE_ALL,
    (STABLE, UNSTABLE): PatternTag.SSR,
    (STABLE, UNSTABLE, STABLE): PatternTag.SUS,
    (STABLE, UNSTABLE, STABLE, UNSTABLE): PatternTag.SUSU,
    (UNSTABLE, STABLE, UNSTABLE): PatternTag.USU,
}


class UnexpectedPattern(FddeStabError):
    """The verdict sequence is not one of the catalogued switch patterns."""


@dataclass(frozen=True)
class SwitchPattern:
    tag: PatternTag
    critical_delays: tuple[float, ...] = ()
    verdicts: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if len(self.verdicts) != len(self.critical_delays) + 1:
            raise ValueError("need exactly one more verdict than critical delays")
        if any(d <= 0 for d in self.critical_delays) or any(
            b <= a for a, b in zip(self.critical_delays, self.critical_delays[1:])
        ):
            raise ValueError(f"critical delays must be positive and increasing: {self.critical_delays}")
        if _CATALOG.get(tuple(self.verdicts)) is not self.tag:
            raise ValueError(f"verdicts {self.verdicts} do not match tag {self.tag.value}")

    def segments(self) -> list[tuple[float, float, str]]:
        """``(lo, hi, verdict)`` per delay interval; the last ``hi`` is ``inf``."""
        edges = (0.0, *self.critical_delays, math.inf)
        return [(edges[i], edges[i + 1], v) for i, v in enumerate(self.verdicts)]

    def to_dict(self) -> dict:
        return {"tag": self.tag.value, "critical_delays": list(self.critical_delays), "verdicts": list(self.verdicts)}


@dataclass(frozen=True)
class CurvePoint:
    k: float
    gamma: float
    tau_tangency: float


def b_of_tau(k: float, gamma: float, tau):
    """Delay-dependent coefficient ``-k e^{-gamma tau}``."""
    return -k * np.exp(-gamma * np.asarray(tau, dtype=float)) if np.ndim(tau) else -k * math.exp(-gamma * tau)


def tau_star_pp(k: float, gamma: float) -> float:
    """Delay at which ``|b(tau)| = |k - gamma|``.

    Valid for ``0 < gamma < k``, ``k < gamma < 2k`` and ``gamma < 0 < k``;
    ``gamma = 0`` returns the limit ``1/k``.
    """
    if k <= 0:
        raise DomainError(f"tau'' needs k > 0, got k={k}")
    if gamma == 0:
        return 1.0 / k
    if gamma == k:
        raise DomainError("gamma = k puts log(0) into tau''")
    ratio = abs(k - gamma) / k
    # log1p keeps accuracy near gamma -> 0 (and gamma -> 2k)
    value = -math.log1p(ratio - 1.0) / gamma
    if not value > 0:
        raise DomainError(f"tau'' = {value} is not positive for k={k}, gamma={gamma}")
    return value


def hopf_curve(k: float, gamma: float, alpha: float, tau: float) -> float | None:
    """Hopf delay of ``(k - gamma, b(tau))``; ``None`` where the formula has no real value."""
    try:
        return sd.hopf_delay(k - gamma, b_of_tau(k, gamma, tau), alpha)
    except DomainError:
        return None


def hopf_curve_array(k: float, gamma: float, alpha: float, tau) -> np.ndarray:
    return sd.hopf_delay_array(k - gamma, b_of_tau(k, gamma, np.asarray(tau, dtype=float)), alpha)


def hopf_domain(k: float, gamma: float, alpha: float) -> tuple[float, float] | None:
    """Interval of ``tau >= 0`` on which :func:`hopf_curve` is real.

    For ``a >= 0`` the formula needs ``|b| >= a sin(alpha pi/2)``; for ``a < 0``
    it needs ``|b| > |a|``. ``|b(tau)|`` is monotone, so the set is an
    interval (possibly unbounded, possibly empty).
    """
    a = k - gamma
    if k == 0:
        return None
    need = abs(a) * math.sin(alpha * math.pi / 2) if a >= 0 else abs(a)
    if need == 0:
        return (0.0, math.inf)
    if gamma == 0:
        return (0.0, math.inf) if abs(k) > need else None
    cross = math.log(abs(k) / need) / gamma
    if gamma > 0:
        return (0.0, cross) if cross > 0 else None
    return (max(0.0, cross), math.inf)


def _fixed_point_gap(k, gamma, alpha, tau):
    return hopf_curve_array(k, gamma, alpha, tau) - tau


def _bisect(f, lo, hi, flo, iters=BISECT_ITER):
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _scan_end(k, gamma, alpha, lo):
    # unbounded domain (gamma <= 0): grow the window until the gap is clearly negative
    hi = max(4.0 * (tau_star_pp(k, gamma) if k > 0 and gamma != k else 1.0), lo + 1.0)
    for _ in range(60):
        g = float(_fixed_point_gap(k, gamma, alpha, np.array([hi]))[0])
        if np.isfinite(g) and g < 0:
            return 2.0 * hi
        hi *= 2.0
    return hi


def find_intersections(k: float, gamma: float, alpha: float, step: float | None = None) -> list[float]:
    """All ``tau`` with ``hopf_curve(tau) = tau``, in ascending order.

    The domain of the curve is sampled densely (default step
    ``max(1e-4, tau''/1e4)``) and each sign change of ``hopf_curve(tau) - tau``
    is refined by bisection. Tangential touches are not sign changes and are
    therefore not reported.
    """
    dom = hopf_domain(k, gamma, alpha)
    if dom is None:
        return []
    lo, hi = dom
    if step is None:
        try:
            ref = tau_star_pp(k, gamma)
        except DomainError:
            ref = hi if math.isfinite(hi) else 1.0
        step = max(1e-4, ref / 1e4)
    if not math.isfinite(hi):
        hi = _scan_end(k, gamma, alpha, lo)
    n = int(math.ceil((hi - lo) / step)) + 1
    n = min(max(n, 2000), 2_000_000)
    ts = np.linspace(lo, hi, n)
    gap = _fixed_point_gap(k, gamma, alpha, ts)
    finite = np.isfinite(gap)
    sgn = np.sign(gap)
    cand = np.nonzero(finite[:-1] & finite[1:] & (sgn[:-1] * sgn[1:] < 0))[0]
    roots = [float(ts[i]) for i in np.nonzero(finite & (gap == 0))[0]]

    def scalar_gap(t):
        v = hopf_curve(k, gamma, alpha, t)
        return math.nan if v is None else v - t

    for i in cand:
        roots.append(_bisect(scalar_gap, float(ts[i]), float(ts[i + 1]), float(gap[i])))
    return sorted(set(roots))


def verdict_at(k: float, gamma: float, alpha: float, tau: float) -> str:
    """Stability of the ``tau1 = 0`` system at delay ``tau``, read off the single-delay regions."""
    a, b = k - gamma, b_of_tau(k, gamma, tau)
    tag = sd.classify(a, b)
    if tag is sd.SingleDelayTag.BOUNDARY:
        raise DegenerateInput(f"(a, b(tau)) = ({a}, {b}) sits on a region boundary at tau={tau}")
    if tag is sd.SingleDelayTag.STABLE_ALL:
        return STABLE
    if tag is sd.SingleDelayTag.UNSTABLE_ALL:
        return UNSTABLE
    return STABLE if tau < sd.hopf_delay(a, b, alpha) else UNSTABLE


def _probes(cuts, gamma):
    if not cuts:
        # |b(tau)| grows like e^{|gamma| tau} for gamma < 0; keep the probe short
        return [0.5 / max(1.0, abs(gamma))]
    probes = [0.5 * cuts[0]]
    probes += [0.5 * (lo + hi) for lo, hi in zip(cuts, cuts[1:])]
    probes.append(1.25 * cuts[-1])
    return probes


def segment_probes(pattern: SwitchPattern, gamma: float) -> list[float]:
    """One representative delay inside each segment of ``pattern``.

    Interior segments use their midpoint, the unbounded last segment uses
    ``1.25`` times the last critical delay.
    """
    return _probes(list(pattern.critical_delays), gamma)


def _check_nondegenerate(k, gamma):
    scale = max(1.0, abs(k), abs(gamma))
    for name, v in (("gamma = 0", gamma), ("k = 0", k), ("gamma = k", gamma - k), ("gamma = 2k", gamma - 2 * k)):
        if abs(v) <= DEGENERATE_EPS * scale:
            raise DegenerateInput(f"(k, gamma) = ({k}, {gamma}) lies on the line {name}")


def classify_pattern(k: float, gamma: float, alpha: float) -> SwitchPattern:
    """Switch pattern of the ``tau1 = 0`` system as ``tau = tau2`` grows from 0.

    Second quadrant and ``gamma > 2k > 0``: stable for every delay; third
    quadrant: unstable for every delay. Elsewhere (``0 < gamma < 2k`` and the
    fourth quadrant) the candidate switches are the fixed points of the Hopf
    curve and ``tau''``; each interval between candidates gets a verdict from
    :func:`verdict_at` and candidates that do not flip the verdict are
    dropped.

    Raises
    ------
    DegenerateInput
        On the lines ``gamma = 0``, ``k = 0``, ``gamma = k``, ``gamma = 2k``, or
        when a fixed point coincides with ``tau''`` (the h1/h2 loci).
    """
    _check_nondegenerate(k, gamma)
    if k < 0:
        return SwitchPattern(PatternTag.STABLE_ALL if gamma > 0 else PatternTag.UNSTABLE_ALL, (), (
            STABLE if gamma > 0 else UNSTABLE,))
    if gamma > 2 * k:
        return SwitchPattern(PatternTag.STABLE_ALL, (), (STABLE,))

    tpp = tau_star_pp(k, gamma)
    fixed = find_intersections(k, gamma, alpha)
    for t in fixed:
        if abs(t - tpp) <= TIE_EPS * max(1.0, tpp):
            raise DegenerateInput(f"a fixed point of the Hopf curve coincides with tau'' = {tpp}")
    cuts = sorted(set(fixed) | {tpp})
    probes = _probes(cuts, gamma)
    verdicts = [verdict_at(k, gamma, alpha, t) for t in probes]

    delays, merged = [], [verdicts[0]]
    for cut, v in zip(cuts, verdicts[1:]):
        if v != merged[-1]:
            delays.append(cut)
            merged.append(v)
    tag = _CATALOG.get(tuple(merged))
    if tag is None:
        raise UnexpectedPattern(f"verdict sequence {merged} at (k, gamma, alpha) = ({k}, {gamma}, {alpha})")
    return SwitchPattern(tag, tuple(delays), tuple(merged))


# ---------------------------------------------------------------------------
# bifurcation curves


def _gap_and_slope(k, gamma, alpha, tau, h=1e-6):
    f = hopf_curve(k, gamma, alpha, tau)
    fp = hopf_curve(k, gamma, alpha, tau + h)
    fm = hopf_curve(k, gamma, alpha, tau - h)
    if f is None or fp is None or fm is None:
        return None
    return f - tau, (fp - fm) / (2 * h) - 1.0


def _count_fixed(k, gamma, alpha):
    return len(find_intersections(k, gamma, alpha))


def _tangency_newton(k, gamma, tau, alpha, tol=1e-8, max_iter=60):
    x = np.array([gamma, tau])
    r = _gap_and_slope(k, x[0], alpha, x[1])
    if r is None:
        return None
    r = np.array(r)
    for _ in range(max_iter):
        if abs(r[0]) <= tol and abs(r[1]) <= tol:
            return float(x[0]), float(x[1]), r
        J = np.empty((2, 2))
        for j, hj in enumerate((1e-5 * max(1.0, abs(x[0])), 1e-5 * max(1e-2, abs(x[1])))):
            e = np.zeros(2)
            e[j] = hj
            rp = _gap_and_slope(k, x[0] + e[0], alpha, x[1] + e[1])
            rm = _gap_and_slope(k, x[0] - e[0], alpha, x[1] - e[1])
            if rp is None or rm is None:
                return None
            J[:, j] = (np.array(rp) - np.array(rm)) / (2 * hj)
        try:
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        for _ in range(20):
            xn = x + lam * dx
            rn = _gap_and_slope(k, xn[0], alpha, xn[1]) if xn[1] > 0 else None
            if rn is not None and np.linalg.norm(rn) < np.linalg.norm(r):
                break
            lam *= 0.5
        else:
            return None
        x, r = xn, np.array(rn)
    if abs(r[0]) <= tol and abs(r[1]) <= tol:
        return float(x[0]), float(x[1]), r
    return None


def _h1_at(k, alpha, gamma_samples):
    out = []
    for lo, hi in ((0.0, k), (k, 2 * k)):
        gs = np.linspace(lo, hi, gamma_samples + 2)[1:-1]
        counts = [_count_fixed(k, g, alpha) for g in gs]
        for i in range(len(gs) - 1):
            pair = {counts[i], counts[i + 1]}
            if pair != {0, 2}:
                continue
            g2, g0 = (gs[i], gs[i + 1]) if counts[i] == 2 else (gs[i + 1], gs[i])
            for _ in range(40):
                gm = 0.5 * (g2 + g0)
                c = _count_fixed(k, gm, alpha)
                if c == 2:
                    g2 = gm
                elif c == 0:
                    g0 = gm
                else:
                    break
            fixed = find_intersections(k, g2, alpha)
            if len(fixed) != 2:
                continue
            sol = _tangency_newton(k, g2, 0.5 * (fixed[0] + fixed[1]), alpha)
            if sol is None:
                log.info("h1: no convergence at k=%g near gamma=%g", k, g2)
                continue
            out.append(CurvePoint(k, sol[0], sol[1]))
    return out


def trace_h1(alpha: float, k_range: tuple[float, float], samples: int, gamma_samples: int = 120) -> list[CurvePoint]:
    """Tangency curve ``gamma = h1(k)``: the diagonal touches the Hopf curve.

    For each sampled ``k`` the band ``0 < gamma < 2k`` is scanned for a change
    between two fixed points and none; the bracket is narrowed by bisection
    and the pair ``(gamma, tau)`` is polished by a damped 2-D Newton solve of
    ``hopf_curve(tau) - tau = 0``, ``d hopf_curve/d tau - 1 = 0`` (slope by
    central difference, step 1e-6). Samples that do not converge are logged
    and skipped.
    """
    ks = np.linspace(k_range[0], k_range[1], samples)
    chunks = ordered_map(lambda k: _h1_at(float(k), alpha, gamma_samples), ks)
    pts = [p for chunk in chunks for p in chunk]
    return sorted(pts, key=lambda p: (p.k, p.gamma))


def _h2_gap(k, gamma, alpha):
    try:
        t = tau_star_pp(k, gamma)
    except DomainError:
        return math.nan, math.nan
    v = hopf_curve(k, gamma, alpha, t)
    return (math.nan if v is None else v - t), t


def _h2_at(k, alpha, gamma_samples, q4_depth, tol):
    out = []
    bands = [(0.0, k), (-q4_depth * k, 0.0)]
    for lo, hi in bands:
        gs = np.linspace(lo, hi, gamma_samples + 2)[1:-1]
        vals = np.array([_h2_gap(k, g, alpha)[0] for g in gs])
        for i in np.nonzero(np.isfinite(vals[:-1]) & np.isfinite(vals[1:]) & (vals[:-1] * vals[1:] < 0))[0]:
            g = _bisect(lambda x: _h2_gap(k, x, alpha)[0], float(gs[i]), float(gs[i + 1]), float(vals[i]))
            # secant polish
            g0, g1 = float(gs[i]), g
            f0, f1 = _h2_gap(k, g0, alpha)[0], _h2_gap(k, g1, alpha)[0]
            for _ in range(5):
                if not np.isfinite(f1) or abs(f1) <= tol * 1e-3 or f1 == f0:
                    break
                g0, g1 = g1, g1 - f1 * (g1 - g0) / (f1 - f0)
                f0, f1 = f1, _h2_gap(k, g1, alpha)[0]
            gap, t = _h2_gap(k, g1, alpha)
            if np.isfinite(gap) and abs(gap) <= tol:
                out.append(CurvePoint(k, g1, t))
            else:
                log.info("h2: residual %g too large at k=%g", gap, k)
    return out


def trace_h2(
    alpha: float, k_range: tuple[float, float], samples: int, gamma_samples: int = 400, q4_depth: float = 4.0,
    tol: float = 1e-8,
) -> list[CurvePoint]:
    """Curve ``gamma = h2(k)`` where ``hopf_curve(tau'') = tau''``.

    Searches ``0 < gamma < k`` and the fourth-quadrant strip
    ``-q4_depth * k < gamma < 0`` for sign changes of
    ``hopf_curve(tau'') - tau''``, then bisects and polishes by secant steps.
    The band ``k < gamma < 2k`` has no such points (the formula is undefined
    at ``b = a``).
    """
    ks = np.linspace(k_range[0], k_range[1], samples)
    chunks = ordered_map(lambda k: _h2_at(float(k), alpha, gamma_samples, q4_depth, tol), ks)
    pts = [p for chunk in chunks for p in chunk]
    return sorted(pts, key=lambda p: (p.k, p.gamma))
