"""Stability analysis in the (tau1, tau2) delay plane.

A root ``lam = i v`` of the characteristic function exists exactly when

    (i v)**alpha + gamma = k e^{-i v tau1} (1 - e^{-(gamma + i v) tau2}).

Taking moduli removes ``tau1``:

    |k| |1 - e^{-(gamma + i v) tau2}| = |(i v)**alpha + gamma|,

a scalar equation in ``tau2`` for each ``v``. The phase then fixes ``tau1``
up to multiples of ``2 pi / v``. The tracer solves the modulus equation on a
``v`` grid and polishes each point with Newton on the real and imaginary
parts of ``Delta(i v)``. The real root ``lam = 0`` adds the horizontal line
``tau2 = zero_root_branch(k, gamma)`` when that value is positive.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .char_eq import MAX_HALVINGS, SystemParams, char_value, root_verdict
from .errors import DomainError

log = logging.getLogger(__name__)

V_MAX = 2 * math.pi
V_SAMPLES = 2000
MAX_BRANCH = 3
TAU2_MAX = 10.0
TAU2_SAMPLES = 2000
SOLVE_TOL = 1e-10
POINT_TOL = 1e-8
DEDUP = 1e-6


@dataclass(frozen=True)
class BoundaryPoint:
    v: float
    tau1: float
    tau2: float
    branch: int = 0


@dataclass
class Tau2SliceReport:
    tau2: float
    intervals: list[tuple[float, float, str]] = field(default_factory=list)

    def crossings(self) -> list[float]:
        return [hi for _, hi, _ in self.intervals[:-1]]

    def to_dict(self) -> dict:
        return {"tau2": self.tau2, "intervals": [list(iv) for iv in self.intervals]}


def delta_zero(k: float, gamma: float, tau2: float) -> float:
    """``Delta(0) = gamma - k + k e^{-gamma tau2}``."""
    return gamma - k + k * math.exp(-gamma * tau2)


def _zero_crossing_delay(k, gamma):
    # -(1/gamma) log((k - gamma)/k), written with log1p for small gamma/k
    if gamma == 0:
        return 1.0 / k
    return -math.log1p(-gamma / k) / gamma


def instability_threshold(k: float, gamma: float) -> float:
    """Delay ``tau2`` at which ``Delta(0)`` changes sign.

    For ``0 < gamma < k`` the system is unstable for every ``tau1`` once
    ``tau2`` exceeds the threshold; for ``gamma < 0 < k`` it is unstable
    below it.

    Raises
    ------
    DomainError
        Neither ``0 < gamma < k`` nor ``gamma < 0 < k``.
    """
    if not (0 < gamma < k or gamma < 0 < k):
        raise DomainError(f"threshold needs 0 < gamma < k or gamma < 0 < k, got k={k}, gamma={gamma}")
    return _zero_crossing_delay(k, gamma)


def is_unstable_all_tau1(k: float, gamma: float, tau2: float) -> bool:
    """True when ``Delta(0) < 0``: a positive real root exists for every ``tau1`` and ``alpha``.

    False proves nothing.
    """
    return delta_zero(k, gamma, tau2) < 0


def zero_root_raw(k: float, gamma: float) -> float:
    """Signed delay ``tau2`` at which ``lam = 0`` is a root (may be negative).

    Raises
    ------
    DomainError
        ``k == 0`` or ``(k - gamma) / k <= 0``.
    """
    if k == 0:
        raise DomainError("k = 0: Delta(0) = gamma does not depend on tau2")
    if (k - gamma) / k <= 0:
        raise DomainError(f"(k - gamma)/k = {(k - gamma) / k} <= 0: no tau2 makes lam = 0 a root")
    return _zero_crossing_delay(k, gamma)


def zero_root_branch(k: float, gamma: float) -> float | None:
    """Positive ``tau2`` where ``lam = 0`` is a root, or None when that delay is not positive."""
    t = zero_root_raw(k, gamma)
    return t if t > 0 else None


def imaginary_axis_residuals(v, alpha, k, gamma, tau1, tau2):
    """Real and imaginary parts of ``Delta(i v)`` written out in cosines and sines."""
    va = np.power(v, alpha)
    c, s = math.cos(alpha * math.pi / 2), math.sin(alpha * math.pi / 2)
    e = k * np.exp(-gamma * tau2)
    re = va * c + gamma - k * np.cos(v * tau1) + e * np.cos(v * (tau1 + tau2))
    im = va * s + k * np.sin(v * tau1) - e * np.sin(v * (tau1 + tau2))
    return re, im


def _residual_and_jacobian(v, alpha, k, gamma, t1, t2):
    lam = 1j * v
    e1 = np.exp(-lam * t1)
    e12 = k * math.exp(-gamma * t2) * np.exp(-lam * (t1 + t2))
    f = lam**alpha + gamma - k * e1 + e12
    d1 = lam * k * e1 - lam * e12
    d2 = (-gamma - lam) * e12
    return f, np.array([[d1.real, d2.real], [d1.imag, d2.imag]])


def _newton2(v, alpha, k, gamma, t1, t2, tol=SOLVE_TOL, max_iter=100):
    # damped Newton on (Re, Im) of Delta(i v) in (tau1, tau2); None on failure
    f, J = _residual_and_jacobian(v, alpha, k, gamma, t1, t2)
    norm = abs(f)
    for _ in range(max_iter):
        if norm <= tol:
            return t1, t2
        try:
            d = np.linalg.solve(J, [-f.real, -f.imag])
        except np.linalg.LinAlgError:
            return None
        step = 1.0
        for _ in range(MAX_HALVINGS + 1):
            n1, n2 = t1 + step * d[0], t2 + step * d[1]
            fn, Jn = _residual_and_jacobian(v, alpha, k, gamma, n1, n2)
            if abs(fn) < norm:
                break
            step *= 0.5
        else:
            return None
        t1, t2, f, J, norm = n1, n2, fn, Jn, abs(fn)
    return (t1, t2) if norm <= tol else None


def solve_boundary_point(v: float, alpha: float, k: float, gamma: float, seed: tuple[float, float]) -> BoundaryPoint | None:
    """Polish ``(tau1, tau2)`` so that ``i v`` is a characteristic root.

    Negative ``tau1`` is moved up by ``2 pi / v`` until it is non-negative,
    and ``branch`` counts those moves. Returns None if Newton fails or the
    converged ``tau2`` is negative.
    """
    if v <= 0:
        raise ValueError("v must be positive")
    sol = _newton2(v, alpha, k, gamma, float(seed[0]), float(seed[1]))
    if sol is None:
        log.debug("no boundary point at v=%g from seed %s", v, seed)
        return None
    t1, t2 = sol
    if t2 < 0:
        return None
    period = 2 * math.pi / v
    branch = 0
    while t1 < 0:
        t1 += period
        branch += 1
    return BoundaryPoint(float(v), float(t1), float(t2), branch)


def _modulus_gap(v, alpha, k, gamma, tau2):
    # |k| |1 - e^{-(gamma + i v) tau2}| - |(i v)^alpha + gamma|, broadcasting
    lhs = abs(k) * np.abs(1.0 - np.exp(-(gamma + 1j * v) * tau2))
    rhs = np.abs((1j * v) ** alpha + gamma)
    return lhs - rhs


def _phase_tau1(v, alpha, k, gamma, tau2):
    # tau1 in (-pi/v, pi/v] with e^{-i v tau1} = ((i v)^alpha + gamma) / (k (1 - e^{-(gamma + i v) tau2}))
    z = ((1j * v) ** alpha + gamma) / (k * (1.0 - np.exp(-(gamma + 1j * v) * tau2)))
    return -np.angle(z) / v


def _sign_change_roots(f, grid, values):
    out = []
    idx = np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)[0]
    for i in idx:
        out.append(brentq(f, grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))
    out.extend(float(grid[i]) for i in np.nonzero(values == 0)[0])
    return out


def default_v_grid(v_max: float = V_MAX, samples: int = V_SAMPLES) -> np.ndarray:
    """``samples`` uniform nodes strictly inside ``(0, v_max)``."""
    return np.linspace(0, v_max, samples + 2)[1:-1]


def trace_boundary(
    alpha: float,
    k: float,
    gamma: float,
    v_grid=None,
    max_branch: int = MAX_BRANCH,
    tau2_max: float = TAU2_MAX,
    tau2_samples: int = TAU2_SAMPLES,
    diagnostics: list | None = None,
) -> list[BoundaryPoint]:
    """Points ``(tau1, tau2)`` for which ``i v`` is a root, for every ``v`` in the grid.

    Every ``tau2`` solution of the modulus equation on ``[0, tau2_max]``
    seeds a Newton polish, so each ``v`` node is solved independently of its
    neighbours (the curve folds in ``v``). Each point is also emitted with
    ``tau1`` shifted by ``m 2 pi / v`` for ``m = 1..max_branch``.

    Parameters
    ----------
    diagnostics : list, optional
        Receives one dict per modulus solution whose polish failed or whose
        residual check did not pass.

    Returns
    -------
    list of BoundaryPoint
        Sorted by ``(v, branch, tau2)``, duplicates within 1e-6 removed.
    """
    if k == 0:
        return []
    v_grid = default_v_grid() if v_grid is None else np.asarray(v_grid, dtype=float)
    if v_grid.size == 0:
        return []
    if np.any(v_grid <= 0):
        raise ValueError("v_grid must be positive")
    if max_branch < 0:
        raise ValueError("max_branch must be >= 0")
    t2_grid = np.linspace(0.0, tau2_max, tau2_samples)
    gaps = _modulus_gap(v_grid[:, None], alpha, k, gamma, t2_grid[None, :])
    points: list[BoundaryPoint] = []
    for v, row in zip(v_grid, gaps):
        v = float(v)
        for t2 in _sign_change_roots(lambda t: _modulus_gap(v, alpha, k, gamma, t), t2_grid, row):
            t1 = float(_phase_tau1(v, alpha, k, gamma, t2))
            pt = solve_boundary_point(v, alpha, k, gamma, (t1, t2))
            ok = pt is not None and _residual(pt, alpha, k, gamma) <= POINT_TOL
            if not ok:
                if diagnostics is not None:
                    diagnostics.append({"v": v, "tau1_seed": t1, "tau2_seed": t2, "reason": "polish failed"})
                continue
            period = 2 * math.pi / v
            for m in range(max_branch + 1):
                points.append(BoundaryPoint(v, pt.tau1 + m * period, pt.tau2, pt.branch + m))
    points.sort(key=lambda p: (p.v, p.branch, p.tau2, p.tau1))
    kept: list[BoundaryPoint] = []
    for p in points:
        if kept and kept[-1].v == p.v and abs(kept[-1].tau1 - p.tau1) <= DEDUP and abs(kept[-1].tau2 - p.tau2) <= DEDUP:
            continue
        kept.append(p)
    return kept


def _residual(pt: BoundaryPoint, alpha, k, gamma) -> float:
    p = SystemParams(alpha, k, gamma, pt.tau1, pt.tau2)
    return float(abs(char_value(1j * pt.v, p)))


def boundary_tau2_min(alpha: float, k: float, gamma: float, boundary: list[BoundaryPoint]) -> BoundaryPoint | None:
    """Lowest point of the traced curve, refined between grid nodes.

    The grid minimum is refined by minimizing the smallest modulus-equation
    root ``tau2(v)`` over the neighbouring ``v`` interval.
    """
    if not boundary:
        return None
    best = min(boundary, key=lambda p: p.tau2)
    vs = np.unique([p.v for p in boundary])
    i = int(np.searchsorted(vs, best.v))
    lo, hi = vs[max(i - 1, 0)], vs[min(i + 1, vs.size - 1)]
    if lo == hi:
        return best
    width = 0.5 * best.tau2

    def tau2_of_v(v):
        f = lambda t: _modulus_gap(v, alpha, k, gamma, t)
        a, b = best.tau2 - width, best.tau2 + width
        grid = np.linspace(max(a, 0.0), b, 400)
        roots = _sign_change_roots(f, grid, f(grid))
        roots = [r for r in roots if abs(r - best.tau2) < width]
        return min(roots, key=lambda r: abs(r - best.tau2)) if roots else np.inf

    res = minimize_scalar(tau2_of_v, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    if not np.isfinite(res.fun) or res.fun > best.tau2:
        return best
    v = float(res.x)
    t2 = float(res.fun)
    pt = solve_boundary_point(v, alpha, k, gamma, (float(_phase_tau1(v, alpha, k, gamma, t2)), t2))
    return pt if pt is not None else best


def slice_crossings(
    alpha: float, k: float, gamma: float, tau2: float, tau1_max: float, v_max: float = V_MAX, v_samples: int = 20000
) -> list[tuple[float, float]]:
    """Pairs ``(tau1, v)`` in ``[0, tau1_max]`` where ``i v`` is a root at fixed ``tau2``."""
    if k == 0 or tau2 <= 0:
        return []
    vs = np.linspace(0, v_max, v_samples + 1)[1:]
    f = lambda v: _modulus_gap(v, alpha, k, gamma, tau2)
    out = []
    for v in _sign_change_roots(f, vs, f(vs)):
        period = 2 * math.pi / v
        t1 = float(_phase_tau1(v, alpha, k, gamma, tau2)) % period
        while t1 <= tau1_max:
            out.append((t1, float(v)))
            t1 += period
    out.sort()
    return out


def classify_tau2_slice(
    alpha: float,
    k: float,
    gamma: float,
    tau2: float,
    tau1_max: float,
    boundary: list[BoundaryPoint],
) -> Tau2SliceReport:
    """Partition ``[0, tau1_max]`` at fixed ``tau2`` into stable and unstable intervals.

    Cut points are where the horizontal line meets the stability boundary,
    solved exactly from the modulus equation over the frequency range the
    boundary was traced on. Each interval gets its verdict from the root
    oracle at its midpoint; neighbours with equal verdicts are merged.

    Raises
    ------
    InconclusiveVerdict
        A midpoint has its rightmost root within 1e-5 of the imaginary axis.
    """
    if tau1_max <= 0:
        raise ValueError("tau1_max must be positive")
    v_max = max((p.v for p in boundary), default=0.0)
    cuts = []
    if v_max > 0:
        # the traced grid ends one node short of the range it samples
        for t1, _ in slice_crossings(alpha, k, gamma, tau2, tau1_max, v_max=v_max * (1 + 1e-9)):
            if 0 < t1 < tau1_max and (not cuts or t1 - cuts[-1] > 1e-9):
                cuts.append(t1)
    edges = [0.0] + cuts + [float(tau1_max)]
    intervals: list[tuple[float, float, str]] = []
    for lo, hi in zip(edges, edges[1:]):
        verdict = root_verdict(SystemParams(alpha, k, gamma, 0.5 * (lo + hi), tau2))
        if intervals and intervals[-1][2] == verdict:
            intervals[-1] = (intervals[-1][0], hi, verdict)
        else:
            intervals.append((lo, hi, verdict))
    return Tau2SliceReport(float(tau2), intervals)


def boundary_to_rows(boundary: list[BoundaryPoint]) -> list[dict]:
    return [asdict(p) for p in boundary]
