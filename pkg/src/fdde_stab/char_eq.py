"""Characteristic function of the linearized two-delay equation and its roots.

The linearization of ``D^a x = -g x(t) + g(x(t-t1)) - e^{-g t2} g(x(t-t1-t2))``
about ``x = 0`` with ``g'(0) = k`` has characteristic function

    Delta(lam) = lam**alpha + gamma - k e^{-lam t1} + k e^{-gamma t2} e^{-lam (t1 + t2)}

where ``lam**alpha`` is taken on the principal branch, ``arg lam in (-pi, pi]``.
Everything here accepts scalars or numpy arrays for ``lam``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BracketError, DerivativeVanished, InconclusiveVerdict, IterationLimit, NonConvergence

ROOT_TOL = 1e-10
DEDUP_RADIUS = 1e-6
MAX_NEWTON_ITER = 100
MAX_HALVINGS = 20
DERIV_FLOOR = 1e-14


@dataclass(frozen=True)
class SystemParams:
    """One instance ``(alpha, k, gamma, tau1, tau2)`` of the linearized system."""

    alpha: float
    k: float
    gamma: float
    tau1: float = 0.0
    tau2: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.tau1 < 0 or self.tau2 < 0:
            raise ValueError(f"delays must be non-negative, got tau1={self.tau1}, tau2={self.tau2}")

    @property
    def decay(self) -> float:
        """The delay-dependent coefficient ``e^{-gamma tau2}``."""
        return math.exp(-self.gamma * self.tau2)

    def replace(self, **changes) -> "SystemParams":
        fields = dict(alpha=self.alpha, k=self.k, gamma=self.gamma, tau1=self.tau1, tau2=self.tau2)
        fields.update(changes)
        return SystemParams(**fields)


@dataclass(frozen=True)
class RootReport:
    root: complex
    residual_norm: float
    iterations: int
    converged: bool = True


def frac_power(lam, alpha: float):
    """Principal-branch ``lam**alpha`` with ``arg lam in (-pi, pi]`` and ``0**alpha = 0``."""
    lam = np.asarray(lam, dtype=complex)
    r = np.abs(lam)
    theta = np.angle(lam)
    # angle() returns -pi for (-x, -0.0); the principal branch wants +pi there
    theta = np.where(theta == -np.pi, np.pi, theta)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.where(r > 0, r**alpha * np.exp(1j * alpha * theta), 0.0 + 0.0j)
    return out[()] if out.ndim == 0 else out


def char_value(lam, p: SystemParams):
    """Evaluate ``Delta(lam)`` for the two-delay system ``p``."""
    lam = np.asarray(lam, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        out = (
            frac_power(lam, p.alpha)
            + p.gamma
            - p.k * np.exp(-lam * p.tau1)
            + p.k * p.decay * np.exp(-lam * (p.tau1 + p.tau2))
        )
    return out[()] if np.ndim(out) == 0 else out


def char_derivative(lam, p: SystemParams):
    lam = np.asarray(lam, dtype=complex)
    s = p.tau1 + p.tau2
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        pw = np.where(lam != 0, p.alpha * frac_power(lam, p.alpha) / lam, np.inf)
        out = pw + p.k * p.tau1 * np.exp(-lam * p.tau1) - p.k * p.decay * s * np.exp(-lam * s)
    return out[()] if np.ndim(out) == 0 else out


def char_value_single(lam, a: float, b: float, tau: float, alpha: float):
    """Characteristic function ``lam**alpha - a - b e^{-lam tau}`` of ``D^a x = a x + b x(t - tau)``."""
    lam = np.asarray(lam, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        out = frac_power(lam, alpha) - a - b * np.exp(-lam * tau)
    return out[()] if np.ndim(out) == 0 else out


def delta_at_zero(p: SystemParams) -> float:
    return p.gamma - p.k + p.k * p.decay


def _real_delta(x: np.ndarray, p: SystemParams) -> np.ndarray:
    # Delta restricted to the non-negative real axis, where it is real
    s = p.tau1 + p.tau2
    return x**p.alpha + p.gamma - p.k * np.exp(-x * p.tau1) + p.k * p.decay * np.exp(-x * s)


def real_root_bound(p: SystemParams) -> float:
    """Every root with ``Re lam >= 0`` has ``|lam|`` at most this value."""
    return (abs(p.gamma) + abs(p.k) * (1.0 + p.decay)) ** (1.0 / p.alpha)


def find_real_positive_root(
    p: SystemParams, lambda_max: float | None = None, scan_points: int = 10_000, max_bisect: int = 200
) -> float | None:
    """Locate a real root ``lam* > 0`` of ``Delta``.

    When ``Delta(0) < 0`` a root must exist (``Delta -> +inf`` along the real
    axis); it is bracketed by a dense scan of ``(0, lambda_max]`` and refined by
    bisection. Returns ``None`` when ``Delta(0) >= 0`` and no sign change
    shows up on the scan.

    Raises
    ------
    BracketError
        ``Delta(0) < 0`` but no sign change below ``lambda_max``.
    """
    if lambda_max is None:
        lambda_max = 1.01 * real_root_bound(p) + 1.0
    if lambda_max <= 0:
        raise ValueError("lambda_max must be positive")
    d0 = delta_at_zero(p)
    xs = np.linspace(0.0, lambda_max, scan_points + 1)
    vals = _real_delta(xs, p)
    vals[0] = d0
    if d0 == 0.0:
        # zero is a root but not a positive one; look strictly to the right
        xs, vals = xs[1:], vals[1:]
    change = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
    change = change[vals[change] != 0] if d0 == 0.0 else change
    exact = np.nonzero(vals[1:] == 0.0)[0]
    if exact.size and (not change.size or exact[0] < change[0]):
        return float(xs[exact[0] + 1])
    if not change.size:
        if d0 < 0:
            raise BracketError(
                f"Delta(0) = {d0:.3e} < 0 but no sign change on (0, {lambda_max}]; enlarge lambda_max"
            )
        return None
    i = change[0]
    lo, hi = xs[i], xs[i + 1]
    flo = vals[i]
    for _ in range(max_bisect):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = float(_real_delta(np.array([mid]), p)[0])
        if fm == 0.0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    if root <= 0.0:
        root = hi
    return float(root)


# status codes for the batched solver
_OK, _FLAT, _LIMIT, _NAN = 0, 1, 2, 3


def _newton_batch(p: SystemParams, seeds, tol=ROOT_TOL, max_iter=MAX_NEWTON_ITER):
    """Damped Newton on many seeds at once.

    Returns (roots, residuals, iterations, status) arrays.
    """
    z = np.array(seeds, dtype=complex).ravel()
    # lam = 0 is a branch point of lam**alpha; nudge seeds off it
    z = np.where(z == 0, 1e-8 + 0j, z)
    f = char_value(z, p)
    res = np.abs(f)
    iters = np.zeros(z.shape, dtype=int)
    status = np.full(z.shape, _LIMIT)
    status[res <= tol] = _OK
    active = status != _OK
    for it in range(1, max_iter + 1):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        za, fa, ra = z[idx], f[idx], res[idx]
        d = char_derivative(za, p)
        flat = ~np.isfinite(d) | (np.abs(d) < DERIV_FLOOR)
        if flat.any():
            status[idx[flat]] = _FLAT
            active[idx[flat]] = False
            keep = ~flat
            idx, za, fa, ra, d = idx[keep], za[keep], fa[keep], ra[keep], d[keep]
        step = fa / d
        trial = za - step
        ft = char_value(trial, p)
        rt = np.abs(ft)
        worse = ~(rt < ra)
        h = 1.0
        for _ in range(MAX_HALVINGS):
            if not worse.any():
                break
            h *= 0.5
            trial[worse] = za[worse] - h * step[worse]
            ft[worse] = char_value(trial[worse], p)
            rt[worse] = np.abs(ft[worse])
            worse &= ~(rt < ra)
        z[idx], f[idx], res[idx] = trial, ft, rt
        iters[idx] = it
        bad = ~np.isfinite(rt)
        status[idx[bad]] = _NAN
        active[idx[bad]] = False
        done = rt <= tol
        status[idx[done]] = _OK
        active[idx[done]] = False
    return z, res, iters, status


def newton_root(p: SystemParams, seed: complex, tol: float = ROOT_TOL, max_iter: int = MAX_NEWTON_ITER) -> RootReport:
    """Refine ``seed`` to a root of ``Delta`` by damped Newton iteration.

    Each Newton step is halved (up to 20 times) until ``|Delta|`` decreases.

    Raises
    ------
    DerivativeVanished
        ``|Delta'| < 1e-14`` at an iterate.
    IterationLimit
        ``|Delta| > tol`` after ``max_iter`` iterations.
    """
    z, res, iters, status = _newton_batch(p, [seed], tol, max_iter)
    report = RootReport(complex(z[0]), float(res[0]), int(iters[0]), bool(status[0] == _OK))
    if status[0] == _FLAT:
        raise DerivativeVanished(f"derivative vanished near {report.root}", report)
    if status[0] == _LIMIT:
        raise IterationLimit(f"no convergence from seed {seed} after {max_iter} iterations", report)
    if status[0] == _NAN:
        raise NonConvergence(f"iteration from seed {seed} left the finite range", report)
    return report


def scan_roots(
    p: SystemParams,
    re_range: tuple[float, float],
    im_range: tuple[float, float],
    grid: int | tuple[int, int] = 20,
    tol: float = ROOT_TOL,
) -> list[RootReport]:
    """Launch Newton from every node of a rectangular seed grid.

    Converged roots are folded into the closed upper half-plane (conjugate
    symmetry), deduplicated within ``DEDUP_RADIUS`` and sorted by decreasing
    real part. Non-converged seeds are dropped.
    """
    n_re, n_im = (grid, grid) if np.isscalar(grid) else grid
    if n_re < 2 or n_im < 2:
        raise ValueError("grid needs at least 2 nodes per axis")
    re = np.linspace(re_range[0], re_range[1], n_re)
    im = np.linspace(im_range[0], im_range[1], n_im)
    seeds = (re[:, None] + 1j * im[None, :]).ravel()
    return _collect(p, seeds, tol)


def _collect(p: SystemParams, seeds, tol=ROOT_TOL) -> list[RootReport]:
    z, res, iters, status = _newton_batch(p, seeds, tol)
    ok = status == _OK
    z, res, iters = z[ok], res[ok], iters[ok]
    z = np.where(z.imag < 0, np.conj(z), z)
    order = np.lexsort((z.imag, -z.real))
    kept: list[RootReport] = []
    for i in order:
        zi = complex(z[i])
        if any(abs(zi - r.root) <= DEDUP_RADIUS for r in kept):
            continue
        kept.append(RootReport(zi, float(res[i]), int(iters[i])))
    kept.sort(key=lambda r: (-r.root.real, r.root.imag))
    return kept


def oracle_roots(p: SystemParams, density: float = 4.0, min_grid: int = 20, max_im_nodes: int = 6000) -> list[RootReport]:
    """Brute-force root search covering every possible unstable root.

    Any root with ``Re lam >= 0`` has ``|lam| <= real_root_bound(p)``, so the
    seeds fill the quarter disc of that radius plus a thin strip left of the
    imaginary axis, sampled densely along the imaginary direction (root
    spacing there is about ``2 pi / (tau1 + tau2)``). The positive real axis
    is covered separately by bisection.
    """
    R = real_root_bound(p)
    s = p.tau1 + p.tau2
    n_im = int(min(max_im_nodes, max(min_grid, math.ceil(density * R * max(s, 1.0) / math.pi) + min_grid)))
    im = np.linspace(0.0, 1.05 * R, n_im)
    re = np.unique(np.concatenate([[-0.5, -0.1, -0.01, 0.01, 0.1, 0.5], np.linspace(0.0, R, min(min_grid, 8))]))
    found = _collect(p, (re[:, None] + 1j * im[None, :]).ravel())
    try:
        x = find_real_positive_root(p)
    except BracketError:
        x = None
    if x is not None and not any(abs(r.root - x) <= DEDUP_RADIUS for r in found):
        found.append(RootReport(complex(x, 0.0), float(abs(char_value(x, p))), 0))
        found.sort(key=lambda r: (-r.root.real, r.root.imag))
    return found


def root_verdict(p: SystemParams, margin: float = 1e-5) -> str:
    """``"Stable"`` or ``"Unstable"`` from :func:`oracle_roots`.

    Raises
    ------
    InconclusiveVerdict
        The rightmost root found has ``|Re lam| < margin``.
    """
    roots = oracle_roots(p)
    if not roots:
        return "Stable"
    lead = roots[0].root
    if abs(lead.real) < margin:
        raise InconclusiveVerdict(f"root {lead} lies within {margin} of the imaginary axis")
    return "Unstable" if lead.real > 0 else "Stable"
