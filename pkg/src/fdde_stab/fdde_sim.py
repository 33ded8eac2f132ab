"""Time-domain solver for the nonlinear two-delay fractional equation.

    D^alpha x(t) = -gamma x(t) + g(x(t - tau1)) - e^{-gamma tau2} g(x(t - tau1 - tau2))

with Caputo ``D^alpha`` and a constant initial function on
``[-tau1 - tau2, 0]``. The equation is integrated in its Volterra form

    x(t) = x(0) + 1/Gamma(alpha) int_0^t (t - s)^(alpha - 1) f(s) ds

with the fractional Adams predictor-corrector: product-rectangle weights
for the predictor, product-trapezoid weights for the corrector. The whole
history enters every step (no memory truncation), so a run of N steps
costs O(N^2).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .char_eq import SystemParams
from .errors import SchemeDefect, StepTooLarge

log = logging.getLogger(__name__)

BLOWUP = 1e12
GRID_SNAP = 1e-9


class Verdict(str, Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Nonlinearity:
    """Feedback ``g`` with ``g(0) = 0`` and ``g'(0) = k``."""

    kind: str = "linear"
    k: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "tanh"):
            raise ValueError(f"unknown nonlinearity {self.kind!r}; use 'linear' or 'tanh'")

    def __call__(self, x):
        if self.kind == "linear":
            return self.k * x
        return self.k * np.tanh(x)


@dataclass(frozen=True)
class SimConfig:
    step: float = 1e-2
    horizon: float | None = None  # None: max(50, 20 (tau1 + tau2))
    history_value: float = 0.1
    max_extensions: int = 4  # horizon doublings allowed while the verdict is Inconclusive
    tail_fraction: float = 0.2

    def resolved_horizon(self, p: SystemParams) -> float:
        if self.horizon is not None:
            return self.horizon
        return max(50.0, 20.0 * (p.tau1 + p.tau2))


@dataclass
class Trajectory:
    times: np.ndarray
    values: np.ndarray
    verdict: Verdict = Verdict.INCONCLUSIVE
    blew_up: bool = False
    extensions: int = 0
    meta: dict = field(default_factory=dict)


def lipschitz_bound(p: SystemParams) -> float:
    """Lipschitz constant of the right-hand side for linear feedback."""
    return abs(p.gamma) + abs(p.k) * (1.0 + p.decay)


def suggest_config(p: SystemParams, step_cap: float = 1e-2, base_steps: int = 5000, **kwargs) -> SimConfig:
    """Step and horizon scaled to the stiffness of ``p``.

    The explicit predictor goes unstable once ``h**alpha L / Gamma(alpha + 1)``
    exceeds about 1.5 (``L`` from :func:`lipschitz_bound`), so the step is
    capped where that quantity is 1, and at half the smallest non-zero delay.
    The horizon covers ``base_steps`` steps or ``20 (tau1 + tau2)``, whichever
    is longer. For non-stiff systems this is the default configuration.
    """
    L = lipschitz_bound(p)
    h = step_cap
    if L > 0:
        h = min(h, (math.gamma(p.alpha + 1) / L) ** (1.0 / p.alpha))
    delays = [d for d in (p.tau1, p.tau2) if d > 0]
    if delays:
        h = min(h, 0.5 * min(delays))
    horizon = max(base_steps * h, 20.0 * (p.tau1 + p.tau2))
    return SimConfig(step=h, horizon=horizon, **kwargs)


class _Integrator:
    """Predictor-corrector state that can be advanced in stages."""

    def __init__(self, p: SystemParams, g: Nonlinearity, step: float, history_value: float):
        self.p, self.g, self.h = p, g, step
        self.alpha = p.alpha
        self.decay = p.decay
        self.d1 = p.tau1
        self.d2 = p.tau1 + p.tau2
        for d in (self.d1, self.d2):
            if 0 < d < step * (1 - GRID_SNAP):
                raise StepTooLarge(f"step {step} exceeds the non-zero delay {d}")
        self.phi = float(history_value)
        self.pred_scale = step**self.alpha / math.gamma(self.alpha + 1)
        self.corr_scale = step**self.alpha / math.gamma(self.alpha + 2)
        self.n = 0
        self.x = np.empty(1)
        self.F = np.empty(1)
        self.x[0] = self.phi
        self.F[0] = self._rhs(self.phi, self.phi, self.phi)
        self.blew_up = False
        self._weights(1)

    def _weights(self, size):
        # stored reversed so every history sum is a contiguous dot product:
        # Brev[-1 - m] = (m+1)^a - m^a, Crev[-1 - m] = (m+2)^(a+1) + m^(a+1) - 2 (m+1)^(a+1)
        a = self.alpha
        m = np.arange(size + 1, dtype=float)
        self.Brev = np.ascontiguousarray(np.diff(m**a)[::-1])
        p1 = m ** (a + 1)
        self.Crev = np.ascontiguousarray((p1[2:] + p1[:-2] - 2 * p1[1:-1])[::-1])

    def _rhs(self, x, xd1, xd2):
        return -self.p.gamma * x + self.g(xd1) - self.decay * self.g(xd2)

    def _delayed(self, d, i, current):
        # x(t_i - d) from history; `current` stands in for x(t_i) when d = 0
        if d == 0:
            return current
        q = i - d / self.h
        if q <= 0:
            return self.phi
        j = math.floor(q)
        theta = q - j
        if theta < GRID_SNAP:
            return self.x[j]
        if theta > 1 - GRID_SNAP:
            return self.x[j + 1]
        return (1 - theta) * self.x[j] + theta * self.x[j + 1]

    def advance(self, n_total: int):
        if n_total <= self.n or self.blew_up:
            return
        old = self.n
        self.x = np.concatenate([self.x, np.empty(n_total - old)])
        self.F = np.concatenate([self.F, np.empty(n_total - old)])
        self._weights(n_total + 1)
        a = self.alpha
        x0 = self.phi
        Brev, Crev, x, F = self.Brev, self.Crev, self.x, self.F
        nb, nc = Brev.size, Crev.size
        for n in range(old, n_total):
            pred_sum = np.dot(Brev[nb - 1 - n :], F[: n + 1])
            xp = x0 + self.pred_scale * pred_sum
            a0 = n ** (a + 1) - (n - a) * (n + 1) ** a
            hist = a0 * F[0]
            if n > 0:
                hist += np.dot(Crev[nc - n :], F[1 : n + 1])
            fp = self._rhs(xp, self._delayed(self.d1, n + 1, xp), self._delayed(self.d2, n + 1, xp))
            xn = x0 + self.corr_scale * (fp + hist)
            x[n + 1] = xn
            F[n + 1] = self._rhs(xn, self._delayed(self.d1, n + 1, xn), self._delayed(self.d2, n + 1, xn))
            if not abs(xn) < BLOWUP:
                self.blew_up = True
                self.n = n + 1
                self.x, self.F = x[: n + 2], F[: n + 2]
                log.info("blow-up at t=%g", (n + 1) * self.h)
                return
        self.n = n_total


def verdict(
    values, tail_fraction: float = 0.2, blew_up: bool = False, reference_length: int | None = None
) -> Verdict:
    """Stability call from the envelope of a trajectory.

    Compares ``max |x|`` over the last ``tail_fraction`` of the samples with
    ``max |x|`` over the early window that follows the initial transient.
    A ratio below 0.2 is Stable, above 5 is Unstable, anything else is
    Inconclusive.

    Parameters
    ----------
    values : array_like
        Trajectory samples on a uniform grid.
    tail_fraction : float
        Length of both windows as a fraction of ``reference_length``
        (tail window: fraction of the full trajectory).
    blew_up : bool
        The run was truncated at the blow-up threshold.
    reference_length : int, optional
        Sample count of the run the early window is measured on. Defaults
        to the whole trajectory; an extended run passes its original length
        so the early window stays put while the tail moves out.
    """
    if blew_up:
        return Verdict.UNSTABLE
    v = np.abs(np.asarray(values, dtype=float))
    n = v.size
    if n < 10 / tail_fraction:
        raise ValueError(f"need at least {math.ceil(10 / tail_fraction)} samples, got {n}")
    n_ref = n if reference_length is None else min(int(reference_length), n)
    w_ref = max(1, int(round(tail_fraction * n_ref)))
    skip = int(0.05 * n_ref)
    early = v[skip : skip + w_ref].max()
    tail = v[n - max(1, int(round(tail_fraction * n))) :].max()
    if not np.isfinite(tail):
        return Verdict.UNSTABLE
    if early == 0.0:
        return Verdict.STABLE if tail == 0.0 else Verdict.UNSTABLE
    ratio = tail / early
    if ratio < 0.2:
        return Verdict.STABLE
    if ratio > 5.0:
        return Verdict.UNSTABLE
    return Verdict.INCONCLUSIVE


def simulate(p: SystemParams, g: Nonlinearity | None = None, cfg: SimConfig | None = None) -> Trajectory:
    """Integrate the equation on a uniform grid and attach a stability verdict.

    ``g`` defaults to the linear feedback with slope ``p.k``. When the verdict
    is Inconclusive the run is continued to twice its length, up to
    ``cfg.max_extensions`` times.

    Raises
    ------
    StepTooLarge
        ``cfg.step`` exceeds the smallest non-zero delay.
    """
    g = g if g is not None else Nonlinearity("linear", p.k)
    cfg = cfg or SimConfig()
    if cfg.step <= 0:
        raise ValueError("step must be positive")
    horizon = cfg.resolved_horizon(p)
    if cfg.step > horizon:
        raise ValueError("step exceeds the horizon")
    integ = _Integrator(p, g, cfg.step, cfg.history_value)
    n_total = int(round(horizon / cfg.step))
    integ.advance(n_total)
    n_ref = n_total + 1
    v = verdict(integ.x, cfg.tail_fraction, integ.blew_up)
    ext = 0
    while v is Verdict.INCONCLUSIVE and ext < cfg.max_extensions:
        ext += 1
        n_total *= 2
        integ.advance(n_total)
        v = verdict(integ.x, cfg.tail_fraction, integ.blew_up, reference_length=n_ref)
    times = np.arange(integ.x.size) * cfg.step
    return Trajectory(times, integ.x.copy(), v, integ.blew_up, ext)


def convergence_order(
    p: SystemParams, g: Nonlinearity | None, steps, t_eval: float = 1.0, history_value: float = 1.0
) -> float:
    """Empirical order of accuracy at ``t_eval`` from successive halvings.

    The reference is a run with step ``min(steps) / 16``; the order is the
    least-squares slope of ``log(error)`` against ``log(step)``.

    Raises
    ------
    SchemeDefect
        The errors do not shrink with every halving.
    """
    steps = sorted(float(s) for s in steps)[::-1]
    if len(steps) < 3:
        raise ValueError("need at least three step sizes")
    for coarse, fine in zip(steps, steps[1:]):
        if not math.isclose(coarse, 2 * fine, rel_tol=1e-9):
            raise ValueError("each step must halve the previous one")

    def value_at(h):
        integ = _Integrator(p, g if g is not None else Nonlinearity("linear", p.k), h, history_value)
        n = int(round(t_eval / h))
        integ.advance(n)
        if integ.blew_up:
            raise SchemeDefect(f"blow-up before t={t_eval} at step {h}")
        return integ.x[n]

    ref = value_at(steps[-1] / 16)
    errs = np.array([abs(value_at(h) - ref) for h in steps])
    if np.any(np.diff(errs) >= 0):
        raise SchemeDefect(f"errors {errs} are not decreasing under refinement")
    slope = np.polyfit(np.log(steps), np.log(errs), 1)[0]
    return float(slope)
