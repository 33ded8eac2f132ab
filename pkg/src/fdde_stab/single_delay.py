"""Stability regions and Hopf delay for ``D^alpha x = a x(t) + b x(t - tau)``.

The (a, b)-plane splits into three open regions:

* ``b < -|a|``: stable for ``tau`` below a single critical delay, unstable
  beyond it (the single-stable region, SSR);
* ``b > -a``: unstable for every delay;
* ``a < 0`` and ``a < b < -a``: stable for every delay.

The critical delay in the SSR comes from putting ``lam = i w`` into
``lam**alpha - a - b e^{-lam tau} = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError

# slack for the measure-zero boundary lines and for round-off in arccos
BOUNDARY_EPS = 1e-12


class SingleDelayTag(str, Enum):
    STABLE_ALL = "StableAllDelays"
    UNSTABLE_ALL = "UnstableAllDelays"
    SSR = "SSR"
    BOUNDARY = "Boundary"


@dataclass(frozen=True)
class SingleDelayClass:
    tag: SingleDelayTag
    hopf_delay: float | None = None


def _near(x: float, y: float) -> bool:
    return abs(x - y) <= BOUNDARY_EPS * max(1.0, abs(x), abs(y))


def classify(a: float, b: float) -> SingleDelayTag:
    """Region of ``(a, b)``; the lines ``b = -a``, ``b = a`` (for a < 0) are ``BOUNDARY``."""
    if _near(b, -a) or (a < 0 and _near(b, a)) or _near(b, -abs(a)):
        return SingleDelayTag.BOUNDARY
    if b < -abs(a):
        return SingleDelayTag.SSR
    if b > -a:
        return SingleDelayTag.UNSTABLE_ALL
    # remaining open set: a < 0 and a < b < -a
    return SingleDelayTag.STABLE_ALL


def analyze(a: float, b: float, alpha: float) -> SingleDelayClass:
    tag = classify(a, b)
    if tag is SingleDelayTag.SSR:
        return SingleDelayClass(tag, hopf_delay(a, b, alpha))
    return SingleDelayClass(tag)


def _hopf_parts(a, b, alpha):
    # returns (omega**alpha, arccos argument), NaN where undefined
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = math.cos(alpha * math.pi / 2)
    s = math.sin(alpha * math.pi / 2)
    disc = b * b - a * a * s * s
    with np.errstate(invalid="ignore", divide="ignore"):
        w_alpha = np.where(disc >= 0, a * c + np.sqrt(np.maximum(disc, 0.0)), np.nan)
        w_alpha = np.where(w_alpha > 0, w_alpha, np.nan)
        arg = (w_alpha * c - a) / b
    return w_alpha, arg


def crossing_frequency(a: float, b: float, alpha: float) -> float:
    """Frequency ``w > 0`` at which a root of the single-delay equation sits at ``i w``.

    Raises
    ------
    DomainError
        ``b**2 < a**2 sin^2(alpha pi / 2)`` or the resulting ``w**alpha <= 0``.
    """
    s = math.sin(alpha * math.pi / 2)
    if b * b < a * a * s * s:
        raise DomainError(f"b^2 < a^2 sin^2(alpha pi/2) for a={a}, b={b}, alpha={alpha}")
    w_alpha = a * math.cos(alpha * math.pi / 2) + math.sqrt(b * b - a * a * s * s)
    if w_alpha <= 0:
        raise DomainError(f"crossing frequency undefined: a cos(alpha pi/2) + sqrt(...) = {w_alpha} <= 0")
    return w_alpha ** (1.0 / alpha)


def hopf_delay(a: float, b: float, alpha: float) -> float:
    """First delay at which the single-delay equation has a root on the imaginary axis.

    ``tau = arccos(((a c + r) c - a) / b) / w`` with ``c = cos(alpha pi/2)``,
    ``r = sqrt(b^2 - a^2 sin^2(alpha pi/2))`` and ``w`` from
    :func:`crossing_frequency`. Round-off excursions of the arccos argument
    up to ``1e-12`` past +-1 are clamped; anything larger is a DomainError.
    """
    w = crossing_frequency(a, b, alpha)
    c = math.cos(alpha * math.pi / 2)
    if b == 0:
        raise DomainError("b = 0 leaves the arccos argument undefined")
    arg = (w**alpha * c - a) / b
    if abs(arg) > 1.0:
        if abs(arg) - 1.0 > BOUNDARY_EPS:
            raise DomainError(f"arccos argument {arg} outside [-1, 1]")
        arg = math.copysign(1.0, arg)
    return math.acos(arg) / w


def hopf_delay_array(a, b, alpha: float) -> np.ndarray:
    """Vectorized :func:`hopf_delay`; NaN marks points outside the domain."""
    w_alpha, arg = _hopf_parts(a, b, alpha)
    over = np.abs(arg) - 1.0
    arg = np.where((over > 0) & (over <= BOUNDARY_EPS), np.sign(arg), arg)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.arccos(np.where(np.abs(arg) <= 1.0, arg, np.nan)) / w_alpha ** (1.0 / alpha)
    return out
