"""Stability analysis of a scalar fractional equation with two delays.

    D^alpha x(t) = -gamma x(t) + g(x(t - tau1)) - e^{-gamma tau2} g(x(t - tau1 - tau2))
"""

__version__ = "0.1.0"

from .case_tau1_zero import (
    PatternTag,
    SwitchPattern,
    classify_pattern,
    find_intersections,
    hopf_curve,
    segment_probes,
    tau_star_pp,
    trace_h1,
    trace_h2,
)
from .char_eq import (
    RootReport,
    SystemParams,
    char_derivative,
    char_value,
    char_value_single,
    find_real_positive_root,
    newton_root,
    oracle_roots,
    root_verdict,
    scan_roots,
)
from .errors import (
    BracketError,
    DegenerateInput,
    DomainError,
    FddeStabError,
    InconclusiveVerdict,
    NonConvergence,
    SchemeDefect,
    StepTooLarge,
)
from .fdde_sim import Nonlinearity, SimConfig, Trajectory, Verdict, convergence_order, simulate, verdict
from .single_delay import SingleDelayTag, classify, crossing_frequency, hopf_delay
from .two_delay import (
    BoundaryPoint,
    Tau2SliceReport,
    boundary_tau2_min,
    classify_tau2_slice,
    delta_zero,
    imaginary_axis_residuals,
    instability_threshold,
    is_unstable_all_tau1,
    solve_boundary_point,
    trace_boundary,
    zero_root_branch,
)
