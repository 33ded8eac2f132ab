"""Command-line front end.

Every command writes one artifact (to ``--out`` or stdout). JSON artifacts
carry ``kind`` and the fully resolved ``config``; CSV artifacts start with a
``# config: {...}`` comment line holding the same information.

Exit codes: 0 success, 1 domain error or failed verification, 2 numerical
non-convergence, 64 usage error, 66 missing artifact.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from . import __version__
from . import case_tau1_zero as c0
from . import single_delay as sd
from . import two_delay as td
from .char_eq import SystemParams, char_value, char_value_single, root_verdict
from .errors import BracketError, DegenerateInput, DomainError, InconclusiveVerdict, NonConvergence, StepTooLarge
from .fdde_sim import Nonlinearity, SimConfig, Verdict, simulate, suggest_config

EXIT_OK, EXIT_DOMAIN, EXIT_NUMERIC, EXIT_USAGE, EXIT_NO_INPUT = 0, 1, 2, 64, 66

log = logging.getLogger("fdde_stab")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _MissingArtifact(Exception):
    pass


def _params(p):
    p.add_argument("--alpha", type=float, required=True, help="fractional order in (0, 1]")
    p.add_argument("--k", type=float, required=True, help="feedback slope g'(0)")
    p.add_argument("--gamma", type=float, required=True, help="decay rate")


def _output(p, default_format="json"):
    p.add_argument("--out", type=Path, default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default=default_format)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="fdde-stab", description="Stability of a fractional equation with two delays.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", help="switch pattern in tau for tau1 = 0")
    _params(p)
    _output(p)

    p = sub.add_parser("hopf", help="single-delay region and Hopf delay")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--a", type=float, default=None, help="coefficient of x(t); default k - gamma")
    p.add_argument("--b", type=float, default=None, help="coefficient of x(t - tau); default -k e^{-gamma tau2}")
    p.add_argument("--k", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--tau2", type=float, default=None)
    _output(p)

    p = sub.add_parser("curves", help="bifurcation curves h1 and h2 in the (k, gamma) plane")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--k-min", type=float, default=0.1)
    p.add_argument("--k-max", type=float, default=12.0)
    p.add_argument("--samples", type=int, default=60)
    p.add_argument("--tol", type=float, default=1e-8)
    _output(p, "csv")

    p = sub.add_parser("tau-plane", help="stability boundary in the (tau1, tau2) plane")
    _params(p)
    p.add_argument("--v-max", type=float, default=6.283185307)
    p.add_argument("--v-samples", type=int, default=td.V_SAMPLES)
    p.add_argument("--max-branch", type=int, default=td.MAX_BRANCH)
    p.add_argument("--tau2-max", type=float, default=td.TAU2_MAX)
    _output(p, "csv")

    p = sub.add_parser("slice", help="stable/unstable tau1 intervals at fixed tau2")
    _params(p)
    p.add_argument("--tau2", type=float, required=True)
    p.add_argument("--tau1-max", type=float, default=4.0)
    p.add_argument("--v-max", type=float, default=6.283185307)
    p.add_argument("--v-samples", type=int, default=td.V_SAMPLES)
    _output(p)

    p = sub.add_parser("simulate", help="time-domain trajectory with a stability verdict")
    _params(p)
    p.add_argument("--tau1", type=float, default=0.0)
    p.add_argument("--tau2", type=float, default=0.0)
    p.add_argument("--step", type=float, default=1e-2)
    p.add_argument("--horizon", type=float, default=None, help="default max(50, 20 (tau1 + tau2))")
    p.add_argument("--history", type=float, default=0.1, help="constant initial function")
    p.add_argument("--nonlinearity", choices=("linear", "tanh"), default="linear")
    _output(p, "csv")

    p = sub.add_parser("verify", help="cross-check an artifact against the root oracle and the simulator")
    p.add_argument("artifact", type=Path)
    p.add_argument("--step", type=float, default=1e-2)
    p.add_argument("--tol", type=float, default=td.POINT_TOL, help="residual bound for boundary points")
    _output(p)
    return ap


def _emit(payload, args, csv_rows=None, csv_columns=None):
    config = payload["config"]
    if args.format == "csv" and csv_rows is not None:
        buf = io.StringIO()
        buf.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(csv_columns)
        for row in csv_rows:
            w.writerow([_fmt(row[c]) for c in csv_columns])
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)


def _fmt(x):
    return repr(x) if isinstance(x, float) else x


def _config(args, **extra):
    cfg = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k not in ("out", "format", "verbose")}
    cfg.update(extra)
    cfg["version"] = __version__
    return cfg


def cmd_classify(args):
    pat = c0.classify_pattern(args.k, args.gamma, args.alpha)
    payload = {"kind": "classify", "config": _config(args), **pat.to_dict()}
    rows = [{"tau_lo": lo, "tau_hi": hi, "verdict": v} for lo, hi, v in pat.segments()]
    _emit(payload, args, rows, ["tau_lo", "tau_hi", "verdict"])


def cmd_hopf(args):
    if args.a is not None and args.b is not None:
        a, b = args.a, args.b
    elif None not in (args.k, args.gamma, args.tau2):
        a, b = args.k - args.gamma, float(c0.b_of_tau(args.k, args.gamma, args.tau2))
    else:
        raise DomainError("give --a and --b, or --k, --gamma and --tau2")
    res = sd.analyze(a, b, args.alpha)
    omega = sd.crossing_frequency(a, b, args.alpha) if res.hopf_delay is not None else None
    payload = {"kind": "hopf", "config": _config(args), "a": a, "b": b, "region": res.tag.value,
               "hopf_delay": res.hopf_delay, "omega": omega}
    _emit(payload, args, [payload], ["a", "b", "region", "hopf_delay", "omega"])


def cmd_curves(args):
    kr = (args.k_min, args.k_max)
    h1 = c0.trace_h1(args.alpha, kr, args.samples)
    h2 = c0.trace_h2(args.alpha, kr, args.samples, tol=args.tol)
    rows = [{"curve": name, "k": p.k, "gamma": p.gamma, "tau": p.tau_tangency} for name, pts in (("h1", h1), ("h2", h2)) for p in pts]
    payload = {"kind": "curves", "config": _config(args), "points": rows}
    _emit(payload, args, rows, ["curve", "k", "gamma", "tau"])


def _v_grid(args):
    return td.default_v_grid(args.v_max, args.v_samples)


def cmd_tau_plane(args):
    diag: list = []
    bnd = td.trace_boundary(args.alpha, args.k, args.gamma, _v_grid(args), args.max_branch, args.tau2_max, diagnostics=diag)
    try:
        t2a = td.zero_root_branch(args.k, args.gamma)
    except DomainError:
        t2a = None
    low = td.boundary_tau2_min(args.alpha, args.k, args.gamma, bnd)
    summary = {
        "tau2a_star": t2a,
        "tau2_min": None if low is None else low.tau2,
        "tau2_min_point": None if low is None else td.boundary_to_rows([low])[0],
        "points": len(bnd),
        "gaps": diag,
    }
    rows = td.boundary_to_rows(bnd)
    payload = {"kind": "tau-plane", "config": _config(args), **summary, "boundary": rows}
    if args.format == "csv":
        # the CSV holds the curve; the summary goes to stderr so stdout stays machine-readable
        sys.stderr.write(json.dumps(summary, sort_keys=True) + "\n")
    _emit(payload, args, rows, ["v", "tau1", "tau2", "branch"])


def cmd_slice(args):
    bnd = td.trace_boundary(args.alpha, args.k, args.gamma, _v_grid(args), 0)
    rep = td.classify_tau2_slice(args.alpha, args.k, args.gamma, args.tau2, args.tau1_max, bnd)
    payload = {"kind": "slice", "config": _config(args), **rep.to_dict()}
    rows = [{"tau1_lo": lo, "tau1_hi": hi, "verdict": v} for lo, hi, v in rep.intervals]
    _emit(payload, args, rows, ["tau1_lo", "tau1_hi", "verdict"])


def cmd_simulate(args):
    p = SystemParams(args.alpha, args.k, args.gamma, args.tau1, args.tau2)
    cfg = SimConfig(step=args.step, horizon=args.horizon, history_value=args.history)
    tr = simulate(p, Nonlinearity(args.nonlinearity, args.k), cfg)
    extra = {"resolved_horizon": cfg.resolved_horizon(p)}
    payload = {
        "kind": "simulate",
        "config": _config(args, **extra),
        "verdict": tr.verdict.value,
        "blew_up": tr.blew_up,
        "extensions": tr.extensions,
        "t": tr.times.tolist(),
        "x": tr.values.tolist(),
    }
    rows = ({"t": float(t), "x": float(x)} for t, x in zip(tr.times, tr.values))
    if args.format == "csv":
        payload["config"] = {**payload["config"], "verdict": tr.verdict.value, "extensions": tr.extensions}
    _emit(payload, args, rows, ["t", "x"])


# ---------------------------------------------------------------------------
# verify


def _load_artifact(path: Path) -> dict:
    if not path.is_file():
        raise _MissingArtifact(f"artifact {path} not found")
    text = path.read_text()
    if text.startswith("# config: "):
        head, _, body = text.partition("\n")
        cfg = json.loads(head[len("# config: "):])
        rows = list(csv.DictReader(io.StringIO(body)))
        if cfg.get("command") != "tau-plane":
            raise DomainError("only boundary CSV artifacts can be verified; use the JSON form for other kinds")
        boundary = [{"v": float(r["v"]), "tau1": float(r["tau1"]), "tau2": float(r["tau2"]), "branch": int(r["branch"])} for r in rows]
        return {"kind": "tau-plane", "config": cfg, "boundary": boundary}
    return json.loads(text)


def _sim_verdict(p: SystemParams, step: float) -> str:
    # step capped for stiffness and the delays; --step is the upper bound
    return simulate(p, None, suggest_config(p, step_cap=step)).verdict.value


def _check(expected, oracle, sim):
    if oracle != expected or sim not in (expected, Verdict.INCONCLUSIVE.value):
        return "fail"
    return "pass" if sim == expected else "inconclusive"


def _oracle(p):
    try:
        return root_verdict(p)
    except InconclusiveVerdict:
        return "Inconclusive"


def verify_artifact(art: dict, step: float = 1e-2, tol: float = td.POINT_TOL) -> list[dict]:
    """One row per checked item: ``{item, expected, oracle, simulation, status}``."""
    kind = art.get("kind")
    cfg = art["config"]
    rows = []
    if kind == "classify":
        pat = c0.SwitchPattern(c0.PatternTag(art["tag"]), tuple(art["critical_delays"]), tuple(art["verdicts"]))
        for tau, (_, _, expected) in zip(c0.segment_probes(pat, cfg["gamma"]), pat.segments()):
            p = SystemParams(cfg["alpha"], cfg["k"], cfg["gamma"], 0.0, tau)
            o, s = _oracle(p), _sim_verdict(p, step)
            rows.append({"item": f"tau={tau:.6g}", "expected": expected, "oracle": o, "simulation": s,
                         "status": _check(expected, o, s)})
    elif kind == "slice":
        for lo, hi, expected in art["intervals"]:
            t1 = 0.5 * (lo + hi)
            p = SystemParams(cfg["alpha"], cfg["k"], cfg["gamma"], t1, art["tau2"])
            o, s = _oracle(p), _sim_verdict(p, step)
            rows.append({"item": f"tau1={t1:.6g}", "expected": expected, "oracle": o, "simulation": s,
                         "status": _check(expected, o, s)})
    elif kind == "tau-plane":
        for pt in art["boundary"]:
            p = SystemParams(cfg["alpha"], cfg["k"], cfg["gamma"], pt["tau1"], pt["tau2"])
            r = float(abs(char_value(1j * pt["v"], p)))
            rows.append({"item": f"v={pt['v']:.6g},tau1={pt['tau1']:.6g},tau2={pt['tau2']:.6g}",
                         "expected": f"|Delta|<={tol:g}", "oracle": f"{r:.3g}", "simulation": "-",
                         "status": "pass" if r <= tol else "fail"})
    elif kind == "hopf":
        if art["hopf_delay"] is not None:
            a, b, t, w = art["a"], art["b"], art["hopf_delay"], art["omega"]
            r = abs(complex(char_value_single(1j * w, a, b, t, cfg["alpha"])))
            rows.append({"item": f"tau={t:.6g}", "expected": f"|Delta(i w)|<={tol:g}", "oracle": f"{r:.3g}",
                         "simulation": "-", "status": "pass" if r <= tol else "fail"})
    else:
        raise DomainError(f"cannot verify artifact kind {kind!r}")
    return rows


def cmd_verify(args):
    art = _load_artifact(args.artifact)
    rows = verify_artifact(art, args.step, args.tol)
    ok = all(r["status"] != "fail" for r in rows)
    payload = {"kind": "verify", "config": _config(args, artifact_kind=art.get("kind")), "passed": ok, "rows": rows}
    _emit(payload, args, rows, ["item", "expected", "oracle", "simulation", "status"])
    return EXIT_OK if ok else EXIT_DOMAIN


COMMANDS = {
    "classify": cmd_classify,
    "hopf": cmd_hopf,
    "curves": cmd_curves,
    "tau-plane": cmd_tau_plane,
    "slice": cmd_slice,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        status = COMMANDS[args.command](args)
    except _MissingArtifact as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NO_INPUT
    except (NonConvergence, BracketError, InconclusiveVerdict, c0.UnexpectedPattern) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, DegenerateInput, StepTooLarge, ValueError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK if status is None else status


if __name__ == "__main__":
    sys.exit(main())
