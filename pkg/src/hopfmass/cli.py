"""mamass command line: analyze a member end to end, print the exact
constant tables, verify the combinatorial identities, or run a named
cross-check suite.

Exit codes: 0 all verdicts pass, 1 at least one check failed (the report
is still written), 2 usage or configuration error.  MAMASS_THREADS caps
the worker count used for independent per-point and per-level work.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bounds import (bell_constants, check_estimate_suite,
                     dimensional_constant, gather_estimate_inputs,
                     verify_identity_df019, verify_identity_gr004,
                     verify_identity_gr0066)
from .energy import concavity_check, energy_trace
from .errors import CheckFailed, HopfMassError, NotInvariant, ParseError, \
    UnsupportedDimension
from .frames import (antisymmetry_check, hessian_decomposition_check,
                     restriction_check)
from .functions import FunctionSpec, parse_spec
from .invariants import lelong_estimate
from .mass import (boundary_mass, boundary_mass_alternating, positivity_check,
                   shell_oracle)
from .quadrature import IntegrationScheme
from .regularize import (friedrichs_check, mass_convergence_check,
                         mollified_slope_bound, mollify_at)
from .report import (build_report, render_json, report_passed, write_csv,
                     write_svg)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

DEFAULT_T_GRID = (-5.0, -10.0, -20.0, -40.0)
DEFAULT_A_GRID = (4.0, 8.0, 16.0, 32.0)
ENERGY_T_GRID = (-4.0, -5.0, -6.0, -7.0, -8.0)

# documented defaults; every key can be overridden with --tol KEY=VALUE
DEFAULT_TOLERANCES = {
    "positivity_floor": -1e-6,     # min generalized eigenvalue
    "frames_residual": 1e-5,       # decomposition / restriction residual
    "antisymmetry_residual": 2e-4, # connection antisymmetry residual
    "sigma_factor": 3.0,           # stderr multiplier for MC comparisons
    "energy_derivative": 1e-3,     # relative energy/derivative mismatch
}

SUITES = ("mass-oracles", "frames", "regularize", "energy")


@dataclass(frozen=True)
class RunConfig:
    """Validated invocation: everything a command needs, echoed into the
    report so a run can be reproduced from its own output."""

    command: str
    function: str | None
    n: int
    t_grid: tuple
    A_grid: tuple
    scheme: IntegrationScheme
    json_path: str | None
    csv_path: str | None
    svg_path: str | None
    tolerances: dict
    threads: int
    suite: str | None = None

    def echo(self) -> dict:
        return {
            "command": self.command,
            "function": self.function,
            "dim": self.n,
            "t_grid": [float(t) for t in self.t_grid],
            "A_grid": [float(a) for a in self.A_grid],
            "scheme": self.scheme.kind,
            "samples": int(self.scheme.samples),
            "seed": int(self.scheme.seed),
            "json": self.json_path,
            "csv": self.csv_path,
            "svg": self.svg_path,
            "tolerances": {k: float(v) for k, v in self.tolerances.items()},
            "threads": self.threads,
            "suite": self.suite,
        }


def max_threads() -> int:
    """Worker cap from MAMASS_THREADS (default 1, clamped to [1, 64])."""
    raw = os.environ.get("MAMASS_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"MAMASS_THREADS must be an integer, got {raw!r}")
    return max(1, min(value, 64))


def _parallel_map(fn, items, threads: int) -> list:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


def _parse_grid(text: str, name: str) -> tuple:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ValueError(f"{name} must be a comma-separated list of numbers")
    if not values:
        raise ValueError(f"{name} must not be empty")
    return values


def _parse_tolerances(pairs) -> dict:
    tol = dict(DEFAULT_TOLERANCES)
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep or key not in DEFAULT_TOLERANCES:
            known = ", ".join(sorted(DEFAULT_TOLERANCES))
            raise ValueError(f"bad tolerance {item!r}; use KEY=VALUE with "
                             f"KEY among: {known}")
        tol[key] = float(value)
    return tol


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mamass",
        description="Boundary masses, Lelong-type invariants and "
                    "residual-mass bounds of circle-invariant "
                    "plurisubharmonic functions.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p, needs_function=True):
        p.add_argument("--function", required=needs_function,
                       help="member in catalog syntax, e.g. "
                            "\"radial(profile=log,c=1)\"")
        p.add_argument("--dim", type=_positive_int, default=1,
                       help="complex projective dimension n (ambient C^{n+1})")
        p.add_argument("--t-grid", default=None,
                       help="comma-separated log radii, e.g. --t-grid=-5,-10 "
                            "(default "
                            + ",".join(str(t) for t in DEFAULT_T_GRID) + ")")
        p.add_argument("--A-grid", default=None,
                       help="comma-separated slope depths (default "
                            + ",".join(str(a) for a in DEFAULT_A_GRID) + ")")
        p.add_argument("--scheme", choices=("auto", "mc", "tensor"),
                       default="auto",
                       help="quadrature: deterministic tensor/toric when "
                            "available (auto), or force mc/tensor")
        p.add_argument("--samples", type=_positive_int, default=200_000,
                       help="Monte Carlo sample count (default 200000)")
        p.add_argument("--seed", type=int, default=0,
                       help="base RNG seed (default 0)")
        p.add_argument("--json", dest="json_path", default=None,
                       help="write the JSON report here (default: stdout)")
        p.add_argument("--csv", dest="csv_path", default=None,
                       help="write the t-trace table here")
        p.add_argument("--svg", dest="svg_path", default=None,
                       help="write a line plot here")
        p.add_argument("--tol", action="append", metavar="KEY=VALUE",
                       help="override a documented tolerance; KEY among "
                            + ", ".join(sorted(DEFAULT_TOLERANCES)))

    p_an = sub.add_parser("analyze",
                          help="full pipeline: nu, lambda, tau, inequalities")
    add_run_flags(p_an)

    p_co = sub.add_parser("constants",
                          help="exact Bell and dimensional constant tables")
    p_co.add_argument("--max-n", type=_positive_int, default=5)
    p_co.add_argument("--json", dest="json_path", default=None)

    p_id = sub.add_parser("identities",
                          help="exact combinatorial identity verifiers")
    p_id.add_argument("--max-n", type=_positive_int, default=8)
    p_id.add_argument("--json", dest="json_path", default=None)
    p_id.add_argument("--inject-fault", action="store_true",
                      help=argparse.SUPPRESS)

    p_ve = sub.add_parser("verify", help="run one named cross-check suite")
    p_ve.add_argument("--suite", choices=SUITES, required=True)
    add_run_flags(p_ve, needs_function=False)

    return parser


def _build_config(args, member: FunctionSpec | None) -> RunConfig:
    n = args.dim
    kind = args.scheme
    if kind == "auto":
        moduli = bool(member is not None and member.moduli_only)
        kind = "tensor" if (n == 1 or moduli) else "mc"
    scheme = IntegrationScheme(kind=kind, samples=args.samples, seed=args.seed)
    t_grid = _parse_grid(args.t_grid, "--t-grid") if args.t_grid else DEFAULT_T_GRID
    if any(t >= 0 for t in t_grid):
        raise ValueError("--t-grid entries must be negative log radii")
    A_grid = _parse_grid(args.A_grid, "--A-grid") if args.A_grid else DEFAULT_A_GRID
    if any(a < 1 for a in A_grid):
        raise ValueError("--A-grid entries must be at least 1")
    return RunConfig(
        command=args.command,
        function=args.function,
        n=n,
        t_grid=t_grid,
        A_grid=A_grid,
        scheme=scheme,
        json_path=args.json_path,
        csv_path=args.csv_path,
        svg_path=args.svg_path,
        tolerances=_parse_tolerances(args.tol),
        threads=max_threads(),
        suite=getattr(args, "suite", None),
    )


def _emit(cfg: RunConfig, doc: dict) -> int:
    text = render_json(doc)
    if cfg.json_path:
        with open(cfg.json_path, "w", encoding="utf-8") as fh:
            fh.write(text)
        ok = report_passed(doc)
        print(f"report written to {cfg.json_path}: "
              f"{'all checks pass' if ok else 'CHECK FAILURES'}")
    else:
        sys.stdout.write(text)
    return EXIT_OK if report_passed(doc) else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def cmd_analyze(cfg: RunConfig, f: FunctionSpec) -> int:
    if not f.is_invariant:
        raise NotInvariant(f"{f.spec_text()} is not circle invariant")
    inputs = gather_estimate_inputs(f, cfg.n, cfg.scheme, cfg.t_grid,
                                    cfg.A_grid)
    inequalities = check_estimate_suite(f, cfg.n, inputs)

    floor = cfg.tolerances["positivity_floor"]
    pos = positivity_check(f, cfg.n, cfg.t_grid, samples=2000,
                           seed=cfg.scheme.seed)
    checks = [{
        "name": "transversal_positivity",
        "status": "pass" if pos.min_eig >= floor else "fail",
        "min_eig": float(pos.min_eig),
        "tolerance": float(floor),
        "points": int(pos.checked),
    }]

    energy_block = None
    trace = None
    try:
        trace = energy_trace(f, cfg.n, cfg.t_grid, cfg.scheme)
        energy_block = {
            "t_grid": [float(t) for t in trace.t_grid],
            "E": [[float(v) for v in row] for row in trace.E],
            "calE": [float(v) for v in trace.calE],
        }
    except HopfMassError as exc:
        checks.append({"name": "energy_trace", "status": "skipped",
                       "detail": str(exc)})

    doc = build_report(cfg.echo(), cfg.scheme, inputs=inputs,
                       inequalities=inequalities, checks=checks,
                       energy=energy_block)

    if cfg.csv_path:
        if trace is None:
            raise ValueError("--csv needs the energy levels, which were "
                             "not computable for this member")
        write_csv(cfg.csv_path, inputs.t_grid, inputs.mass,
                  inputs.mass_stderr, inputs.I_over_pin, trace.E)
    if cfg.svg_path:
        write_svg(cfg.svg_path, inputs.t_grid,
                  [("boundary mass", list(inputs.mass)),
                   ("I/pi^n", list(inputs.I_over_pin))],
                  f"{f.spec_text()}  n={cfg.n}")
    return _emit(cfg, doc)


# ---------------------------------------------------------------------------
# constants and identities
# ---------------------------------------------------------------------------

def cmd_constants(max_n: int, json_path: str | None) -> int:
    bells = bell_constants(max_n + 1)
    dims = [dimensional_constant(k) for k in range(1, max_n + 1)]
    lines = ["k    B_k      C_k"]
    for k in range(max_n + 2):
        c = str(dims[k - 1]) if 1 <= k <= max_n else "-"
        lines.append(f"{k:<4d} {bells[k]:<8d} {c}")
    text = "\n".join(lines) + "\n"
    if json_path:
        doc = {"schema": "mamass-report/1",
               "bell": list(bells),
               "dimensional": dims}
        with open(json_path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_identities(max_n: int, json_path: str | None,
                   inject_fault: bool = False) -> int:
    rows, lines = [], []
    for verifier in (verify_identity_df019, verify_identity_gr004,
                     verify_identity_gr0066):
        name = verifier.__name__.removeprefix("verify_identity_")
        try:
            v = verifier(max_n, inject_fault=inject_fault)
            rows.append({"name": v.name, "cases": int(v.cases),
                         "passed": bool(v.passed)})
            lines.append(f"{v.name:<10s} n<={max_n}: "
                         f"{'pass' if v.passed else 'FAIL'} ({v.cases} cases)")
        except CheckFailed as exc:
            rows.append({"name": name, "cases": 0, "passed": False,
                         "counterexample": str(exc)})
            lines.append(f"{name:<10s} n<={max_n}: FAIL ({exc})")
    sys.stdout.write("\n".join(lines) + "\n")
    if json_path:
        doc = {"schema": "mamass-report/1", "identities": rows}
        with open(json_path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if all(r["passed"] for r in rows) else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# verify suites
# ---------------------------------------------------------------------------

def _sphere_points(seed: int, count: int, n: int,
                   t_range=(-3.0, -1.0)) -> np.ndarray:
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(count, n + 1)) + 1j * rng.normal(size=(count, n + 1))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    radii = np.exp(rng.uniform(t_range[0], t_range[1], size=(count, 1)))
    return z * radii


def _suite_mass_oracles(cfg: RunConfig, f: FunctionSpec) -> list[dict]:
    n, scheme = cfg.n, cfg.scheme
    sf = cfg.tolerances["sigma_factor"]
    checks = []

    t1, t2 = -8.0, -4.0
    b1 = boundary_mass(f, n, t1, scheme)
    b2 = boundary_mass(f, n, t2, scheme)
    sh = shell_oracle(f, n, t1, t2, scheme)
    gap = abs((b2.value - b1.value) - sh.value)
    tol = sf * (b1.stderr + b2.stderr + sh.stderr) + 1e-9
    checks.append({"name": "shell_oracle_consistency",
                   "status": "pass" if gap <= tol else "fail",
                   "gap": float(gap), "tolerance": float(tol),
                   "t_pair": [t1, t2]})

    bm = boundary_mass(f, n, -6.0, scheme)
    alt = boundary_mass_alternating(f, n, -6.0, scheme)
    gap = abs(bm.value - alt.value)
    tol = sf * (bm.stderr + alt.stderr) + 1e-9
    checks.append({"name": "alternating_form_agreement",
                   "status": "pass" if gap <= tol else "fail",
                   "gap": float(gap), "tolerance": float(tol), "t": -6.0})

    floor = cfg.tolerances["positivity_floor"]
    pos = positivity_check(f, n, (t1, t2), samples=2000, seed=scheme.seed)
    checks.append({"name": "transversal_positivity",
                   "status": "pass" if pos.min_eig >= floor else "fail",
                   "min_eig": float(pos.min_eig), "tolerance": float(floor),
                   "points": int(pos.checked)})

    if cfg.svg_path:
        ts = [-8.0, -7.0, -6.0, -5.0, -4.0]
        rows = _parallel_map(
            lambda t: boundary_mass(f, n, t, scheme, return_terms=True)[1],
            ts, cfg.threads)
        series = [(f"theta_{k}", [float(r[k].value) for r in rows])
                  for k in range(n + 1)]
        write_svg(cfg.svg_path, ts, series,
                  f"per-level mass summands  {f.spec_text()}")
    return checks


def _suite_frames(cfg: RunConfig, f: FunctionSpec) -> list[dict]:
    tol_res = cfg.tolerances["frames_residual"]
    tol_anti = cfg.tolerances["antisymmetry_residual"]
    pts = _sphere_points(cfg.scheme.seed + 101, 20, cfg.n)
    checks = []

    def decomposition_residual(z):
        rep = hessian_decomposition_check(f, z)
        return max(rep.residual, rep.commutation_residual)

    def restriction_residual(z):
        rep = restriction_check(f, z)
        return max(rep.slope_residual, rep.block_residual,
                   rep.coupling_residual)

    def antisymmetry_residual(z):
        return antisymmetry_check(z).residual

    def run(name, fn, tolerance):
        worst, status, detail = 0.0, "pass", ""
        try:
            worst = max(_parallel_map(fn, pts, cfg.threads))
        except (CheckFailed, HopfMassError) as exc:
            status, detail = "fail", str(exc)
        if worst > tolerance:
            status = "fail"
        entry = {"name": name, "status": status,
                 "max_residual": float(worst), "tolerance": float(tolerance),
                 "points": len(pts)}
        if detail:
            entry["detail"] = detail
        checks.append(entry)

    run("hessian_decomposition", decomposition_residual, tol_res)
    if f.is_invariant:
        run("restriction_bridge", restriction_residual, tol_res)
    else:
        checks.append({"name": "restriction_bridge", "status": "skipped",
                       "detail": "member is not circle invariant"})
    run("connection_antisymmetry", antisymmetry_residual, tol_anti)
    return checks


def _suite_regularize(cfg: RunConfig, f: FunctionSpec) -> list[dict]:
    if cfg.n != 1:
        raise UnsupportedDimension(
            "the regularize suite is implemented for n = 1 only")
    checks = []
    sf = cfg.tolerances["sigma_factor"]
    seed = cfg.scheme.seed

    def entry(name, fn):
        try:
            detail = fn()
            checks.append({"name": name, "status": "pass", **detail})
        except (CheckFailed, HopfMassError) as exc:
            checks.append({"name": name, "status": "fail",
                           "detail": str(exc)})

    def monotone():
        pts = _sphere_points(seed + 211, 16, 1, t_range=(-1.6, -0.5))
        worst = np.inf
        for z in pts:
            u0 = float(f.value(z[None, :])[0])
            ests = [mollify_at(f, z, e) for e in (0.04, 0.02, 0.01)]
            slack = sf * sum(e.stderr for e in ests) + 1e-9
            vals = [e.value for e in ests]
            worst = min(worst, vals[0] - vals[1] + slack,
                        vals[1] - vals[2] + slack, vals[2] - u0 + slack)
            if worst < 0:
                raise CheckFailed(f"monotone ladder violated at {z}")
        return {"points": len(pts), "worst_margin": float(worst)}

    def friedrichs():
        pts = _sphere_points(seed + 223, 8, 1, t_range=(-1.4, -0.6))
        rep = friedrichs_check(f, pts, 0.02)
        return {"max_gap": float(np.max(rep.lhs)), "bound": float(rep.bound)}

    def slope():
        rep = mollified_slope_bound(f, 3.0, 6.0, [0.02, 0.01])
        return {"intercept": float(rep.intercept), "m_A": float(rep.m_a)}

    def mass_limit():
        rep = mass_convergence_check(f, -2.0, [0.02, 0.01, 0.005])
        return {"gaps": [float(g) for g in rep.gaps],
                "reference": float(rep.reference)}

    entry("monotone_regularization", monotone)
    entry("friedrichs_commutator", friedrichs)
    entry("slope_envelope", slope)
    entry("mass_convergence", mass_limit)
    return checks


def _suite_energy(cfg: RunConfig, f: FunctionSpec) -> list[dict]:
    n, scheme = cfg.n, cfg.scheme
    sf = cfg.tolerances["sigma_factor"]
    grid = cfg.t_grid if cfg.t_grid != DEFAULT_T_GRID else ENERGY_T_GRID
    checks = []

    trace = energy_trace(f, n, grid, scheme)
    E = np.asarray(trace.E, dtype=float)
    coef = np.array([math.comb(n + 1, k) for k in range(n + 1)], dtype=float)
    mass_from_E = E @ coef / np.pi ** n
    gap = float(np.max(np.abs(mass_from_E - trace.M_prime)))
    tol = sf * float(np.max(np.asarray(trace.E_stderr) @ coef / np.pi ** n
                            + np.asarray(trace.mass_stderr))) + 1e-9
    checks.append({"name": "binomial_energy_identity",
                   "status": "pass" if gap <= tol else "fail",
                   "gap": gap, "tolerance": tol})

    ts = np.asarray(grid, dtype=float)
    rel_tol = cfg.tolerances["energy_derivative"]
    worst = 0.0
    for i in range(1, len(ts) - 1):
        d_cal = (trace.calE[i + 1] - trace.calE[i - 1]) / (ts[i + 1] - ts[i - 1])
        lhs = (n + 1) * E[i, n] + d_cal
        scale = max(abs((n + 1) * E[i, n]), abs(d_cal), 1e-12)
        worst = max(worst, abs(lhs) / scale)
    checks.append({"name": "energy_derivative_relation",
                   "status": "pass" if worst <= rel_tol else "fail",
                   "max_relative_gap": float(worst),
                   "tolerance": float(rel_tol)})

    conc = concavity_check(f, n, grid, scheme)
    checks.append({"name": "primitive_concavity", "status": "pass",
                   "affine": bool(conc.affine),
                   "min_second_diff": float(np.min(conc.second_diffs))})

    nu = lelong_estimate(f, n, scheme=scheme)
    e0_limit = float(E[-1, 0] / np.pi ** n)
    target = nu.value ** (n + 1)
    gap = abs(e0_limit - target)
    tol = 2e-2 + sf * float(np.asarray(trace.E_stderr)[-1, 0] / np.pi ** n)
    checks.append({"name": "lowest_level_lelong_limit",
                   "status": "pass" if gap <= tol else "fail",
                   "E0_over_pin": e0_limit, "nu_power": float(target),
                   "tolerance": float(tol)})
    return checks


def cmd_verify(cfg: RunConfig, f: FunctionSpec | None) -> int:
    if cfg.suite != "regularize" and f is None:
        raise ValueError(f"--suite {cfg.suite} needs --function")
    if cfg.suite == "regularize" and f is None:
        # default subject: the two-weight monomial member
        f = parse_spec("monomial_ideal(m=[[1,0],[0,2]],w=[1,1])")
    if cfg.suite == "mass-oracles":
        checks = _suite_mass_oracles(cfg, f)
    elif cfg.suite == "frames":
        checks = _suite_frames(cfg, f)
    elif cfg.suite == "regularize":
        checks = _suite_regularize(cfg, f)
    else:
        checks = _suite_energy(cfg, f)
    doc = build_report(cfg.echo(), cfg.scheme, checks=checks)
    return _emit(cfg, doc)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "constants":
            return cmd_constants(args.max_n, args.json_path)
        if args.command == "identities":
            return cmd_identities(args.max_n, args.json_path,
                                  inject_fault=args.inject_fault)
        member = parse_spec(args.function) if args.function else None
        cfg = _build_config(args, member)
        if args.command == "analyze":
            return cmd_analyze(cfg, member)
        return cmd_verify(cfg, member)
    except (ParseError, NotInvariant, UnsupportedDimension, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
