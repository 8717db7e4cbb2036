"""Lelong-type invariants of circle-invariant psh functions.

Three views of the singularity at the origin are computed and cross
checked against each other:

  * the slope of the spherical mean S_u(0, e^t) in t (the classical
    Lelong number nu),
  * the averages (1/pi^n) int (u_dot_t)^p omega^n, whose t -> -infinity
    limits recover nu^p,
  * directional slopes u_dot_t(zeta) at fixed chart points, whose
    supremum over directions at level t = -A is M_A; the decreasing
    limit of M_A is the top invariant lambda.

All limits are taken along geometric t (or A) grids with Aitken
extrapolation; reported uncertainties combine the extrapolation defect
with three standard errors of the last quadrature estimate, so they are
conservative for smooth catalog members.

The supremum M_A cannot be computed exactly; it is sampled on a covering
set of directions and sharpened by coordinate-wise golden-section
ascent.  The returned value is therefore a lower bound of the true
supremum, and a refinement gap is attached so that inequality checks can
inflate it on whichever side needs the conservative direction.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import pi

import numpy as np

from .errors import (BadRadii, CheckFailed, DimensionMismatch, EvalFailure,
                     InsufficientData, NotInvariant)
from .functions import FunctionSpec, u_dot_batch
from .geometry import chart_section, project_ambient_batch
from .mass import mass_nodes
from .quadrature import (STREAM_DIRECTION, STREAM_SPHERE_MEAN, Estimate,
                         IntegrationScheme, NodeSet, extrapolate_limit,
                         rng_stream, sample_sphere, sphere_means_shared)

__all__ = [
    "LimitTrace",
    "LelongEstimate",
    "DirectionalProfile",
    "GapCheck",
    "lelong_by_slope",
    "lelong_by_I",
    "lelong_estimate",
    "directional_lelong",
    "max_directional",
    "directional_profile",
    "lambda_extrapolate",
    "functionals_I",
    "infimum_gap_check",
]

DEFAULT_T_GRID = (-5.0, -10.0, -20.0, -40.0)
DEFAULT_A_GRID = (4.0, 8.0, 16.0, 32.0)

_SLOPE_DELTA = 0.25


def _check_dim(f: FunctionSpec, n: int) -> None:
    if f.dim is not None and f.dim != n:
        raise DimensionMismatch(f"{f.spec_text()} has dimension {f.dim}, not {n}")
    if not f.is_invariant:
        raise NotInvariant(f"{f.spec_text()} is not circle invariant")


def _decreasing(t_grid) -> tuple:
    ts = tuple(float(t) for t in t_grid)
    if len(ts) < 2 or any(b >= a for a, b in zip(ts, ts[1:])):
        raise BadRadii("t grid must be strictly decreasing")
    if ts[0] > -1.0:
        raise BadRadii("t grid must stay at or below -1")
    return ts


def _u_dot_values(f: FunctionSpec, t: float, zeta: np.ndarray, chart: int) -> np.ndarray:
    """u_dot_t over a batch of chart points, gradient route (no Hessian)."""
    sec = chart_section(zeta, chart)
    g = 1.0 / np.sqrt(1.0 + np.sum(np.abs(zeta) ** 2, axis=-1))
    Z = np.exp(t) * g[:, None] * sec
    return u_dot_batch(Z, f.grad(Z))


def _values_on_nodes(f: FunctionSpec, t: float, nodes: NodeSet,
                     power: int = 1, with_value: bool = False):
    ud = np.empty(len(nodes.weights))
    vals = np.empty(len(nodes.weights)) if with_value else None
    for c in np.unique(nodes.charts):
        sel = nodes.charts == c
        zeta = nodes.zeta[sel]
        sec = chart_section(zeta, int(c))
        g = 1.0 / np.sqrt(1.0 + np.sum(np.abs(zeta) ** 2, axis=-1))
        Z = np.exp(t) * g[:, None] * sec
        ud[sel] = u_dot_batch(Z, f.grad(Z))
        if with_value:
            vals[sel] = f.value(Z)
    if with_value:
        return ud ** power, vals
    return ud ** power


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LimitTrace:
    """Values along a decreasing t grid together with their limit."""

    t_grid: tuple
    values: np.ndarray
    stderr: np.ndarray
    limit: float
    uncertainty: float


@dataclass(frozen=True)
class LelongEstimate:
    """The bottom invariant nu, measured two independent ways.

    `t_trace` rows are (t, spherical-mean slope, I(u_t)/pi^n).
    """

    by_slope: float
    by_I: float
    slope_uncertainty: float
    I_uncertainty: float
    t_trace: tuple

    @property
    def value(self) -> float:
        return 0.5 * (self.by_slope + self.by_I)

    @property
    def uncertainty(self) -> float:
        return max(self.slope_uncertainty, self.I_uncertainty,
                   0.5 * abs(self.by_slope - self.by_I))


@dataclass(frozen=True)
class DirectionalProfile:
    """M_A along an increasing A grid and the extrapolated limit."""

    A_grid: tuple
    M_values: np.ndarray
    gaps: np.ndarray
    lam: float
    lam_uncertainty: float


@dataclass(frozen=True)
class GapCheck:
    """Outcome of the two-radius infimum comparison."""

    integral: float
    inf_inner: float
    inf_outer: float
    slack: float
    passed: bool


# ---------------------------------------------------------------------------
# nu from spherical means and from I
# ---------------------------------------------------------------------------

def lelong_by_slope(f: FunctionSpec, n: int, t_grid=DEFAULT_T_GRID,
                    scheme: IntegrationScheme | None = None) -> LimitTrace:
    """Slope of the spherical mean, [S(t) - S(t - delta)]/delta, per t.

    One direction sample is shared by every radius, so the slope
    differences are taken with common random numbers and their variance
    reflects the spread of u_dot rather than of u itself.
    """
    scheme = scheme or IntegrationScheme()
    _check_dim(f, n)
    ts = _decreasing(t_grid)
    t_all = []
    for t in ts:
        t_all.extend([t, t - _SLOPE_DELTA])
    means, _, mat = sphere_means_shared(f.value, n, t_all, scheme,
                                        stream=STREAM_SPHERE_MEAN)
    nsamp = mat.shape[1]
    slopes = np.empty(len(ts))
    errs = np.empty(len(ts))
    for i in range(len(ts)):
        per = (mat[2 * i] - mat[2 * i + 1]) / _SLOPE_DELTA
        slopes[i] = per.mean()
        errs[i] = per.std() / np.sqrt(nsamp)
    tol = 1e-9 + 3.0 * (errs[:-1] + errs[1:])
    jump = slopes[1:] - slopes[:-1]
    if np.any(jump > tol):
        i = int(np.argmax(jump - tol))
        raise CheckFailed(
            f"spherical-mean slope increased from t={ts[i]} to {ts[i + 1]}: "
            f"{slopes[i]:.6g} -> {slopes[i + 1]:.6g}")
    limit, unc = extrapolate_limit(ts, slopes)
    return LimitTrace(ts, slopes, errs, limit, unc + 3.0 * errs[-1])


def lelong_by_I(f: FunctionSpec, n: int, t_grid=DEFAULT_T_GRID,
                scheme: IntegrationScheme | None = None, p: int = 1) -> LimitTrace:
    """(1/pi^n) int (u_dot_t)^p omega^n per t; the limit approaches nu^p."""
    scheme = scheme or IntegrationScheme()
    _check_dim(f, n)
    ts = _decreasing(t_grid)
    if not 1 <= p <= n + 1:
        raise ValueError(f"power p must lie in 1..{n + 1}")
    nodes = mass_nodes(f, n, ts[-1], scheme)
    vals = np.empty(len(ts))
    errs = np.empty(len(ts))
    for i, t in enumerate(ts):
        est = nodes.average(_values_on_nodes(f, t, nodes, power=p))
        vals[i] = est.value
        errs[i] = est.stderr
    limit, unc = extrapolate_limit(ts, vals)
    return LimitTrace(ts, vals, errs, limit, unc + 3.0 * errs[-1])


def _clamp_nonnegative(limit: float, unc: float, label: str) -> float:
    # Aitken extrapolation of a slowly decaying positive tail can
    # overshoot slightly below zero; that is covered by the uncertainty.
    if limit < -(unc + 1e-6):
        raise CheckFailed(f"negative {label} estimate: {limit:.6g} "
                          f"(uncertainty {unc:.2g})")
    return max(limit, 0.0)


def lelong_estimate(f: FunctionSpec, n: int, t_grid=DEFAULT_T_GRID,
                    scheme: IntegrationScheme | None = None) -> LelongEstimate:
    """Joint nu estimate; raises CheckFailed if the two routes disagree."""
    slope = lelong_by_slope(f, n, t_grid, scheme)
    avg = lelong_by_I(f, n, t_grid, scheme, p=1)
    by_slope = _clamp_nonnegative(slope.limit, slope.uncertainty, "slope")
    by_avg = _clamp_nonnegative(avg.limit, avg.uncertainty, "average")
    combined = slope.uncertainty + avg.uncertainty + 1e-4
    if abs(by_slope - by_avg) > combined:
        raise CheckFailed(
            f"slope and average routes disagree: {by_slope:.6g} vs "
            f"{by_avg:.6g} (allowed {combined:.2g})")
    trace = tuple(
        (t, float(s), float(v))
        for t, s, v in zip(slope.t_grid, slope.values, avg.values)
    )
    return LelongEstimate(by_slope, by_avg, slope.uncertainty,
                          avg.uncertainty, trace)


# ---------------------------------------------------------------------------
# directional slopes and M_A
# ---------------------------------------------------------------------------

def directional_lelong(f: FunctionSpec, zeta, chart: int = 0,
                       t_min: float = -40.0) -> float:
    """Limit of u_dot_t at one fixed chart direction."""
    if t_min > -1.0:
        raise BadRadii("t_min must be at most -1")
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    if not f.is_invariant:
        raise NotInvariant(f"{f.spec_text()} is not circle invariant")
    ts = [t_min / 8.0, t_min / 4.0, t_min / 2.0, t_min]
    vals = [float(_u_dot_values(f, t, zeta[None, :], chart)[0]) for t in ts]
    limit, _ = extrapolate_limit(ts, vals)
    return limit


def _golden_ascent(fun, x0: float, step: float, iters: int = 24) -> tuple[float, float]:
    """Golden-section maximization of `fun` on [x0 - step, x0 + step]."""
    inv = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = x0 - step, x0 + step
    c = b - inv * (b - a)
    d = a + inv * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = fun(d)
    if fc > fd:
        return c, fc
    return d, fd


def _max_directional_detail(f: FunctionSpec, n: int, A: float,
                            grid_density: int, scheme: IntegrationScheme):
    _check_dim(f, n)
    if A < 1.0:
        raise BadRadii("A must be at least 1")
    t = -float(A)
    rng = rng_stream(scheme.seed, STREAM_DIRECTION)
    xi = sample_sphere(n, max(8, grid_density), rng)
    charts, zeta, _ = project_ambient_batch(xi)

    best_val = -np.inf
    best = None
    for c in np.unique(charts):
        sel = charts == c
        ud = _u_dot_values(f, t, zeta[sel], int(c))
        i = int(np.argmax(ud))
        if ud[i] > best_val:
            best_val = float(ud[i])
            best = (int(c), zeta[sel][i].copy())
    # coordinate axis seeds: the supremum of toric members sits there
    origin = np.zeros((1, n), dtype=complex)
    for c in range(n + 1):
        try:
            v = float(_u_dot_values(f, t, origin, c)[0])
        except EvalFailure:
            continue
        if v > best_val:
            best_val = v
            best = (c, origin[0].copy())

    chart, point = best
    point = point.copy()
    last_gain = 0.0
    for round_ in range(3):
        step = 0.5 * 0.3 ** round_
        gain0 = best_val
        for j in range(n):
            for part in (0, 1):

                def fun(x, j=j, part=part):
                    q = point.copy()
                    q[j] = (x + 1j * q[j].imag) if part == 0 else (q[j].real + 1j * x)
                    return float(_u_dot_values(f, t, q[None, :], chart)[0])

                x0 = point[j].real if part == 0 else point[j].imag
                x, v = _golden_ascent(fun, x0, step)
                if v > best_val:
                    best_val = v
                    point[j] = (x + 1j * point[j].imag) if part == 0 else \
                        (point[j].real + 1j * x)
        last_gain = best_val - gain0
    gap = max(1e-9, 5.0 * last_gain)
    return best_val, gap, point, chart


def max_directional(f: FunctionSpec, n: int, A: float, grid_density: int = 512,
                    scheme: IntegrationScheme | None = None) -> float:
    """Sampled supremum M_A of the directional slope at level t = -A.

    A lower bound of the true supremum: covering sample plus
    coordinate-wise golden-section ascent (three shrinking rounds).
    """
    scheme = scheme or IntegrationScheme()
    value, _, _, _ = _max_directional_detail(f, n, A, grid_density, scheme)
    return value


def directional_profile(f: FunctionSpec, n: int, A_grid=DEFAULT_A_GRID,
                        grid_density: int = 512,
                        scheme: IntegrationScheme | None = None) -> DirectionalProfile:
    """M_A along an increasing grid, with the extrapolated limit lambda."""
    scheme = scheme or IntegrationScheme()
    As = tuple(float(a) for a in A_grid)
    if len(As) < 3 or any(b <= a for a, b in zip(As, As[1:])):
        raise InsufficientData("need at least three increasing A values")
    vals, gaps = [], []
    for A in As:
        v, g, _, _ = _max_directional_detail(f, n, A, grid_density, scheme)
        vals.append(v)
        gaps.append(g)
    vals = np.asarray(vals)
    gaps = np.asarray(gaps)
    slack = 1e-9 + gaps[:-1] + gaps[1:]
    rise = vals[1:] - vals[:-1]
    if np.any(rise > slack):
        i = int(np.argmax(rise - slack))
        raise CheckFailed(
            f"M_A increased from A={As[i]} to {As[i + 1]}: "
            f"{vals[i]:.6g} -> {vals[i + 1]:.6g}")
    profile = DirectionalProfile(As, vals, gaps, np.nan, np.nan)
    lam, unc = _lambda_from(profile)
    return DirectionalProfile(As, vals, gaps, lam, unc)


def _lambda_from(profile: DirectionalProfile) -> tuple[float, float]:
    limit, unc = extrapolate_limit(profile.A_grid, profile.M_values)
    lam = min(max(limit, 0.0), float(np.min(profile.M_values)))
    return lam, unc + float(np.max(profile.gaps))


def lambda_extrapolate(profile: DirectionalProfile) -> float:
    """Limit of M_A as A grows, clamped into [0, min M_A]."""
    if len(profile.A_grid) < 3:
        raise InsufficientData("need at least three A values")
    lam, _ = _lambda_from(profile)
    return lam


# ---------------------------------------------------------------------------
# the functionals I and calI
# ---------------------------------------------------------------------------

def functionals_I(f: FunctionSpec, n: int, t: float,
                  scheme: IntegrationScheme | None = None) -> tuple[float, float]:
    """(I, calI) at level t: averages of u_dot_t and of u_t, times pi^n.

    calI is a primitive of I in t; the pair is cross-checked by central
    differencing calI with delta = 0.01 on the same nodes.
    """
    scheme = scheme or IntegrationScheme()
    _check_dim(f, n)
    if t > -1.0:
        raise BadRadii("level t must be at most -1")
    nodes = mass_nodes(f, n, t, scheme)
    ud, vals = _values_on_nodes(f, t, nodes, with_value=True)
    I = nodes.average(ud).value * pi ** n
    calI = nodes.average(vals).value * pi ** n
    delta = 0.01
    up = nodes.average(_values_on_nodes(f, t + delta, nodes, with_value=True)[1]).value
    dn = nodes.average(_values_on_nodes(f, t - delta, nodes, with_value=True)[1]).value
    deriv = (up - dn) / (2.0 * delta) * pi ** n
    if abs(deriv - I) > 1e-4 * max(abs(I), 1.0):
        raise CheckFailed(
            f"calI is not a primitive of I at t={t}: dcalI/dt={deriv:.8g}, I={I:.8g}")
    return I, calI


# ---------------------------------------------------------------------------
# the two-radius infimum comparison
# ---------------------------------------------------------------------------

def infimum_gap_check(f: FunctionSpec, n: int, A1: float, A2: float,
                      scheme: IntegrationScheme | None = None) -> GapCheck:
    """Check -inf_{S_{R2}} u <= int_{A1}^{A2} M_T dT - inf_{S_{R1}} u.

    R_i = e^{-A_i}; infima over a shared direction sample plus the
    coordinate axes, the integral by trapezoid over 8 levels.  Members
    whose unbounded locus meets the spheres are handled by dropping
    non-finite samples.
    """
    scheme = scheme or IntegrationScheme()
    _check_dim(f, n)
    if not 1.0 < A1 < A2:
        raise BadRadii("need 1 < A1 < A2")

    rng = rng_stream(scheme.seed, STREAM_DIRECTION)
    xi = sample_sphere(n, min(scheme.samples, 50_000), rng)
    axes = np.eye(n + 1, dtype=complex)
    xi = np.vstack([xi, axes])

    def sampled_inf(radius: float) -> float:
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = f.value(radius * xi)
        vals = vals[np.isfinite(vals)]
        if vals.size == 0:
            raise EvalFailure("no finite sphere samples")
        return float(np.min(vals))

    inf1 = sampled_inf(float(np.exp(-A1)))
    inf2 = sampled_inf(float(np.exp(-A2)))

    Ts = np.linspace(A1, A2, 8)
    Ms = [max_directional(f, n, float(T), grid_density=256, scheme=scheme)
          for T in Ts]
    integral = float(np.trapezoid(Ms, Ts))
    slack = integral - inf1 + inf2
    passed = slack >= -1e-3
    if not passed:
        raise CheckFailed(
            f"infimum gap violated: inf S_R1 u = {inf1:.6g}, "
            f"inf S_R2 u = {inf2:.6g}, integral {integral:.6g}, slack {slack:.3g}")
    return GapCheck(integral, inf1, inf2, slack, passed)
