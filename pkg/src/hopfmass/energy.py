"""Energy functionals along the scaling ray and their structure checks.

The per-level functionals E_{n,k}(t) average (u_dot)^{n+1-k} against
the k-th wedge ratio of the transversal Hessian, scaled to the total
projective volume pi^n.  Their binomial contraction reproduces the
normalized boundary mass, the k = 0 term converges to the (n+1)-st
power of the Lelong number, and the k = n term is (up to the factor
n+1) the negative time derivative of the pluricomplex energy.  The
primitive of the mass is only ever used through differences, so the
concavity check works with a trapezoid antiderivative pinned to zero at
the shallowest radius.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import (BadRadii, CheckFailed, InsufficientData, OutsideDomain)
from .functions import FunctionSpec
from .mass import (BoundaryMassTrace, _check_dim, _gen_eigs_fs, _node_states,
                   _ratio_table, boundary_mass, boundary_mass_trace,
                   mass_nodes)
from .quadrature import Estimate, IntegrationScheme, NodeSet

__all__ = [
    "EnergyTrace",
    "ConcavityReport",
    "ZeroMassEnergyReport",
    "energy_terms",
    "pluricomplex_energy",
    "energy_trace",
    "concavity_check",
    "zero_mass_energy_check",
]


def _require_depth(t: float):
    if t > -1.0:
        raise BadRadii(f"energy functionals need t <= -1, got {t}")


def _scale(est: Estimate, c: float) -> Estimate:
    return Estimate(c * est.value, abs(c) * est.stderr, est.samples)


def _kernel_states(f: FunctionSpec, t: float, nodes: NodeSet):
    """Values, slopes, and the full wedge-ratio table at the nodes."""
    vals, ud, _, H = _node_states(f, t, nodes)
    ratios = _ratio_table(_gen_eigs_fs(nodes.zeta, H))
    return vals, ud, ratios


def energy_terms(f: FunctionSpec, n: int, t: float, scheme: IntegrationScheme,
                 nodes: NodeSet | None = None) -> list[Estimate]:
    """E_{n,k}(t) = pi^n <(u_dot)^{n+1-k} ratio_k(G, H)> for k = 0..n.

    The k = 0 term is the slope power alone; the k >= 1 terms vanish on
    average for members whose transversal Hessian integrates away.
    """
    _check_dim(f, n)
    _require_depth(t)
    if nodes is None:
        nodes = mass_nodes(f, n, t, scheme)
    _, ud, ratios = _kernel_states(f, t, nodes)
    pin = float(np.pi) ** n
    return [_scale(nodes.average(ud ** (n + 1 - k) * ratios[:, k]), pin)
            for k in range(n + 1)]


def pluricomplex_energy(f: FunctionSpec, n: int, t: float,
                        scheme: IntegrationScheme,
                        nodes: NodeSet | None = None) -> Estimate:
    """pi^n <(-u_t) ratio_n(G, H)>, requiring u_t < 0 on the nodes.

    A finite-difference cross-check of d(energy)/dt against
    -(n+1) E_{n,n}(t) runs on the same nodes and raises CheckFailed if
    the integration-by-parts relation drifts beyond 1e-3 relative.
    """
    _check_dim(f, n)
    _require_depth(t)
    if nodes is None:
        nodes = mass_nodes(f, n, t, scheme)
    vals, ud, ratios = _kernel_states(f, t, nodes)
    top = float(vals.max())
    if top >= 0.0:
        raise OutsideDomain(
            f"pluricomplex energy needs u_t < 0; found {top:.4g} at t={t}")
    pin = float(np.pi) ** n
    out = _scale(nodes.average(-vals * ratios[:, n]), pin)

    delta = 0.02
    if t + delta <= -1.0:
        vp, _, rp = _kernel_states(f, t + delta, nodes)
        vm, _, rm = _kernel_states(f, t - delta, nodes)
        fd = ((-vp) * rp[:, n] - (-vm) * rm[:, n]) / (2.0 * delta)
    else:
        # one-sided second-order stencil keeps every evaluation at t <= -1
        v1, _, r1 = _kernel_states(f, t - delta, nodes)
        v2, _, r2 = _kernel_states(f, t - 2.0 * delta, nodes)
        fd = (3.0 * (-vals) * ratios[:, n] - 4.0 * (-v1) * r1[:, n]
              + (-v2) * r2[:, n]) / (2.0 * delta)
    enn = ud * ratios[:, n]
    resid = nodes.average(fd + (n + 1) * enn)
    scale = max((n + 1) * abs(nodes.average(enn).value), 1.0)
    if abs(resid.value) > 1e-3 * scale + 3.0 * resid.stderr:
        raise CheckFailed(
            f"d(energy)/dt vs -(n+1)E_nn mismatch at t={t}: "
            f"residual {resid.value:.3e} against scale {scale:.3g}")
    return out


@dataclass(frozen=True)
class EnergyTrace:
    """Per-radius energy levels with the mass they must contract to."""

    t_grid: tuple
    E: np.ndarray            # (len(t_grid), n+1) term values
    M_prime: np.ndarray      # normalized boundary mass per t
    calE: np.ndarray         # pluricomplex energy per t
    E_stderr: np.ndarray
    mass_stderr: np.ndarray


def energy_trace(f: FunctionSpec, n: int, t_grid,
                 scheme: IntegrationScheme) -> EnergyTrace:
    """Evaluate the levels, the mass, and the energy on one node set.

    Raises CheckFailed if the binomial contraction of the levels drifts
    from the mass computed by the boundary-mass pipeline; both live on
    the same nodes, so any drift is a code fault, not quadrature noise.
    """
    _check_dim(f, n)
    ts = tuple(float(t) for t in t_grid)
    if any(b >= a for a, b in zip(ts, ts[1:])) or (ts and ts[0] > -1.0):
        raise BadRadii("t_grid must be strictly decreasing and start at t <= -1")
    nodes = mass_nodes(f, n, ts[-1], scheme)
    pin = float(np.pi) ** n
    E = np.empty((len(ts), n + 1))
    Eerr = np.empty_like(E)
    mass = np.empty(len(ts))
    merr = np.empty(len(ts))
    calE = np.empty(len(ts))
    for i, t in enumerate(ts):
        terms = energy_terms(f, n, t, scheme, nodes=nodes)
        E[i] = [e.value for e in terms]
        Eerr[i] = [e.stderr for e in terms]
        m = boundary_mass(f, n, t, scheme, nodes=nodes)
        mass[i], merr[i] = m.value, m.stderr
        calE[i] = pluricomplex_energy(f, n, t, scheme, nodes=nodes).value
        contracted = sum(comb(n + 1, k) * E[i, k] for k in range(n + 1)) / pin
        tol = 3.0 * (merr[i] + float(np.sum(Eerr[i])) / pin) + 1e-9
        if abs(contracted - mass[i]) > tol:
            raise CheckFailed(
                f"energy levels contract to {contracted:.9g} but the mass "
                f"pipeline gives {mass[i]:.9g} at t={t}")
        if E[i, 0] < -3.0 * Eerr[i, 0] - 1e-9:
            raise CheckFailed(f"negative slope-power level {E[i, 0]:.3e} at t={t}")
    return EnergyTrace(ts, E, mass, calE, Eerr, merr)


@dataclass(frozen=True)
class ConcavityReport:
    """Second differences of the mass primitive along the ray."""

    t_grid: tuple
    antiderivative: np.ndarray
    second_diffs: np.ndarray
    tolerance: np.ndarray
    affine: bool

    @property
    def verdict(self) -> str:
        return "affine" if self.affine else "concave"


def concavity_check(f: FunctionSpec, n: int, t_grid,
                    scheme: IntegrationScheme,
                    trace: BoundaryMassTrace | None = None) -> ConcavityReport:
    """Check concavity of the trapezoid primitive of -mass along t.

    The primitive is pinned to zero at the shallowest radius; only its
    second divided differences are inspected.  A positive second
    difference beyond 3 sigma means the mass decreased toward the
    origin, which no invariant plurisubharmonic member allows, so that
    raises CheckFailed.  When every second difference is zero within
    tolerance the ray is reported affine (the geodesic case).
    """
    _check_dim(f, n)
    ts = tuple(float(t) for t in t_grid)
    if len(ts) < 4:
        raise InsufficientData("concavity needs at least 4 radii")
    if trace is None:
        trace = boundary_mass_trace(f, n, ts, scheme)
    m = np.asarray(trace.mass, dtype=float)
    err = np.asarray(trace.stderr, dtype=float)
    F = np.zeros(len(ts))
    for i in range(len(ts) - 1):
        F[i + 1] = F[i] - 0.5 * (m[i] + m[i + 1]) * (ts[i + 1] - ts[i])
    slopes = np.diff(F) / np.diff(ts)
    gaps = np.array([ts[i + 2] - ts[i] for i in range(len(ts) - 2)])
    second = 2.0 * np.diff(slopes) / gaps
    svar = 0.25 * (err[:-1] ** 2 + err[1:] ** 2)
    floor = 1e-8 * max(1.0, float(np.max(np.abs(m))))
    tol = 3.0 * 2.0 * np.sqrt(svar[:-1] + svar[1:]) / np.abs(gaps) + floor
    bad = second > tol
    if np.any(bad):
        i = int(np.argmax(second - tol))
        raise CheckFailed(
            f"mass primitive convex near t={ts[i + 1]}: second difference "
            f"{second[i]:.3e} exceeds tolerance {tol[i]:.1e}")
    affine = bool(np.all(np.abs(second) <= tol))
    return ConcavityReport(ts, F, second, tol, affine)


@dataclass(frozen=True)
class ZeroMassEnergyReport:
    """Tail behavior of the mass and the Hessian levels for nu = 0."""

    t_grid: tuple
    mass: np.ndarray
    stokes_sum: np.ndarray
    verdict: str


def zero_mass_energy_check(f: FunctionSpec, n: int, t_grid,
                           scheme: IntegrationScheme) -> ZeroMassEnergyReport:
    """For members with vanishing Lelong number the mass and the k >= 1
    level sum must decrease monotonically and drop below 1e-2 by the
    deepest radius (the grid should reach t = -40).  A member with a
    genuine singularity fails the mass-tail criterion."""
    _check_dim(f, n)
    ts = tuple(float(t) for t in t_grid)
    trace = boundary_mass_trace(f, n, ts, scheme)
    nodes = mass_nodes(f, n, ts[-1], scheme)
    pin = float(np.pi) ** n
    S = np.empty(len(ts))
    for i, t in enumerate(ts):
        terms = energy_terms(f, n, t, scheme, nodes=nodes)
        S[i] = sum(comb(n + 1, k) * terms[k].value for k in range(1, n + 1)) / pin
    m = np.asarray(trace.mass, dtype=float)
    err = np.asarray(trace.stderr, dtype=float)
    slack = 3.0 * np.sqrt(err[:-1] ** 2 + err[1:] ** 2) + 1e-9
    if np.any(m[1:] > m[:-1] + slack):
        raise CheckFailed("boundary mass is not decreasing toward the origin")
    if m[-1] > 1e-2:
        raise CheckFailed(
            f"boundary mass tail {m[-1]:.4g} at t={ts[-1]} exceeds 1e-2; "
            "the member does not have vanishing Lelong number")
    if np.any(np.abs(S[1:]) > np.abs(S[:-1]) + slack + 1e-6):
        raise CheckFailed("Hessian level sum is not decreasing toward the origin")
    if abs(S[-1]) > 1e-2:
        raise CheckFailed(
            f"Hessian level sum tail {S[-1]:.4g} at t={ts[-1]} exceeds 1e-2")
    return ZeroMassEnergyReport(ts, m, S, "pass")
