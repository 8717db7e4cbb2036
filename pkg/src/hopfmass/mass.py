"""Boundary Monge-Ampere mass on spheres and its decomposition.

Conventions (see :mod:`hopfmass.geometry`): d^c = (i/2)(dbar - d), so
dd^c u = i ddbar u.  The normalized mass of the ball B_r, r = e^t, equals
the sphere integral

    m(t) = pi^{-(n+1)} int_{S_r} d^c u wedge (dd^c u)^n
         = pi^{-n} sum_k C(n+1, k) int (u_dot)^{n+1-k} *
           [omega^{n-k} wedge (d_B d^c_B u)^k / omega^n] omega^n,

a binomial sum over mixed transversal powers.  The bracket is computed
pointwise by ``mixed_wedge_ratio``: writing lambda for the generalized
eigenvalues of the chart Hessian H against the Fubini-Study metric G,

    omega^{n-k} wedge b^k = [k! (n-k)! / n!] sigma_k(lambda) omega^n.

Everything here reduces to (u_dot, G, H) at chart nodes plus Hermitian
eigenvalue work; the ambient shell integral of det(Hess u) provides a
fully independent oracle for mass differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial, pi

import numpy as np

from .errors import (BadRadii, CheckFailed, DimensionMismatch,
                     NotPositiveDefinite, UnsupportedDimension)
from .functions import FunctionSpec, transversal_batch
from .geometry import fs_metric_at, project_ambient_batch
from .quadrature import (STREAM_CPN, STREAM_POSITIVITY, STREAM_SHELL, Estimate,
                         IntegrationScheme, NodeSet, cpn_nodes,
                         extrapolate_limit, integrate_shell, rng_stream,
                         sample_sphere, toric_nodes)

__all__ = [
    "TransversalState",
    "BoundaryMassTrace",
    "PositivityReport",
    "mixed_wedge_ratio",
    "transversal_state",
    "positivity_check",
    "mass_nodes",
    "boundary_mass",
    "boundary_mass_alternating",
    "theta_terms",
    "shell_oracle",
    "boundary_mass_trace",
    "residual_mass",
]


# ---------------------------------------------------------------------------
# eigenvalue kernel
# ---------------------------------------------------------------------------

def _gen_eigs_batch(G: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Generalized eigenvalues of H against Hermitian PD G, ascending,
    batched over the leading axis.  Cholesky congruence G = L L^*,
    M = L^{-1} H L^{-*}; M is Hermitian with the sought spectrum."""
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("metric block is not positive definite") from exc
    A = np.linalg.solve(L, H)
    M = np.linalg.solve(L, A.conj().swapaxes(-1, -2))
    M = 0.5 * (M + M.conj().swapaxes(-1, -2))
    return np.linalg.eigvalsh(M)


def _fs_whitener(zeta: np.ndarray) -> np.ndarray:
    """Closed-form W = G^{-1/2} for the Fubini-Study metric at zeta.

    G has the exact spectral form [P + (1+s)Q] / (2(1+s)^2) with
    s = |zeta|^2, P the orthogonal projector onto conj(zeta) and
    Q = I - P, so W = sqrt(2(1+s)) (I + c P), c = s / (sqrt(1+s) + 1).
    Unlike a Cholesky factorization of G, this stays accurate at the far
    chart nodes where G's condition number (1 + s) exceeds 1/eps.
    """
    zeta = np.asarray(zeta, dtype=complex)
    nn = zeta.shape[-1]
    sq = np.sum(np.abs(zeta) ** 2, axis=-1)
    u = np.zeros_like(zeta)
    nz = sq > 0
    u[nz] = np.conj(zeta[nz]) / np.sqrt(sq[nz])[..., None]
    P = u[..., :, None] * np.conj(u)[..., None, :]
    c = sq / (np.sqrt(1.0 + sq) + 1.0)
    W = np.sqrt(2.0 * (1.0 + sq))[..., None, None] \
        * (np.eye(nn) + c[..., None, None] * P)
    return W


def _gen_eigs_fs(zeta: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Generalized eigenvalues of H against the FS metric at zeta,
    ascending, via the closed-form whitener."""
    W = _fs_whitener(zeta)
    M = W @ H @ W
    M = 0.5 * (M + M.conj().swapaxes(-1, -2))
    return np.linalg.eigvalsh(M)


def _elementary_symmetric(eigs: np.ndarray) -> np.ndarray:
    """All elementary symmetric polynomials of the rows: (N, n) -> (N, n+1)."""
    N, n = eigs.shape
    e = np.zeros((N, n + 1))
    e[:, 0] = 1.0
    for i in range(n):
        e[:, 1:i + 2] += eigs[:, i:i + 1] * e[:, 0:i + 1]
    return e


def _ratio_table(eigs: np.ndarray) -> np.ndarray:
    """ratio_k = sigma_k(eigs) * k!(n-k)!/n! for k = 0..n, batched."""
    n = eigs.shape[1]
    binom = np.array([comb(n, k) for k in range(n + 1)], dtype=float)
    return _elementary_symmetric(eigs) / binom


def mixed_wedge_ratio(G, H, k: int) -> float:
    """Pointwise coefficient of omega^{n-k} wedge b^k against omega^n,
    where b is the (1,1)-form with Hermitian matrix H and omega has the
    positive definite matrix G."""
    G = np.asarray(G, dtype=complex)
    H = np.asarray(H, dtype=complex)
    if G.shape != H.shape or G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise DimensionMismatch("G and H must be square matrices of equal size")
    n = G.shape[0]
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in 0..{n}")
    if k == 0:
        return 1.0
    eigs = _gen_eigs_batch(G[None], H[None])
    return float(_ratio_table(eigs)[0, k])


# ---------------------------------------------------------------------------
# transversal states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransversalState:
    """Chart data of u at one Hopf point: slope, metric, Hessian, and the
    generalized eigenvalues of H against G (ascending).  The positivity
    of u_dot + eigs[0] is the pointwise form of transversal positivity
    for plurisubharmonic u."""

    u_dot: float
    G: np.ndarray
    H: np.ndarray
    eigs: np.ndarray


def transversal_state(f: FunctionSpec, t: float, zeta, chart: int = 0) -> TransversalState:
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    _, ud, H = transversal_batch(f, t, zeta[None, :], chart)
    G = fs_metric_at(zeta[None, :])[0]
    eigs = _gen_eigs_fs(zeta[None, :], H)[0]
    return TransversalState(float(ud[0]), G, H[0], eigs)


def _node_states(f: FunctionSpec, t: float, nodes: NodeSet):
    """u_t values, slopes, metric and Hessian at every node."""
    N, n = nodes.zeta.shape
    vals = np.empty(N)
    ud = np.empty(N)
    H = np.empty((N, n, n), dtype=complex)
    for c in np.unique(nodes.charts):
        sel = nodes.charts == c
        v, u, Hc = transversal_batch(f, t, nodes.zeta[sel], int(c))
        vals[sel], ud[sel], H[sel] = v, u, Hc
    G = fs_metric_at(nodes.zeta)
    return vals, ud, G, H


def positivity_check(f: FunctionSpec, n: int, t_grid, samples: int = 2000,
                     seed: int = 0) -> "PositivityReport":
    """Minimum generalized eigenvalue of (u_dot G + H) against G over
    random chart points at each t.  For plurisubharmonic u this matrix is
    the transversal part of a positive current and the minimum must be
    >= -1e-6; a clear violation raises CheckFailed with the witness."""
    _check_dim(f, n)
    rng = rng_stream(seed, STREAM_POSITIVITY)
    worst = np.inf
    witness = None
    total = 0
    for t in t_grid:
        z = sample_sphere(n, samples, rng)
        charts, zeta, _ = project_ambient_batch(z)
        for c in np.unique(charts):
            sel = charts == c
            _, ud, H = transversal_batch(f, float(t), zeta[sel], int(c))
            theta2_min = ud + _gen_eigs_fs(zeta[sel], H)[:, 0]
            i = int(np.argmin(theta2_min))
            total += int(np.sum(sel))
            if theta2_min[i] < worst:
                worst = float(theta2_min[i])
                witness = (float(t), zeta[sel][i].copy(), int(c))
    report = PositivityReport(min_eig=worst, witness_t=witness[0],
                              witness_zeta=witness[1], witness_chart=witness[2],
                              checked=total)
    if worst < -1e-6:
        raise CheckFailed(
            f"transversal positivity violated: min eigenvalue {worst:.3e} at "
            f"t={witness[0]}, zeta={witness[1]}, chart {witness[2]}")
    return report


@dataclass(frozen=True)
class PositivityReport:
    min_eig: float
    witness_t: float
    witness_zeta: np.ndarray
    witness_chart: int
    checked: int


# ---------------------------------------------------------------------------
# boundary mass
# ---------------------------------------------------------------------------

def _check_dim(f: FunctionSpec, n: int):
    if f.dim is not None and f.dim != n:
        raise DimensionMismatch(f"{f.spec_text()} has dimension {f.dim}, not {n}")


def mass_nodes(f: FunctionSpec, n: int, t_min: float,
               scheme: IntegrationScheme, stream: int = STREAM_CPN) -> NodeSet:
    """Evaluation nodes suited to boundary-mass kernels of f down to
    log-radius t_min.  Deterministic schemes cover the symmetric
    log-radius window [t_min - pad, |t_min| + pad]: depending on which
    coordinate carries the singular weight, the kernel's curvature
    features can sit near chart log-radius t (weight on the chart axis)
    or near -t (weight at infinity of the chart).  Monte Carlo nodes are
    radius blind."""
    if scheme.kind == "mc":
        return cpn_nodes(n, scheme, stream)
    window = (t_min - 12.0, abs(t_min) + 12.0)
    if f.moduli_only:
        return toric_nodes(n, scheme, window)
    if n == 1:
        return cpn_nodes(n, scheme, stream, radial_window=window)
    raise UnsupportedDimension(
        "deterministic nodes need n = 1 or a moduli-only member at n = 2; "
        "use an mc scheme instead")


def boundary_mass(f: FunctionSpec, n: int, t: float, scheme: IntegrationScheme,
                  return_terms: bool = False, nodes: NodeSet | None = None):
    """Normalized boundary mass m(t) of the sphere of radius e^t.

    With return_terms=True also returns the n+1 binomial summands
    C(n+1,k) <(u_dot)^{n+1-k} ratio_k> as Estimates (k = 0 is the pure
    slope part; k >= 1 vanish by Stokes whenever u_dot is constant and H
    is a global Hessian on CP^n).
    """
    _check_dim(f, n)
    if nodes is None:
        nodes = mass_nodes(f, n, t, scheme)
    _, ud, _, H = _node_states(f, t, nodes)
    ratios = _ratio_table(_gen_eigs_fs(nodes.zeta, H))
    kern = np.zeros(len(ud))
    terms = []
    for k in range(n + 1):
        term_vals = comb(n + 1, k) * ud ** (n + 1 - k) * ratios[:, k]
        kern += term_vals
        if return_terms:
            terms.append(nodes.average(term_vals))
    est = nodes.average(kern)
    return (est, terms) if return_terms else est


def boundary_mass_alternating(f: FunctionSpec, n: int, t: float,
                              scheme: IntegrationScheme,
                              nodes: NodeSet | None = None) -> Estimate:
    """The same mass written against the combined form e = u_dot a + b:

        m(t) = sum_j C(n+1, j+1) (-1)^j <(u_dot)^{j+1} ratio_{n-j}(G, u_dot G + H)>

    Pointwise algebraically equal to `boundary_mass`; evaluated on the
    same nodes it must agree to rounding, which is the implemented
    self-check of the alternating rewrite.
    """
    _check_dim(f, n)
    if nodes is None:
        nodes = mass_nodes(f, n, t, scheme)
    _, ud, G, H = _node_states(f, t, nodes)
    Hb = ud[:, None, None] * G + H
    ratios = _ratio_table(_gen_eigs_fs(nodes.zeta, Hb))
    kern = np.zeros(len(ud))
    for j in range(n + 1):
        kern += comb(n + 1, j + 1) * (-1.0) ** j * ud ** (j + 1) * ratios[:, n - j]
    return nodes.average(kern)


def theta_terms(f: FunctionSpec, n: int, t: float, scheme: IntegrationScheme,
                nodes: NodeSet | None = None) -> list[Estimate]:
    """Per-k averages <(u_dot)^{n+1-k} ratio_k(G, u_dot G + H)>, k = 0..n.

    These are the positive building blocks of the alternating mass form;
    each is bounded by a Bell-number multiple of M_A^n times the average
    of u_dot, which the inequality harness checks term by term.
    """
    _check_dim(f, n)
    if nodes is None:
        nodes = mass_nodes(f, n, t, scheme)
    _, ud, G, H = _node_states(f, t, nodes)
    Hb = ud[:, None, None] * G + H
    ratios = _ratio_table(_gen_eigs_fs(nodes.zeta, Hb))
    return [nodes.average(ud ** (n + 1 - k) * ratios[:, k]) for k in range(n + 1)]


def shell_oracle(f: FunctionSpec, n: int, t1: float, t2: float,
                 scheme: IntegrationScheme) -> Estimate:
    """Independent estimate of m(t2) - m(t1): the Monge-Ampere measure of
    the shell e^{t1} < |z| < e^{t2} computed purely from the ambient
    Hessian determinant,

        pi^{-(n+1)} (n+1)! 2^{n+1} int_shell det(Hess u) dV.

    No Hopf machinery enters; agreement with boundary-mass differences is
    the main cross-oracle consistency check.
    """
    _check_dim(f, n)
    if not t1 < t2 <= -1.0 + 1e-12:
        raise BadRadii("need t1 < t2 <= -1")

    def g(z):
        return np.linalg.det(f.hess(z)).real

    est = integrate_shell(g, float(np.exp(t1)), float(np.exp(t2)), n,
                          scheme, STREAM_SHELL)
    scale = factorial(n + 1) * 2.0 ** (n + 1) / pi ** (n + 1)
    return Estimate(est.value * scale, est.stderr * scale, est.samples)


# ---------------------------------------------------------------------------
# traces over t and the residual mass
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryMassTrace:
    """Boundary mass along a decreasing t grid, with the per-k summands.
    All entries share one node set, so differences across t are free of
    independent sampling noise."""

    t_grid: tuple
    mass: np.ndarray     # (len(t_grid),)
    per_k: list          # per t: list of n+1 summand values
    stderr: np.ndarray   # (len(t_grid),)


def boundary_mass_trace(f: FunctionSpec, n: int, t_grid,
                        scheme: IntegrationScheme) -> BoundaryMassTrace:
    t_grid = tuple(float(t) for t in t_grid)
    if len(t_grid) < 1 or any(b >= a for a, b in zip(t_grid, t_grid[1:])):
        raise BadRadii("t grid must be strictly decreasing")
    nodes = mass_nodes(f, n, min(t_grid), scheme)
    mass, errs, per_k = [], [], []
    for t in t_grid:
        est, terms = boundary_mass(f, n, t, scheme, return_terms=True, nodes=nodes)
        mass.append(est.value)
        errs.append(est.stderr)
        per_k.append([term.value for term in terms])
    return BoundaryMassTrace(t_grid, np.array(mass), per_k, np.array(errs))


def residual_mass(f: FunctionSpec, n: int, t_grid, scheme: IntegrationScheme):
    """(tau, uncertainty, trace): the limit of m(t) as t -> -infinity by
    extrapolation along the decreasing grid.  The uncertainty combines the
    extrapolation residual with 3x the quadrature error at the deepest t."""
    trace = boundary_mass_trace(f, n, t_grid, scheme)
    tau, unc = extrapolate_limit(np.array(trace.t_grid), trace.mass)
    unc = float(unc + 3.0 * trace.stderr[-1])
    return float(tau), unc, trace
