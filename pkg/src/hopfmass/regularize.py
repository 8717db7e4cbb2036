"""Mollification at desk scale (n = 1) and its convergence checks.

The smoothing u_eps(z) = int_{|w|<=1} u(z - eps w) rho(w) dV(w) uses the
standard bump rho and a frozen Monte Carlo sample of the unit ball in
R^4, shared across evaluation points, radii, and epsilons.  Common
random numbers make finite differences of mollified values behave like
finite differences of one fixed smooth function, which is what lets the
derivative and boundary-mass checks below run at modest sample counts.

Everything here is restricted to n = 1 (C^2): per-point convolution
cost times the node counts of the mass kernels is already the budget
ceiling there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import (BadRadii, CheckFailed, OutsideDomain, TooCloseToOrigin,
                     UnsupportedDimension)
from .functions import FunctionSpec, transversal_batch, u_dot_batch
from .invariants import max_directional
from .mass import _gen_eigs_fs, _ratio_table, boundary_mass, mass_nodes
from .quadrature import (STREAM_DIRECTION, STREAM_MOLLIFY, STREAM_SHELL,
                         Estimate, IntegrationScheme, rng_stream,
                         sample_sphere)

__all__ = [
    "Mollifier",
    "bump_mollifier",
    "mollify_at",
    "FriedrichsReport",
    "friedrichs_check",
    "SlopeBoundReport",
    "mollified_slope_bound",
    "MassConvergenceReport",
    "mass_convergence_check",
]

_BALL_VOLUME = np.pi ** 2 / 2.0  # unit ball in R^4


def _bump_profile(r):
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


@dataclass(frozen=True)
class Mollifier:
    """The radial bump exp(-1/(1-r^2)) on the unit ball of R^4,
    normalized to unit mass.  `epsilon` is the rescaling radius."""

    epsilon: float
    normalization: float

    def value(self, r) -> np.ndarray:
        """rho at radius r of the unit-scale bump (not epsilon-scaled)."""
        return self.normalization * _bump_profile(r)

    def integral_selfcheck(self) -> float:
        """Unit-mass integral recomputed on an independent grid."""
        x, w = np.polynomial.legendre.leggauss(200)
        r = 0.5 * (x + 1.0)
        return float(2.0 * np.pi ** 2 * np.sum(0.5 * w * r ** 3 * self.value(r)))


def bump_mollifier(epsilon: float) -> Mollifier:
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    radial, _ = quad(lambda r: r ** 3 * np.exp(-1.0 / (1.0 - r * r)), 0.0, 1.0)
    m = Mollifier(float(epsilon), 1.0 / (2.0 * np.pi ** 2 * radial))
    if abs(m.integral_selfcheck() - 1.0) > 1e-6:
        raise CheckFailed("mollifier failed its unit-mass self-check")
    return m


_BALL_CACHE: dict = {}


def _ball_sample(seed: int, samples: int):
    """Frozen antithetic sample of the unit ball in R^4 as points of C^2,
    with the bump weights attached.  Antithetic pairing (w, -w) cancels
    every odd moment exactly, so smooth integrands mollify with O(eps^2)
    sample-exact bias, not O(eps)."""
    key = (seed, samples)
    if key not in _BALL_CACHE:
        rng = rng_stream(seed, STREAM_MOLLIFY)
        half = max(1, samples // 2)
        g = rng.normal(size=(half, 4))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        radii = rng.uniform(size=(half, 1)) ** 0.25
        pts = np.concatenate([g * radii, -g * radii])
        w = pts[:, 0] + 1j * pts[:, 1]
        w = np.column_stack([w, pts[:, 2] + 1j * pts[:, 3]])
        rho = bump_mollifier(1.0).value(np.linalg.norm(pts, axis=1))
        _BALL_CACHE[key] = (w, rho)
    return _BALL_CACHE[key]


def _require_plane(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex).reshape(-1)
    if z.shape[0] != 2:
        raise UnsupportedDimension("mollification is implemented for n = 1 only")
    return z


def _require_n1(f: FunctionSpec) -> None:
    if f.dim is not None and f.dim != 1:
        raise UnsupportedDimension("mollification is implemented for n = 1 only")


def _convolve(f: FunctionSpec, pts: np.ndarray, epsilon: float,
              scheme: IntegrationScheme):
    """Mollified values at a batch of C^2 points, with per-point stderr.

    Self-normalized importance estimate: the bump weights are divided by
    their own sample mass, so constants mollify exactly and the common
    noise of the weight mass never enters the values.  Works for any
    |pts| > 0; the log-type members of the catalog are locally
    integrable, so windows that overlap the origin still carry a finite
    convolution.
    """
    w, rho = _ball_sample(scheme.seed, scheme.samples)
    shifted = pts[:, None, :] - epsilon * w[None, :, :]
    vals = f.value(shifted.reshape(-1, 2)).reshape(len(pts), len(w))
    weights = rho / rho.sum()
    mean = vals @ weights
    resid = weights[None, :] * (vals - mean[:, None])
    stderr = np.sqrt(np.sum(resid ** 2, axis=1))
    return mean, stderr


def mollify_at(f: FunctionSpec, z, epsilon: float,
               scheme: IntegrationScheme | None = None) -> Estimate:
    """Estimate u_eps(z) = int_{|w|<=1} u(z - eps w) rho(w) dV(w).

    The evaluation point must clear the smoothing window (|z| > 2 eps);
    plurisubharmonicity makes the result a decreasing-in-epsilon upper
    envelope of u.
    """
    scheme = scheme or IntegrationScheme(samples=8192)
    z = _require_plane(z)
    _require_n1(f)
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    if np.linalg.norm(z) <= 2.0 * epsilon:
        raise TooCloseToOrigin(
            f"|z| = {np.linalg.norm(z):.4g} is within 2 eps = {2 * epsilon:.4g}")
    mean, stderr = _convolve(f, z[None, :], epsilon, scheme)
    return Estimate(float(mean[0]), float(stderr[0]), scheme.samples)


# ---------------------------------------------------------------------------
# Friedrichs commutator estimate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FriedrichsReport:
    points: np.ndarray
    lhs: np.ndarray
    stderr: np.ndarray
    bound: float
    grad_l1: float
    passed: bool


def friedrichs_check(f: FunctionSpec, points, epsilon: float,
                     scheme: IntegrationScheme | None = None,
                     delta: float = 0.1) -> FriedrichsReport:
    """Commutator of the radial scaling derivative with mollification.

    At each point the check compares r d_r(u * rho_eps) against
    r (d_r u * rho_eps); their gap must stay below 2 eps K where K
    estimates the L^1 norm of grad u on the slightly shrunk ball.  The
    first convolution is differenced radially on the frozen sample, the
    second convolves the analytic gradient.

    At points whose smoothing window is clear of the singular set of u
    the gap is second order in eps (the even bump kills the first-order
    term), so the bound holds with a wide margin; windows that approach
    the singular set fall back to genuine first-order behaviour and eat
    most of the margin.
    """
    scheme = scheme or IntegrationScheme(samples=8192)
    _require_n1(f)
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    if pts.shape[1] != 2:
        raise UnsupportedDimension("mollification is implemented for n = 1 only")
    radii = np.linalg.norm(pts, axis=1)
    if np.any(radii >= 1.0 - 2.0 * delta):
        raise OutsideDomain("points must stay in the ball of radius 1 - 2 delta")
    if epsilon >= delta:
        raise BadRadii("need eps < delta")
    if np.any(radii <= epsilon):
        raise TooCloseToOrigin("need eps < |z| at every point")

    # K: L^1 norm of the real gradient over B_{1-delta}, plain ball MC
    rng = rng_stream(scheme.seed, STREAM_SHELL)
    m = scheme.samples
    g = rng.normal(size=(m, 4))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    y4 = g * (1.0 - delta) * rng.uniform(size=(m, 1)) ** 0.25
    y = np.column_stack([y4[:, 0] + 1j * y4[:, 1], y4[:, 2] + 1j * y4[:, 3]])
    gnorm = 2.0 * np.linalg.norm(f.grad(y), axis=1)
    vol = _BALL_VOLUME * (1.0 - delta) ** 4
    K = float(vol * gnorm.mean())
    K_err = float(vol * gnorm.std() / np.sqrt(m))

    w, rho = _ball_sample(scheme.seed, scheme.samples)
    weights = rho / rho.sum()
    lhs = np.empty(len(pts))
    err = np.empty(len(pts))
    for i, z in enumerate(pts):
        # common-random-number differencing keeps the FD noise flat in s,
        # so a small step costs nothing and kills the truncation term
        s = 0.02 * epsilon / radii[i]      # radial step, ambient size 0.02 eps
        shifted = np.stack([(1.0 + s) * z[None, :] - epsilon * w,
                            (1.0 - s) * z[None, :] - epsilon * w])
        vals = f.value(shifted.reshape(-1, 2)).reshape(2, len(w))
        fd = (vals[0] - vals[1]) / (2.0 * s)
        y = z[None, :] - epsilon * w
        du = u_dot_batch(y, f.grad(y)) / np.linalg.norm(y, axis=1)
        diff = fd - radii[i] * du
        mean = float(diff @ weights)
        lhs[i] = abs(mean)
        err[i] = float(np.sqrt(np.sum((weights * (diff - mean)) ** 2)))

    bound = 2.0 * epsilon * K
    slack = 3.0 * (err + 2.0 * epsilon * K_err)
    ok = lhs <= bound + slack
    if not np.all(ok):
        j = int(np.argmax(lhs - bound - slack))
        raise CheckFailed(
            f"Friedrichs gap {lhs[j]:.4g} exceeds 2 eps K = {bound:.4g} "
            f"at z = {pts[j]}")
    return FriedrichsReport(pts, lhs, err, bound, K, True)


# ---------------------------------------------------------------------------
# slope bound of the regularization
# ---------------------------------------------------------------------------

def _mollified_slope_max(f: FunctionSpec, B: float, epsilon: float,
                         scheme: IntegrationScheme, directions: int):
    """Sampled sup of the radial slope of u_eps on the shell t = -B."""
    rng = rng_stream(scheme.seed, STREAM_DIRECTION)
    xi = sample_sphere(1, directions, rng)
    xi = np.concatenate([xi, np.eye(2, dtype=complex)])
    radius = float(np.exp(-B))
    # the smoothing window swallows the shell whenever eps >> e^{-B};
    # a quarter-radius step keeps both FD points inside the cone while
    # still resolving the eps-scale field
    h = 0.25
    up, ue = _convolve(f, (1.0 + h) * radius * xi, epsilon, scheme)
    dn, de = _convolve(f, (1.0 - h) * radius * xi, epsilon, scheme)
    slopes = (up - dn) / (2.0 * h)
    i = int(np.argmax(slopes))
    return float(slopes[i]), float(np.hypot(ue[i], de[i]) / (2.0 * h))


@dataclass(frozen=True)
class SlopeBoundReport:
    A: float
    B: float
    epsilons: tuple
    slopes: np.ndarray
    stderr: np.ndarray
    m_a: float
    c_hat: float
    intercept: float
    passed: bool


def mollified_slope_bound(f: FunctionSpec, A: float, B: float, epsilon_list,
                          scheme: IntegrationScheme | None = None,
                          directions: int = 192) -> SlopeBoundReport:
    """Affine-in-epsilon envelope M_B(u_eps) <= 2 M_A(u) + C eps.

    C is fitted from the measured slopes (two-point fit, least squares
    beyond two), so the verdict is envelope consistency: the fitted
    zero-epsilon intercept must not exceed 2 M_A(u), and every measured
    slope must sit on the fitted line within noise.  The constant is
    estimated, never asserted as sharp.
    """
    scheme = scheme or IntegrationScheme(samples=8192)
    _require_n1(f)
    if not 1.0 < A < B:
        raise BadRadii("need 1 < A < B")
    eps = tuple(sorted(float(e) for e in epsilon_list))
    if len(eps) < 2:
        raise BadRadii("need at least two epsilons to fit the envelope")
    # the lemma's own radius gap; the e^{-B} origin guard is waived since
    # the catalog's integrable singularities convolve finitely
    if eps[-1] >= 0.5 * (np.exp(-A) - np.exp(-B)):
        raise BadRadii("epsilons must stay below half the shell gap")

    m_a = max_directional(f, 1, A, grid_density=256, scheme=scheme)
    slopes = np.empty(len(eps))
    errs = np.empty(len(eps))
    for i, e in enumerate(eps):
        slopes[i], errs[i] = _mollified_slope_max(f, B, e, scheme, directions)

    c_hat = max(0.0, float(np.polyfit(eps, slopes, 1)[0]))
    intercept = float(np.max(slopes - c_hat * np.asarray(eps)))
    tol = 3.0 * errs + 1e-9
    line_ok = slopes <= 2.0 * m_a + c_hat * np.asarray(eps) + tol
    passed = bool(np.all(line_ok)) and intercept <= 2.0 * m_a + float(np.max(tol))
    if not passed:
        raise CheckFailed(
            f"slope envelope violated: intercept {intercept:.4g} vs "
            f"2 M_A = {2 * m_a:.4g}")
    return SlopeBoundReport(float(A), float(B), eps, slopes, errs, m_a,
                            c_hat, intercept, True)


# ---------------------------------------------------------------------------
# boundary-mass convergence under mollification
# ---------------------------------------------------------------------------

class _MollifiedMember:
    """u_eps with exact ambient calculus on the frozen ball sample.

    Derivatives commute with convolution, so the gradient and Hessian of
    u_eps are the mollified gradient and Hessian of u.  No finite
    differences enter, which keeps the mass kernel free of 1/h^2 noise
    amplification.
    """

    is_invariant = True

    def __init__(self, f: FunctionSpec, epsilon: float, seed: int, samples: int):
        self._f = f
        self._eps = float(epsilon)
        w, rho = _ball_sample(seed, samples)
        self._w = w
        self._weights = rho / rho.sum()

    def spec_text(self) -> str:
        return f"mollify({self._f.spec_text()}, eps={self._eps:g})"

    def _shifted(self, z: np.ndarray) -> np.ndarray:
        return (z[:, None, :] - self._eps * self._w[None, :, :]).reshape(-1, 2)

    def value(self, z) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=complex))
        vals = self._f.value(self._shifted(z)).reshape(len(z), -1)
        return vals @ self._weights

    def grad(self, z) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=complex))
        g = self._f.grad(self._shifted(z)).reshape(len(z), -1, 2)
        return np.einsum("NSj,S->Nj", g, self._weights)

    def hess(self, z) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=complex))
        hm = self._f.hess(self._shifted(z)).reshape(len(z), -1, 2, 2)
        return np.einsum("NSjk,S->Njk", hm, self._weights)


def _mollified_mass(f: FunctionSpec, t: float, epsilon: float, nodes,
                    scheme: IntegrationScheme) -> float:
    """Boundary mass of u_eps on the same nodes as the reference mass."""
    fe = _MollifiedMember(f, epsilon, scheme.seed, scheme.samples)
    N = nodes.zeta.shape[0]
    ud = np.empty(N)
    H = np.empty((N, 1, 1), dtype=complex)
    step = max(1, 200_000 // scheme.samples)
    for c in np.unique(nodes.charts):
        sel = np.where(nodes.charts == c)[0]
        for lo in range(0, len(sel), step):
            idx = sel[lo:lo + step]
            _, ud[idx], H[idx] = transversal_batch(fe, t, nodes.zeta[idx], int(c))
    ratios = _ratio_table(_gen_eigs_fs(nodes.zeta, H))
    kern = 2.0 * ud * ratios[:, 1] + ud ** 2 * ratios[:, 0]
    return float(nodes.average(kern).value)


@dataclass(frozen=True)
class MassConvergenceReport:
    t: float
    epsilons: tuple
    masses: np.ndarray
    reference: float
    gaps: np.ndarray
    sigma: float
    passed: bool


def mass_convergence_check(f: FunctionSpec, t: float, epsilon_list,
                           scheme: IntegrationScheme | None = None,
                           replicates: int = 2) -> MassConvergenceReport:
    """Boundary mass of u_eps approaches the boundary mass of u.

    Both masses share one node set so the gaps carry no independent
    placement noise; sigma comes from replicate ball samples.  The
    smoothing windows must stay well inside the shell (e^t >= 4 max eps),
    which keeps every convolution off the origin.
    """
    scheme = scheme or IntegrationScheme(kind="tensor", samples=2048)
    _require_n1(f)
    if t > -2.0:
        raise BadRadii("need t <= -2")
    eps = tuple(sorted((float(e) for e in epsilon_list), reverse=True))
    if len(eps) < 2:
        raise BadRadii("need at least two epsilons")
    if np.exp(t) < 4.0 * eps[0]:
        raise BadRadii("shell too deep for the smoothing window: need e^t >= 4 eps")

    nodes = mass_nodes(f, 1, t, scheme)
    ref = boundary_mass(f, 1, t, scheme, nodes=nodes)
    runs = np.empty((replicates, len(eps)))
    for r in range(replicates):
        sub = IntegrationScheme(kind=scheme.kind, samples=scheme.samples,
                                seed=scheme.seed + 1000 * r,
                                chart_order=scheme.chart_order,
                                phi_order=scheme.phi_order)
        for j, e in enumerate(eps):
            runs[r, j] = _mollified_mass(f, t, e, nodes, sub)
    masses = runs.mean(axis=0)
    sigma = float(np.max(runs.std(axis=0, ddof=1)) / np.sqrt(replicates)) \
        if replicates > 1 else 0.0
    gaps = np.abs(masses - ref.value)
    slack = 3.0 * (sigma + ref.stderr) + 1e-9
    decreasing = all(b <= a + slack for a, b in zip(gaps, gaps[1:]))
    # the residual gap at the smallest eps is honest smoothing bias, so
    # closeness is judged by contraction rather than by noise level
    final_ok = gaps[-1] <= 0.6 * gaps[0] + slack
    if not (decreasing and final_ok):
        raise CheckFailed(
            f"mollified mass does not converge: gaps {gaps} vs reference "
            f"{ref.value:.6g} (sigma {sigma:.2g})")
    return MassConvergenceReport(float(t), eps, masses, float(ref.value),
                                 gaps, sigma, True)
