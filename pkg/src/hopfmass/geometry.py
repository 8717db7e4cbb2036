"""Hopf-fibration coordinates on C^{n+1} minus the origin.

The unit sphere S^{2n+1} fibres over projective space CP^n with circle
fibre.  A point z != 0 is described by a chart index c (the largest
ambient coordinate), affine coordinates zeta in C^n on CP^n, the
log-radius t = log|z| and the fibre angle theta:

    z^c      = e^{t + i theta} / (1 + |zeta|^2)^{1/2}
    z^j      = zeta^{alpha(j)} * z^c          for j != c

where alpha enumerates the non-chart slots in increasing index order.
This chart is single valued; an older multivalued variant that spreads
the phase over all coordinates through the factor
rho = prod (conj(zeta^a)/|zeta^a|)^{1/2} is provided on a fixed
principal branch purely as a formula cross-check (`hopf_to_ambient_sym`).

Conventions used throughout the package:

    d^c  = (i/2)(dbar - d),   d d^c = i d dbar
    omega_FS = i * sum G_{a b} dzeta^a wedge dzeta-bar^b
    G_{a b}  = complex Hessian of (1/2) log(1 + |zeta|^2)

so that the Fubini-Study volume satisfies int_{CP^n} omega_FS^n = pi^n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CheckFailed, DimensionMismatch, OnAxis, ZeroPoint

__all__ = [
    "HopfPoint",
    "hopf_to_ambient",
    "hopf_to_ambient_sym",
    "ambient_to_hopf",
    "fs_metric_at",
    "contact_form_coeffs",
    "contact_selfcheck",
    "chart_section",
    "project_ambient_batch",
]


@dataclass(frozen=True)
class HopfPoint:
    """Chart description of a nonzero ambient point."""

    t: float
    theta: float
    zeta: np.ndarray  # shape (n,), complex
    chart: int

    @property
    def n(self) -> int:
        return len(self.zeta)


def chart_section(zeta: np.ndarray, chart: int) -> np.ndarray:
    """Holomorphic section c(zeta) in C^{n+1}: 1 at the chart slot, the
    zeta components at the remaining slots in index order."""
    zeta = np.asarray(zeta, dtype=complex)
    n = zeta.shape[-1]
    if not 0 <= chart <= n:
        raise DimensionMismatch(f"chart {chart} out of range for n={n}")
    sec = np.empty(zeta.shape[:-1] + (n + 1,), dtype=complex)
    sec[..., chart] = 1.0
    others = [j for j in range(n + 1) if j != chart]
    sec[..., others] = zeta
    return sec


def hopf_to_ambient(t: float, theta: float, zeta, chart: int = 0) -> np.ndarray:
    """Map chart data (t, theta, zeta, chart) to the ambient point."""
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    sec = chart_section(zeta, chart)
    norm = np.sqrt(1.0 + np.sum(np.abs(zeta) ** 2, axis=-1))
    return np.exp(t + 1j * theta) * sec / norm[..., None]


def hopf_to_ambient_sym(t: float, theta: float, zeta, chart: int = 0) -> np.ndarray:
    """Symmetrized chart map with the multivalued phase-spreading factor
    rho = prod_a (conj(zeta^a)/|zeta^a|)^{1/2}, evaluated on the branch
    that takes principal square roots factor by factor.

    Provided only as a documented formula check: it lands on the same
    circle orbit as `hopf_to_ambient` but is discontinuous across the
    negative real axes of the zeta coordinates.  Requires all zeta^a != 0.
    """
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    if np.any(np.abs(zeta) == 0.0):
        raise OnAxis("symmetrized chart map needs all zeta components nonzero")
    phase = np.prod(np.sqrt(np.conj(zeta) / np.abs(zeta)))
    return phase * hopf_to_ambient(t, theta, zeta, chart)


def ambient_to_hopf(z) -> HopfPoint:
    """Invert the chart map.  The chart is the index of the largest
    |z^j| (lowest index wins ties), which keeps |zeta| <= sqrt(n)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    r = np.linalg.norm(z)
    if r == 0.0:
        raise ZeroPoint("origin has no chart description")
    mags = np.abs(z)
    chart = int(np.argmax(mags))  # argmax returns the first maximizer
    others = [j for j in range(z.shape[0]) if j != chart]
    zeta = z[others] / z[chart]
    return HopfPoint(
        t=float(np.log(r)),
        theta=float(np.angle(z[chart])),
        zeta=zeta,
        chart=chart,
    )


def project_ambient_batch(z: np.ndarray):
    """Vectorized chart projection for a batch of ambient points.

    Returns (chart indices (N,), zeta (N, n), t (N,)).  Used by the
    quadrature and mass layers; rows must be nonzero.
    """
    z = np.asarray(z, dtype=complex)
    mags = np.abs(z)
    r = np.linalg.norm(z, axis=-1)
    if np.any(r == 0.0):
        raise ZeroPoint("batch contains the origin")
    charts = np.argmax(mags, axis=-1)
    nplus1 = z.shape[-1]
    rows = np.arange(z.shape[0])
    pivot = z[rows, charts]
    zeta = np.empty((z.shape[0], nplus1 - 1), dtype=complex)
    for c in range(nplus1):
        sel = charts == c
        if not np.any(sel):
            continue
        others = [j for j in range(nplus1) if j != c]
        zeta[sel] = z[np.ix_(np.flatnonzero(sel), others)] / pivot[sel, None]
    return charts, zeta, np.log(r)


def fs_metric_at(zeta) -> np.ndarray:
    """Fubini-Study metric matrix G at zeta: the complex Hessian of
    (1/2) log(1 + |zeta|^2),

        G[a, b] = ((1 + |zeta|^2) delta_ab - conj(zeta^a) zeta^b)
                  / (2 (1 + |zeta|^2)^2).

    Hermitian positive definite; equals I/2 at zeta = 0.

    The numerator diagonal is assembled as 1 + sum_{c != a} |zeta^c|^2
    rather than as the difference (1 + |zeta|^2) - |zeta^a|^2, which
    cancels catastrophically (to an exactly singular matrix) once
    |zeta|^2 exceeds 1/eps.
    """
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    sq = np.abs(zeta) ** 2
    n = zeta.shape[-1]
    s = 1.0 + np.sum(sq, axis=-1)
    num = -np.conj(zeta)[..., :, None] * zeta[..., None, :]
    hollow = np.ones((n, n)) - np.eye(n)
    idx = np.arange(n)
    num[..., idx, idx] = 1.0 + sq @ hollow
    return num / (2.0 * s[..., None, None] ** 2)


def contact_form_coeffs(zeta) -> np.ndarray:
    """Coefficients cos kappa_a = 1 - 2|zeta^a|^2 / (1 + |zeta|^2) of the
    contact form

        eta = (1/4) { dtheta - sum_a cos kappa_a Im(dzeta^a / zeta^a) },

    written in a chart where every zeta^a is nonzero."""
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    if np.any(np.abs(zeta) == 0.0):
        raise OnAxis("contact coefficients need all zeta components nonzero")
    s = 1.0 + np.sum(np.abs(zeta) ** 2)
    return 1.0 - 2.0 * np.abs(zeta) ** 2 / s


# ---------------------------------------------------------------------------
# self-checks
# ---------------------------------------------------------------------------

def _eta0_coeffs(x: np.ndarray) -> np.ndarray:
    """Real coefficient vector of eta_0 = (1/r^2) sum (y^A dx^A - x^A dy^A)
    at the real point x = (x^0, y^0, x^1, y^1, ...)."""
    r2 = np.dot(x, x)
    c = np.empty_like(x)
    c[0::2] = x[1::2] / r2   # dx^A coefficient: y^A / r^2
    c[1::2] = -x[0::2] / r2  # dy^A coefficient: -x^A / r^2
    return c


def _reeb_vector(x: np.ndarray) -> np.ndarray:
    """xi_0 = sum (y^A d/dx^A - x^A d/dy^A) at x."""
    v = np.empty_like(x)
    v[0::2] = x[1::2]
    v[1::2] = -x[0::2]
    return v


def _d_oneform(coeff_fn, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Exterior derivative matrix D[i, j] = d_i c_j - d_j c_i by central
    finite differences, so (d eta)(V, W) = V . D . W."""
    m = x.size
    jac = np.empty((m, m))
    for i in range(m):
        e = np.zeros(m)
        e[i] = h
        jac[i] = (coeff_fn(x + e) - coeff_fn(x - e)) / (2.0 * h)
    return jac - jac.T


def _complexify(x: np.ndarray) -> np.ndarray:
    return x[0::2] + 1j * x[1::2]


def _realify(z: np.ndarray) -> np.ndarray:
    out = np.empty(2 * z.size)
    out[0::2] = z.real
    out[1::2] = z.imag
    return out


def contact_selfcheck(n: int, samples: int = 64, seed: int = 0,
                      perturb: float = 0.0) -> dict:
    """Verify the structural facts of the contact geometry numerically.

    At `samples` uniform points of S^{2n+1} (away from coordinate axes):

      (i)   eta_0(xi_0) = 1,
      (ii)  iota_{xi_0} d eta_0 = 0 with d taken by finite differences,
      (iii) d eta = omega_FS pulled back through the chart projection,
            where eta = -eta_0 / 2.

    Returns a dict of maximal residuals; raises CheckFailed if any residual
    exceeds 1e-6.  `perturb` adds a constant to one eta coefficient and is
    only used to demonstrate that the check actually bites.
    """
    rng = np.random.Generator(np.random.Philox(key=[np.uint64(seed), np.uint64(17)]))
    dim = 2 * (n + 1)
    worst = {"reeb_pairing": 0.0, "reeb_contraction": 0.0, "fs_match": 0.0}

    def eta0_coeffs(x):
        c = _eta0_coeffs(x)
        if perturb:
            # scale one coefficient; a constant shift would be killed by d
            c = c.copy()
            c[0] *= 1.0 + perturb
        return c

    def eta_coeffs(x):
        return -0.5 * eta0_coeffs(x)

    count = 0
    while count < samples:
        x = rng.standard_normal(dim)
        x /= np.linalg.norm(x)
        z = _complexify(x)
        if np.min(np.abs(z)) < 0.2 / np.sqrt(n + 1):
            continue  # keep finite differences well conditioned
        count += 1

        xi = _reeb_vector(x)
        # (i) pairing
        worst["reeb_pairing"] = max(
            worst["reeb_pairing"], abs(np.dot(eta0_coeffs(x), xi) - 1.0))

        # (ii) contraction of d eta_0 with the Reeb field
        d0 = _d_oneform(eta0_coeffs, x)
        worst["reeb_contraction"] = max(
            worst["reeb_contraction"], np.max(np.abs(xi @ d0)))

        # (iii) d eta against omega_FS through the chart projection
        deta = _d_oneform(eta_coeffs, x)
        hp = ambient_to_hopf(z)
        G = fs_metric_at(hp.zeta)
        others = [j for j in range(n + 1) if j != hp.chart]

        def chart_zeta(y):
            # projection in the frozen chart of the base point, so the
            # finite differences below stay on one smooth branch
            zy = _complexify(y)
            return zy[others] / zy[hp.chart]

        for _ in range(2):
            v = rng.standard_normal(dim)
            w = rng.standard_normal(dim)
            lhs = v @ deta @ w
            h = 1e-6
            dv = (chart_zeta(x + h * v) - chart_zeta(x - h * v)) / (2 * h)
            dw = (chart_zeta(x + h * w) - chart_zeta(x - h * w)) / (2 * h)
            pairing = dv @ G @ np.conj(dw)
            rhs = float(np.real(1j * (pairing - np.conj(pairing))))
            worst["fs_match"] = max(worst["fs_match"], abs(lhs - rhs))

    bad = {k: v for k, v in worst.items() if v > 1e-6}
    if bad:
        raise CheckFailed(f"contact self-check residuals too large: {bad}")
    return worst
