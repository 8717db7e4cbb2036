"""Moving-frame cross-checks of the ambient complex Hessian.

An adapted unitary frame puts the radial direction first (e_0 = z/|z|)
and completes deterministically.  Conjugating the coordinate Hessian by
the frame splits it into a radial scalar, a mixed column, and a
transversal block; the checks below verify that this split matches
independent finite-difference assemblies of the same scalars and, for
circle-invariant members, the chart data the mass pipeline consumes.

Frame fields near a base point keep the pivot of the base point frozen,
so the field is smooth and finite differences along it are meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CheckFailed, NotInvariant, ZeroPoint
from .functions import FunctionSpec, eval_ambient
from .geometry import ambient_to_hopf, fs_metric_at
from .mass import transversal_state

__all__ = [
    "UnitaryFrame",
    "FrameHessian",
    "DecompositionReport",
    "RestrictionReport",
    "AntisymmetryReport",
    "adapted_frame",
    "frame_hessian",
    "hessian_decomposition_check",
    "restriction_check",
    "antisymmetry_check",
]


@dataclass(frozen=True)
class UnitaryFrame:
    """Coframe coefficient matrix a (rows conj(e_A)) at a base point."""

    a: np.ndarray
    base: np.ndarray

    @property
    def vectors(self) -> np.ndarray:
        """Frame vectors e_A as rows; e_0 is the radial direction."""
        return np.conj(self.a)


def _frame_rows(z: np.ndarray, pivot: int) -> np.ndarray:
    """Rows e_0..e_n of the adapted frame with a prescribed pivot.

    The completion rows carry the phase of the pivot coordinate.  That
    makes the frame field scale-free and phase-equivariant, so it
    descends to a projective frame; the first-order relations between
    radial and transversal derivatives hold only for such fields.
    """
    nrm = np.linalg.norm(z)
    if nrm == 0.0:
        raise ZeroPoint("cannot adapt a frame at the origin")
    if z[pivot] == 0.0:
        raise ZeroPoint("pivot coordinate vanished")
    phase = z[pivot] / abs(z[pivot])
    rows = [z / nrm]
    for b in range(len(z)):
        if b == pivot:
            continue
        v = np.zeros(len(z), dtype=complex)
        v[b] = 1.0
        for r in rows:
            v = v - np.sum(v * np.conj(r)) * r
        vn = np.linalg.norm(v)
        if vn < 1e-12:
            raise ZeroPoint("degenerate frame completion")
        rows.append(phase * v / vn)
    return np.array(rows)


def adapted_frame(z) -> UnitaryFrame:
    """Deterministic unitary frame with e_0 = z/|z|.

    Completion is Gram-Schmidt over the standard basis with the pivot
    column (largest modulus coordinate) dropped.
    """
    z = np.asarray(z, dtype=complex).reshape(-1)
    if np.linalg.norm(z) == 0.0:
        raise ZeroPoint("cannot adapt a frame at the origin")
    E = _frame_rows(z, int(np.argmax(np.abs(z))))
    a = np.conj(E)
    gram = a @ a.conj().T
    assert np.max(np.abs(gram - np.eye(len(z)))) < 1e-12
    return UnitaryFrame(a=a, base=z.copy())


@dataclass(frozen=True)
class FrameHessian:
    """The coordinate Hessian conjugated into an adapted frame.

    components[A, B] is the coefficient of omega^A wedge conj(omega^B);
    the named parts carry the coframe normalization e^t explicitly, so
    transversal equals u_0bar * delta + u_{alpha betabar}.
    """

    components: np.ndarray
    frame: UnitaryFrame
    u_0bar: complex
    u_00bar: complex
    u_alpha_0bar: np.ndarray
    u_0_alphabar: np.ndarray
    transversal: np.ndarray


def frame_hessian(f: FunctionSpec, z) -> FrameHessian:
    """Congruence of the ambient Hessian by the adapted frame at z."""
    fr = adapted_frame(z)
    ev = eval_ambient(f, fr.base)
    E = fr.vectors
    comp = E @ ev.hess @ E.conj().T
    et = float(np.linalg.norm(fr.base))
    u_A = E @ ev.grad
    u_0bar = complex(np.conj(u_A[0]))
    return FrameHessian(
        components=comp,
        frame=fr,
        u_0bar=u_0bar,
        u_00bar=et * comp[0, 0] - 0.5 * u_0bar,
        u_alpha_0bar=et * comp[1:, 0],
        u_0_alphabar=et * comp[0, 1:] - 0.5 * np.conj(u_A[1:]),
        transversal=et * comp[1:, 1:],
    )


# ---------------------------------------------------------------------------
# finite differences along the frame field
# ---------------------------------------------------------------------------

def _wirtinger_pair(field, z: np.ndarray, direction: np.ndarray, h: float):
    """(1,0) and (0,1) derivatives of a (possibly matrix-valued) field."""
    dx = (field(z + h * direction) - field(z - h * direction)) / (2.0 * h)
    dy = (field(z + 1j * h * direction) - field(z - 1j * h * direction)) / (2.0 * h)
    return 0.5 * (dx - 1j * dy), 0.5 * (dx + 1j * dy)


@dataclass(frozen=True)
class DecompositionReport:
    residual: float
    commutation_residual: float
    tolerance: float


def hessian_decomposition_check(f: FunctionSpec, z,
                                fd_step: float = 1e-5) -> DecompositionReport:
    """Rebuild the frame Hessian from first-order frame scalars.

    The scalar fields w -> u_A(w) = sum_B (du/dz^B)(w) e_A(w)^B are
    differenced along the frame directions (pivot frozen); the radial
    block, mixed columns, and connection-corrected transversal block are
    assembled from those derivatives and compared entry by entry with
    the direct congruence.  The first-order commutation relation
    u_{alphabar,0bar} = u_{0bar,alphabar} + u_{alphabar}/2 is checked
    from the same data.  Residuals are relative to the Hessian scale.
    """
    z = np.asarray(z, dtype=complex).reshape(-1)
    n = len(z) - 1
    fh = frame_hessian(f, z)
    E = fh.frame.vectors
    pivot = int(np.argmax(np.abs(z)))
    et = float(np.linalg.norm(z))
    h = fd_step * et

    def u_field(w):
        return _frame_rows(w, pivot) @ eval_ambient(f, w).grad

    def a_field(w):
        return np.conj(_frame_rows(w, pivot))

    u_A = E @ eval_ambient(f, z).grad
    P = np.empty((n + 1, n + 1), dtype=complex)   # D^{1,0}_{e_A} u_B
    Q = np.empty((n + 1, n + 1), dtype=complex)   # D^{0,1}_{e_A} u_B
    conn01 = []                                   # omega^B_C along (0,1) e_alpha
    a_base = np.conj(E)
    for A in range(n + 1):
        p, q = _wirtinger_pair(u_field, z, E[A], h)
        P[A], Q[A] = p, q
        da10, _ = _wirtinger_pair(a_field, z, E[A], h)
        # d(abar^C_A)(conj direction) = conj(D^{1,0} a^C_A)
        conn01.append(a_base @ np.conj(da10).T)

    R = np.empty((n + 1, n + 1), dtype=complex)
    R[0, 0] = np.conj(Q[0, 0]) + 0.5 * np.conj(u_A[0]) / et
    for al in range(1, n + 1):
        R[al, 0] = np.conj(Q[al, 0])
        R[0, al] = Q[al, 0]
    u_bar = np.conj(u_A)
    for al in range(1, n + 1):
        theta = conn01[al] - conn01[al][0, 0] * np.eye(n + 1)
        for be in range(1, n + 1):
            corr = np.sum(u_bar[1:] * np.conj(theta[1:, be]))
            R[al, be] = np.conj(Q[al, be]) - corr + (u_bar[0] / et if al == be else 0.0)

    scale = max(1.0, float(np.max(np.abs(fh.components))))
    residual = float(np.max(np.abs(fh.components - R))) / scale
    comm = np.abs(et * np.conj(P[1:, 0]) - et * np.conj(P[0, 1:])
                  - 0.5 * u_bar[1:])
    comm_scale = max(1.0, float(np.max(np.abs(u_A))),
                     et * float(np.max(np.abs(P))))
    commutation = float(np.max(comm)) / comm_scale
    tol = max(1e-5, 20.0 * fd_step)
    if residual > tol or commutation > tol:
        i, j = np.unravel_index(np.argmax(np.abs(fh.components - R)),
                                R.shape)
        raise CheckFailed(
            f"frame decomposition mismatch at entry ({i},{j}): direct "
            f"{fh.components[i, j]:.6g}, assembled {R[i, j]:.6g} "
            f"(residual {residual:.2e}, commutation {commutation:.2e})")
    return DecompositionReport(residual, commutation, tol)


@dataclass(frozen=True)
class RestrictionReport:
    slope_residual: float
    block_residual: float
    coupling_residual: float
    tolerance: float


def restriction_check(f: FunctionSpec, z) -> RestrictionReport:
    """Compare both computations of the Hessian restricted to a sphere.

    For a circle-invariant member the frame data must match the chart
    data of the mass pipeline at the corresponding Hopf point: the
    radial slope is twice e^t times u_0bar, the transversal eigenvalues
    agree after the factor-two metric normalization, and the squared
    size of the mixed column equals the Fubini-Study gradient norm of
    the slope field.
    """
    if not f.is_invariant:
        raise NotInvariant(f"{f.spec_text()} is not circle invariant")
    z = np.asarray(z, dtype=complex).reshape(-1)
    fh = frame_hessian(f, z)
    hp = ambient_to_hopf(z)
    st = transversal_state(f, hp.t, hp.zeta, hp.chart)
    et = float(np.exp(hp.t))

    slope = 2.0 * et * fh.u_0bar
    res_a = abs(slope - st.u_dot) / max(1.0, abs(st.u_dot))

    lhs = np.sort(2.0 * et ** 2 * np.linalg.eigvalsh(fh.components[1:, 1:]))
    rhs = np.sort(st.u_dot + st.eigs)
    res_b = float(np.max(np.abs(lhs - rhs))) / max(1.0, float(np.max(np.abs(rhs))))

    # mixed column against the chart gradient of the slope field
    from .functions import transversal_batch
    dstep = 1e-6
    npts = len(hp.zeta)
    grad = np.empty(npts, dtype=complex)
    for i in range(npts):
        zp = np.tile(hp.zeta, (4, 1))
        zp[0, i] += dstep
        zp[1, i] -= dstep
        zp[2, i] += 1j * dstep
        zp[3, i] -= 1j * dstep
        _, ud, _ = transversal_batch(f, hp.t, zp, hp.chart)
        dx = (ud[0] - ud[1]) / (2.0 * dstep)
        dy = (ud[2] - ud[3]) / (2.0 * dstep)
        grad[i] = 0.5 * (dx - 1j * dy)
    G = fs_metric_at(hp.zeta[None, :])[0]
    chart_sq = 0.5 * float(np.real(grad.conj() @ np.linalg.solve(G, grad)))
    frame_sq = float(np.sum(np.abs(2.0 * et ** 2 * fh.components[1:, 0]) ** 2))
    res_c = abs(frame_sq - chart_sq) / max(1.0, chart_sq)

    tol = 1e-5
    worst = max(res_a, res_b, res_c)
    if worst > tol:
        raise CheckFailed(
            f"restriction bridge mismatch: slope {res_a:.2e}, block "
            f"{res_b:.2e}, coupling {res_c:.2e}")
    return RestrictionReport(res_a, res_b, res_c, tol)


@dataclass(frozen=True)
class AntisymmetryReport:
    residual: float
    tolerance: float
    directions: int


def antisymmetry_check(z, fd_step: float = 1e-5,
                       inject_fault: bool = False) -> AntisymmetryReport:
    """Finite-difference the frame field and test the connection matrix.

    In each of the 2n+2 coordinate directions the matrix a d(abar)^T
    must be skew-Hermitian.  The fault flag deforms the frame by a
    position-dependent non-unitary factor, which any working check must
    flag.
    """
    z = np.asarray(z, dtype=complex).reshape(-1)
    nrm = float(np.linalg.norm(z))
    if nrm == 0.0:
        raise ZeroPoint("cannot adapt a frame at the origin")
    pivot = int(np.argmax(np.abs(z)))
    h = fd_step * nrm

    def a_field(w):
        a = np.conj(_frame_rows(w, pivot))
        if inject_fault:
            a = a.copy()
            a[1] = a[1] * (1.0 + 0.05 * np.real(w[pivot]) / np.linalg.norm(w))
        return a

    a0 = a_field(z)
    worst = 0.0
    scale = 1.0
    dim = len(z)
    for b in range(dim):
        for step in (1.0, 1j):
            v = np.zeros(dim, dtype=complex)
            v[b] = step
            da = (a_field(z + h * v) - a_field(z - h * v)) / (2.0 * h)
            om = a0 @ np.conj(da).T
            worst = max(worst, float(np.max(np.abs(om + om.conj().T))))
            scale = max(scale, float(np.max(np.abs(om))))
    tol = 20.0 * fd_step * scale
    if worst > tol:
        raise CheckFailed(
            f"connection matrix is not skew-Hermitian: residual {worst:.3e} "
            f"with tolerance {tol:.1e}")
    return AntisymmetryReport(worst, tol, 2 * dim)
