"""Catalog of analytic test functions and their exact derivatives.

Every member of the catalog is described by a small spec string, e.g.

    radial(profile=log, c=1.5)
    loglinear(A=[[1,1],[0,1]])
    monomial_ideal(m=[[1,0],[0,2]], w=[1,1])
    lse_toric(a=[1,3], beta=2)
    sqrt_compose(radial(profile=log, c=1))
    scale(0.5, monomial_ideal(m=[[1,0],[0,2]], w=[1,1]))
    smooth_poly(terms=[(1,[1,0],[1,0]), (1,[0,1],[0,1])])

Members evaluate on batches of ambient points and return analytic
values, Wirtinger gradients (d/dz) and mixed complex Hessians
(d^2/dz_j dzbar_k).  Pure second derivatives are never needed: for a
circle-invariant u the rotation identity

    sum_j z_j u_{z_j z_k} = sum_j zbar_j u_{zbar_j z_k} - u_{z_k}

(differentiate u(e^{i s} z) = u(z) twice) eliminates them from the chain
rule for the transversal Hessian in the Hopf chart, so
``chart_hessian_from_ambient`` is exact for every invariant member.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import (DimensionMismatch, EvalFailure, NotInvariant, OutsideDomain,
                     ParseError, UnsupportedDimension)
from .geometry import chart_section, fs_metric_at

__all__ = [
    "FunctionSpec",
    "parse_spec",
    "AmbientEval",
    "TransversalEval",
    "eval_ambient",
    "eval_transversal",
    "transversal_batch",
    "u_dot_batch",
    "chart_hessian_from_ambient",
    "psh_check",
    "fd_chart_hessian",
    "standard_members",
]


# ---------------------------------------------------------------------------
# result containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AmbientEval:
    value: float
    grad: np.ndarray   # (n+1,) complex, d u / d z_j
    hess: np.ndarray   # (n+1, n+1) complex Hermitian, d^2 u / d z_j d zbar_k


@dataclass(frozen=True)
class TransversalEval:
    value: float
    u_dot: float
    hess: np.ndarray   # (n, n) complex Hermitian chart Hessian of u_t


# ---------------------------------------------------------------------------
# catalog members
# ---------------------------------------------------------------------------

class FunctionSpec:
    """Base class of catalog members.  Subclasses implement the batched
    value/grad/hess maps; everything else is shared."""

    kind = "abstract"
    #: projective dimension n, or None when the member works in any dimension
    dim: int | None = None
    #: True when invariance under z -> e^{i theta} z holds by construction
    is_invariant: bool = True
    #: True when plurisubharmonicity is guaranteed by the construction
    psh_guaranteed: bool = True
    #: evaluation is safe for |z| below this radius
    safe_radius: float = np.inf
    #: True when u depends only on the moduli |z_j| (torus invariance);
    #: such members admit the angle-free toric quadrature nodes
    moduli_only: bool = False

    def value(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hess(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def spec_text(self) -> str:
        raise NotImplementedError

    def __repr__(self):
        return self.spec_text()

    def check_points(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if z.ndim == 1:
            z = z[None, :]
        if self.dim is not None and z.shape[-1] != self.dim + 1:
            raise DimensionMismatch(
                f"{self.spec_text()} lives in C^{self.dim + 1}, "
                f"points have {z.shape[-1]} coordinates")
        return z


def _fmt_num(x) -> str:
    xf = float(x)
    return str(int(xf)) if xf == int(xf) else repr(xf)


class Radial(FunctionSpec):
    """u = c * chi(log|z|), chi = id for 'log', chi = -sqrt(-t) for
    'sqrtlog' (defined for |z| < 1)."""

    kind = "radial"

    def __init__(self, profile: str = "log", c: float = 1.0):
        if profile not in ("log", "sqrtlog"):
            raise ParseError(f"unknown radial profile {profile!r}")
        if not c > 0:
            raise ParseError("radial coefficient c must be positive")
        self.profile = profile
        self.c = float(c)
        self.moduli_only = True
        if profile == "sqrtlog":
            self.safe_radius = 0.99

    def spec_text(self):
        return f"radial(profile={self.profile}, c={_fmt_num(self.c)})"

    def _chi(self, t):
        if self.profile == "log":
            return self.c * t, np.full_like(t, self.c), np.zeros_like(t)
        if np.any(t >= 0):
            raise OutsideDomain("sqrtlog profile needs |z| < 1")
        root = np.sqrt(-t)
        return -self.c * root, self.c / (2 * root), self.c / (4 * root ** 3)

    def value(self, z):
        z = self.check_points(z)
        t = np.log(np.linalg.norm(z, axis=-1))
        return self._chi(t)[0]

    def grad(self, z):
        z = self.check_points(z)
        r2 = np.sum(np.abs(z) ** 2, axis=-1)
        _, chi1, _ = self._chi(0.5 * np.log(r2))
        return chi1[:, None] * np.conj(z) / (2 * r2[:, None])

    def hess(self, z):
        z = self.check_points(z)
        r2 = np.sum(np.abs(z) ** 2, axis=-1)
        _, chi1, chi2 = self._chi(0.5 * np.log(r2))
        nb = z.shape[-1]
        eye = np.eye(nb)
        dt = np.conj(z)[:, :, None] * z[:, None, :] / (2 * r2[:, None, None] ** 2)
        hess_t = eye / (2 * r2[:, None, None]) - dt
        return chi1[:, None, None] * hess_t + chi2[:, None, None] * dt


class LogLinear(FunctionSpec):
    """u = log|A z| for an invertible matrix A."""

    kind = "loglinear"

    def __init__(self, A):
        A = np.asarray(A, dtype=complex)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ParseError("loglinear matrix must be square")
        if abs(np.linalg.det(A)) < 1e-12:
            raise ParseError("loglinear matrix must be invertible")
        self.A = A
        self.dim = A.shape[0] - 1
        self._B = A.T @ np.conj(A)  # B[j,k] = sum_i A_ij conj(A_ik)
        self.moduli_only = bool(np.all(np.sum(A != 0, axis=1) <= 1))

    def spec_text(self):
        rows = ",".join(
            "[" + ",".join(_fmt_num(v.real) if v.imag == 0 else repr(complex(v))
                           for v in row) + "]"
            for row in self.A)
        return f"loglinear(A=[{rows}])"

    def _w(self, z):
        return z @ self.A.T

    def value(self, z):
        z = self.check_points(z)
        return np.log(np.linalg.norm(self._w(z), axis=-1))

    def grad(self, z):
        z = self.check_points(z)
        w = self._w(z)
        s = np.sum(np.abs(w) ** 2, axis=-1)
        return (np.conj(w) @ self.A) / (2 * s[:, None])

    def hess(self, z):
        z = self.check_points(z)
        w = self._w(z)
        s = np.sum(np.abs(w) ** 2, axis=-1)
        g = (np.conj(w) @ self.A) / (2 * s[:, None])
        return (self._B[None, :, :] / (2 * s[:, None, None])
                - 2 * g[:, :, None] * np.conj(g)[:, None, :])


def _masked_log_abs(z):
    """log|z_j| with -inf at exact zeros, no warnings."""
    a = np.abs(z)
    out = np.full(a.shape, -np.inf)
    np.log(a, out=out, where=a > 0)
    return out


def _softmax(kappa):
    m = np.max(kappa, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore"):
        e = np.exp(kappa - m)
        return e / np.sum(e, axis=-1, keepdims=True), m[..., 0]


class MonomialIdeal(FunctionSpec):
    """u = (1/2) log sum_i w_i |z^{m_i}|^2 for monomial exponent rows m_i."""

    kind = "monomial_ideal"

    def __init__(self, m, w=None):
        m = np.asarray(m)
        if m.ndim != 2 or m.shape[0] < 1:
            raise ParseError("monomial exponents must form a nonempty matrix")
        if np.any(m < 0) or not np.issubdtype(m.dtype, np.integer):
            raise ParseError("monomial exponents must be nonnegative integers")
        if w is None:
            w = np.ones(m.shape[0])
        w = np.asarray(w, dtype=float)
        if w.shape != (m.shape[0],) or np.any(w <= 0):
            raise ParseError("monomial weights must be positive, one per row")
        self.m = m.astype(float)
        self.w = w
        self.dim = m.shape[1] - 1
        self.moduli_only = True

    def spec_text(self):
        rows = ",".join("[" + ",".join(str(int(v)) for v in row) + "]"
                        for row in self.m)
        ws = ",".join(_fmt_num(v) for v in self.w)
        return f"monomial_ideal(m=[{rows}], w=[{ws}])"

    def _kappa(self, z):
        la = _masked_log_abs(z)  # (N, n+1)
        with np.errstate(invalid="ignore"):
            contrib = np.where(self.m[None, :, :] > 0,
                               2.0 * self.m[None, :, :] * la[:, None, :], 0.0)
        return np.log(self.w)[None, :] + np.sum(contrib, axis=-1)

    def value(self, z):
        z = self.check_points(z)
        kappa = self._kappa(z)
        m = np.max(kappa, axis=-1)
        with np.errstate(invalid="ignore"):
            return 0.5 * (m + np.log(np.sum(np.exp(kappa - m[:, None]), axis=-1)))

    def _p_nu(self, z):
        p, _ = _softmax(self._kappa(z))
        nu = p @ self.m  # (N, n+1): nu_j = sum_i p_i m_ij
        return p, nu

    def grad(self, z):
        z = self.check_points(z)
        _, nu = self._p_nu(z)
        out = np.zeros_like(z)
        np.divide(nu, 2 * z, out=out, where=z != 0)
        return out

    def hess(self, z):
        z = self.check_points(z)
        p, nu = self._p_nu(z)
        corr = np.einsum("Ni,ij,ik->Njk", p, self.m, self.m)
        num = corr - nu[:, :, None] * nu[:, None, :]
        denom = 2 * z[:, :, None] * np.conj(z)[:, None, :]
        out = np.zeros_like(denom)
        np.divide(num, denom, out=out, where=denom != 0)
        return out


class LseToric(FunctionSpec):
    """u = (1/(2 beta)) log sum_j |z_j|^{2 beta a_j}, a smooth toric
    interpolation of max_j a_j log|z_j|."""

    kind = "lse_toric"

    def __init__(self, a, beta):
        a = np.asarray(a, dtype=float)
        if a.ndim != 1 or np.any(a < 0) or not np.any(a > 0):
            raise ParseError("lse_toric exponents must be nonnegative, not all zero")
        if not beta > 0:
            raise ParseError("lse_toric beta must be positive")
        self.a = a
        self.beta = float(beta)
        self.dim = a.shape[0] - 1
        self.moduli_only = True

    def spec_text(self):
        av = ",".join(_fmt_num(v) for v in self.a)
        return f"lse_toric(a=[{av}], beta={_fmt_num(self.beta)})"

    def _kappa(self, z):
        s = 2.0 * self.beta * self.a
        la = _masked_log_abs(z)
        with np.errstate(invalid="ignore"):
            return np.where(s[None, :] > 0, s[None, :] * la, 0.0)

    def _p(self, z):
        return _softmax(self._kappa(z))

    def value(self, z):
        z = self.check_points(z)
        kappa = self._kappa(z)
        m = np.max(kappa, axis=-1)
        return (m + np.log(np.sum(np.exp(kappa - m[:, None]), axis=-1))) / (2 * self.beta)

    def grad(self, z):
        z = self.check_points(z)
        p, _ = self._p(z)
        num = self.a[None, :] * p
        out = np.zeros_like(z)
        np.divide(num, 2 * z, out=out, where=z != 0)
        return out

    def hess(self, z):
        z = self.check_points(z)
        p, _ = self._p(z)
        v = np.zeros_like(z)
        np.divide(self.a[None, :] * p, z, out=v, where=z != 0)
        diag_num = self.a[None, :] ** 2 * p
        diag = np.zeros(z.shape, dtype=float)
        np.divide(diag_num, np.abs(z) ** 2, out=diag, where=z != 0)
        out = -v[:, :, None] * np.conj(v)[:, None, :]
        idx = np.arange(z.shape[-1])
        out[:, idx, idx] += diag
        return (self.beta / 2.0) * out


class SqrtCompose(FunctionSpec):
    """u = -(-F)^{1/2} for a member F with F <= -1 on the working domain.
    Convex increasing composition, so u stays psh and has zero density."""

    kind = "sqrt_compose"

    def __init__(self, inner: FunctionSpec):
        if not inner.psh_guaranteed:
            raise ParseError("sqrt_compose needs a psh inner member")
        self.inner = inner
        self.dim = inner.dim
        self.is_invariant = inner.is_invariant
        # conservative radius keeping inner values of log type below -1
        self.safe_radius = min(0.2, inner.safe_radius)
        self.moduli_only = inner.moduli_only

    def spec_text(self):
        return f"sqrt_compose({self.inner.spec_text()})"

    def _phi(self, v):
        if np.any(v > -1.0):
            raise OutsideDomain(
                "sqrt_compose requires inner values <= -1 on the working domain")
        root = np.sqrt(-v)
        return -root, 0.5 / root, 0.25 / root ** 3

    def value(self, z):
        return self._phi(self.inner.value(z))[0]

    def grad(self, z):
        v = self.inner.value(z)
        _, p1, _ = self._phi(v)
        return p1[:, None] * self.inner.grad(z)

    def hess(self, z):
        v = self.inner.value(z)
        _, p1, p2 = self._phi(v)
        g = self.inner.grad(z)
        return (p1[:, None, None] * self.inner.hess(z)
                + p2[:, None, None] * g[:, :, None] * np.conj(g)[:, None, :])


class Scale(FunctionSpec):
    """u = c * F with c > 0."""

    kind = "scale"

    def __init__(self, c: float, inner: FunctionSpec):
        if not c > 0:
            raise ParseError("scale factor must be positive")
        self.c = float(c)
        self.inner = inner
        self.dim = inner.dim
        self.is_invariant = inner.is_invariant
        self.psh_guaranteed = inner.psh_guaranteed
        self.safe_radius = inner.safe_radius
        self.moduli_only = inner.moduli_only

    def spec_text(self):
        return f"scale({_fmt_num(self.c)}, {self.inner.spec_text()})"

    def value(self, z):
        return self.c * self.inner.value(z)

    def grad(self, z):
        return self.c * self.inner.grad(z)

    def hess(self, z):
        return self.c * self.inner.hess(z)


class SmoothPoly(FunctionSpec):
    """u = sum_i c_i z^{a_i} zbar^{b_i}, required to be real valued, which
    means the term list is symmetric under (a, b) -> (b, a).

    Circle invariance holds exactly when |a_i| = |b_i| for every term and
    is detected from the exponents; plurisubharmonicity is not promised
    and must be probed numerically.
    """

    kind = "smooth_poly"
    psh_guaranteed = False

    def __init__(self, terms):
        clean = {}
        width = None
        for coeff, a, b in terms:
            a = tuple(int(x) for x in a)
            b = tuple(int(x) for x in b)
            if any(x < 0 for x in a + b):
                raise ParseError("smooth_poly exponents must be nonnegative")
            if width is None:
                width = len(a)
            if len(a) != width or len(b) != width:
                raise ParseError("smooth_poly exponent tuples must share one length")
            clean[(a, b)] = clean.get((a, b), 0.0) + float(coeff)
        if width is None:
            raise ParseError("smooth_poly needs at least one term")
        for (a, b), c in clean.items():
            if abs(clean.get((b, a), 0.0) - c) > 1e-12 * max(1.0, abs(c)):
                raise ParseError(
                    "smooth_poly terms must be conjugation symmetric "
                    f"(missing partner for exponents {a}|{b})")
        self.terms = [(c, np.array(a), np.array(b))
                      for (a, b), c in sorted(clean.items()) if c != 0.0]
        self.dim = width - 1
        self.is_invariant = all(a.sum() == b.sum() for _, a, b in self.terms)
        self.moduli_only = all(np.array_equal(a, b) for _, a, b in self.terms)

    def spec_text(self):
        parts = ",".join(
            f"({_fmt_num(c)},[{','.join(str(x) for x in a)}],"
            f"[{','.join(str(x) for x in b)}])"
            for c, a, b in self.terms)
        return f"smooth_poly(terms=[{parts}])"

    @staticmethod
    def _pow(z, exps):
        out = np.ones(z.shape[0], dtype=complex)
        for j, e in enumerate(exps):
            if e:
                out = out * z[:, j] ** int(e)
        return out

    def value(self, z):
        z = self.check_points(z)
        tot = np.zeros(z.shape[0], dtype=complex)
        for c, a, b in self.terms:
            tot += c * self._pow(z, a) * np.conj(self._pow(z, b))
        return tot.real

    def grad(self, z):
        z = self.check_points(z)
        out = np.zeros_like(z)
        for c, a, b in self.terms:
            zb = np.conj(self._pow(z, b))
            for j in range(z.shape[-1]):
                if a[j]:
                    out[:, j] += c * a[j] * self._pow(z, a - np.eye(len(a), dtype=int)[j]) * zb
        return out

    def hess(self, z):
        z = self.check_points(z)
        nb = z.shape[-1]
        out = np.zeros((z.shape[0], nb, nb), dtype=complex)
        eye = np.eye(nb, dtype=int)
        for c, a, b in self.terms:
            for j in range(nb):
                if not a[j]:
                    continue
                za = self._pow(z, a - eye[j])
                for k in range(nb):
                    if b[k]:
                        out[:, j, k] += (c * a[j] * b[k] * za
                                         * np.conj(self._pow(z, b - eye[k])))
        return out


# ---------------------------------------------------------------------------
# spec-string parser
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"
                    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
                    r"|(?P<punct>[()\[\],=]))")


def _tokenize(text: str):
    pos, out = 0, []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip() == "":
                break
            raise ParseError(f"bad character at position {pos}: {text[pos:pos+8]!r}")
        pos = m.end()
        if m.lastgroup == "num":
            out.append(("num", float(m.group("num"))))
        elif m.lastgroup == "name":
            out.append(("name", m.group("name")))
        else:
            out.append(("punct", m.group("punct")))
    out.append(("end", None))
    return out


class _Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None, val=None):
        k, v = self.toks[self.i]
        if (kind and k != kind) or (val is not None and v != val):
            raise ParseError(f"expected {val or kind}, got {v!r}")
        self.i += 1
        return v

    def value(self):
        k, v = self.peek()
        if k == "num":
            return self.take()
        if k == "punct" and v == "[":
            return self.seq("[", "]")
        if k == "punct" and v == "(":
            return tuple(self.seq("(", ")"))
        if k == "name":
            name = self.take()
            if self.peek() == ("punct", "("):
                return self.call(name)
            return name  # bare identifier such as a profile name
        raise ParseError(f"unexpected token {v!r}")

    def seq(self, opener, closer):
        self.take("punct", opener)
        items = []
        if self.peek() == ("punct", closer):
            self.take()
            return items
        while True:
            items.append(self.value())
            k, v = self.peek()
            if v == ",":
                self.take()
                continue
            self.take("punct", closer)
            return items

    def call(self, name):
        self.take("punct", "(")
        args, kwargs = [], {}
        if self.peek() != ("punct", ")"):
            while True:
                k, v = self.peek()
                if k == "name" and self.toks[self.i + 1] == ("punct", "="):
                    key = self.take()
                    self.take("punct", "=")
                    kwargs[key] = self.value()
                else:
                    args.append(self.value())
                if self.peek() == ("punct", ","):
                    self.take()
                    continue
                break
        self.take("punct", ")")
        return _build(name, args, kwargs)


def _build(name, args, kwargs):
    try:
        if name == "radial":
            return Radial(*args, **kwargs)
        if name == "loglinear":
            return LogLinear(*args, **kwargs)
        if name == "monomial_ideal":
            kw = dict(kwargs)
            if "m" in kw:
                kw["m"] = np.asarray(kw["m"], dtype=int)
            return MonomialIdeal(*args, **kw)
        if name == "lse_toric":
            return LseToric(*args, **kwargs)
        if name == "sqrt_compose":
            return SqrtCompose(*args, **kwargs)
        if name == "scale":
            return Scale(*args, **kwargs)
        if name == "smooth_poly":
            return SmoothPoly(*args, **kwargs)
    except TypeError as exc:
        raise ParseError(f"bad arguments for {name}: {exc}") from exc
    raise ParseError(f"unknown constructor {name!r}")


def parse_spec(text: str) -> FunctionSpec:
    """Parse a catalog spec string into an evaluatable member."""
    p = _Parser(_tokenize(text))
    k, v = p.peek()
    if k != "name":
        raise ParseError("spec must start with a constructor name")
    p.take()
    if p.peek() != ("punct", "("):
        raise ParseError(f"constructor {v!r} needs an argument list")
    spec = p.call(v)
    if p.peek() != ("end", None):
        raise ParseError("trailing tokens after spec")
    return spec


# ---------------------------------------------------------------------------
# evaluation entry points
# ---------------------------------------------------------------------------

def eval_ambient(f: FunctionSpec, z) -> AmbientEval:
    """Value, Wirtinger gradient and mixed Hessian at one ambient point."""
    zb = f.check_points(z)
    val = f.value(zb)
    grad = f.grad(zb)
    hess = f.hess(zb)
    if not (np.all(np.isfinite(val)) and np.all(np.isfinite(grad))
            and np.all(np.isfinite(hess))):
        raise EvalFailure(f"non-finite evaluation of {f.spec_text()} at {z}")
    return AmbientEval(float(val[0]), grad[0], hess[0])


def u_dot_batch(z: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Radial derivative u_dot = d u(e^s z)/ds = 2 Re sum_j z_j du/dz_j."""
    return 2.0 * np.real(np.sum(z * grad, axis=-1))


def chart_hessian_from_ambient(t: float, zeta: np.ndarray, chart: int,
                               Z: np.ndarray, grad: np.ndarray,
                               hess: np.ndarray) -> np.ndarray:
    """Exact transversal chart Hessian H[a,b] = d^2 u_t / dzeta^a dzetabar^b
    of a circle-invariant u, assembled from ambient data at Z = Psi(t, 0, zeta).

    Batched over the leading axis.  The rotation identity trades the pure
    second derivatives that the chain rule would normally require for
    mixed-Hessian contractions with Z, so only (grad, hess) enter.
    """
    zeta = np.asarray(zeta, dtype=complex)
    N, n = zeta.shape
    s = np.sum(np.abs(zeta) ** 2, axis=-1)
    g = 1.0 / np.sqrt(1.0 + s)
    others = [j for j in range(n + 1) if j != chart]

    et = np.exp(t)
    G1 = -0.5 * g[:, None] ** 3 * np.conj(zeta)       # dg/dzeta_a
    hv = np.einsum("Njk,Nk->Nj", hess, np.conj(Z))    # Hm . conj(Z)
    q = np.real(np.sum(Z * hv, axis=-1))              # Hermitian, real
    u_dot = u_dot_batch(Z, grad)

    sub = hess[:, others, :][:, :, others]            # S^T Hm S
    shv = hv[:, others]                               # S^T hv
    H = g[:, None, None] ** 2 * np.exp(2 * t) * sub
    H = H + 2 * et * (shv[:, :, None] * np.conj(G1)[:, None, :]
                      + G1[:, :, None] * np.conj(shv)[:, None, :])
    H = H + 4 * (q / g ** 2)[:, None, None] * G1[:, :, None] * np.conj(G1)[:, None, :]
    H = H - u_dot[:, None, None] * fs_metric_at(zeta)
    return H


def transversal_batch(f: FunctionSpec, t: float, zeta: np.ndarray, chart: int):
    """(values of u_t, u_dot, chart Hessians) at a batch of chart points."""
    if not f.is_invariant:
        raise NotInvariant(f"{f.spec_text()} is not circle invariant")
    zeta = np.asarray(zeta, dtype=complex)
    if zeta.ndim == 1:
        zeta = zeta[None, :]
    sec = chart_section(zeta, chart)
    g = 1.0 / np.sqrt(1.0 + np.sum(np.abs(zeta) ** 2, axis=-1))
    Z = np.exp(t) * sec * g[:, None]
    val = f.value(Z)
    grad = f.grad(Z)
    hess = f.hess(Z)
    u_dot = u_dot_batch(Z, grad)
    H = chart_hessian_from_ambient(t, zeta, chart, Z, grad, hess)
    return val, u_dot, H


def eval_transversal(f: FunctionSpec, t: float, zeta, chart: int = 0) -> TransversalEval:
    """Single-point transversal data (u_t, u_dot, chart Hessian)."""
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    val, u_dot, H = transversal_batch(f, t, zeta[None, :], chart)
    if not (np.isfinite(val[0]) and np.isfinite(u_dot[0]) and np.all(np.isfinite(H[0]))):
        raise EvalFailure(f"non-finite transversal evaluation of {f.spec_text()}")
    return TransversalEval(float(val[0]), float(u_dot[0]), H[0])


def fd_chart_hessian(value_fn, zeta: np.ndarray, h: float = 1e-4,
                     richardson: bool = True) -> np.ndarray:
    """Mixed complex Hessian of a scalar chart function by central finite
    differences with one Richardson halving.  `value_fn` maps a batch of
    chart points (M, n) to real values; `zeta` is a single point (n,).

    Used as the independent oracle for `chart_hessian_from_ambient` and as
    the production path for mollified functions, whose chart values exist
    only through convolution.
    """
    zeta = np.asarray(zeta, dtype=complex)
    n = zeta.shape[0]

    def real_hessian(step):
        # real coordinates (x_1, y_1, ..., x_n, y_n)
        dirs = np.zeros((2 * n, n), dtype=complex)
        for a in range(n):
            dirs[2 * a, a] = 1.0
            dirs[2 * a + 1, a] = 1j
        pts = [zeta]
        index = {}
        for i in range(2 * n):
            index[(i,)] = (len(pts), len(pts) + 1)
            pts.extend([zeta + step * dirs[i], zeta - step * dirs[i]])
        for i in range(2 * n):
            for j in range(i + 1, 2 * n):
                index[(i, j)] = tuple(range(len(pts), len(pts) + 4))
                pts.extend([zeta + step * (dirs[i] + dirs[j]),
                            zeta + step * (dirs[i] - dirs[j]),
                            zeta - step * (dirs[i] - dirs[j]),
                            zeta - step * (dirs[i] + dirs[j])])
        vals = np.asarray(value_fn(np.array(pts)), dtype=float)
        hr = np.empty((2 * n, 2 * n))
        for i in range(2 * n):
            ip, im = index[(i,)]
            hr[i, i] = (vals[ip] - 2 * vals[0] + vals[im]) / step ** 2
        for i in range(2 * n):
            for j in range(i + 1, 2 * n):
                a, b, c, d = index[(i, j)]
                hr[i, j] = hr[j, i] = (vals[a] - vals[b] - vals[c] + vals[d]) / (4 * step ** 2)
        return hr

    hr = real_hessian(h)
    if richardson:
        hr = (4.0 * real_hessian(h / 2) - hr) / 3.0
    H = np.empty((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            xx = hr[2 * a, 2 * b]
            yy = hr[2 * a + 1, 2 * b + 1]
            xy = hr[2 * a, 2 * b + 1]
            yx = hr[2 * a + 1, 2 * b]
            H[a, b] = 0.25 * ((xx + yy) + 1j * (xy - yx))
    return H


def psh_check(f: FunctionSpec, n: int, samples: int = 2000, seed: int = 0,
              radius_range=(0.05, 1.2)) -> float:
    """Smallest ambient mixed-Hessian eigenvalue over random points in a
    shell, scaled by |z|^2 so all radii contribute comparably.  A clearly
    negative return value certifies a non-psh function."""
    from .quadrature import rng_stream, sample_sphere  # local import, no cycle
    if f.dim is not None and f.dim != n:
        raise DimensionMismatch(f"{f.spec_text()} has dimension {f.dim}, not {n}")
    rng = rng_stream(seed, 11)
    xi = sample_sphere(n, samples, rng)
    hi = min(radius_range[1], 0.8 * f.safe_radius)
    lo = min(radius_range[0], hi / 20.0)
    rho = np.exp(rng.uniform(np.log(lo), np.log(hi), samples))
    z = rho[:, None] * xi
    hess = f.hess(z)
    eigs = np.linalg.eigvalsh(hess)
    return float(np.min(eigs[:, 0] * rho ** 2))


# ---------------------------------------------------------------------------
# reference members used across checks and demos
# ---------------------------------------------------------------------------

def standard_members(n: int) -> dict[str, FunctionSpec]:
    """A fixed reference set of invariant psh members per dimension."""
    if n == 1:
        raw = {
            "radial_1": "radial(profile=log, c=1)",
            "radial_15": "radial(profile=log, c=1.5)",
            "loglinear_shear": "loglinear(A=[[1,1],[0,1]])",
            "loglinear_mix": "loglinear(A=[[2,0],[1,1]])",
            "monomial_12": "monomial_ideal(m=[[1,0],[0,2]], w=[1,1])",
            "lse_12": "lse_toric(a=[1,2], beta=2)",
            "sqrt_radial": "sqrt_compose(radial(profile=log, c=1))",
            "sqrt_monomial": "sqrt_compose(monomial_ideal(m=[[1,0],[0,2]], w=[1,1]))",
            "scaled_monomial": "scale(0.5, monomial_ideal(m=[[1,0],[0,2]], w=[1,1]))",
        }
    elif n == 2:
        raw = {
            "radial_1": "radial(profile=log, c=1)",
            "loglinear_shear": "loglinear(A=[[1,1,0],[0,1,1],[0,0,1]])",
            "monomial_121": "monomial_ideal(m=[[1,0,0],[0,2,0],[0,0,1]], w=[1,1,1])",
            "lse_121": "lse_toric(a=[1,2,1], beta=2)",
            "sqrt_radial": "sqrt_compose(radial(profile=log, c=1))",
        }
    elif n == 3:
        raw = {
            "radial_1": "radial(profile=log, c=1)",
            "loglinear_shear": "loglinear(A=[[1,1,0,0],[0,1,0,0],[0,0,1,1],[0,0,0,1]])",
            "monomial_n3": "monomial_ideal(m=[[1,0,0,0],[0,2,0,0],[0,0,1,0],[0,0,0,1]], w=[1,1,1,1])",
            "lse_n3": "lse_toric(a=[1,2,1,1], beta=2)",
        }
    else:
        raise UnsupportedDimension(f"no reference members for n={n}")
    return {name: parse_spec(text) for name, text in raw.items()}
