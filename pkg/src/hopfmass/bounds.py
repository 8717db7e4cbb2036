"""Exact combinatorics and the inequality harness.

Two kinds of certainty live here.  The combinatorial layer (Bell-type
constants, dimensional constants, and three polynomial identities) is
exact integer and rational arithmetic with no tolerances whatsoever.
The inequality layer compares measured quantities (nu, lambda, tau,
M_A, the I functional, per-k mass terms) and returns three-way
verdicts: pass when the slack clears the combined uncertainty, fail
when it undershoots it, inconclusive in between.

Sampling soundness: M_A estimates are lower bounds of the true
supremum.  Where M_A appears in the bounding side of an inequality,
the raw lower bound is used (understating the bound keeps a "pass"
sound) and the refinement gap is folded into the uncertainty so a
marginal shortfall reads inconclusive rather than fail.

The polynomial identities treat differential forms as commuting
scalars, which is legitimate for the identities themselves.  The
per-term inequalities behind the Bell-constant lemma are *not* true at
scalar level (the mixed Hessian term has no pointwise sign), so they
are checked only in integrated form, through the measured per-k terms.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from .errors import CounterexampleFound
from .functions import FunctionSpec
from .invariants import (DEFAULT_A_GRID, DEFAULT_T_GRID, DirectionalProfile,
                         LelongEstimate, directional_profile, lelong_by_I,
                         lelong_estimate)
from .mass import residual_mass, theta_terms
from .quadrature import IntegrationScheme

__all__ = [
    "IntPolynomial",
    "IdentityVerdict",
    "InequalityReport",
    "EstimateInputs",
    "bell_constants",
    "dimensional_constant",
    "verify_identity_df019",
    "verify_identity_gr004",
    "verify_identity_gr0066",
    "gather_estimate_inputs",
    "check_estimate_suite",
]


# ---------------------------------------------------------------------------
# exact polynomials over the variables M, a, b, c
# ---------------------------------------------------------------------------

class IntPolynomial:
    """Polynomials with integer coefficients in the four symbols M, a, b, c.

    Stored as a map from exponent 4-tuples to nonzero Python integers,
    so every operation is exact at any size.
    """

    VARS = ("M", "a", "b", "c")

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: dict | None = None):
        clean = {}
        for expo, coef in (coeffs or {}).items():
            expo = tuple(int(e) for e in expo)
            if len(expo) != 4 or any(e < 0 for e in expo):
                raise ValueError(f"bad exponent tuple {expo}")
            coef = int(coef)
            if coef:
                clean[expo] = clean.get(expo, 0) + coef
        self._coeffs = {e: c for e, c in clean.items() if c}

    @classmethod
    def constant(cls, value: int) -> "IntPolynomial":
        return cls({(0, 0, 0, 0): value})

    @classmethod
    def var(cls, name: str) -> "IntPolynomial":
        i = cls.VARS.index(name)
        expo = [0, 0, 0, 0]
        expo[i] = 1
        return cls({tuple(expo): 1})

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self._coeffs)
        for e, c in other._coeffs.items():
            out[e] = out.get(e, 0) + c
        return IntPolynomial(out)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __neg__(self):
        return IntPolynomial({e: -c for e, c in self._coeffs.items()})

    def __mul__(self, other):
        other = self._coerce(other)
        out: dict = {}
        for e1, c1 in self._coeffs.items():
            for e2, c2 in other._coeffs.items():
                e = tuple(x + y for x, y in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return IntPolynomial(out)

    __rmul__ = __mul__
    __radd__ = __add__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = IntPolynomial.constant(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        return self._coeffs == self._coerce(other)._coeffs

    def __hash__(self):
        return hash(frozenset(self._coeffs.items()))

    def is_zero(self) -> bool:
        return not self._coeffs

    def coefficients(self) -> dict:
        return dict(self._coeffs)

    @staticmethod
    def _coerce(other):
        if isinstance(other, IntPolynomial):
            return other
        if isinstance(other, int):
            return IntPolynomial.constant(other)
        raise TypeError(f"cannot combine IntPolynomial with {type(other)!r}")

    def __repr__(self):
        if not self._coeffs:
            return "0"
        bits = []
        for expo in sorted(self._coeffs, reverse=True):
            coef = self._coeffs[expo]
            mono = "".join(
                f"{v}^{e}" if e > 1 else v
                for v, e in zip(self.VARS, expo) if e
            )
            bits.append(f"{coef:+d}{('*' + mono) if mono else ''}")
        return " ".join(bits)


_M = IntPolynomial.var("M")
_A = IntPolynomial.var("a")
_B = IntPolynomial.var("b")
_C = IntPolynomial.var("c")


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------

def bell_constants(k_max: int) -> tuple[int, ...]:
    """B_0..B_{k_max}: B_0 = 1 and B_{k+1} = sum_j C(k, j) B_j."""
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    B = [1]
    for k in range(k_max):
        B.append(sum(comb(k, j) * B[j] for j in range(k + 1)))
    return tuple(B)


def dimensional_constant(n: int) -> int:
    """The even/odd binomial-Bell contraction; always at least n + 1."""
    if n < 1:
        raise ValueError("n must be at least 1")
    B = bell_constants(n)
    if n % 2 == 0:
        m = n // 2
        out = sum(comb(2 * m + 1, 2 * k + 1) * B[2 * m - 2 * k] for k in range(m + 1))
    else:
        m = (n - 1) // 2
        out = sum(comb(2 * m + 2, 2 * k + 1) * B[2 * m - 2 * k + 1] for k in range(m + 1))
    assert out >= n + 1, f"dimensional constant {out} below {n + 1}"
    return out


# ---------------------------------------------------------------------------
# identity verifiers (exact; the fault flags exist to prove the checks bite)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdentityVerdict:
    name: str
    cases: int
    passed: bool


def verify_identity_df019(n_max: int, inject_fault: bool = False) -> IdentityVerdict:
    """C(n,k) + [n/(n-k+1)] C(n-1,k-1) = C(n+1,k), exact rationals."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    cases = 0
    for n in range(1, n_max + 1):
        for k in range(1, n + 1):
            lhs = Fraction(comb(n, k)) + Fraction(n, n - k + 1) * comb(n - 1, k - 1)
            rhs = Fraction(comb(n + 1, k))
            if inject_fault:
                lhs += Fraction(1, 7)
            cases += 1
            if lhs != rhs:
                raise CounterexampleFound(
                    f"binomial identity fails at n={n}, k={k}: {lhs} != {rhs}")
    return IdentityVerdict("df019", cases, True)


def verify_identity_gr004(n: int, inject_fault: bool = False) -> IdentityVerdict:
    """Difference of two binomial expansions telescopes through M - c."""
    if n < 1:
        raise ValueError("n must be at least 1")
    lhs = IntPolynomial()
    for k in range(n + 1):
        coef = comb(n + 1, k) + (1 if inject_fault and k == 1 else 0)
        lhs = lhs + coef * (_M ** (n + 1 - k) * _A ** (n - k) * _B ** k)
        lhs = lhs - comb(n + 1, k) * (_C ** (n + 1 - k) * _A ** (n - k) * _B ** k)
    rhs = IntPolynomial()
    for k in range(n + 1):
        rhs = rhs + (_M * _A + _B) ** (n - k) * (_C * _A + _B) ** k
    rhs = (_M - _C) * rhs
    if lhs != rhs:
        raise CounterexampleFound(
            f"telescoping identity fails at n={n}: diff = {lhs - rhs!r}")
    return IdentityVerdict("gr004", n, True)


def verify_identity_gr0066(n: int, inject_fault: bool = False) -> IdentityVerdict:
    """Binomial rewrite of the mass decomposition against e = ca + b."""
    if n < 1:
        raise ValueError("n must be at least 1")
    lhs = IntPolynomial()
    for k in range(n + 1):
        lhs = lhs + comb(n + 1, k) * (_C ** (n - k + 1) * _A ** (n - k) * _B ** k)
    rhs = IntPolynomial()
    for j in range(n + 1):
        sign = -1 if (j % 2 == 1) != bool(inject_fault and j == 1) else 1
        rhs = rhs + sign * comb(n + 1, j + 1) * (
            (_C * _A + _B) ** (n - j) * _C ** (j + 1) * _A ** j)
    if lhs != rhs:
        raise CounterexampleFound(
            f"alternating identity fails at n={n}: diff = {lhs - rhs!r}")
    return IdentityVerdict("gr0066", n, True)


# ---------------------------------------------------------------------------
# inequality reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InequalityReport:
    """Measured comparison lhs <= rhs with a three-way verdict.

    slack = rhs - lhs.  pass: slack > uncertainty; fail: slack <
    -uncertainty; inconclusive otherwise.  For equality-type claims
    (zero rhs) the builder may assert |lhs| <= uncertainty instead.
    """

    name: str
    lhs: float
    rhs: float
    slack: float
    uncertainty: float
    verdict: str

    @staticmethod
    def build(name: str, lhs: float, rhs: float, uncertainty: float,
              equality: bool = False) -> "InequalityReport":
        slack = rhs - lhs
        if equality:
            verdict = "pass" if abs(lhs - rhs) <= uncertainty else "fail"
        elif slack > uncertainty:
            verdict = "pass"
        elif slack < -uncertainty:
            verdict = "fail"
        else:
            verdict = "inconclusive"
        return InequalityReport(name, lhs, rhs, slack, uncertainty, verdict)


@dataclass(frozen=True)
class EstimateInputs:
    """Everything the inequality suite consumes, gathered upstream."""

    n: int
    t_grid: tuple
    mass: np.ndarray
    mass_stderr: np.ndarray
    I_over_pin: np.ndarray
    I_stderr: np.ndarray
    term_traces: list
    nu: LelongEstimate
    profile: DirectionalProfile
    tau: float
    tau_uncertainty: float


def gather_estimate_inputs(f: FunctionSpec, n: int,
                           scheme: IntegrationScheme | None = None,
                           t_grid=DEFAULT_T_GRID,
                           A_grid=DEFAULT_A_GRID,
                           grid_density: int = 512) -> EstimateInputs:
    """Run the measurement pipeline once and package the results."""
    scheme = scheme or IntegrationScheme()
    nu = lelong_estimate(f, n, t_grid, scheme)
    profile = directional_profile(f, n, A_grid, grid_density, scheme)
    tau, tau_unc, trace = residual_mass(f, n, t_grid, scheme)
    itrace = lelong_by_I(f, n, t_grid, scheme, p=1)
    terms = [theta_terms(f, n, t, scheme) for t in trace.t_grid]
    return EstimateInputs(
        n=n,
        t_grid=tuple(float(t) for t in trace.t_grid),
        mass=trace.mass,
        mass_stderr=trace.stderr,
        I_over_pin=itrace.values,
        I_stderr=itrace.stderr,
        term_traces=terms,
        nu=nu,
        profile=profile,
        tau=tau,
        tau_uncertainty=tau_unc,
    )


def check_estimate_suite(f: FunctionSpec, n: int,
                         inputs: EstimateInputs) -> list[InequalityReport]:
    """Emit the full inequality report sequence for one member."""
    B = bell_constants(n)
    Cn = dimensional_constant(n)
    nu, nu_unc = inputs.nu.value, inputs.nu.uncertainty
    lam, lam_unc = inputs.profile.lam, inputs.profile.lam_uncertainty
    tau, tau_unc = inputs.tau, inputs.tau_uncertainty
    reports = []

    # (a) nu^{n+1} <= tau
    lhs = nu ** (n + 1)
    unc = (n + 1) * max(nu, 0.0) ** n * nu_unc + tau_unc
    reports.append(InequalityReport.build("nu_power_le_tau", lhs, tau, unc))

    # (b) tau <= 2 C_n lambda^n nu; for nu = 0 this asserts tau = 0
    rhs = 2.0 * Cn * lam ** n * nu
    unc = tau_unc + 2.0 * Cn * (n * lam ** max(n - 1, 0) * lam_unc * abs(nu)
                                + lam ** n * nu_unc)
    zero_mass = nu <= nu_unc + 1e-9
    reports.append(InequalityReport.build(
        "tau_le_2Cn_lambda_nu", tau, rhs, unc + (nu_unc if zero_mass else 0.0),
        equality=zero_mass))

    # (c) tau <= (n+1) lambda^{n+1}
    rhs = (n + 1) * lam ** (n + 1)
    unc = tau_unc + (n + 1) ** 2 * lam ** n * lam_unc
    reports.append(InequalityReport.build("tau_le_rough_lambda_power", tau, rhs, unc))

    # (d) mass(t) <= C_n M_A^n I(u_t)/pi^n for every t < -A
    for A, M, gap in zip(inputs.profile.A_grid, inputs.profile.M_values,
                         inputs.profile.gaps):
        worst = None
        for i, t in enumerate(inputs.t_grid):
            if t >= -A:
                continue
            rhs = Cn * M ** n * inputs.I_over_pin[i]
            unc = (Cn * n * max(M, 0.0) ** max(n - 1, 0) * gap * inputs.I_over_pin[i]
                   + Cn * M ** n * 3.0 * inputs.I_stderr[i]
                   + 3.0 * inputs.mass_stderr[i])
            rep = InequalityReport.build(f"mass_le_Cn_MA_I_A={A:g}",
                                         float(inputs.mass[i]), rhs, unc + 1e-9)
            if worst is None or rep.slack < worst.slack:
                worst = rep
        if worst is not None:
            reports.append(worst)

    # (e) per-k theta term <= B_k M_A^n I(u_t)/pi^n, worst case over (t, A)
    for k in range(n + 1):
        worst = None
        for i, t in enumerate(inputs.t_grid):
            term = inputs.term_traces[i][k]
            for A, M, gap in zip(inputs.profile.A_grid, inputs.profile.M_values,
                                 inputs.profile.gaps):
                if t >= -A:
                    continue
                rhs = B[k] * M ** n * inputs.I_over_pin[i]
                unc = (B[k] * n * max(M, 0.0) ** max(n - 1, 0) * gap
                       * inputs.I_over_pin[i]
                       + B[k] * M ** n * 3.0 * inputs.I_stderr[i]
                       + 3.0 * term.stderr)
                rep = InequalityReport.build(f"theta_term_bound_k={k}",
                                             term.value, rhs, unc + 1e-9)
                if worst is None or rep.slack < worst.slack:
                    worst = rep
        if worst is not None:
            reports.append(worst)

    # (f) sharp two-invariant bound, one complex dimension only
    if n == 1:
        rhs = 2.0 * lam * nu + nu ** 2
        unc = tau_unc + 2.0 * (lam_unc * abs(nu) + lam * nu_unc) + 2.0 * nu * nu_unc
        reports.append(InequalityReport.build("tau_le_2lambda_nu_plus_nu2",
                                              tau, rhs, unc))

    # (g) the conjectural constant without the factor 2; reported, never
    # asserted by any test or exit code
    rhs = Cn * lam ** n * nu
    unc = tau_unc + Cn * (n * lam ** max(n - 1, 0) * lam_unc * abs(nu)
                          + lam ** n * nu_unc)
    reports.append(InequalityReport.build("improved_tau_bound_unproven",
                                          tau, rhs, unc))
    return reports
