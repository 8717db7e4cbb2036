"""Exact combinatorics, identity verifiers, and the inequality suite."""

from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hopfmass.bounds import (EstimateInputs, InequalityReport, IntPolynomial,
                             bell_constants, check_estimate_suite,
                             dimensional_constant, gather_estimate_inputs,
                             verify_identity_df019, verify_identity_gr004,
                             verify_identity_gr0066)
from hopfmass.errors import CounterexampleFound
from hopfmass.functions import standard_members
from hopfmass.quadrature import IntegrationScheme


def _bell_triangle(k_max):
    # Independent oracle: the additive triangle whose row heads are the
    # Bell numbers.
    row = [1]
    out = [1]
    for _ in range(k_max):
        new = [row[-1]]
        for x in row:
            new.append(new[-1] + x)
        row = new
        out.append(row[0])
    return tuple(out)


def test_bell_constants_match_triangle_oracle():
    assert bell_constants(7) == (1, 1, 2, 5, 15, 52, 203, 877)
    assert bell_constants(11) == _bell_triangle(11)
    assert bell_constants(0) == (1,)
    with pytest.raises(ValueError):
        bell_constants(-1)


def test_dimensional_constants_small_cases():
    # n = 1..4 verified by hand from the parity formulas
    assert [dimensional_constant(n) for n in (1, 2, 3, 4)] == [2, 7, 24, 96]
    with pytest.raises(ValueError):
        dimensional_constant(0)


def test_dimensional_constant_unified_form():
    # both parity branches agree with the single even-index contraction
    for n in range(1, 13):
        B = bell_constants(n)
        ref = sum(comb(n + 1, j + 1) * B[n - j] for j in range(0, n + 1, 2))
        assert dimensional_constant(n) == ref
        assert dimensional_constant(n) >= n + 1


def test_binomial_identity_exact():
    verdict = verify_identity_df019(12)
    assert verdict.passed and verdict.cases == 78
    with pytest.raises(CounterexampleFound):
        verify_identity_df019(4, inject_fault=True)


def test_polynomial_identities_exact_through_n8():
    for n in range(1, 9):
        assert verify_identity_gr004(n).passed
        assert verify_identity_gr0066(n).passed


def test_polynomial_identity_fault_injection():
    with pytest.raises(CounterexampleFound):
        verify_identity_gr004(3, inject_fault=True)
    with pytest.raises(CounterexampleFound):
        verify_identity_gr0066(3, inject_fault=True)


def test_int_polynomial_arithmetic():
    M = IntPolynomial.var("M")
    a = IntPolynomial.var("a")
    cube = (M + a) ** 3
    assert cube.coefficients() == {(3, 0, 0, 0): 1, (2, 1, 0, 0): 3,
                                   (1, 2, 0, 0): 3, (0, 3, 0, 0): 1}
    assert (cube - cube).is_zero()
    assert IntPolynomial.constant(5) == 5
    assert (M * a) == (a * M)
    with pytest.raises(TypeError):
        M + 0.5
    with pytest.raises(ValueError):
        IntPolynomial({(1, 2): 3})
    with pytest.raises(ValueError):
        M ** -1
    assert "M" in repr(M + 1)


_small_poly = st.dictionaries(
    st.tuples(*(st.integers(0, 2) for _ in range(4))),
    st.integers(-5, 5), max_size=4,
).map(IntPolynomial)


@settings(max_examples=60, deadline=None)
@given(_small_poly, _small_poly, _small_poly)
def test_int_polynomial_ring_axioms(p, q, r):
    assert (p + q) * r == p * r + q * r
    assert p * q == q * p
    assert p + (-p) == IntPolynomial()


def test_verdict_three_way():
    assert InequalityReport.build("x", 1.0, 3.0, 0.5).verdict == "pass"
    assert InequalityReport.build("x", 3.0, 1.0, 0.5).verdict == "fail"
    assert InequalityReport.build("x", 1.0, 1.2, 0.5).verdict == "inconclusive"
    r = InequalityReport.build("x", 1.0, 3.0, 0.5)
    assert r.slack == pytest.approx(2.0)
    # equality mode: used when the hypothesis forces both sides to vanish
    assert InequalityReport.build("e", 1e-4, 0.0, 1e-2,
                                  equality=True).verdict == "pass"
    assert InequalityReport.build("e", 0.5, 0.0, 1e-2,
                                  equality=True).verdict == "fail"


@pytest.fixture(scope="module")
def monomial_inputs():
    f = standard_members(1)["monomial_12"]
    return f, gather_estimate_inputs(f, 1, IntegrationScheme(kind="tensor"))


def test_gathered_inputs_shapes(monomial_inputs):
    _, inp = monomial_inputs
    assert inp.t_grid == (-5.0, -10.0, -20.0, -40.0)
    assert inp.mass.shape == (4,) and inp.I_over_pin.shape == (4,)
    assert len(inp.term_traces) == 4
    assert all(len(row) == 2 for row in inp.term_traces)


def test_suite_monomial_all_pass_with_oracle_slacks(monomial_inputs):
    f, inp = monomial_inputs
    reports = {r.name: r for r in check_estimate_suite(f, 1, inp)}
    assert all(r.verdict == "pass" for r in reports.values())
    # nu = 1, lambda = 2, tau = 2 exactly for this member
    assert reports["nu_power_le_tau"].slack == pytest.approx(1.0, abs=1e-2)
    assert reports["tau_le_2lambda_nu_plus_nu2"].slack == pytest.approx(3.0, abs=5e-2)
    assert reports["tau_le_2Cn_lambda_nu"].slack == pytest.approx(6.0, abs=1e-1)
    assert reports["improved_tau_bound_unproven"].slack == pytest.approx(2.0, abs=1e-1)


def test_suite_radial_n2_sharp_cases():
    f = standard_members(2)["radial_1"]
    inp = gather_estimate_inputs(f, 2)
    reports = {r.name: r for r in check_estimate_suite(f, 2, inp)}
    assert not any(r.verdict == "fail" for r in reports.values())
    # nu^3 = tau exactly, so the first bound sits on its sharp edge
    assert reports["nu_power_le_tau"].verdict in ("pass", "inconclusive")
    assert abs(reports["nu_power_le_tau"].slack) < 1e-6
    assert reports["tau_le_2Cn_lambda_nu"].slack == pytest.approx(13.0, abs=1e-2)
    assert reports["tau_le_rough_lambda_power"].slack == pytest.approx(2.0, abs=1e-2)


def test_suite_zero_mass_member():
    f = standard_members(1)["sqrt_radial"]
    inp = gather_estimate_inputs(f, 1, IntegrationScheme(kind="tensor"))
    reports = {r.name: r for r in check_estimate_suite(f, 1, inp)}
    assert not any(r.verdict == "fail" for r in reports.values())
    # nu = 0 forces tau = 0; the suite checks that as an equality
    assert reports["tau_le_2Cn_lambda_nu"].verdict == "pass"
    assert abs(inp.tau) <= 1e-9
    # the per-term bound is nearly sharp here but must still clear
    assert reports["theta_term_bound_k=0"].slack > 0


def test_suite_scaling_covariance(monomial_inputs):
    # every inequality is homogeneous under u -> s u, so the verdict
    # sequence must not depend on the overall scale
    f_s = standard_members(1)["scaled_monomial"]
    inp_s = gather_estimate_inputs(f_s, 1, IntegrationScheme(kind="tensor"))
    reports_s = check_estimate_suite(f_s, 1, inp_s)
    f, inp = monomial_inputs
    reports = check_estimate_suite(f, 1, inp)
    assert [r.name for r in reports_s] == [r.name for r in reports]
    assert [r.verdict for r in reports_s] == [r.verdict for r in reports]
    # slack in the top bound scales like s^{n+1} = 1/4
    by = {r.name: r for r in reports}
    by_s = {r.name: r for r in reports_s}
    assert by_s["nu_power_le_tau"].slack == pytest.approx(
        0.25 * by["nu_power_le_tau"].slack, rel=1e-2)


def test_inputs_tau_matches_trace_tail(monomial_inputs):
    _, inp = monomial_inputs
    assert inp.tau == pytest.approx(2.0, abs=1e-6)
    assert inp.mass[-1] == pytest.approx(2.0, abs=1e-8)
    assert inp.I_over_pin[0] > inp.I_over_pin[-1] > 0
    assert isinstance(inp, EstimateInputs)
