"""Boundary masses against closed forms and the independent shell integral.

Every reference value here has an analytic derivation that does not use
the fibration machinery:

  * c log|z|               mass c^{n+1} at every level,
  * |z|^2                  mass 2^{n+1} e^{2(n+1)t},
  * monomial ideals        level-independent mass equal to the covolume
                           of the exponent rows (complex Hessian
                           determinant vanishes identically off 0),
  * log-sum-exp members    same degeneracy, mass prod(a_j),
  * log of linear forms    pluriharmonic pieces, mass |det A| with unit
                           weights,
  * sqrt composition of    mass 1/(4|t|), from the one-variable radial
    c log|z| (n = 1)       reduction.
"""

import numpy as np
import pytest

from hopfmass.errors import (
    BadRadii,
    CheckFailed,
    DimensionMismatch,
    NotPositiveDefinite,
    UnsupportedDimension,
)
from hopfmass.functions import parse_spec
from hopfmass.mass import (
    boundary_mass,
    boundary_mass_alternating,
    boundary_mass_trace,
    mass_nodes,
    mixed_wedge_ratio,
    positivity_check,
    residual_mass,
    shell_oracle,
    transversal_state,
)
from hopfmass.quadrature import IntegrationScheme

MONOMIAL_1 = "monomial_ideal(m=[[1,0],[0,2]], w=[1,1])"
MONOMIAL_2 = "monomial_ideal(m=[[1,0,0],[0,2,0],[0,0,1]], w=[1,1,1])"


# ---------------------------------------------------------------------------
# the pointwise kernel
# ---------------------------------------------------------------------------

def test_wedge_ratio_reference_values():
    G = np.eye(2, dtype=complex)
    H = np.diag([1.0 + 0j, 2.0 + 0j])
    assert mixed_wedge_ratio(G, H, 0) == 1.0
    assert abs(mixed_wedge_ratio(G, H, 1) - 1.5) < 1e-14
    assert abs(mixed_wedge_ratio(G, H, 2) - 2.0) < 1e-14


def test_wedge_ratio_identity_and_determinant(rng):
    for n in (1, 2, 3):
        A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        G = A @ A.conj().T + 0.1 * np.eye(n)
        B = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        H = 0.5 * (B + B.conj().T)
        for k in range(n + 1):
            assert abs(mixed_wedge_ratio(G, G, k) - 1.0) < 1e-12
        want = (np.linalg.det(H) / np.linalg.det(G)).real
        assert abs(mixed_wedge_ratio(G, H, n) - want) < 1e-10 * max(1.0, abs(want))


def test_wedge_ratio_validation():
    G = np.eye(2, dtype=complex)
    with pytest.raises(ValueError):
        mixed_wedge_ratio(G, G, 3)
    with pytest.raises(DimensionMismatch):
        mixed_wedge_ratio(G, np.eye(3, dtype=complex), 1)
    with pytest.raises(NotPositiveDefinite):
        mixed_wedge_ratio(-G, G, 1)


def test_transversal_state_for_radial_member():
    f = parse_spec("radial(profile=log, c=1.5)")
    st = transversal_state(f, -2.0, np.array([0.4 + 0.3j]), chart=0)
    assert abs(st.u_dot - 1.5) < 1e-13
    assert np.max(np.abs(st.eigs)) < 1e-12
    assert st.G.shape == (1, 1)


# ---------------------------------------------------------------------------
# closed-form masses, deterministic rules
# ---------------------------------------------------------------------------

def test_radial_mass_is_power_of_coefficient(tensor_scheme):
    for c in (0.5, 1.0, 1.5):
        f = parse_spec(f"radial(profile=log, c={c})")
        for n, tol in ((1, 1e-9), (2, 1e-9)):
            est = boundary_mass(f, n, -3.0, tensor_scheme)
            assert abs(est.value - c ** (n + 1)) < tol * c ** (n + 1)


def test_radial_mass_monte_carlo(mc_scheme):
    f = parse_spec("radial(profile=log, c=1.5)")
    est = boundary_mass(f, 3, -2.0, mc_scheme)
    # the kernel is constant over the nodes, so the error collapses
    assert est.within(1.5**4)
    assert est.stderr < 1e-10


def test_quadratic_member_mass_profile(tensor_scheme):
    f = parse_spec("smooth_poly(terms=[(1,[1,0],[1,0]),(1,[0,1],[0,1])])")
    for t in (-2.0, -1.0):
        est = boundary_mass(f, 1, t, tensor_scheme)
        want = 4.0 * np.exp(4.0 * t)
        assert abs(est.value - want) < 1e-10 * want
    g = parse_spec(
        "smooth_poly(terms=[(1,[1,0,0],[1,0,0]),(1,[0,1,0],[0,1,0]),(1,[0,0,1],[0,0,1])])"
    )
    est = boundary_mass(g, 2, -1.5, tensor_scheme)
    want = 8.0 * np.exp(-9.0)
    assert abs(est.value - want) < 1e-9 * want


def test_monomial_mass_is_flat_multiplicity(tensor_scheme):
    f = parse_spec(MONOMIAL_1)
    trace = boundary_mass_trace(f, 1, [-2.0, -4.0, -8.0, -20.0, -40.0], tensor_scheme)
    assert np.max(np.abs(trace.mass - 2.0)) < 5e-9

    g = parse_spec(MONOMIAL_2)
    for t in (-4.0, -8.0):
        est = boundary_mass(g, 2, t, tensor_scheme)
        assert abs(est.value - 2.0) < 5e-9


def test_lse_mass_is_flat_product(tensor_scheme):
    f = parse_spec("lse_toric(a=[1,2], beta=2)")
    trace = boundary_mass_trace(f, 1, [-2.0, -4.0, -8.0], tensor_scheme)
    assert np.max(np.abs(trace.mass - 2.0)) < 1e-9
    g = parse_spec("lse_toric(a=[1,2,1], beta=2)")
    est = boundary_mass(g, 2, -6.0, tensor_scheme)
    assert abs(est.value - 2.0) < 1e-9


def test_loglinear_mass_is_det(tensor_scheme):
    f = parse_spec("loglinear(A=[[1,1],[0,1]])")
    est, terms = boundary_mass(f, 1, -3.0, tensor_scheme, return_terms=True)
    assert abs(est.value - 1.0) < 1e-9
    # all boundary terms with a Hessian factor integrate to zero
    for k, term in enumerate(terms):
        if k >= 1:
            assert abs(term.value) < 1e-8


def test_sqrt_radial_mass_closed_form(tensor_scheme):
    f = parse_spec("sqrt_compose(radial(profile=log, c=1))")
    ts = [-5.0, -10.0, -20.0, -40.0]
    trace = boundary_mass_trace(f, 1, ts, tensor_scheme)
    want = np.array([1.0 / (4.0 * abs(t)) for t in ts])
    assert np.max(np.abs(trace.mass - want) / want) < 1e-8


def test_scaling_covariance(tensor_scheme):
    base = parse_spec(MONOMIAL_1)
    scaled = parse_spec(f"scale(0.5, {MONOMIAL_1})")
    e0 = boundary_mass(base, 1, -4.0, tensor_scheme)
    e1 = boundary_mass(scaled, 1, -4.0, tensor_scheme)
    assert abs(e1.value - 0.25 * e0.value) < 1e-10


# ---------------------------------------------------------------------------
# the alternating form and the shell oracle
# ---------------------------------------------------------------------------

@pytest.mark.parametrize(
    "spec,n",
    [
        (MONOMIAL_1, 1),
        ("loglinear(A=[[2,0],[1,1]])", 1),
        (MONOMIAL_2, 2),
        ("lse_toric(a=[1,2,1], beta=2)", 2),
    ],
)
def test_alternating_form_agrees_on_shared_nodes(spec, n, tensor_scheme):
    f = parse_spec(spec)
    nodes = mass_nodes(f, n, -6.0, tensor_scheme)
    direct = boundary_mass(f, n, -6.0, tensor_scheme, nodes=nodes)
    alt = boundary_mass_alternating(f, n, -6.0, tensor_scheme, nodes=nodes)
    assert abs(direct.value - alt.value) < 1e-12 * max(1.0, abs(direct.value))


def test_shell_oracle_on_quadratic_member(mc_scheme):
    # independent check: interior Monge-Ampere measure of the shell
    # equals the difference of boundary masses
    f = parse_spec("smooth_poly(terms=[(1,[1,0],[1,0]),(1,[0,1],[0,1])])")
    t1, t2 = -2.0, -1.0
    shell = shell_oracle(f, 1, t1, t2, mc_scheme)
    want = 4.0 * (np.exp(4.0 * t2) - np.exp(4.0 * t1))
    assert shell.within(want)
    assert shell.stderr < 1e-12  # constant density, exact radial law


def test_shell_oracle_vanishes_for_degenerate_members(mc_scheme):
    for spec, n in ((MONOMIAL_1, 1), (MONOMIAL_2, 2), ("loglinear(A=[[1,1],[0,1]])", 1)):
        f = parse_spec(spec)
        est = shell_oracle(f, n, -8.0, -4.0, mc_scheme)
        assert abs(est.value) < 1e-12


def test_shell_oracle_radii_validation(mc_scheme):
    f = parse_spec(MONOMIAL_1)
    with pytest.raises(BadRadii):
        shell_oracle(f, 1, -4.0, -8.0, mc_scheme)
    with pytest.raises(BadRadii):
        shell_oracle(f, 1, -4.0, 0.5, mc_scheme)


# ---------------------------------------------------------------------------
# traces, limits, positivity
# ---------------------------------------------------------------------------

def test_trace_requires_decreasing_grid(tensor_scheme):
    f = parse_spec(MONOMIAL_1)
    with pytest.raises(BadRadii):
        boundary_mass_trace(f, 1, [-4.0, -2.0, -8.0], tensor_scheme)


def test_trace_is_monotone_for_increasing_t(tensor_scheme):
    f = parse_spec("sqrt_compose(radial(profile=log, c=1))")
    trace = boundary_mass_trace(f, 1, [-5.0, -10.0, -20.0], tensor_scheme)
    # grid is decreasing in t, so the masses must increase back to front
    assert trace.mass[0] > trace.mass[1] > trace.mass[2]


def test_residual_mass_of_monomial(tensor_scheme):
    f = parse_spec(MONOMIAL_1)
    tau, unc, trace = residual_mass(f, 1, [-5.0, -10.0, -20.0, -40.0], tensor_scheme)
    assert abs(tau - 2.0) < 1e-8
    assert unc < 1e-6


def test_positivity_screen_and_planted_failure():
    f = parse_spec(MONOMIAL_1)
    report = positivity_check(f, 1, [-2.0, -6.0], samples=500, seed=1)
    assert report.min_eig > -1e-6
    assert report.checked == 1000

    bad = parse_spec("smooth_poly(terms=[(1,[1,0],[1,0]),(-0.5,[0,1],[0,1])])")
    with pytest.raises(CheckFailed):
        positivity_check(bad, 1, [-1.0], samples=500, seed=1)


def test_deterministic_nodes_unavailable_above_two(tensor_scheme):
    f = parse_spec("radial(profile=log, c=1)")
    with pytest.raises(UnsupportedDimension):
        mass_nodes(f, 3, -4.0, tensor_scheme)


def test_dimension_guard(tensor_scheme):
    f = parse_spec(MONOMIAL_1)
    with pytest.raises(DimensionMismatch):
        boundary_mass(f, 2, -3.0, tensor_scheme)
