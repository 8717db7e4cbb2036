"""Energy levels, the pluricomplex functional, and ray concavity."""

import numpy as np
import pytest

from hopfmass.energy import (ConcavityReport, EnergyTrace, concavity_check,
                             energy_terms, energy_trace, pluricomplex_energy,
                             zero_mass_energy_check)
from hopfmass.errors import (BadRadii, CheckFailed, DimensionMismatch,
                             InsufficientData, OutsideDomain)
from hopfmass.functions import parse_spec, standard_members
from hopfmass.mass import BoundaryMassTrace, boundary_mass_trace
from hopfmass.quadrature import IntegrationScheme


def test_radial_levels_closed_form(tensor_scheme):
    # E_0 = c^{n+1} pi^n and every Hessian level vanishes identically
    E = energy_terms(standard_members(1)["radial_15"], 1, -3.0, tensor_scheme)
    assert E[0].value == pytest.approx(1.5 ** 2 * np.pi, rel=1e-12)
    assert abs(E[1].value) < 1e-12


def test_radial_levels_n2_toric():
    E = energy_terms(standard_members(2)["radial_1"], 2, -4.0, IntegrationScheme())
    assert E[0].value == pytest.approx(np.pi ** 2, rel=1e-10)
    assert abs(E[1].value) < 1e-10 and abs(E[2].value) < 1e-10


def test_loglinear_levels_stokes(tensor_scheme):
    # unit slope pins E_0 = pi; the Hessian level integrates away
    E = energy_terms(standard_members(1)["loglinear_shear"], 1, -6.0, tensor_scheme)
    assert E[0].value == pytest.approx(np.pi, rel=1e-12)
    assert abs(E[1].value) < 1e-9


def test_slope_level_tends_to_lelong_power(tensor_scheme):
    f = standard_members(1)["monomial_12"]
    vals = [energy_terms(f, 1, t, tensor_scheme)[0].value / np.pi
            for t in (-5.0, -10.0, -20.0, -40.0)]
    # non-increasing toward the origin, limit nu^{n+1} = 1
    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(1.0, abs=1e-4)


def test_energy_terms_validation(tensor_scheme):
    f = standard_members(1)["radial_1"]
    with pytest.raises(BadRadii):
        energy_terms(f, 1, -0.5, tensor_scheme)
    with pytest.raises(DimensionMismatch):
        energy_terms(standard_members(1)["monomial_12"], 2, -2.0, tensor_scheme)


def test_pluricomplex_energy_radial_vanishes(tensor_scheme):
    est = pluricomplex_energy(standard_members(1)["radial_1"], 1, -10.0,
                              tensor_scheme)
    assert abs(est.value) < 1e-12


def test_pluricomplex_energy_derivative_relation(tensor_scheme):
    # the internal cross-check runs on every call; also confirm the
    # coarse external slope matches -(n+1) E_{n,n} over a wider step
    from hopfmass.mass import mass_nodes
    f = standard_members(1)["monomial_12"]
    nodes = mass_nodes(f, 1, -10.5, tensor_scheme)
    e_hi = pluricomplex_energy(f, 1, -10.0, tensor_scheme, nodes=nodes)
    e_lo = pluricomplex_energy(f, 1, -10.5, tensor_scheme, nodes=nodes)
    slope = (e_hi.value - e_lo.value) / 0.5
    enn = energy_terms(f, 1, -10.25, tensor_scheme, nodes=nodes)[1].value
    assert slope == pytest.approx(-2.0 * enn, rel=1e-2)


def test_pluricomplex_energy_positive_member_rejected(tensor_scheme):
    f = parse_spec("smooth_poly(terms=[(1,[1,0],[1,0]),(1,[0,1],[0,1])])")
    with pytest.raises(OutsideDomain):
        pluricomplex_energy(f, 1, -2.0, tensor_scheme)


def test_pluricomplex_energy_shallow_stencil(tensor_scheme):
    # at t = -1 the derivative check must fall back to the one-sided
    # stencil rather than evaluate above the working depth
    est = pluricomplex_energy(standard_members(1)["monomial_12"], 1, -1.0,
                              tensor_scheme)
    assert np.isfinite(est.value)


def test_energy_trace_contraction(tensor_scheme):
    f = standard_members(1)["monomial_12"]
    tr = energy_trace(f, 1, (-2.0, -4.0, -8.0, -16.0), tensor_scheme)
    assert isinstance(tr, EnergyTrace)
    assert tr.E.shape == (4, 2)
    assert np.allclose(tr.M_prime, 2.0, atol=1e-8)
    # contraction identity on shared nodes is exact to rounding
    contracted = (tr.E[:, 0] + 2.0 * tr.E[:, 1]) / np.pi
    assert np.allclose(contracted, tr.M_prime, atol=1e-12)
    # the pluricomplex energy grows linearly with slope -(n+1)E_{n,n};
    # the shallowest interval is not asymptotic yet, the deep ones are
    diffs = np.diff(tr.calE) / np.diff(tr.t_grid)
    assert np.allclose(diffs, -np.pi, atol=0.15)
    assert diffs[-1] == pytest.approx(-np.pi, abs=1e-2)


def test_energy_trace_grid_validation(tensor_scheme):
    f = standard_members(1)["radial_1"]
    with pytest.raises(BadRadii):
        energy_trace(f, 1, (-2.0, -2.0, -3.0, -4.0), tensor_scheme)
    with pytest.raises(BadRadii):
        energy_trace(f, 1, (-0.5, -2.0, -3.0, -4.0), tensor_scheme)


GRID = (-2.0, -4.0, -8.0, -16.0, -32.0)


def test_concavity_affine_for_flat_mass(tensor_scheme):
    # pure Dirac mass (loglinear) and the ruled toric members have
    # constant boundary mass: the primitive is affine
    for name in ("loglinear_shear", "monomial_12", "lse_12"):
        rep = concavity_check(standard_members(1)[name], 1, GRID, tensor_scheme)
        assert rep.verdict == "affine"
        assert np.all(np.abs(rep.second_diffs) <= rep.tolerance)


def test_concavity_strict_for_vanishing_order(tensor_scheme):
    # mass 1/(4|t|) strictly increases in t, so the primitive is
    # concave but not affine
    rep = concavity_check(standard_members(1)["sqrt_radial"], 1, GRID,
                          tensor_scheme)
    assert rep.verdict == "concave" and not rep.affine
    assert np.all(rep.second_diffs <= rep.tolerance)


def test_concavity_check_lse_beta4(tensor_scheme):
    f = parse_spec("lse_toric(a=[1,2], beta=4)")
    rep = concavity_check(f, 1, GRID, tensor_scheme)
    assert isinstance(rep, ConcavityReport)
    assert np.all(rep.second_diffs <= rep.tolerance)


def test_concavity_rejects_convex_trace(tensor_scheme):
    f = standard_members(1)["monomial_12"]
    base = boundary_mass_trace(f, 1, GRID, tensor_scheme)
    doctored = BoundaryMassTrace(base.t_grid,
                                 np.array([2.0, 2.2, 2.5, 3.0, 4.0]),
                                 base.per_k, base.stderr)
    with pytest.raises(CheckFailed):
        concavity_check(f, 1, GRID, tensor_scheme, trace=doctored)


def test_concavity_needs_four_points(tensor_scheme):
    with pytest.raises(InsufficientData):
        concavity_check(standard_members(1)["radial_1"], 1, (-2.0, -4.0, -8.0),
                        tensor_scheme)


ZM_GRID = (-5.0, -10.0, -20.0, -40.0)


def test_zero_mass_sqrt_radial(tensor_scheme):
    rep = zero_mass_energy_check(standard_members(1)["sqrt_radial"], 1,
                                 ZM_GRID, tensor_scheme)
    assert rep.verdict == "pass"
    # closed form (2 sqrt{-t})^{-2}
    assert np.allclose(rep.mass, 1.0 / (4.0 * np.abs(np.array(ZM_GRID))),
                       rtol=1e-10)
    assert np.max(np.abs(rep.stokes_sum)) < 1e-12


def test_zero_mass_sqrt_monomial(tensor_scheme):
    rep = zero_mass_energy_check(standard_members(1)["sqrt_monomial"], 1,
                                 ZM_GRID, tensor_scheme)
    assert rep.verdict == "pass"
    assert rep.mass[-1] <= 1e-2
    assert abs(rep.stokes_sum[-1]) <= 1e-2


def test_zero_mass_rejects_singular_member(tensor_scheme):
    with pytest.raises(CheckFailed):
        zero_mass_energy_check(standard_members(1)["monomial_12"], 1,
                               ZM_GRID, tensor_scheme)
