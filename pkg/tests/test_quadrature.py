"""Node sets, shell integrals, and sequence extrapolation against closed forms."""

import math

import numpy as np
import pytest

from hopfmass.errors import BadRadii, InsufficientData, UnsupportedDimension
from hopfmass.quadrature import (
    Estimate,
    IntegrationScheme,
    cpn_nodes,
    extrapolate_limit,
    integrate_cpn,
    integrate_shell,
    rng_stream,
    sample_sphere,
    sphere_mean,
    sphere_means_shared,
    toric_nodes,
)


def test_scheme_validation():
    with pytest.raises(ValueError):
        IntegrationScheme(kind="simpson")
    with pytest.raises(ValueError):
        IntegrationScheme(samples=1)


def test_rng_streams_are_reproducible_and_distinct():
    a = rng_stream(42, 1).random(8)
    b = rng_stream(42, 1).random(8)
    c = rng_stream(42, 2).random(8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sphere_samples_have_unit_norm():
    pts = sample_sphere(2, 500, rng_stream(0, 3))
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)


def test_total_projective_volume(tensor_scheme, mc_scheme):
    # the integrator is normalized so that the total volume is pi^n
    est = integrate_cpn(lambda z, c: np.ones(z.shape[0]), 1, tensor_scheme)
    assert abs(est.value - np.pi) < 1e-10
    est2 = integrate_cpn(lambda z, c: np.ones(z.shape[0]), 2, mc_scheme)
    assert abs(est2.value - np.pi**2) < 1e-10


def test_projective_average_closed_form(tensor_scheme, mc_scheme):
    # E[|Z_0|^2 / |Z|^2] over the n-dimensional projective space is
    # 1/(n+1) by symmetry; the integrand is chart-covariant so tensor
    # and Monte Carlo nodes must agree on it.
    def g(zeta, chart):
        s = 1.0 + np.sum(np.abs(zeta) ** 2, axis=1)
        if chart == 0:
            return 1.0 / s
        return np.abs(zeta[:, 0]) ** 2 / s

    est1 = integrate_cpn(g, 1, tensor_scheme)
    assert abs(est1.value - np.pi / 2.0) < 1e-10
    est3 = integrate_cpn(g, 3, mc_scheme)
    assert est3.stderr > 0
    assert abs(est3.value - np.pi**3 / 4.0) < 3.0 * est3.stderr


def test_tensor_rule_is_one_dimensional_only(tensor_scheme):
    with pytest.raises(UnsupportedDimension):
        cpn_nodes(2, tensor_scheme)


def test_toric_nodes_weight_and_moment(tensor_scheme):
    # evaluate |Z_0|^2 chart-covariantly, which also exercises the
    # dominant-coordinate chart assignment of the nodes
    for n in (1, 2):
        nodes = toric_nodes(n, tensor_scheme, radial_window=(-16.0, 16.0))
        assert not nodes.stochastic
        assert abs(np.sum(nodes.weights) - 1.0) < 1e-9
        assert np.all(np.abs(nodes.zeta) <= 1.0 + 1e-12)
        s = 1.0 + np.sum(np.abs(nodes.zeta) ** 2, axis=1)
        top = np.where(nodes.charts == 0, 1.0, np.abs(nodes.zeta[:, 0]) ** 2)
        est = nodes.average(top / s)
        assert abs(est.value - 1.0 / (n + 1)) < 1e-9
    with pytest.raises(UnsupportedDimension):
        toric_nodes(3, tensor_scheme, radial_window=(-8.0, 8.0))
    with pytest.raises(BadRadii):
        toric_nodes(1, tensor_scheme, radial_window=(4.0, 4.0))


def test_shell_volume_matches_ball_difference(mc_scheme):
    # For g = 1 the radial importance law integrates exactly, so the
    # estimate hits the volume difference at machine precision.
    for n in (1, 2):
        r1, r2 = 0.3, 0.9
        est = integrate_shell(lambda z: np.ones(z.shape[0]), r1, r2, n, mc_scheme)
        dim = 2 * n + 2
        vball = np.pi ** (n + 1) / math.factorial(n + 1)
        want = vball * (r2**dim - r1**dim)
        assert abs(est.value - want) < 1e-12 * want


def test_shell_radii_validation(mc_scheme):
    with pytest.raises(BadRadii):
        integrate_shell(lambda z: np.ones(z.shape[0]), 0.9, 0.3, 1, mc_scheme)


def test_sphere_mean_of_coordinate_square(mc_scheme):
    # E[x_i^2] on a radius-r sphere in R^{2n+2} is r^2/(2n+2).
    r = 0.7
    est = sphere_mean(lambda z: z[:, 0].real ** 2, r, 1, mc_scheme)
    assert abs(est.value - r**2 / 4.0) < 3.0 * est.stderr


def test_shared_sphere_means_use_common_directions(mc_scheme):
    # A degree-zero homogeneous integrand gives bit-identical means at
    # every radius when the direction sample is shared.
    def g(z):
        return np.abs(z[:, 0]) ** 2 / np.sum(np.abs(z) ** 2, axis=1)

    means, stderrs, mat = sphere_means_shared(g, 1, [-1.0, -2.0, -3.0], mc_scheme)
    assert means[0] == means[1] == means[2]
    assert mat.shape == (3, mc_scheme.samples)


def test_extrapolation_recovers_geometric_limit():
    ts = [-5.0, -10.0, -20.0, -40.0]
    vals = [3.0 + 0.5 * 0.25**k for k in range(4)]
    limit, unc = extrapolate_limit(ts, vals)
    assert abs(limit - 3.0) < 1e-10
    # the reported uncertainty is the distance from the last raw value
    assert abs(unc - abs(vals[-1] - 3.0)) < 1e-12
    with pytest.raises(InsufficientData):
        extrapolate_limit([-1.0, -2.0], [1.0, 1.0])


def test_estimate_within():
    a = Estimate(1.0, 0.1, 100)
    assert a.within(1.2)
    assert not a.within(1.5)
    exact = Estimate(1.0, 0.0, 10)
    assert exact.within(1.0 + 5e-10)
    assert not exact.within(1.0 + 5e-9)


def test_mc_nodes_are_seed_reproducible():
    sch = IntegrationScheme(kind="mc", samples=5000, seed=11)
    n1 = cpn_nodes(2, sch)
    n2 = cpn_nodes(2, sch)
    assert np.array_equal(n1.zeta, n2.zeta)
    assert np.array_equal(n1.charts, n2.charts)
