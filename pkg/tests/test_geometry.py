"""Chart maps, the round metric block, and contact-form self-checks."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hopfmass.errors import CheckFailed, DimensionMismatch, OnAxis, ZeroPoint
from hopfmass.geometry import (
    HopfPoint,
    ambient_to_hopf,
    chart_section,
    contact_form_coeffs,
    contact_selfcheck,
    fs_metric_at,
    hopf_to_ambient,
    hopf_to_ambient_sym,
    project_ambient_batch,
)


def test_ambient_norm_is_exp_t():
    z = hopf_to_ambient(-1.25, 0.7, [0.3 + 0.1j], chart=0)
    assert np.abs(np.linalg.norm(z) - np.exp(-1.25)) < 1e-14


def test_chart_section_pivot_and_norm(rng):
    for n in (1, 2, 3):
        zeta = rng.normal(size=(5, n)) + 1j * rng.normal(size=(5, n))
        for chart in range(n + 1):
            sec = chart_section(zeta, chart)
            assert np.allclose(sec[:, chart], 1.0)
            norms = np.linalg.norm(sec, axis=-1)
            want = np.sqrt(1.0 + np.sum(np.abs(zeta) ** 2, axis=-1))
            assert np.allclose(norms, want, rtol=1e-14)
            keep = [j for j in range(n + 1) if j != chart]
            assert np.allclose(sec[:, keep], zeta)


def test_round_trip_through_hopf_coordinates(rng):
    for n in (1, 2, 3):
        z = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
        hp = ambient_to_hopf(z)
        back = hopf_to_ambient(hp.t, hp.theta, hp.zeta, hp.chart)
        assert np.allclose(back, z, atol=1e-12 * np.linalg.norm(z))


@given(
    t=st.floats(-4.0, 1.5),
    theta=st.floats(-3.0, 3.0),
    x=st.floats(-0.6, 0.6),
    y=st.floats(-0.6, 0.6),
)
@settings(max_examples=60, deadline=None)
def test_round_trip_recovers_t_and_theta(t, theta, x, y):
    # |zeta| < 1 keeps the pivot in chart 0, so the fibre phase survives
    z = hopf_to_ambient(t, theta, [x + 1j * y], chart=0)
    hp = ambient_to_hopf(z)
    assert hp.chart == 0
    assert abs(hp.t - t) < 1e-12
    delta = (hp.theta - theta + np.pi) % (2.0 * np.pi) - np.pi
    assert abs(delta) < 1e-10


def test_origin_rejected():
    with pytest.raises(ZeroPoint):
        ambient_to_hopf(np.zeros(2, dtype=complex))
    with pytest.raises(ZeroPoint):
        project_ambient_batch(np.zeros((3, 2), dtype=complex))


def test_chart_out_of_range():
    with pytest.raises(DimensionMismatch):
        chart_section(np.array([[0.1 + 0j]]), 5)


def test_symmetrized_chart_needs_nonzero_components():
    with pytest.raises(OnAxis):
        hopf_to_ambient_sym(-1.0, 0.0, [0.0 + 0j, 1.0 + 0j], chart=0)
    with pytest.raises(OnAxis):
        contact_form_coeffs(np.array([[0.0 + 0j, 1.0 + 0j]]))


def test_metric_block_spectrum(rng):
    # Exact spectrum: 1/(2(1+s)^2) along the conjugate radial line and
    # 1/(2(1+s)) on its orthogonal complement, with s = |zeta|^2.
    for n in (1, 2, 3):
        zeta = rng.normal(size=(4, n)) + 1j * rng.normal(size=(4, n))
        G = fs_metric_at(zeta)
        s = np.sum(np.abs(zeta) ** 2, axis=-1)
        for i in range(4):
            eigs = np.sort(np.linalg.eigvalsh(G[i]))
            want = np.sort(
                np.r_[1.0 / (2.0 * (1.0 + s[i]) ** 2),
                      np.full(n - 1, 1.0 / (2.0 * (1.0 + s[i])))]
            )
            assert np.allclose(eigs, want, rtol=1e-12)


def test_metric_block_survives_extreme_radii():
    # Direct assembly of (1+s) I - conj(zeta) zeta^T cancels catastrophically
    # once s overflows the mantissa; the hollow-sum form must not.
    g1 = fs_metric_at(np.array([[np.exp(20.0) + 0j]]))[0, 0, 0].real
    assert g1 > 0
    assert abs(g1 / (0.5 * np.exp(-80.0)) - 1.0) < 1e-12

    G = fs_metric_at(np.array([[np.exp(18.0) + 0j, 1e-4 + 0j]]))[0]
    eigs = np.linalg.eigvalsh(G)
    assert np.all(eigs > 0)

    G2 = fs_metric_at(np.array([[np.exp(20.0) + 0j, np.exp(20.0) + 0j]]))[0]
    s = 2.0 * np.exp(40.0)
    assert abs(G2[0, 0].real / ((1.0 + np.exp(40.0)) / (2.0 * (1.0 + s) ** 2)) - 1.0) < 1e-10


def test_contact_selfcheck_accepts_exact_geometry():
    for n in (1, 2):
        report = contact_selfcheck(n, samples=32, seed=3)
        assert max(report.values()) < 1e-6


def test_contact_selfcheck_rejects_perturbed_geometry():
    with pytest.raises(CheckFailed):
        contact_selfcheck(1, samples=32, seed=3, perturb=1e-3)


def test_hopf_point_is_frozen():
    hp = HopfPoint(t=-1.0, theta=0.0, zeta=np.array([0.1 + 0j]), chart=0)
    with pytest.raises(AttributeError):
        hp.t = 0.0
