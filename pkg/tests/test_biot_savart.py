import numpy as np
import pytest

from smallobstacle.biot_savart import (ExteriorEvaluator, VorticityProfile,
                                       fullplane_h, fullplane_velocity,
                                       harmonic_field, initial_data_error,
                                       initial_data_rate_study)
from smallobstacle.fields import circulation
from smallobstacle.geometry import DomainError


def test_fullplane_h_circulation_and_decay():
    # [TRIVIAL] H has unit circulation and |H| = 1/(2 pi |x|)
    assert circulation(fullplane_h, 2.5) == pytest.approx(1.0, abs=1e-12)
    x = np.array([[3.0, 4.0]])
    assert np.hypot(*fullplane_h(x)[0]) == pytest.approx(1 / (10 * np.pi))
    with pytest.raises(DomainError):
        fullplane_h(np.zeros((1, 2)))


def test_annulus_velocity_closed_form(annulus_profile):
    # [DERIVED] outside the support u is m/(2 pi r) azimuthal; inside the
    # hole it vanishes
    m = annulus_profile.m
    x = np.array([[3.0, 0.0]])
    u = annulus_profile.velocity(x)[0]
    assert u[0] == pytest.approx(0.0, abs=1e-14)
    assert u[1] == pytest.approx(m / (2 * np.pi * 3.0), rel=1e-10)
    assert np.allclose(annulus_profile.velocity(np.array([[0.3, 0.1]])), 0.0)


def test_quadrature_velocity_matches_exact(annulus_profile):
    # [DERIVED] midpoint quadrature vs the enclosed-circulation form
    x = np.array([[2.5, 1.0], [0.5, 0.2], [4.0, -3.0]])
    uq = fullplane_velocity(annulus_profile, x, method="quadrature", n_quad=96)
    ue = fullplane_velocity(annulus_profile, x, method="exact")
    assert np.allclose(uq, ue, atol=2e-3)


def test_profile_masses(annulus_profile, bump_profile):
    # [DERIVED] m matches the mollified annulus integral: smooth edges of
    # width w shift the effective radii by w/2 each
    w = 0.25 * (2.0 - 1.0)
    expected = np.pi * ((2.0 - w / 2) ** 2 - (1.0 + w / 2) ** 2)
    assert annulus_profile.m == pytest.approx(expected, rel=1e-3)
    assert bump_profile.m > 0
    assert bump_profile.inner_clearance == pytest.approx(1.0)
    assert annulus_profile.is_radial and not bump_profile.is_radial


def test_harmonic_field_unit_circulation(disk_map, ellipse_map):
    # [PAPER] H_eps carries unit circulation around the obstacle, any eps
    for cmap in (disk_map, ellipse_map):
        for eps in (0.1, 0.02):
            def h(x):
                return harmonic_field(cmap, eps, x)
            assert circulation(h, 5 * eps) == pytest.approx(1.0, abs=1e-9)
            assert circulation(h, 0.5) == pytest.approx(1.0, abs=1e-9)


def test_harmonic_field_reduces_to_point_vortex_on_disk(disk_map):
    # [DERIVED] for the disk, H_eps equals the point vortex H outside
    x = np.array([[0.3, 0.1], [1.0, -2.0]])
    assert np.allclose(harmonic_field(disk_map, 0.05, x), fullplane_h(x),
                       atol=1e-12)


def test_kernel_velocity_tangent_at_boundary(ellipse_map, bump_profile):
    # [PAPER] the exterior kernel field is tangent to the obstacle boundary
    eps = 0.05
    ev = ExteriorEvaluator(ellipse_map, eps, bump_profile)
    th = np.linspace(0, 2 * np.pi, 32, endpoint=False)
    a, b = ellipse_map.shape.a, ellipse_map.shape.b
    pts = 1.0001 * eps * np.stack([a * np.cos(th), b * np.sin(th)], axis=-1)
    u = ev.kernel_velocity(pts)
    # outward normal of the ellipse
    n = np.stack([np.cos(th) / a, np.sin(th) / b], axis=-1)
    n /= np.hypot(n[:, 0], n[:, 1])[:, None]
    u_mag = np.hypot(u[:, 0], u[:, 1])
    assert np.max(np.abs(np.sum(u * n, axis=-1))) < 2e-3 * np.max(u_mag)


def test_split_and_kernel_methods_agree(ellipse_map, bump_profile):
    # [DERIVED] the two evaluation routes produce the same field
    ev = ExteriorEvaluator(ellipse_map, 0.05, bump_profile)
    pts = np.array([[0.3, 0.2], [1.0, 0.5], [2.5, -1.0]])
    assert np.allclose(ev.velocity(pts, method="split"),
                       ev.velocity(pts, method="kernel"), atol=5e-4)


def test_theta_circulation_in_vorticity_free_zone(ellipse_map, bump_profile):
    # [PAPER] between the boundary and the support, circulation of
    # theta_eps is alpha minus the image contribution = 0 for alpha = m
    eps = 0.05
    ev = ExteriorEvaluator(ellipse_map, eps, bump_profile)
    gamma = circulation(lambda x: ev.theta_velocity(x), 0.5)
    assert gamma == pytest.approx(0.0, abs=1e-6)


def test_initial_data_error_disk_cancellation(disk_map, annulus_profile):
    # [DERIVED] disk + radial data: exact cancellation, error at rounding
    assert initial_data_error(disk_map, 0.02, annulus_profile) < 1e-10


def test_initial_data_rate_linear(ellipse_map, bump_profile):
    # [PAPER] the adapted-data error decays linearly in eps
    study = initial_data_rate_study(ellipse_map, bump_profile,
                                    [0.04, 0.02, 0.01])
    assert study["slope"] == pytest.approx(1.0, abs=0.1)


def test_eps_overlap_rejected(ellipse_map, bump_profile):
    # [TRIVIAL] the obstacle must not touch the vorticity support
    with pytest.raises(ValueError):
        ExteriorEvaluator(ellipse_map, 1.5, bump_profile)
