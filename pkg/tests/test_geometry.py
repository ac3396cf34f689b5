import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smallobstacle.geometry import ConformalMap, DomainError, ObstacleShape


def test_disk_map_is_identity(disk_map):
    # [TRIVIAL] the unit disk maps by the identity
    pts = np.array([[2.0, 0.0], [0.0, -3.0], [1.5, 1.5]])
    assert np.allclose(disk_map.map_point(pts), pts)
    assert np.allclose(disk_map.map_jacobian(pts),
                       np.broadcast_to(np.eye(2), (3, 2, 2)))
    assert disk_map.beta == 1.0


def test_ellipse_boundary_maps_to_unit_circle(ellipse_map):
    # [DERIVED] T sends the obstacle boundary onto |w| = 1; probe just
    # outside the boundary and let the small offset set the tolerance
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    a, b = ellipse_map.shape.a, ellipse_map.shape.b
    pts = 1.001 * np.stack([a * np.cos(th), b * np.sin(th)], axis=-1)
    w = ellipse_map.map_point(pts)
    assert np.all(np.abs(np.hypot(w[:, 0], w[:, 1]) - 1.0) < 5e-3)


def test_ellipse_beta_closed_form(ellipse_map):
    # [DERIVED] dilation at infinity beta = 2/(a+b)
    assert ellipse_map.beta == pytest.approx(2.0 / 1.5)
    assert ellipse_map.estimate_beta() == pytest.approx(ellipse_map.beta,
                                                        rel=1e-6)


@settings(max_examples=50, deadline=None)
@given(r=st.floats(1.2, 50.0), th=st.floats(0.0, 2 * np.pi))
def test_round_trip_property(r, th):
    # [DERIVED] inverse(map(z)) = z on the exterior (hypothesis sweep)
    cmap = ConformalMap(ObstacleShape("ellipse", a=1.0, b=0.5))
    z = complex(r * np.cos(th), r * np.sin(th))
    w = cmap.map_complex(z)
    assert abs(w) > 1.0 - 1e-9
    assert abs(cmap.inverse_complex(w) - z) < 1e-9 * max(1.0, abs(z))


def test_jacobian_matches_finite_differences(ellipse_map):
    # [DERIVED] DT agrees with a centered difference of T
    x = np.array([[1.7, 0.9], [-2.0, 0.4], [0.1, 3.0]])
    J = ellipse_map.map_jacobian(x)
    h = 1e-6
    for j in range(2):
        dx = np.zeros(2)
        dx[j] = h
        fd = (ellipse_map.map_point(x + dx) - ellipse_map.map_point(x - dx)) \
            / (2 * h)
        assert np.allclose(J[..., :, j], fd, atol=1e-6)


def test_remainder_h_is_bounded(ellipse_map):
    # [PAPER] T(z) = beta z + h(z) with h bounded at infinity
    radii = np.array([5.0, 50.0, 500.0, 5000.0])
    pts = np.stack([radii, 0.3 * radii], axis=-1)
    hvals = np.hypot(*ellipse_map.h(pts).T)
    assert np.all(hvals < 1.0)
    assert hvals[-1] <= hvals[0] + 1e-9  # no growth


def test_interior_evaluation_raises(ellipse_map):
    # [TRIVIAL] evaluation inside the obstacle is a domain error
    with pytest.raises(DomainError):
        ellipse_map.map_point(np.array([[0.1, 0.0]]))


def test_contains_and_bounding_radius(ellipse, disk):
    # [TRIVIAL]
    assert ellipse.contains(np.array([0.9, 0.0]))
    assert not ellipse.contains(np.array([0.9, 0.49]))
    assert disk.bounding_radius == 1.0
    assert ellipse.bounding_radius == 1.0


def test_invalid_shapes_rejected():
    # [TRIVIAL]
    with pytest.raises(ValueError):
        ObstacleShape("triangle")
    with pytest.raises(ValueError):
        ObstacleShape("ellipse", a=0.5, b=1.0)
