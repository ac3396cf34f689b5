import numpy as np
import pytest

from smallobstacle.fields import (CartesianGrid, Field, PolarExteriorGrid,
                                  biot_savart_at, circulation, divergence,
                                  extend_by_zero, freespace_psi,
                                  freespace_velocity, greens_sum_at, l2_norm,
                                  stream_function, sup_norm)
from smallobstacle.geometry import DomainError


def gaussian_omega(grid, sigma=0.5):
    X, Y = grid.mesh()
    return np.exp(-(X**2 + Y**2) / (2 * sigma**2))


def test_cartesian_l2_of_indicator():
    # [TRIVIAL] norm of a constant patch equals sqrt(area)
    g = CartesianGrid(L=2.0, n=64)
    X, Y = g.mesh()
    vals = ((np.abs(X) < 1) & (np.abs(Y) < 1)).astype(float)
    f = Field(g, vals)
    assert l2_norm(f) == pytest.approx(2.0, rel=0.05)


def test_polar_area_weights_integrate_area():
    # [DERIVED] sum of weights equals the annulus area
    g = PolarExteriorGrid(r_in=0.5, r_out=4.0, n_r=128, n_theta=64)
    area = np.pi * (4.0**2 - 0.5**2)
    assert np.sum(g.area_weights()) == pytest.approx(area, rel=1e-4)


def test_interpolation_reproduces_linear_function():
    # [TRIVIAL] bilinear interpolation is exact on affine data
    g = CartesianGrid(L=2.0, n=32)
    X, Y = g.mesh()
    f = Field(g, 2.0 * X - 3.0 * Y + 1.0)
    pts = np.array([[0.13, -0.7], [1.2, 0.4]])
    assert np.allclose(f(pts), 2 * pts[:, 0] - 3 * pts[:, 1] + 1.0)


def test_polar_interpolation_at_nodes():
    # [TRIVIAL] interpolation at grid nodes returns node values
    g = PolarExteriorGrid(r_in=0.1, r_out=2.0, n_r=32, n_theta=16)
    vals = np.cos(g.thetas())[None, :] * g.radii()[:, None]
    f = Field(g, vals)
    pts = g.points()[5]
    assert np.allclose(f(pts), vals[5], atol=1e-12)


def test_zero_extension(disk):
    # [TRIVIAL] zero-extended fields vanish at interior nodes and queries
    g = CartesianGrid(L=2.0, n=64)
    f = Field(g, np.ones((64, 64)), shape=disk, eps=0.5)
    z = extend_by_zero(f)
    assert z(np.array([0.1, 0.0])) == 0.0
    assert sup_norm(z, region="obstacle") == 0.0
    assert sup_norm(z, region="exterior") == 1.0


def test_circulation_of_point_vortex_field():
    # [DERIVED] circulation of x_perp/(2 pi |x|^2) is 1 on any circle
    def h(x):
        r2 = np.sum(x**2, axis=-1, keepdims=True)
        return np.stack([-x[..., 1], x[..., 0]], axis=-1) / (2 * np.pi * r2)
    for radius in (0.5, 1.0, 3.0):
        assert circulation(h, radius) == pytest.approx(1.0, abs=1e-12)


def test_circulation_rejects_crossing_circle(disk):
    # [TRIVIAL] circles crossing the obstacle are a domain error
    g = CartesianGrid(L=2.0, n=32)
    f = Field(g, np.zeros((32, 32, 2)), shape=disk, eps=0.5)
    with pytest.raises(DomainError):
        circulation(f, 0.3)


def test_freespace_velocity_matches_exact_vortex(annulus_profile):
    # [DERIVED] FFT Biot-Savart vs the enclosed-circulation closed form
    g = CartesianGrid(L=8.0, n=256)
    omega = annulus_profile(g.points())
    u = freespace_velocity(g, omega)
    exact = annulus_profile.velocity(g.points())
    err = np.sqrt(np.sum((u - exact) ** 2) * g.h**2)
    ref = np.sqrt(np.sum(exact**2) * g.h**2)
    assert err / ref < 1e-3


def test_freespace_velocity_is_divergence_free(annulus_profile):
    # [TRIVIAL] the centered-difference divergence sits at truncation level,
    # far below the gradient scale sup|grad u| ~ sup|omega| = 1
    g = CartesianGrid(L=8.0, n=256)
    u = Field(g, freespace_velocity(g, annulus_profile(g.points())))
    assert sup_norm(divergence(u), region=("annulus", 0.5, 6.0)) < 0.02


def test_biot_savart_at_matches_grid_transform(annulus_profile):
    # [DERIVED] direct summation agrees with the FFT field off-grid
    g = CartesianGrid(L=8.0, n=256)
    omega = annulus_profile(g.points())
    pts = np.array([[3.01, 0.57], [0.1, 4.03]])
    direct = biot_savart_at(g, omega, pts)
    exact = annulus_profile.velocity(pts)
    assert np.allclose(direct, exact, atol=2e-4)


def test_greens_sum_matches_fft_psi(annulus_profile):
    # [DERIVED] the two free-space Poisson evaluations agree at nodes
    g = CartesianGrid(L=8.0, n=128)
    omega = annulus_profile(g.points())
    psi = freespace_psi(g, omega)
    pts = g.points()[64, 70:74]
    assert np.allclose(greens_sum_at(g, omega, pts), psi[64, 70:74],
                       atol=1e-10)


def test_stream_function_recovers_vortex_psi(annulus_profile):
    # [DERIVED] curl of the reconstructed psi returns the velocity
    g = CartesianGrid(L=8.0, n=256)
    u = Field(g, annulus_profile.velocity(g.points()))
    psi = stream_function(u)
    exact = annulus_profile.psi(g.points())
    exact -= annulus_profile.psi(np.zeros((1, 2)))[0]
    mask = np.hypot(*np.moveaxis(g.points(), -1, 0)) < 4.0
    assert np.max(np.abs(psi.values - exact)[mask]) < 5e-3


def test_non_finite_values_rejected():
    # [TRIVIAL]
    g = CartesianGrid(L=1.0, n=4)
    with pytest.raises(ValueError):
        Field(g, np.full((4, 4), np.nan))
