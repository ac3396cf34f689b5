import numpy as np
import pytest

from smallobstacle.biot_savart import VorticityProfile
from smallobstacle.euler import BlowupError, solve_euler
from smallobstacle.fields import CartesianGrid


@pytest.fixture(scope="module")
def short_radial_run(annulus_profile):
    grid = CartesianGrid(L=8.0, n=256)
    return solve_euler(annulus_profile, grid=grid, dt=5e-3, T=0.05,
                       n_outputs=3)


def test_radial_data_is_steady(short_radial_run, annulus_profile):
    # [PAPER] a radial vortex is a steady solution; the discrete flow only
    # drifts at truncation level
    w0, wT = short_radial_run.omegas[0], short_radial_run.omegas[-1]
    rel = np.sqrt(np.sum((wT - w0) ** 2) / np.sum(w0**2))
    assert rel < 5e-3


def test_conservation_diagnostics(short_radial_run):
    # [TRIVIAL] vorticity integral and sup norm are conserved
    d = short_radial_run.diagnostics
    assert d["mass_drift"] < 1e-9
    assert d["sup_drift"] < 1e-2  # truncation level at this resolution
    assert d["energy_drift"] < 1e-6
    assert d["max_cfl"] < 0.9


def test_velocity_at_origin_radial(short_radial_run):
    # [TRIVIAL] rotational symmetry: u(0, t) = 0
    assert short_radial_run.speed_at_origin_max() < 1e-6


def test_flow_sample_consistency(short_radial_run, annulus_profile):
    # [DERIVED] the kernel-sum sample matches the closed-form steady flow
    flow = short_radial_run.flow_sample(0)
    pts = np.array([[2.5, 0.3], [0.7, 0.6]])
    assert np.allclose(flow.u(pts), annulus_profile.velocity(pts), atol=2e-4)
    exact_psi = annulus_profile.psi(pts) - annulus_profile.psi(
        np.zeros((1, 2)))[0]
    assert np.allclose(flow.psi(pts), exact_psi, atol=2e-3)


def test_bump_center_advects(bump_profile):
    # [DERIVED] a lone radial bump is steady: its vorticity maximum stays
    # at the initial center (self-induced velocity moves nothing)
    grid = CartesianGrid(L=8.0, n=256)
    run = solve_euler(bump_profile, grid=grid, dt=5e-3, T=0.05, n_outputs=2)
    i, j = np.unravel_index(np.argmax(run.omegas[-1]), run.omegas[-1].shape)
    peak = grid.points()[i, j]
    assert np.hypot(peak[0] - 1.5, peak[1]) < 0.1


def test_cfl_violation_raises(annulus_profile):
    # [TRIVIAL] an oversized step trips the CFL sentinel
    grid = CartesianGrid(L=8.0, n=256)
    with pytest.raises(BlowupError):
        solve_euler(annulus_profile, grid=grid, dt=0.2, T=0.4, n_outputs=2)


def test_non_multiple_horizon_rejected(annulus_profile):
    # [TRIVIAL]
    grid = CartesianGrid(L=8.0, n=256)
    with pytest.raises(ValueError):
        solve_euler(annulus_profile, grid=grid, dt=3e-3, T=0.05)
