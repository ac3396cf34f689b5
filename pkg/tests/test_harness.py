import csv

import numpy as np
import pytest

from smallobstacle.euler import solve_euler
from smallobstacle.fields import CartesianGrid
from smallobstacle.harness import (RunRecord, SweepConfig, compute_c1,
                                   delta_e, enstrophy_budget, energy_residual,
                                   local_reynolds, run_sweep)
from smallobstacle.ns import solve_ns


@pytest.fixture(scope="module")
def euler_radial(annulus_profile):
    grid = CartesianGrid(L=8.0, n=256)
    return solve_euler(annulus_profile, grid=grid, dt=5e-3, T=0.02,
                       n_outputs=2)


@pytest.fixture(scope="module")
def ns_radial(disk, annulus_profile):
    return solve_ns(disk, 0.01, 0.01, annulus_profile, dt=1e-3, T=0.02,
                    n_r=192, n_theta=64, n_outputs=2)


def test_compute_c1_plugin_values():
    # [TRIVIAL] C1 = 1/(8 K4 K6^2)
    assert compute_c1(1.0, 1.0) == pytest.approx(0.125)
    assert compute_c1(2.0, 1.0) == pytest.approx(0.0625)
    with pytest.raises(ValueError):
        compute_c1(-1.0, 1.0)


def test_local_reynolds_radial_is_zero(euler_radial):
    # [TRIVIAL] radial data: u(0, t) = 0
    assert local_reynolds(euler_radial, 0.01, 0.01) < 1e-6


def test_delta_e_initial_radial_small(ns_radial, euler_radial):
    # [DERIVED] disk + radial data at t = 0: both fields carry the same
    # exterior flow and u0 vanishes near the origin, so deltaE(0) sits at
    # the interpolation floor
    assert delta_e(ns_radial, euler_radial, 0) < 5e-3


def test_delta_e_series_finite(ns_radial, euler_radial):
    # [TRIVIAL] deltaE stays finite and nonnegative along the run
    from smallobstacle.harness import delta_e_series
    series = delta_e_series(ns_radial, euler_radial)
    assert np.all(np.isfinite(series)) and np.all(series >= 0.0)


def test_enstrophy_budget_positive(ns_radial):
    # [TRIVIAL]
    assert enstrophy_budget(ns_radial) > 0.0


def test_energy_residual_bounded(ns_radial):
    # [PAPER] energy inequality margin for the radial oracle case
    assert energy_residual(ns_radial) <= 1e-6


def test_empty_sweep_rejected(disk, bump_profile):
    # [TRIVIAL]
    cfg = SweepConfig(shape=disk, profile=bump_profile, nu_list=())
    with pytest.raises(ValueError, match="empty sweep"):
        run_sweep(cfg)


def test_coupling_validation(disk, bump_profile):
    # [PAPER] eps <= C1 nu enforced for the matched rule; collar inside the
    # vorticity-free zone
    cfg = SweepConfig(shape=disk, profile=bump_profile)
    with pytest.raises(ValueError):
        cfg.resolved_eps(None)  # matched rule needs C1
    eps = cfg.resolved_eps(0.05)
    assert np.allclose(eps, 0.05 * np.asarray(cfg.nu_list))
    big = SweepConfig(shape=disk, profile=bump_profile, coupling="explicit",
                      nu_list=(0.04,), eps_list=(0.5,))
    with pytest.raises(ValueError, match="collar"):
        big.resolved_eps(None)


def test_mini_sweep_artifacts(tmp_path, disk, bump_profile, euler_bump_short):
    # [DERIVED] end-to-end: two runs, no slope (insufficient points), CSVs
    cfg = SweepConfig(shape=disk, profile=bump_profile, T=0.02,
                      nu_list=(0.04, 0.02), dt=2e-3, n_r=96, n_theta=32,
                      n_outputs=2, out_dir=str(tmp_path / "out"))
    records, summary = run_sweep(cfg, c1=0.03, euler=euler_bump_short)
    assert summary["slope"] is None
    assert summary["note"] == "insufficient points"
    assert all(r.error is None for r in records)
    with open(tmp_path / "out" / "summary.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert float(rows[0]["nu"]) == 0.04
    assert (tmp_path / "out" / "run_nu0.04.csv").exists()


@pytest.fixture(scope="module")
def euler_bump_short(bump_profile):
    grid = CartesianGrid(L=8.0, n=256)
    return solve_euler(bump_profile, grid=grid, dt=2e-3, T=0.02, n_outputs=2)


def test_failed_run_recorded(tmp_path, disk, bump_profile, euler_bump_short):
    # [TRIVIAL] a run failure is recorded and the sweep continues
    cfg = SweepConfig(shape=disk, profile=bump_profile, T=0.02,
                      nu_list=(0.04, -1.0), coupling="explicit",
                      eps_list=(1.2e-3, 1.2e-3), dt=2e-3, n_r=96,
                      n_theta=32, n_outputs=2)
    records, summary = run_sweep(cfg, euler=euler_bump_short)
    assert records[1].error is not None
    assert summary["n_failed"] == 1
