"""Acceptance suite: the quantitative claims the package is built to verify.

Each criterion is tagged with its stated tolerance and runtime budget.  The
expensive fixtures (the coupled sweep and the long no-slip run) are session
scoped and shared between the criteria that consume them.
"""

import time

import numpy as np
import pytest

from smallobstacle.biot_savart import (VorticityProfile, harmonic_field,
                                       initial_data, initial_data_rate_study)
from smallobstacle.corrector import Cutoff, measure_lemma_constants
from smallobstacle.euler import solve_euler
from smallobstacle.geometry import ConformalMap, ObstacleShape
from smallobstacle.harness import SweepConfig, run_sweep
from smallobstacle.ns import radial_reference, solve_ns
from smallobstacle.poincare import poincare_constant, shooting_c
from smallobstacle.rates import fit_rate

EPS_LIST = [0.04, 0.02, 0.01, 0.005]


def _circulation(u_at, radius: float, n: int = 720) -> float:
    """Line integral of the tangential velocity around a centered circle."""
    th = 2 * np.pi * np.arange(n) / n
    pts = radius * np.stack([np.cos(th), np.sin(th)], axis=-1)
    tang = np.stack([-np.sin(th), np.cos(th)], axis=-1)
    u = u_at(pts)
    return float(np.sum(np.sum(u * tang, axis=-1)) * radius * 2 * np.pi / n)


# --------------------------------------------------------------------------
# shared expensive fixtures


@pytest.fixture(scope="session")
def sweep_result(disk, bump_profile):
    """Coupled (nu, eps) sweep for criteria 6 and 7 (budget: 45 min)."""
    cfg = SweepConfig(shape=disk, profile=bump_profile, T=0.5,
                      nu_list=(0.04, 0.02, 0.01, 0.005), dt=1e-3,
                      n_r=256, n_theta=128, n_outputs=11)
    t0 = time.time()
    records, summary = run_sweep(cfg)
    return records, summary, time.time() - t0


@pytest.fixture(scope="session")
def oracle_run(disk, annulus_profile):
    """Disk + azimuthal no-slip run to T = 0.5 for criterion 8."""
    return solve_ns(disk, 0.01, 0.01, annulus_profile, dt=1e-3, T=0.5,
                    n_r=256, n_theta=128, n_outputs=6)


# --------------------------------------------------------------------------
# criterion 1: adapted initial data converges at (near) first order


def test_criterion1_initial_data_rate(ellipse, bump_profile):
    # ellipse + offset bump: log-log slope of ||theta_eps - u0|| >= 0.9
    t0 = time.time()
    study = initial_data_rate_study(ConformalMap(ellipse), bump_profile,
                                    EPS_LIST)
    assert study["slope"] is not None
    assert study["slope"] >= 0.9
    assert time.time() - t0 < 300


# criterion 2: exact cancellation for the symmetric configuration


def test_criterion2_disk_radial_exact(disk, annulus_profile):
    # disk + radial annulus: the adapted data equals u0 outside, error
    # at the quadrature floor for every eps
    t0 = time.time()
    study = initial_data_rate_study(ConformalMap(disk), annulus_profile,
                                    EPS_LIST)
    assert max(study["errors"]) <= 1e-4
    # stated budget: 1 min; 3x slack absorbs a loaded machine
    assert time.time() - t0 < 180


# criterion 3: wrong harmonic part is an obstruction (negative control)


def test_criterion3_harmonic_mismatch_plateau(disk, annulus_profile):
    # alpha - m = 1: the error must not decay with eps
    t0 = time.time()
    study = initial_data_rate_study(ConformalMap(disk), annulus_profile,
                                    EPS_LIST, alpha=annulus_profile.m + 1.0)
    errors = study["errors"]  # sorted by ascending eps
    assert errors[0] / errors[-1] >= 0.5
    assert time.time() - t0 < 300


# criterion 4: corrector estimates scale as predicted


def test_criterion4_corrector_scalings(bump_profile):
    # items 1-5 scale like {const, const, eps, 1/eps, eps}
    t0 = time.time()
    flow = bump_profile.steady_flow()
    consts = measure_lemma_constants(flow, Cutoff(R=1.0), EPS_LIST)
    expected = {"item1": 0.0, "item2": 0.0, "item3": 1.0,
                "item4": -1.0, "item5": 1.0}
    for name, target in expected.items():
        assert consts.slopes[name] == pytest.approx(target, abs=0.2), name
    assert time.time() - t0 < 300


# criterion 5: collar Poincare constant scales linearly in eps


def test_criterion5_poincare_scaling_and_oracle(disk):
    t0 = time.time()
    pairs = [(eps, poincare_constant(disk, eps, 64).c) for eps in EPS_LIST]
    fit = fit_rate(pairs)
    assert fit.slope == pytest.approx(1.0, abs=0.01)
    est = poincare_constant(disk, 1.0, 128)
    assert est.c == pytest.approx(shooting_c(), rel=1e-3)
    assert time.time() - t0 < 300


# criteria 6 and 7: the coupled sweep


def test_criterion6_sweep_rate(sweep_result):
    records, summary, elapsed = sweep_result
    assert all(r.error is None for r in records)
    sup = [r.sup_delta_e for r in records]  # nu descending
    assert all(a > b for a, b in zip(sup, sup[1:]))
    assert summary["slope"] >= 0.4
    assert elapsed < 2700


def test_criterion6_gronwall_quotient(sweep_result):
    # sup_t deltaE^2 / (nu + deltaE(0)^2) shows no increasing trend
    _, summary, _ = sweep_result
    q = np.asarray(summary["gronwall"])
    trend = np.polyfit(np.arange(len(q)), q, 1)[0]
    assert trend <= 0.05 * np.mean(q)


def test_criterion7_enstrophy_budget(sweep_result):
    # int_0^T enstrophy dt varies by less than a factor of two across runs
    _, summary, _ = sweep_result
    assert summary["budget_ratio"] < 2.0


# criterion 8: solver oracles


def test_criterion8_ns_radial_oracle(oracle_run, annulus_profile):
    t0 = time.time()
    run = oracle_run
    c = annulus_profile.components[0]
    k = len(run.times) - 1
    ref = radial_reference(run.eps, run.nu, c.u_theta, T=0.5,
                           n_outputs=len(run.times))
    r = run.solver.r
    num = run.azimuthal_profile(k)
    ex = ref.u_at(r, k)
    rel = np.sqrt(np.sum((num - ex) ** 2 * r**2) / np.sum(ex**2 * r**2))
    assert rel <= 1e-3
    assert time.time() - t0 < 180


def test_criterion8_energy_inequality(oracle_run):
    # discrete E(t) + 2 nu int ||grad u||^2 <= E(0) at every output time
    run = oracle_run
    margin = (run.energy + run.dissipation - run.energy[0]) / run.energy[0]
    assert np.max(margin) <= 1e-6


def test_criterion8_euler_radial_steady(annulus_profile):
    # the full-plane solver keeps a radial vortex steady to 1e-3 relative
    t0 = time.time()
    run = solve_euler(annulus_profile, T=0.5, n_outputs=2)
    w0, wT = run.omegas[0], run.omegas[-1]
    rel = np.sqrt(np.sum((wT - w0) ** 2) / np.sum(w0**2))
    assert rel <= 1e-3
    assert time.time() - t0 < 300


# criterion 9: circulation invariants of the adapted data


def test_criterion9_circulations(disk, annulus_profile):
    t0 = time.time()
    cmap = ConformalMap(disk)
    eps = 0.01
    gamma_h = _circulation(lambda x: harmonic_field(cmap, eps, x), 0.1)
    assert gamma_h == pytest.approx(1.0, abs=1e-6)
    # theta_eps between the obstacle and the vorticity support: the kernel
    # part and the m * H_eps part cancel in circulation
    for radius in (0.3, 0.6):
        gamma = _circulation(
            lambda x: initial_data(cmap, eps, annulus_profile, x), radius)
        assert gamma == pytest.approx(0.0, abs=1e-6)
    assert time.time() - t0 < 180
