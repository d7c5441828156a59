import math
import warnings

import numpy as np
import pytest

from kolmobounds import (
    BlowupError,
    CFLError,
    Lattice,
    ResolutionWarning,
    SolverState,
    Solver,
    SpectralField,
    abc_flow,
    abc_physical,
    cfl_limit,
    divergence_residual,
    energy_inequality_residual,
    energy_residual_series,
    forward,
    nonlinear_term,
    pressure_tendency,
    project,
    random_band_limited,
    recover_pressure,
    rhs,
    single_mode,
    step,
)


def test_zero_field_has_zero_tendency(lat8):
    z = SpectralField.zeros(lat8)
    assert not np.any(nonlinear_term(z))
    assert not np.any(rhs(z, 0.1))


def test_beltrami_nonlinear_term_vanishes(beltrami16):
    n = nonlinear_term(beltrami16)
    assert np.max(np.abs(n)) <= 1e-13 * np.max(np.abs(beltrami16.coeffs))


def test_beltrami_inviscid_rhs_is_zero(beltrami16):
    assert np.max(np.abs(rhs(beltrami16, 0.0))) <= 1e-13


def test_linear_rhs_is_stokes_plus_force(random_field):
    f = random_field
    force = 0.3 * f.coeffs[::-1].copy()
    out = rhs(f, 0.2, force, nonlinear=False)
    assert np.array_equal(out, -0.2 * f.lattice.k2 * f.coeffs + force)


def test_nonlinear_term_is_solenoidal_and_energy_neutral(random_field):
    f = random_field
    n = nonlinear_term(f)
    k = f.lattice.k
    assert np.max(np.abs((k * n).sum(axis=0))) <= 1e-12 * np.max(np.abs(n)) * f.lattice.k_cut
    transfer = float(np.sum((np.conj(f.coeffs) * n).real))
    scale = float(np.sum(np.abs(f.coeffs) * np.abs(n)))
    assert abs(transfer) <= 1e-12 * scale


def test_pressure_zero_field(lat8):
    assert not np.any(recover_pressure(SpectralField.zeros(lat8)))


def test_beltrami_pressure_is_bernoulli(lat16):
    f = abc_flow(lat16, 1.0, 0.7, 0.4)
    u = abc_physical(lat16, 1.0, 0.7, 0.4)
    q = -0.5 * (u * u).sum(axis=0)
    q_hat = forward(lat16, np.stack([q, q, q]))[0]
    q_hat[0, 0, 0] = 0.0
    p = recover_pressure(f)
    assert np.max(np.abs(p - q_hat)) <= 1e-13 * np.max(np.abs(q_hat))


def test_pressure_is_the_longitudinal_part(random_field):
    lat = random_field.lattice
    conv, grad_p = pressure_tendency(random_field)
    with_p = conv - grad_p
    without = nonlinear_term(random_field)
    resid = project(lat, with_p) - without
    assert np.max(np.abs(resid[:, lat.retained])) <= 1e-12 * np.max(np.abs(without))
    assert np.max(np.abs(project(lat, grad_p))) <= 1e-12 * np.max(np.abs(grad_p))


def test_single_mode_viscous_decay_is_exact(lat16):
    f = single_mode(lat16, (0.0, 2.0, 1.0), [1.0 + 0.5j, 0.0, 0.0])
    nu, dt = 0.3, 0.01
    s = step(SolverState(f, nu), dt)
    k2 = 5.0
    expect = math.exp(-nu * k2 * dt) * f.coeffs
    assert np.max(np.abs(s.field.coeffs - expect)) <= 1e-15


def test_beltrami_exact_decay_100_steps(lat16):
    f = abc_flow(lat16)
    nu, dt = 0.1, 0.01
    traj = Solver(f, nu, dt).run(100, 10)
    assert len(traj) == 11
    exact = np.exp(-nu * lat16.k2 * 1.0) * f.coeffs
    err = np.max(np.abs(traj.final.coeffs - exact)) / np.max(np.abs(exact))
    assert err <= 1e-8
    resid = energy_inequality_residual(traj)
    assert abs(resid) <= 1e-8 * 0.5 * traj.energies[0]


def test_inviscid_galerkin_energy_drift(lat16):
    f = random_band_limited(lat16, 4, (1.0, 4.0), 1.0)
    traj = Solver(f, 0.0, 0.005).run(200, 50)
    E = traj.energies
    assert abs(E[-1] - E[0]) / E[0] / 1.0 <= 1e-10
    assert np.max(np.abs(energy_residual_series(traj))) <= 1e-10 * E[0]


def test_zero_initial_data_stays_zero(lat8):
    traj = Solver(SpectralField.zeros(lat8), 0.1, 0.01).run(5)
    assert energy_inequality_residual(traj) == 0.0
    assert not np.any(traj.final.coeffs)


def test_smooth_run_energy_balance(lat16):
    f = random_band_limited(lat16, 9, (1.0, 3.0), 1.0)
    traj = Solver(f, 0.1, 0.01).run(100, 10)
    resid = energy_residual_series(traj)
    assert np.max(np.abs(resid)) <= 1e-8 * 0.5 * traj.energies[0]


def test_divergence_free_after_every_step(lat16):
    f = random_band_limited(lat16, 2, (1.0, 4.0), 2.0)
    s = SolverState(f, 0.05)
    for _ in range(10):
        s = step(s, 0.01)
        assert divergence_residual(s.field) <= 1e-12


def test_viscous_only_contracts_every_mode(lat16):
    f = random_band_limited(lat16, 3, (1.0, 5.0), 1.0)
    s = SolverState(f, 0.2)
    amp = np.abs(f.coeffs)
    for _ in range(5):
        s = step(s, 0.02, nonlinear=False)
        new = np.abs(s.field.coeffs)
        assert np.all(new <= amp)
        amp = new


def test_cfl_violation_raises(lat16):
    f = random_band_limited(lat16, 1, (1.0, 4.0), 100.0)
    dt = 2 * cfl_limit(f, 0.5)
    with pytest.raises(CFLError):
        step(SolverState(f, 0.1), dt)


def test_blowup_keeps_last_good_state(lat8):
    f = random_band_limited(lat8, 1, (1.0, 2.0), 1.0)
    bad = f.coeffs.copy()
    bad[0, 1, 0, 0] = np.nan
    state = SolverState(SpectralField(lat8, bad), 0.1)
    with pytest.raises(BlowupError) as info:
        step(state, 0.01, cfl_safety=None)
    assert info.value.last_good is state


def test_resolution_warning_on_top_shell_energy(lat8):
    f = random_band_limited(lat8, 1, (2.0, 2.7), 1.0)
    with pytest.warns(ResolutionWarning):
        traj = Solver(f, 0.01, 0.001).run(1)
    assert traj.warnings


def test_solver_rejects_bad_parameters(lat8):
    f = SpectralField.zeros(lat8)
    with pytest.raises(ValueError):
        Solver(f, -1.0, 0.01)
    with pytest.raises(ValueError):
        Solver(f, 0.1, 0.0)
    with pytest.raises(ValueError):
        step(SolverState(f, 0.1), -0.1)


def test_run_checkpoint_cadence_includes_last_step(lat16):
    f = random_band_limited(lat16, 1, (1.0, 2.0), 0.1)
    traj = Solver(f, 0.1, 0.01).run(25, 10)
    assert np.allclose(traj.times, [0.0, 0.1, 0.2, 0.25])
