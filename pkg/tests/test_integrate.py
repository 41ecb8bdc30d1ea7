"""Single-path integration: closed forms, invariants, consistency checks."""

import numpy as np
import pytest

from opq import integrate, phase, systems

THETA_I = np.pi - 0.5


def test_rotor_path_closed_form(eq):
    # b = 0, a = 1/2tau: theta(t) = theta_i + p t / tau with constant p
    path = integrate.integrate(eq, 0.0, 0.5, 2.0)
    assert path.theta[-1] == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(path.p, 0.5, atol=1e-10)
    assert path.energy == pytest.approx((0.25 - 1.0) / 2.0)


def test_fixed_point_path_constant_with_linear_action(dz):
    th_bar = np.arctan(dz.tau * dz.delta)
    p_bar = -dz.tau * dz.delta
    path = integrate.integrate(dz, th_bar, p_bar, 3.0)
    assert np.allclose(path.theta, th_bar, atol=1e-9)
    assert np.allclose(path.p, p_bar, atol=1e-9)
    assert np.allclose(path.S, path.energy * path.t, atol=1e-9)


def test_island_path_stays_within_turning_points(xz):
    path = integrate.integrate(xz, THETA_I, 0.0, 6.32)
    isl = phase.island_spec(xz)
    lo, hi = phase.turning_points(xz, path.energy,
                                  center_theta=isl.center_near(THETA_I))
    assert path.theta.min() >= lo - 1e-6
    assert path.theta.max() <= hi + 1e-6


def test_energy_conservation(xz, dz):
    for spec, th0, p0, T in ((xz, THETA_I, 0.0, 27.0),
                             (dz, np.pi / 2, 0.77, 8.0)):
        path = integrate.integrate(spec, th0, p0, T)
        assert path.energy_drift() <= 1e-8 * (1.0 + abs(path.energy))


def test_action_monotone_nonincreasing(xz):
    path = integrate.integrate(xz, THETA_I, 0.4, 18.0)
    assert np.all(np.diff(path.S) <= 1e-12)


def test_action_consistency():
    eq = systems.TwoObservable(tau_x=1.0, tau_z=1.0)
    # E = 0 rotor: S = -T/tau while E T - int p dtheta = -delta_theta
    path = integrate.integrate(eq, 0.0, 1.0, 1.0)
    assert path.S[-1] == pytest.approx(-1.0, abs=1e-9)
    assert integrate.action_consistency(path) <= 1e-8


def test_action_consistency_fixed_point(dz):
    th_bar = np.arctan(dz.tau * dz.delta)
    path = integrate.integrate(dz, th_bar, -dz.tau * dz.delta, 2.0)
    assert integrate.action_consistency(path) <= 1e-10


def test_action_consistency_island_path(xz):
    path = integrate.integrate(xz, THETA_I, 0.3, 9.0)
    assert integrate.action_consistency(path) <= 1e-6


def test_trajectory_residual(eq, xz, dz):
    assert integrate.trajectory_residual(
        integrate.integrate(eq, 0.0, 1.0, 2.0)) <= 1e-8
    assert integrate.trajectory_residual(
        integrate.integrate(xz, THETA_I, 0.0, 6.32)) <= 1e-5
    th_bar = np.arctan(dz.tau * dz.delta)
    assert integrate.trajectory_residual(
        integrate.integrate(dz, th_bar, -dz.tau * dz.delta, 2.0)) <= 1e-10


def test_speed_magnitude_symmetry_where_b_vanishes(eq):
    # at b = 0 the two momentum branches give equal and opposite speeds
    E = -0.3
    pp, pm = phase.p_branches(eq, 1.1, E)
    td_p, _ = systems.hamilton_rhs(eq, 1.1, pp)
    td_m, _ = systems.hamilton_rhs(eq, 1.1, pm)
    assert td_p == pytest.approx(-td_m, rel=1e-12)


def test_invalid_t_final(eq):
    with pytest.raises(ValueError):
        integrate.integrate(eq, 0.0, 0.5, 0.0)


def test_tolerance_refinement_convergence(dz, winding_solution):
    # tightening rtol by two decades moves theta(T) by < 1e-6 on a
    # reference winding branch
    b = winding_solution.branches[0]
    hi = integrate.integrate(dz, np.pi / 2, b.p_i, 8.0, rtol=1e-8, atol=1e-10)
    lo = integrate.integrate(dz, np.pi / 2, b.p_i, 8.0, rtol=1e-10, atol=1e-12)
    assert abs(hi.theta[-1] - lo.theta[-1]) < 1e-6


def test_csv_and_sidecar(tmp_path, eq):
    path = integrate.integrate(eq, 0.0, 0.5, 1.0, n_samples=11)
    f = tmp_path / "path.csv"
    path.to_csv(f)
    data = np.loadtxt(f, delimiter=",", skiprows=1)
    assert data.shape == (11, 4)
    assert f.read_text().splitlines()[0] == "t,theta,p,S"
    side = path.sidecar_json()
    assert side["system"]["kind"] == "two_observable"
    assert side["energy"] == path.energy
