import math

import numpy as np
import pytest

from conftest import p0, random_smooth
from twopatch import kernels
from twopatch.bounds import eval_sub, eval_super
from twopatch.errors import BoundExceeded, CflViolation, NotConverged, PositivityLost
from twopatch.evolve import (Boundary, SolverConfig, dirichlet, max_stable_dt, neumann,
                             solve_cauchy, solve_stationary, step)
from twopatch.grid import Field, build_grid, flux_mismatch
from twopatch.params import PatchParams
from twopatch.reaction import logistic


def same_k(K=1.0):
    return PatchParams(1.0, 0.5, 1.0, logistic(1.0, K), logistic(1.2, K))


def test_auto_dt_is_cfl_rule():
    g = build_grid(-1, 1, 0.05)
    assert max_stable_dt(g, same_k(), 0.4) == pytest.approx(0.4 * 0.05**2 / 2)
    dt, stride, n = SolverConfig(0.0, 1.0, snapshot_interval=0.1).schedule(g, same_k())
    assert dt <= 0.4 * 0.05**2 / 2 and stride * dt == pytest.approx(0.1) and n == 11


def test_explicit_dt_too_large():
    g = build_grid(-1, 1, 0.05)
    with pytest.raises(CflViolation):
        SolverConfig(0.0, 1.0, dt=0.01).schedule(g, same_k())
    with pytest.raises(CflViolation):
        step(Field(g, np.zeros(g.size)), same_k(), 0.01)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(1.0, 0.0)
    with pytest.raises(ValueError):
        SolverConfig(0.0, 1.0, cfl_safety=1.5)
    with pytest.raises(ValueError):
        SolverConfig(0.0, 1.0, snapshot_interval=0.3).schedule(build_grid(-1, 1, 0.1), same_k())
    with pytest.raises(ValueError):
        Boundary("robin", 0.0)


@pytest.mark.parametrize("value", [0.0, 1.0])
def test_equilibria_unchanged(value):
    g = build_grid(-5, 5, 0.05)
    traj = solve_cauchy(Field(g, np.full(g.size, value)), same_k(),
                        SolverConfig(0.0, 2.0, snapshot_interval=0.5))
    assert np.all(traj.values == value)


def test_step_matches_solve():
    g = build_grid(-5, 5, 0.1)
    p = same_k()
    u0 = Field(g, 0.5 * np.exp(-g.x**2))
    dt = max_stable_dt(g, p, 0.4)
    traj = solve_cauchy(u0, p, SolverConfig(0.0, 10 * dt, dt=dt))
    u = traj.field(0)  # datum after boundary and closure projection
    for _ in range(10):
        u = step(u, p, dt)
    np.testing.assert_allclose(u.values, traj.values[-1], rtol=0, atol=1e-15)


def _heat(h, t_end=1.0, d=1.0, s2=1.0):
    g = build_grid(-15, 15, h)
    x = g.x
    u = np.exp(-x**2 / s2)
    nsteps = math.ceil(t_end / (0.4 * h * h / (2 * d)))
    zero = np.zeros(3)
    kernels.advance(u, nsteps, t_end / nsteps, h, d, d, 1.0, g.index_zero, zero, zero,
                    kernels.NEUMANN, 0.0, kernels.NEUMANN, 0.0)
    width = s2 + 4 * d * t_end
    exact = math.sqrt(s2 / width) * np.exp(-x**2 / width)
    return np.max(np.abs(u - exact)), abs(u.sum() * h - math.sqrt(math.pi * s2))


def test_pure_diffusion_against_heat_kernel():
    err1, mass1 = _heat(0.05)
    err2, mass2 = _heat(0.025)
    assert err1 < 5e-4
    assert math.log2(err1 / err2) > 1.8
    # node 0 is eliminated, not evolved: mass drifts at O(h^2) only
    assert mass1 < 5e-4
    assert math.log2(mass1 / mass2) > 1.8


def _smooth_run(h, centre, p):
    g = build_grid(-14, 8, h)
    u0 = Field(g, 0.5 * np.exp(-(g.x - centre) ** 2))
    traj = solve_cauchy(u0, p, SolverConfig(0.0, 1.0, snapshot_interval=1.0))
    return traj.values[-1]


def _orders(centre, p, hs):
    u = [_smooth_run(h, centre, p) for h in hs]
    e = [np.max(np.abs(u[i] - u[i + 1][::2])) for i in range(len(u) - 1)]
    return [math.log2(e[i] / e[i + 1]) for i in range(len(e) - 1)]


def test_refinement_order_compatible_data():
    # datum negligible at the interface: no initial layer there
    assert min(_orders(-6.0, same_k(), (0.2, 0.1, 0.05, 0.025))) >= 1.8


def test_refinement_order_through_interface():
    # d1 != d2 makes a Gaussian incompatible with u_t continuity at 0; the
    # resulting layer only affects the coarsest pair
    p = same_k()
    assert _orders(0.5, p, (0.1, 0.05, 0.025, 0.0125))[-1] >= 1.8


def test_time_translation_invariance():
    g = build_grid(-10, 10, 0.1)
    p = p0(2.0)
    u0 = Field(g, 0.8 * np.exp(-g.x**2))
    a = solve_cauchy(u0, p, SolverConfig(0.0, 2.0, snapshot_interval=0.5))
    b = solve_cauchy(u0, p, SolverConfig(-7.0, -5.0, snapshot_interval=0.5))
    np.testing.assert_array_equal(a.values, b.values)


def test_flux_condition_every_snapshot():
    g = build_grid(-10, 10, 0.05)
    p = PatchParams(1.0, 0.5, 2.0, logistic(1.0, 1.0), logistic(1.5, 2.0))
    u0 = Field(g, np.where(g.x < 0, 1.0, 0.0) * np.exp(-0.01 * g.x**2))
    traj = solve_cauchy(u0, p, SolverConfig(0.0, 2.0, snapshot_interval=0.25))
    for _, u in traj.snapshots():
        assert abs(flux_mismatch(u, p.sigma)) < 1e-10 / g.h


def test_bounds_respected_and_asserted():
    g = build_grid(-10, 10, 0.1)
    p = p0(2.0)
    traj = solve_cauchy(Field(g, np.full(g.size, 3.0)), p, SolverConfig(0.0, 2.0, snapshot_interval=0.5))
    assert traj.values.max() <= 3.0 + 1e-8 * p.scale and traj.values.min() >= 0
    with pytest.raises(PositivityLost):
        solve_cauchy(Field(g, np.zeros(g.size)), p,
                     SolverConfig(0.0, 1.0, boundary_left=dirichlet(-1.0)))
    with pytest.raises(BoundExceeded):
        solve_cauchy(Field(g, np.zeros(g.size)), p,
                     SolverConfig(0.0, 1.0, boundary_left=dirichlet(5.0)))
    with pytest.raises(ValueError):
        solve_cauchy(Field(g, -np.ones(g.size)), p, SolverConfig(0.0, 1.0))


def test_time_dependent_dirichlet():
    g = build_grid(-5, 5, 0.1)
    p = same_k()
    cfg = SolverConfig(0.0, 1.0, snapshot_interval=0.5,
                       boundary_left=dirichlet(lambda t: 0.5 * t), boundary_right=neumann())
    traj = solve_cauchy(Field(g, np.zeros(g.size)), p, cfg)
    assert traj.values[1, 0] == pytest.approx(0.25)
    assert traj.values[2, 0] == pytest.approx(0.5)


def test_comparison_principle_small():
    rng = np.random.default_rng(11)
    g = build_grid(-10, 10, 0.1)
    p = p0(2.0)
    for _ in range(5):
        a = random_smooth(rng, g.x)
        b = a + random_smooth(rng, g.x, 3)
        cfg = SolverConfig(0.0, 1.0, snapshot_interval=0.25)
        ua = solve_cauchy(Field(g, a), p, cfg)
        ub = solve_cauchy(Field(g, b), p, cfg)
        assert np.all(ua.values <= ub.values + 1e-10 * p.scale)


def test_rough_datum_projection_is_checked():
    g = build_grid(-1, 1, 0.1)
    v = np.zeros(g.size)
    v[g.index_zero - 2] = 1.0  # closure then extrapolates below zero
    with pytest.raises(PositivityLost):
        solve_cauchy(Field(g, v), same_k(), SolverConfig(0.0, 0.1))


@pytest.mark.skipif("compiled" not in kernels.BACKENDS, reason="extension not built")
def test_backends_agree():
    g = build_grid(-10, 10, 0.05)
    p = p0(2.0)
    u0 = Field(g, np.where(g.x < 0, 1.0, 0.0))
    cfg = SolverConfig(0.0, 1.0, snapshot_interval=0.5, boundary_left=dirichlet(1.0),
                       boundary_right=dirichlet(0.0))
    a = solve_cauchy(u0, p, cfg, backend="compiled")
    b = solve_cauchy(u0, p, cfg, backend="python")
    np.testing.assert_allclose(a.values, b.values, rtol=0, atol=1e-14)


def test_stationary_constant_when_capacities_match():
    V = solve_stationary(same_k(), build_grid(-30, 30, 0.1))
    assert np.max(np.abs(V.values - 1.0)) < 1e-8


def test_stationary_monotone_when_capacities_differ():
    p = p0(2.0)
    V = solve_stationary(p, build_grid(-15, 15, 0.05), tol=1e-10)
    v = V.values
    assert np.all(np.diff(v) > 0)
    assert abs(v[0] - 1.0) < 1e-3 and abs(v[-1] - 2.0) < 1e-3
    assert v.min() >= 0.9 and v.max() <= 2.2
    assert abs(flux_mismatch(V.field, p.sigma)) < 1e-9
    # halving h changes the node values by O(h^2)
    V2 = solve_stationary(p, build_grid(-15, 15, 0.025), tol=1e-10)
    assert np.max(np.abs(V2.values[::2] - v)) < 1e-3
    assert V(0.0) == pytest.approx(v[V.field.grid.index_zero])


def test_stationary_wide_grid_saturates_to_rounding():
    # far from 0, V - K1 drops below one ulp; monotone up to rounding only
    v = solve_stationary(p0(2.0), build_grid(-60, 60, 0.1), tol=1e-10).values
    d = np.diff(v)
    assert d.min() >= -2 * np.finfo(float).eps * 2.0
    resolved = (v - 1.0 > 1e-12) & (2.0 - v > 1e-9)
    assert np.all(d[resolved[:-1] & resolved[1:]] > 0)
    assert v[0] == 1.0


def test_stationary_not_converged():
    with pytest.raises(NotConverged):
        solve_stationary(p0(2.0), build_grid(-20, 20, 0.1), tol=1e-16, t_max=1.0)


def test_bump_converges_to_stationary():
    p = p0(2.0)
    g = build_grid(-50, 50, 0.1)
    V = solve_stationary(p, g, tol=1e-10)
    u0 = Field(g, 0.05 * np.exp(-g.x**2))
    traj = solve_cauchy(u0, p, SolverConfig(0.0, 100.0, snapshot_interval=100.0))
    centre = np.abs(g.x) <= 10
    assert np.max(np.abs(traj.values[-1][centre] - V.values[centre])) < 1e-3


def test_subsolution_datum_stays_in_envelopes(p0_setup):
    s = p0_setup
    env, grid, V = s["env"], s["grid"], s["V"]
    T = env.T
    n = 20
    cfg = SolverConfig(-float(n), -7.0, snapshot_interval=0.5,
                       boundary_left=dirichlet(float(V.values[0])), boundary_right=dirichlet(0.0))
    traj = solve_cauchy(Field(grid, eval_sub(env, -float(n), grid.x)), s["p"], cfg)
    for t, u in traj.snapshots():
        assert t <= -T
        assert np.all(u.values >= eval_sub(env, t, grid.x) - 5e-3)
        assert np.all(u.values <= eval_super(env, t, grid.x) + 5e-3)
