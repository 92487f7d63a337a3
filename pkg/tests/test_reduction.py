import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import EPS, kernel_points, make_solver
from morseinf import bvp, models
from morseinf.errors import LeftBall, NoConvergence
from morseinf.functional import ContractionData, E_PRIME_INFTY
from morseinf.reduction import (
    ReductionSolver,
    decay_audit,
    find_reduced_critical_points,
    lipschitz_audit,
    lipschitz_bound,
    reduced_gradient,
    reduced_hessian,
    reduced_value,
    solve_h,
    solve_h_info,
)


def z_of(t):
    return np.array([float(t), 0.0, 0.0])


def fd_reduced(s, z, d):
    step = 1e-6 * max(1.0, np.linalg.norm(z))
    return (reduced_value(s, z + step * d) - reduced_value(s, z - step * d)) / (2 * step)


def test_trig_h_closed_form(trig_solver):
    h = solve_h(trig_solver, z_of(9 * math.pi / 2))
    assert np.allclose(h, [0.0, -0.05, 0.05], atol=1e-10)
    for t in np.linspace(10, 40, 100):
        h = solve_h(trig_solver, z_of(t) * np.sign(math.sin(t) + 0.5))
        zt = t * np.sign(math.sin(t) + 0.5)
        assert np.abs(h - models.trig_h(zt, EPS)).max() <= 1e-10


def test_trig_contraction_factor(trig_solver):
    for z in kernel_points(trig_solver, 20, seed=1):
        info = solve_h_info(trig_solver, z)
        assert info.residual <= trig_solver.fp_tol
        assert info.max_factor <= 0.05


def test_flat_fiber_gives_zero():
    s = make_solver(models.trig_model(eps=0.0), 10.0, 1.0, 10.0)
    assert np.array_equal(solve_h(s, z_of(12.3)), np.zeros(3))


def test_linear_resonant_bvp_gives_zero():
    g = bvp.GalerkinBVP(6, bvp.zero_nonlinearity(1.0))
    s = make_solver(bvp.assemble_problem(g), 2.0, 1.0, g.infinity_radius)
    for z in kernel_points(s, 5):
        assert np.linalg.norm(solve_h(s, z)) <= 1e-14
        assert abs(reduced_value(s, z)) <= 1e-12


def test_trig_reduced_value_and_gradient(trig_solver):
    z = z_of(4 * math.pi)
    assert reduced_value(trig_solver, z) == pytest.approx(1.0, abs=1e-12)
    for t in (10.5, 13.0, -17.2):
        assert reduced_value(trig_solver, z_of(t)) == pytest.approx(math.cos(t), abs=1e-12)
        assert reduced_gradient(trig_solver, z_of(t))[0] == pytest.approx(-math.sin(t), abs=1e-10)


def test_quadratic_reduced_functional_is_flat():
    s = make_solver(models.quadratic_model(np.diag([2.0, -2.0, 0.0])), 5.0, 1.0, 1.0)
    z = s.kernel_point([3.0])
    assert reduced_value(s, z) == 0.0
    assert np.array_equal(reduced_gradient(s, z), np.zeros(3))


@pytest.mark.parametrize("which", ["trig", "bvp"])
def test_reduced_gradient_matches_differences(which, trig_solver, bvp_solver):
    s = trig_solver if which == "trig" else bvp_solver
    worst = 0.0
    for z in kernel_points(s, 50, seed=2):
        g = reduced_gradient(s, z)
        d = z / np.linalg.norm(z)
        fd = fd_reduced(s, z, d)
        an = float(g @ d)
        worst = max(worst, abs(an - fd) / max(abs(an), abs(fd), 1e-8))
    assert worst <= 1e-5


def test_reduced_hessian_matches_gradient_differences(bvp_solver):
    s = bvp_solver
    z = kernel_points(s, 1, seed=5)[0]
    d = s.Z[:, 0]
    step = 1e-5 * np.linalg.norm(z)
    fd = (reduced_gradient(s, z + step * d) - reduced_gradient(s, z - step * d)) @ d / (2 * step)
    an = float(reduced_hessian(s, z)[0, 0])
    assert abs(an - fd) <= 1e-4 * max(abs(an), 1e-6)


def test_trig_lipschitz_sharp(trig_solver):
    lip = lipschitz_audit(trig_solver, 100, seed=0)
    assert lip <= EPS / math.sqrt(2) + 1e-6
    assert lip >= 0.9 * EPS / math.sqrt(2)
    assert lip <= lipschitz_bound(trig_solver.cdata)


def test_quadratic_lipschitz_zero():
    s = make_solver(models.quadratic_model(np.diag([2.0, -2.0, 0.0])), 5.0, 1.0, 1.0)
    assert lipschitz_audit(s, 20) == 0.0


def test_bvp_lipschitz_bound(bvp_solver):
    assert lipschitz_audit(bvp_solver, 40, seed=1) <= 1 / (bvp_solver.cdata.kappa - 1)


def test_lipschitz_requires_full_mode(trig_solver):
    cd = trig_solver.cdata
    prime = ContractionData(cd.kappa, cd.rho_A, cd.R1, cd.M_A, E_PRIME_INFTY)
    s = ReductionSolver(trig_solver.problem, trig_solver.split, trig_solver.consts, prime)
    with pytest.raises(ValueError):
        lipschitz_audit(s, 4)


def test_trig_critical_points(trig_solver):
    R1 = trig_solver.cdata.R1
    res = find_reduced_critical_points(trig_solver, (R1, R1 + 2 * math.pi), starts=32, seed=0)
    assert not res.degenerate_flat
    ts = sorted(round(p.z[0] / math.pi) for p in res)
    assert ts == [-5, -4, 4, 5]
    for p in res:
        assert abs(math.sin(p.z[0])) <= 1e-9
        assert np.linalg.norm(p.h) <= 1e-9
        assert p.grad_norm <= 10 * trig_solver.fp_tol
        assert np.linalg.norm(trig_solver.problem.eval_A(p.full_point)) == pytest.approx(p.grad_norm)


def test_quadratic_flat_flag():
    s = make_solver(models.quadratic_model(np.diag([2.0, -2.0, 0.0])), 5.0, 1.0, 1.0)
    res = find_reduced_critical_points(s)
    assert res.degenerate_flat and len(res) == 0


def test_bvp_lifted_critical_points():
    g = bvp.GalerkinBVP(8, bvp.sine_nonlinearity(a=1.0))
    p = bvp.assemble_problem(g)
    s = make_solver(p, 2.0, 50.0, 50.0)
    res = find_reduced_critical_points(s, starts=16, seed=0)
    assert len(res) >= 1
    for pt in res:
        assert np.linalg.norm(p.eval_A(pt.full_point)) <= 10 * s.fp_tol
        assert np.linalg.norm(pt.full_point) > 1e-4


def test_band_validation(trig_solver):
    with pytest.raises(ValueError):
        find_reduced_critical_points(trig_solver, (1.0, 20.0))


def test_decay_quadratic_and_trig(trig_solver):
    s = make_solver(models.quadratic_model(np.diag([2.0, -2.0, 0.0])), 5.0, 1.0, 1.0)
    prof = decay_audit(s, [1, 10, 100])
    assert prof.envelope == (0.0, 0.0, 0.0) and prof.passed
    radii = (10.0, 100.0, 1000.0)
    prof = decay_audit(trig_solver, radii)
    assert prof.flag == "no decay, M(A)>0" and prof.passed
    expected = [EPS / math.sqrt(2) * abs(math.sin(r)) for r in radii]
    assert np.allclose(prof.envelope, expected, atol=1e-10)


def test_bounded_nonlinearity_decay_trend():
    g = bvp.GalerkinBVP(8, bvp.sine_nonlinearity(a=1.0)).with_quad_nodes(4096)
    s = make_solver(bvp.assemble_problem(g), 2.0, 50.0, 50.0)
    env = []
    for R in (50, 100, 200, 400):
        env.append(max(np.linalg.norm(solve_h(s, s.kernel_point([sg * t])))
                       for t in np.linspace(R, 2 * R, 24) for sg in (1, -1)))
    assert all(b < a for a, b in zip(env, env[1:]))


def test_left_ball_and_budget(trig_solver):
    cd = trig_solver.cdata
    tight = ContractionData(cd.kappa, 0.01, cd.R1, cd.M_A, cd.mode)
    s = ReductionSolver(trig_solver.problem, trig_solver.split, trig_solver.consts, tight)
    with pytest.raises(LeftBall):
        solve_h(s, z_of(10.5 * math.pi))
    s = ReductionSolver(trig_solver.problem, trig_solver.split, trig_solver.consts, cd, max_iter=0)
    with pytest.raises(NoConvergence):
        solve_h(s, z_of(11.0))


def test_kernel_checks(trig_solver):
    with pytest.raises(ValueError):
        solve_h(trig_solver, z_of(1.0))
    with pytest.raises(ValueError):
        solve_h(trig_solver, np.array([11.0, 0.5, 0.0]))


@settings(max_examples=25, deadline=None)
@given(t=st.floats(10.0, 200.0), sign=st.sampled_from([-1.0, 1.0]), seed=st.integers(0, 1000))
def test_fixed_point_residual_and_uniqueness(trig_solver, t, sign, seed):
    s = trig_solver
    z = z_of(sign * t)
    h0 = solve_h(s, z)
    W = s.W
    assert np.linalg.norm(W.T @ s.problem.eval_A(z + h0)) <= s.fp_tol
    assert np.linalg.norm(s.Z.T @ h0) == 0.0
    rng = np.random.default_rng(seed)
    for _ in range(20):
        x0 = W @ rng.standard_normal(W.shape[1])
        x0 *= s.cdata.rho_A * rng.uniform() / np.linalg.norm(x0)
        assert np.linalg.norm(solve_h(s, z, x0) - h0) <= 1e-8


def test_bvp_uniqueness(bvp_solver):
    s = bvp_solver
    z = kernel_points(s, 1, seed=3)[0]
    h0 = solve_h(s, z)
    rng = np.random.default_rng(0)
    for _ in range(20):
        x0 = s.W @ rng.standard_normal(s.W.shape[1])
        x0 *= s.cdata.rho_A * rng.uniform() / np.linalg.norm(x0)
        assert np.linalg.norm(solve_h(s, z, x0) - h0) <= 1e-8


def test_bvp_picard_factor(bvp_solver):
    for z in kernel_points(bvp_solver, 10, seed=4):
        info = solve_h_info(bvp_solver, z)
        assert info.max_factor <= 1 / bvp_solver.cdata.kappa + 0.05
        assert info.residual <= bvp_solver.fp_tol
