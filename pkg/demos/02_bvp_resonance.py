"""The Dirichlet problem -u'' = a u + q(u) on (0, pi), resonant at infinity.

With ``a = 1`` the slope at infinity equals the first Dirichlet eigenvalue,
so the limiting Hessian ``I - aK`` has a one-dimensional kernel spanned by
``sin x``. This script goes through the whole pipeline on an 8-mode sine
Galerkin truncation: Morse data, operator constants, the smallness
conditions that make resonance harmless, the reduction onto the kernel, the
normal-form chart and finally the solution search.

Run with ``python3 demos/02_bvp_resonance.py`` (about 20 s).
"""

import math

import numpy as np

from morseinf import bvp, normal_form as nf
from morseinf.functional import estimate_contraction
from morseinf.hilbert import operator_constants, spectral_split
from morseinf.reduction import ReductionSolver, decay_audit, find_reduced_critical_points, solve_h


def section(title):
    print()
    print(title)
    print("-" * len(title))


def solver_for(g, kappa=2.0, rho=50.0, R1=50.0):
    problem = bvp.assemble_problem(g)
    split = spectral_split(problem.B_inf)
    consts = operator_constants(problem.B_inf, split)
    cdata = estimate_contraction(problem, split, consts, kappa, rho, R1, samples=100, seed=0)
    return ReductionSolver(problem, split, consts, cdata)


def main():
    section("1. Morse data at infinity")
    print("   a    nu  mu   (eigenvalues are k^2)")
    for a in (0.5, 1.0, 2.5, 4.0, 9.0, 30.0):
        md = bvp.morse_data(bvp.GalerkinBVP(16, bvp.zero_nonlinearity(a)), a)
        print(f"{a:5g}   {md.nu:2d}  {md.mu:2d}")

    section("2. The constant C1 on the complement")
    for a in (1.0, 4.0, 9.0):
        g = bvp.GalerkinBVP(16, bvp.zero_nonlinearity(a))
        chk = bvp.c1_cross_check(g, a)
        tag = "agree" if not chk.discrepancy else "DISAGREE"
        print(f"a = {a:g}: from the spectrum {chk.direct:.6f}, from the printed closed form "
              f"{chk.literal:.6f} -> {tag}")
    print("At a = 9 the closed form keeps only the neighbour below; the neighbour above (16) wins.")

    section("3. Embedding constant max|u| / ||u||")
    for n in (1, 8, 64):
        est = bvp.embedding_constant(n)
        print(f"{n:3d} modes: {est.value:.6f} (attained near x = {est.argmax:.4f})")
    print(f"limit as the truncation grows: sqrt(pi)/2 = {math.sqrt(math.pi) / 2:.6f}")

    section("4. Smallness conditions for the default nonlinearity")
    g = bvp.GalerkinBVP(8, bvp.default_nonlinearity(a=1.0))
    rep = bvp.check_resonance_conditions(g)
    for r in rep.entries:
        print(f"  {r.name:20s} {'pass' if r.passed else 'FAIL'}   value {r.worst_value:.6g}"
              f"   bound {r.tolerance:.6g}")
    strong = bvp.check_resonance_conditions(bvp.GalerkinBVP(8, bvp.default_nonlinearity(a=1.0, beta=1.0)))
    print(f"with beta = 1 instead of 0.25 the product condition "
          f"{'passes' if strong['ell_h_product_bound'].passed else 'fails'}")

    section("5. Reduction onto the kernel")
    solver = solver_for(g)
    cd = solver.cdata
    print(f"kappa = {cd.kappa:g}, rho_A = {cd.rho_A:g}, R1 = {cd.R1:g}, sampled M_A = {cd.M_A:.4g}")
    search = find_reduced_critical_points(solver, starts=16, seed=0)
    print(f"reduced critical points in [R1, 2 R1]: {len(search)} "
          f"(smallest reduced gradient seen {search.probe_min_grad:.3g})")
    print("The default q is monotone in the kernel direction, so the reduced gradient never vanishes.")
    sine = solver_for(bvp.GalerkinBVP(8, bvp.sine_nonlinearity(a=1.0)))
    lifted = find_reduced_critical_points(sine, starts=16, seed=0)
    print(f"with the oscillating q = 0.25 sin(u): {len(lifted)} reduced critical points, each lifted to a")
    print("full solution; the first few kernel coordinates and full gradients:")
    for pt in list(lifted)[:4]:
        print(f"  z = {float(pt.z[0]):9.4f}, ||A(z + h)|| = {pt.grad_norm:.1e}")

    section("6. Decay of the fiber correction h")
    fine = solver_for(bvp.GalerkinBVP(8, bvp.sine_nonlinearity(a=1.0), quad_nodes=4096))
    prof = decay_audit(fine, [50, 100, 200, 400])
    print("||h|| along the kernel oscillates with the phase of sin(u), so a single radius can")
    print("land on a low point. Maxima over the window [R, 2R] show the trend:")
    print("radius   at R      max over [R, 2R]")
    for r, v in zip(prof.radii, prof.envelope):
        window = max(np.linalg.norm(solve_h(fine, fine.kernel_point([sg * t])))
                     for t in np.linspace(r, 2 * r, 24) for sg in (1, -1))
        print(f"{r:6g}   {v:.5f}   {window:.5f}")
    print("The window maxima fall roughly like R^(-1/2). Fine quadrature matters: at large")
    print("amplitudes sin(u(x)) oscillates fast in x and coarse rules alias.")

    section("7. Normal-form chart on the complement")
    chart = nf.build_chart(solver)
    rng = np.random.default_rng(0)
    sp = chart.split
    worst = 0.0
    for _ in range(10):
        z = sp.basis_zero @ np.array([cd.R1 * rng.uniform(1, 3) * rng.choice([-1, 1])])
        up = sp.basis_plus @ rng.standard_normal(sp.n_plus)
        um = sp.basis_minus @ rng.standard_normal(sp.mu) if sp.mu else np.zeros(sp.dim)
        worst = max(worst, nf.phi_chart(chart, nf.ChartPoint(z, up, um))[1])
    print(f"a1 = {chart.a1:.4g}, radius cap = {chart.r_cap}")
    print(f"normal-form identity over 10 random points: worst mismatch {worst:.1e}")

    section("8. Solutions")
    res = bvp.solve_bvp(g, "direct")
    print(f"default q at a = 1: {len(res)} solution(s), nontrivial: {len(res.nontrivial)}")
    res = bvp.solve_bvp(bvp.GalerkinBVP(8, bvp.sine_nonlinearity(a=1.0)), "direct")
    print(f"sine q at a = 1: {len(res.nontrivial)} nontrivial solutions; smallest norms "
          + ", ".join(f"{s.norm_H:.4f}" for s in res.nontrivial[:4]))
    for n in res.notes:
        print(f"  note: {n}")


if __name__ == "__main__":
    main()
