import numpy as np
import pytest

from morseinf import bvp, models, normal_form as nf
from morseinf.functional import estimate_contraction
from morseinf.hilbert import operator_constants, spectral_split
from morseinf.reduction import ReductionSolver

EPS = 0.1


def make_solver(problem, kappa, rho, R1, samples=200, seed=0, fp_tol=1e-10):
    split = spectral_split(problem.B_inf)
    consts = operator_constants(problem.B_inf, split)
    cdata = estimate_contraction(problem, split, consts, kappa, rho, R1, samples=samples, seed=seed)
    return ReductionSolver(problem, split, consts, cdata, fp_tol=fp_tol)


@pytest.fixture(scope="session")
def trig_solver():
    p = models.trig_model(eps=EPS)
    return make_solver(p, 10.0, 1.0, p.infinity_radius)


@pytest.fixture(scope="session")
def trig_chart(trig_solver):
    return nf.build_chart(trig_solver)


@pytest.fixture(scope="session")
def bvp_default():
    return bvp.GalerkinBVP(8, bvp.default_nonlinearity(a=1.0))


@pytest.fixture(scope="session")
def bvp_solver(bvp_default):
    p = bvp.assemble_problem(bvp_default)
    return make_solver(p, 2.0, 50.0, 50.0)


@pytest.fixture(scope="session")
def bvp_chart(bvp_solver):
    return nf.build_chart(bvp_solver)


def kernel_points(solver, n, seed=0, lo=1.0, hi=3.0):
    """Random kernel points with norm in ``[lo, hi] * R1``."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        c = rng.standard_normal(solver.split.nu)
        c /= np.linalg.norm(c)
        out.append(solver.kernel_point(c * solver.cdata.R1 * rng.uniform(lo, hi)))
    return out


ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, desc, secs, extra = ACCEPTANCE[n]
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {desc}  ({secs:.2f} s)"
        terminalreporter.write_line(line + (f"  [{extra}]" if extra else ""))
