"""Morse normal-form chart at infinity.

Over each far kernel point ``z`` the fiber functional

    F(z, u) = L(z + h(z) + u) - L(z + h(z)),     u in H+ + H-,

is convex along ``H+`` and concave along ``H-``. Let ``phi_z(u)`` be its
maximizer over ``H-``. The map ``psi`` rescales ``u`` by
``sqrt(F(z, u + phi_z(u))) / ||u||``. It then rescales ``v - phi_z(u)`` so
its squared norm is the drop ``F(z, u + phi) - F(z, u + v)``. With
``Phi(z, w) = z + h(z) + psi^-1(z, w)`` this gives the identity

    L(Phi(z, w+ + w-)) = ||w+||^2 - ||w-||^2 + L(z + h(z)).

``psi^-1`` is computed with two monotone scalar root-finds along rays. Each
one expands a bracket geometrically and then bisects.

With no kernel (``nondeg_chart_*``) the same construction works on ``L``
itself, starting from the sphere of the certified radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import ball_in, unit_in
from .errors import (
    BracketFailure,
    ConcavityViolation,
    HypothesisViolation,
    MonotonicityViolation,
    NegativeRadicand,
    NoConvergence,
    OutsideCertifiedRegion,
)
from .functional import ConditionResult, FunctionalProblem, HypothesisReport
from .hilbert import SpectralSplit
from .reduction import ReductionSolver, reduced_value, solve_h

__all__ = [
    "NormalFormChart",
    "ChartPoint",
    "build_chart",
    "build_nondegenerate_chart",
    "pinching_audit",
    "estimate_a1",
    "F_infty",
    "maximize_minus",
    "psi",
    "psi_inverse",
    "phi_chart",
    "nondeg_chart_definite",
    "nondeg_chart_indefinite",
    "nondeg_bounds",
    "sign_bounds_audit",
    "fiber_limit_profile",
    "phi_growth_audit",
    "bisect_increasing",
]

RADICAND_TOL = 1e-12
SUBSPACE_TOL = 1e-12


@dataclass(frozen=True)
class NormalFormChart:
    """Assembled chart data.

    Attributes:
        problem: The functional.
        split: Splitting of ``problem.B_inf``.
        solver: Reduction solver, or ``None`` when there is no kernel.
        a1: Positive-cone constant, ``0 < a1 <= 2 a_infty``.
        r_cap: ``inf`` when the chart covers the whole complement, else the
            radius ``eps_r`` of the certified region.
        r: Radius of the negative ball used in the finite regime.
        maximizer_tol: Stationarity target for the fiber maximizer.
        rootfind_tol: Bracket width at which bisection stops.
        outer_radius: Certified outer radius (charts without kernel only).
        lam: Sampled size of ``L - (B_inf u, u)/2`` relative to ``||u||^2``
            (charts without kernel only).
        pinching_passed: Whether the growth audit allowed ``r_cap = inf``.
    """

    problem: FunctionalProblem
    split: SpectralSplit
    solver: ReductionSolver | None
    a1: float
    r_cap: float = math.inf
    r: float = math.inf
    maximizer_tol: float = 1e-10
    rootfind_tol: float = 1e-12
    outer_radius: float = 0.0
    lam: float = 0.0
    pinching_passed: bool = True

    def __post_init__(self):
        if not 0 < self.a1 <= 2 * self.split.a_infty * (1 + 1e-12):
            raise ValueError(f"a1={self.a1} must lie in (0, 2 a_infty]")

    @property
    def finite(self) -> bool:
        return math.isfinite(self.r_cap)

    @property
    def certified_target_radius(self) -> float:
        """Targets ``(w+, w-)`` of ``psi^-1`` must lie inside this radius."""
        return math.sqrt(self.a1) * self.r_cap if self.finite else math.inf


@dataclass(frozen=True)
class ChartPoint:
    """Chart coordinates: kernel point plus positive and negative components."""

    z: np.ndarray
    u_plus: np.ndarray
    u_minus: np.ndarray

    def validate(self, split: SpectralSplit) -> "ChartPoint":
        _check_in(split, self.z, "zero")
        _check_in(split, self.u_plus, "plus")
        _check_in(split, self.u_minus, "minus")
        return self


def _check_in(split: SpectralSplit, v, part: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (split.dim,):
        raise ValueError(f"{part} component must have length {split.dim}")
    b = split.basis(part)
    off = np.linalg.norm(v - b @ (b.T @ v))
    if off > SUBSPACE_TOL * max(1.0, np.linalg.norm(v)):
        raise ValueError(f"vector is not in the {part} subspace (residual {off:.3e})")
    return v


# -- scalar root finding ------------------------------------------------------


def bisect_increasing(f, lo: float, hi: float, f_lo: float, f_hi: float, tol: float) -> float:
    """Root of a nondecreasing ``f`` with ``f(lo) <= 0 <= f(hi)``.

    Bisects until the bracket is narrower than ``tol`` (or cannot shrink
    further in floating point), then takes one secant step inside the final
    bracket.
    """
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = f(mid)
        if f_mid == 0:
            return mid
        if f_mid < 0:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    t = lo - f_lo * (hi - lo) / (f_hi - f_lo)
    return min(max(t, lo), hi)


def _ray_root(f, target: float, direction, tol: float, t_start: float = 1.0, t_min: float = 0.0,
              f_min: float | None = None, t_max: float = math.inf, max_doublings: int = 80) -> float:
    """Solve ``f(t) = target`` for nondecreasing ``f`` on ``[t_min, t_max]``.

    The bracket is expanded from ``t_start`` by doubling. ``f_min`` is the
    known value at ``t_min`` (if ``None``, it is evaluated).
    """
    g_min = (f(t_min) if f_min is None else f_min) - target
    if g_min > 0:
        raise BracketFailure(direction, (t_min, t_min), f"function already exceeds target at t={t_min}")
    t = max(t_start, t_min) if t_start > t_min else t_min
    if t == t_min:
        t = t_min + 1.0
    t = min(t, t_max)
    g = f(t) - target
    if g >= 0:
        return bisect_increasing(lambda s: f(s) - target, t_min, t, g_min, g, tol)
    lo, g_lo = t, g
    for _ in range(max_doublings):
        if lo >= t_max:
            break
        hi = min(2 * lo, t_max)
        g_hi = f(hi) - target
        if g_hi >= 0:
            return bisect_increasing(lambda s: f(s) - target, lo, hi, g_lo, g_hi, tol)
        lo, g_lo = hi, g_hi
    raise BracketFailure(direction, (t_min, lo))


# -- fiber evaluation ---------------------------------------------------------


class _Fiber:
    """Fiber over a base point: ``F(u) = L(base + u) - L0``."""

    def __init__(self, c: NormalFormChart, base: np.ndarray, L0: float):
        self.c = c
        self.p = c.problem
        self.base = base
        self.L0 = L0
        self.Vm = c.split.basis_minus

    def F(self, u) -> float:
        return float(self.p.eval_L(self.base + u)) - self.L0

    def maximize(self, u, v0=None, max_iter: int = 200) -> np.ndarray:
        """Maximizer of ``v -> F(u + v)`` over ``H-`` (full vector)."""
        c, Vm = self.c, self.Vm
        if Vm.shape[1] == 0:
            return np.zeros(c.split.dim)
        a_inf = c.split.a_infty
        y = np.zeros(Vm.shape[1]) if v0 is None else Vm.T @ v0
        point = self.base + u

        def val(y):
            return float(self.p.eval_L(point + Vm @ y))

        def grad(y):
            return Vm.T @ np.asarray(self.p.eval_A(point + Vm @ y), dtype=float)

        g = grad(y)
        f = val(y)
        for _ in range(max_iter):
            gn = float(np.linalg.norm(g))
            if gn <= c.maximizer_tol:
                return Vm @ y
            hess = Vm.T @ np.asarray(self.p.eval_B(point + Vm @ y), dtype=float) @ Vm
            hess = 0.5 * (hess + hess.T)
            top = float(np.linalg.eigvalsh(hess)[-1])
            if top > -a_inf / 2:
                raise ConcavityViolation(top, -a_inf / 2)
            step = -np.linalg.solve(hess, g)
            accepted = False
            t = 1.0
            for _ in range(31):
                y_new = y + t * step
                f_new, g_new = val(y_new), grad(y_new)
                # Near the optimum, values stop resolving; the gradient still does.
                if f_new >= f + 1e-4 * t * float(g @ step) or np.linalg.norm(g_new) < gn:
                    accepted = True
                    break
                t *= 0.5
            if not accepted:
                # Gradient ascent with backtracking.
                t = 1.0 / abs(float(np.linalg.eigvalsh(hess)[0]))
                for _ in range(31):
                    y_new = y + t * g
                    f_new, g_new = val(y_new), grad(y_new)
                    if f_new >= f + 1e-4 * t * gn * gn:
                        accepted = True
                        break
                    t *= 0.5
            if not accepted:
                break
            y, f, g = y_new, f_new, g_new
        gn = float(np.linalg.norm(g))
        if gn <= c.maximizer_tol:
            return Vm @ y
        raise NoConvergence(max_iter, gn, "fiber maximization")


def _fiber(c: NormalFormChart, z) -> _Fiber:
    if c.solver is None:
        if z is not None and np.linalg.norm(z) > 0:
            raise ValueError("chart without kernel takes no kernel point")
        return _Fiber(c, np.zeros(c.split.dim), 0.0)
    z = c.solver.check_kernel(z)
    h = solve_h(c.solver, z)
    base = z + h
    return _Fiber(c, base, float(c.problem.eval_L(base)))


# -- chart construction -------------------------------------------------------


def _working_point(split: SpectralSplit, R1: float, rho: float, rng) -> np.ndarray:
    z = unit_in(split.basis_zero, rng) * rng.uniform(R1, 4 * R1)
    return z + ball_in(split.basis_complement, rho, rng)


def pinching_audit(problem: FunctionalProblem, split: SpectralSplit, R1: float,
                   samples: int = 200, seed: int = 0) -> ConditionResult:
    """Check ``|L(z + u) - (B_inf u, u)/2| <= (a_infty/8) ||z + u||^2``.

    Kernel parts have norm in ``[R1, 4 R1]``. Complement parts have norm
    log-uniform in ``[1e-2, 1e2] * R1``, so the check covers both the
    kernel-dominated and the complement-dominated regime.
    """
    rng = np.random.default_rng(seed)
    w = split.basis_complement
    worst, worst_x = -math.inf, None
    for _ in range(samples):
        z = unit_in(split.basis_zero, rng) * rng.uniform(R1, 4 * R1)
        u = unit_in(w, rng) * R1 * 10.0 ** rng.uniform(-2, 2)
        x = z + u
        gap = abs(float(problem.eval_L(x)) - 0.5 * float(u @ problem.B_inf @ u))
        margin = gap / float(x @ x)
        if margin > worst:
            worst, worst_x = margin, x
    tol = split.a_infty / 8
    return ConditionResult("growth_pinching", worst <= tol, worst_x, worst, samples, tol)


def estimate_a1(problem: FunctionalProblem, split: SpectralSplit, R1: float, rho: float,
                samples: int = 64, seed: int = 0) -> float:
    """Smallest sampled ``(B(x) v, v)`` over unit ``v`` in ``H+``.

    The result is floored at 1e-6 and capped at ``2 a_infty``.
    """
    if split.n_plus == 0:
        return 2 * split.a_infty if math.isfinite(split.a_infty) else 1.0
    rng = np.random.default_rng(seed)
    bp = split.basis_plus
    lo = math.inf
    for _ in range(samples):
        x = _working_point(split, R1, rho, rng)
        b = np.asarray(problem.eval_B(x), dtype=float)
        lo = min(lo, float(np.linalg.eigvalsh(bp.T @ b @ bp)[0]))
    return float(min(max(lo, 1e-6), 2 * split.a_infty))


def _finite_cap(c: NormalFormChart, r: float, samples: int, seed: int) -> float:
    """Shrink ``eps`` from ``r/4`` until the sampled ball checks hold."""
    rng = np.random.default_rng(seed)
    R1 = c.solver.cdata.R1
    eps = r / 4
    for _ in range(40):
        ok = True
        for _ in range(samples):
            z = unit_in(c.split.basis_zero, rng) * rng.uniform(R1, 4 * R1)
            fib = _fiber(c, z)
            u = ball_in(c.split.basis_plus, 2 * eps, rng)
            if c.split.mu:
                v = unit_in(c.split.basis_minus, rng) * r
                if fib.F(u + v) > 0:
                    ok = False
                    break
                try:
                    phi = fib.maximize(u)
                except (ConcavityViolation, NoConvergence):
                    ok = False
                    break
                if np.linalg.norm(phi) >= r / 2:
                    ok = False
                    break
        if ok:
            return eps
        eps /= 2
    raise HypothesisViolation("no certified radius found for the finite chart")


def build_chart(solver: ReductionSolver, maximizer_tol: float = 1e-10, rootfind_tol: float = 1e-12,
                r: float = 1.0, samples: int = 64, seed: int = 0) -> NormalFormChart:
    """Assemble a chart over the kernel of ``solver``.

    The whole complement is used when the growth pinching audit passes.
    Otherwise the chart restricts itself to a ball whose radius is found by
    halving from ``r/4``.
    """
    p, split = solver.problem, solver.split
    R1 = solver.cdata.R1
    rho = solver.cdata.rho_A if math.isfinite(solver.cdata.rho_A) else R1
    a1 = estimate_a1(p, split, R1, rho, samples, seed)
    pin = pinching_audit(p, split, R1, 4 * samples, seed)
    chart = NormalFormChart(p, split, solver, a1, math.inf, math.inf, maximizer_tol, rootfind_tol,
                            pinching_passed=pin.passed)
    if pin.passed:
        return chart
    eps = _finite_cap(chart, r, max(8, samples // 4), seed)
    return NormalFormChart(p, split, solver, a1, eps, r, maximizer_tol, rootfind_tol, pinching_passed=False)


def build_nondegenerate_chart(problem: FunctionalProblem, split: SpectralSplit, samples: int = 64,
                              seed: int = 0, maximizer_tol: float = 1e-10,
                              rootfind_tol: float = 1e-12) -> NormalFormChart:
    """Chart for a problem whose limiting Hessian has trivial kernel.

    Samples ``lam``, the largest of ``|L(u) - (B u, u)/2| / ||u||^2`` and
    ``||A(u) - B u|| / ||u||`` over ``||u||`` in ``[R, 4R]``. It must stay
    below ``a_infty``. The outer radius is ``sqrt(2 a_infty) R`` in the
    definite case and ``sqrt(2 ||B_inf||) R`` otherwise.

    Raises:
        HypothesisViolation: If the kernel is nontrivial or ``lam >= a_infty``.
    """
    if split.nu:
        raise HypothesisViolation("nondegenerate chart needs a trivial kernel")
    rng = np.random.default_rng(seed)
    b = problem.B_inf
    R = problem.infinity_radius
    lam = 0.0
    for _ in range(samples):
        u = unit_in(np.eye(split.dim), rng) * rng.uniform(R, 4 * R)
        n = float(np.linalg.norm(u))
        lam = max(lam,
                  abs(float(problem.eval_L(u)) - 0.5 * float(u @ b @ u)) / n**2,
                  float(np.linalg.norm(np.asarray(problem.eval_A(u)) - b @ u)) / n)
    if lam >= split.a_infty:
        raise HypothesisViolation(f"sampled lam={lam:.4g} is not below a_infty={split.a_infty:.4g}")
    if split.mu == 0:
        outer = math.sqrt(2 * split.a_infty) * R
    else:
        outer = math.sqrt(2 * float(np.linalg.norm(b, 2))) * R
    return NormalFormChart(problem, split, None, 2 * split.a_infty, math.inf, math.inf,
                           maximizer_tol, rootfind_tol, outer_radius=outer, lam=lam)


# -- chart maps ---------------------------------------------------------------


def F_infty(c: NormalFormChart, z, u) -> float:
    """``L(z + h(z) + u) - L(z + h(z))``; exactly zero at ``u = 0``."""
    u = np.asarray(u, dtype=float)
    fib = _fiber(c, z)
    if not np.any(u):
        return 0.0
    return fib.F(u)


def _check_plus_cap(c: NormalFormChart, u_plus):
    if c.finite and np.linalg.norm(u_plus) > 2 * c.r_cap:
        raise OutsideCertifiedRegion(
            f"||u+|| = {np.linalg.norm(u_plus):.4g} exceeds certified 2 eps_r = {2 * c.r_cap:.4g}"
        )


def maximize_minus(c: NormalFormChart, z, u_plus) -> np.ndarray:
    """The maximizer ``phi_z(u+)`` of ``v -> F(z, u+ + v)`` over ``H-``.

    Raises:
        ConcavityViolation: The fiber curvature on ``H-`` exceeds ``-a_infty/2``.
        NoConvergence: Newton and gradient ascent both stalled.
        OutsideCertifiedRegion: ``u+`` outside the finite chart.
    """
    u_plus = _check_in(c.split, u_plus, "plus")
    _check_plus_cap(c, u_plus)
    return _fiber(c, z).maximize(u_plus)


def _psi(c: NormalFormChart, fib: _Fiber, u, v):
    phi = fib.maximize(u)
    j = fib.F(u + phi) if np.any(u + phi) else 0.0
    if j < -RADICAND_TOL:
        raise NegativeRadicand(j)
    nu_ = float(np.linalg.norm(u))
    psi1 = math.sqrt(max(j, 0.0)) / nu_ * u if nu_ > 0 else np.zeros_like(u)
    w = v - phi
    nw = float(np.linalg.norm(w))
    if nw == 0:
        return psi1, np.zeros_like(u)
    drop = j - (fib.F(u + v) if np.any(u + v) else 0.0)
    if drop < -RADICAND_TOL:
        raise NegativeRadicand(drop)
    return psi1, math.sqrt(max(drop, 0.0)) / nw * w


def psi(c: NormalFormChart, z, u_plus, u_minus):
    """Coordinate map ``(u+, u-) -> (psi1, psi2)`` over ``z``.

    Satisfies ``F(z, u+ + u-) = ||psi1||^2 - ||psi2||^2``.

    Raises:
        NegativeRadicand: A square-root argument is below ``-1e-12``.
    """
    u = _check_in(c.split, u_plus, "plus")
    v = _check_in(c.split, u_minus, "minus")
    _check_plus_cap(c, u)
    return _psi(c, _fiber(c, z), u, v)


def _psi_inverse(c: NormalFormChart, fib: _Fiber, w_plus, w_minus):
    tol = c.rootfind_tol
    np_ = float(np.linalg.norm(w_plus))
    if np_ == 0:
        u = np.zeros(c.split.dim)
    else:
        d = w_plus / np_
        t_max = 2 * c.r_cap if c.finite else math.inf

        def j(t):
            uu = t * d
            return fib.F(uu + fib.maximize(uu))

        t = _ray_root(j, np_ * np_, d, tol, t_start=1.0, t_min=0.0, f_min=0.0, t_max=t_max)
        u = t * d
    phi = fib.maximize(u)
    nm = float(np.linalg.norm(w_minus))
    if nm == 0:
        return u, phi
    e = w_minus / nm
    j0 = fib.F(u + phi) if np.any(u + phi) else 0.0
    s_max = math.inf
    if c.finite:
        # keep phi + s e inside the negative ball of radius r
        pe = float(phi @ e)
        s_max = -pe + math.sqrt(max(pe * pe - float(phi @ phi) + c.r**2, 0.0))

    def drop(s):
        return j0 - fib.F(u + phi + s * e)

    s = _ray_root(drop, nm * nm, e, tol, t_start=1.0, t_min=0.0, f_min=0.0, t_max=s_max)
    return u, phi + s * e


def psi_inverse(c: NormalFormChart, z, w_plus, w_minus):
    """Preimage of ``(w+, w-)`` under :func:`psi` by two ray root-finds.

    Raises:
        BracketFailure: No sign change found inside the certified region.
        OutsideCertifiedRegion: Target outside the finite chart's ball.
    """
    wp = _check_in(c.split, w_plus, "plus")
    wm = _check_in(c.split, w_minus, "minus")
    if c.finite:
        lim = c.certified_target_radius
        if np.linalg.norm(wp) >= lim or np.linalg.norm(wm) >= lim:
            raise OutsideCertifiedRegion(f"targets must have norm < {lim:.4g}")
    return _psi_inverse(c, _fiber(c, z), wp, wm)


def phi_chart(c: NormalFormChart, p: ChartPoint):
    """``Phi(p) = z + h(z) + psi^-1(z, u+, u-)`` and its normal-form residual.

    Returns:
        ``(point, residual)`` with ``residual = |L(Phi) - (||u+||^2 -
        ||u-||^2 + L(z + h(z)))|``.
    """
    p.validate(c.split)
    wp, wm = np.asarray(p.u_plus, float), np.asarray(p.u_minus, float)
    if c.finite:
        lim = c.certified_target_radius
        if np.linalg.norm(wp) >= lim or np.linalg.norm(wm) >= lim:
            raise OutsideCertifiedRegion(f"targets must have norm < {lim:.4g}")
    fib = _fiber(c, p.z)
    u, v = _psi_inverse(c, fib, wp, wm)
    point = fib.base + u + v
    expected = float(wp @ wp) - float(wm @ wm) + fib.L0
    return point, abs(float(c.problem.eval_L(point)) - expected)


# -- charts without kernel ----------------------------------------------------


def _radial_certificate(c: NormalFormChart, fn_point, t_hi: float, checks: int = 16):
    """``(A(x), x) >= a_infty ||x||^2`` at ``x = fn_point(t)`` for ``t`` in ``[1, t_hi]``."""
    a = c.split.a_infty
    for t in np.linspace(1.0, max(t_hi, 1.0), checks):
        x = fn_point(float(t))
        val = float(np.asarray(c.problem.eval_A(x)) @ x)
        bound = a * float(x @ x)
        if val < bound:
            raise MonotonicityViolation(float(t), val, bound)


def _outer_check(c: NormalFormChart, n: float):
    if c.solver is not None:
        raise HypothesisViolation("chart has a kernel; use phi_chart")
    if n < c.outer_radius * (1 - 1e-12):
        raise OutsideCertifiedRegion(f"||u|| = {n:.6g} is below the outer radius {c.outer_radius:.6g}")


def nondeg_chart_definite(c: NormalFormChart, u) -> np.ndarray:
    """Point ``t ubar`` on the ray of ``u`` with ``L(t ubar) = ||u||^2``.

    Here ``ubar = R u/||u||`` lies on the sphere of the certified radius
    ``R`` and ``t >= 1``. Before the root is trusted, the radial derivative
    is sampled along the bracket and must satisfy
    ``(A(x), x) >= a_infty ||x||^2``.

    Raises:
        MonotonicityViolation: The radial certificate fails.
        BracketFailure: ``L(ubar) > ||u||^2`` or no sign change found.
    """
    if c.split.mu:
        raise HypothesisViolation("definite chart needs a positive definite B_inf")
    u = np.asarray(u, dtype=float)
    n = float(np.linalg.norm(u))
    _outer_check(c, n)
    R = c.problem.infinity_radius
    ubar = R * u / n
    L = c.problem.eval_L
    f = lambda t: float(L(t * ubar))
    t = _ray_root(f, n * n, u / n, c.rootfind_tol, t_start=2.0, t_min=1.0)
    _radial_certificate(c, lambda s: s * ubar, t)
    return t * ubar


def nondeg_chart_indefinite(c: NormalFormChart, u_plus, v) -> np.ndarray:
    """Preimage of ``(u+, v)`` for a problem with ``mu > 0`` and no kernel.

    The positive stage solves ``L(w + phi(w)) = ||u+||^2`` for ``w = t ubar``,
    with ``t >= 1`` and ``phi(w)`` the maximizer of ``L(w + .)`` over
    ``H-``. The negative stage then moves from ``w + phi(w)`` along ``v``
    until ``L`` has dropped by ``||v||^2``.

    Returns:
        The point ``x`` with ``L(x) = ||u+||^2 - ||v||^2``.
    """
    if c.split.mu == 0:
        raise HypothesisViolation("indefinite chart needs mu > 0")
    up = _check_in(c.split, u_plus, "plus")
    vm = _check_in(c.split, v, "minus")
    n = float(np.linalg.norm(up))
    _outer_check(c, n)
    fib = _Fiber(c, np.zeros(c.split.dim), 0.0)
    R = c.problem.infinity_radius
    ubar = R * up / n

    def j(t):
        w = t * ubar
        return fib.F(w + fib.maximize(w))

    t = _ray_root(j, n * n, up / n, c.rootfind_tol, t_start=2.0, t_min=1.0)
    w = t * ubar
    phi = fib.maximize(w)
    _radial_certificate(c, lambda s: s * ubar + fib.maximize(s * ubar), t)
    nv = float(np.linalg.norm(vm))
    if nv == 0:
        return w + phi
    e = vm / nv
    j0 = fib.F(w + phi)
    s = _ray_root(lambda s: j0 - fib.F(w + phi + s * e), nv * nv, e, c.rootfind_tol,
                  t_start=1.0, t_min=0.0, f_min=0.0)
    return w + phi + s * e


def nondeg_bounds(c: NormalFormChart, u) -> tuple:
    """Norm bounds for the positive part of a chart point without kernel.

    Definite case: ``||u|| / sqrt(2 a_infty) <= ||phi(u)|| <= ||u|| / sqrt(a_infty - lam)``.
    Indefinite case: lower bound ``||u|| / sqrt(2 ||B_inf||)``, same upper bound
    for ``||P+ phi||``.
    """
    n = float(np.linalg.norm(u))
    a = c.split.a_infty
    upper = n / math.sqrt(a - c.lam)
    if c.split.mu == 0:
        return n / math.sqrt(2 * a), upper
    return n / math.sqrt(2 * float(np.linalg.norm(c.problem.B_inf, 2))), upper


# -- property audits ----------------------------------------------------------


def _sample_z(c: NormalFormChart, rng, lo_mult=1.0, hi_mult=4.0):
    R1 = c.solver.cdata.R1
    return unit_in(c.split.basis_zero, rng) * rng.uniform(lo_mult * R1, hi_mult * R1)


def sign_bounds_audit(c: NormalFormChart, samples: int = 100, seed: int = 0,
                      scale=(1e-2, 10.0)) -> HypothesisReport:
    """Sampled ``F(z, u+) >= (a1/4)||u+||^2`` and ``F(z, u-) <= -(a_infty/4)||u-||^2``.

    The margins recorded are ``F/||u||^2 - a1/4`` (must be ``>= 0``) and
    ``-(a_infty/4) - F/||u||^2`` (must be ``>= 0``); the worst is reported.
    """
    rng = np.random.default_rng(seed)
    lo, hi = scale
    if c.finite:
        hi = min(hi, 2 * c.r_cap)
        lo = min(lo, hi / 10)
    entries = []
    for part, name in (("plus", "fiber_plus_lower"), ("minus", "fiber_minus_upper")):
        basis = c.split.basis(part)
        if basis.shape[1] == 0:
            entries.append(ConditionResult(name, True, None, math.inf, 0, 0.0))
            continue
        worst, worst_x = math.inf, None
        for _ in range(samples):
            z = _sample_z(c, rng)
            u = unit_in(basis, rng) * math.exp(rng.uniform(math.log(lo), math.log(hi)))
            ratio = F_infty(c, z, u) / float(u @ u)
            margin = ratio - c.a1 / 4 if part == "plus" else -c.split.a_infty / 4 - ratio
            if margin < worst:
                worst, worst_x = margin, z + u
        entries.append(ConditionResult(name, worst >= 0, worst_x, worst, samples, 0.0))
    return HypothesisReport(tuple(entries), seed)


def fiber_limit_profile(c: NormalFormChart, u0, radii, direction=None):
    """``|F(z_R, u0) - (B_inf u0, u0)/2|`` along ``z_R = R * direction``.

    Returns:
        ``(values, non_increasing)`` where the monotonicity test allows 10%
        slack plus an absolute floor of 1e-12 for rounding.
    """
    u0 = np.asarray(u0, dtype=float)
    d = c.split.basis_zero[:, 0] if direction is None else np.asarray(direction, float)
    d = d / np.linalg.norm(d)
    q = 0.5 * float(u0 @ c.problem.B_inf @ u0)
    vals = [abs(F_infty(c, float(R) * d, u0) - q) for R in radii]
    ok = all(b <= 1.1 * a + 1e-12 for a, b in zip(vals, vals[1:]))
    return vals, ok


def phi_growth_audit(c: NormalFormChart, samples: int = 50, seed: int = 0) -> ConditionResult:
    """Sampled growth bound on the maximizer in the whole-complement regime.

    Checks ``||phi||^2 <= (8/a) ||B|| ||u+||^2 + 4 ||z||^2 + (16 ||B||^2 / a^2) ||h||^2``
    with ``a = a_infty`` and ``B = B_inf``; the recorded value is the
    largest ratio of left to right side.
    """
    if c.finite:
        raise ValueError("growth bound applies to the whole-complement chart only")
    rng = np.random.default_rng(seed)
    a = c.split.a_infty
    nb = float(np.linalg.norm(c.problem.B_inf, 2))
    worst, worst_x = 0.0, None
    for _ in range(samples):
        z = _sample_z(c, rng)
        u = unit_in(c.split.basis_plus, rng) * c.solver.cdata.R1 * 10.0 ** rng.uniform(-2, 1)
        fib = _fiber(c, z)
        phi = fib.maximize(u)
        h = fib.base - z
        rhs = 8 / a * nb * float(u @ u) + 4 * float(z @ z) + 16 * nb**2 / a**2 * float(h @ h)
        ratio = float(phi @ phi) / rhs
        if ratio > worst:
            worst, worst_x = ratio, z + u
    return ConditionResult("phi_growth", worst <= 1.0, worst_x, worst, samples, 1.0)


def reduced_value_at(c: NormalFormChart, z) -> float:
    """Convenience: ``L(z + h(z))`` from the chart's solver."""
    return reduced_value(c.solver, z)
