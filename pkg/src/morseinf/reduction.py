"""Reduction to the kernel at infinity.

For a kernel point ``z`` far out, :func:`solve_h` finds the unique ``h`` in
the complement with ``(I - P0) A(z + h) = 0`` by the Picard iteration

    x  ->  x - (B_inf | complement)^-1 (I - P0) A(z + x),

started at ``x = 0``. Its contraction factor is the certified quantity, so it
is measured at every step. Once the residual is small, an optional Newton
polish finishes the job cheaply. Everything else here (reduced functional,
its gradient, critical-point search) is built on top of that map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._util import parallel_map, unit_in
from .errors import ContractionViolated, LeftBall, NoConvergence
from .functional import E_INFTY, ContractionData, FunctionalProblem
from .hilbert import OperatorConstants, SpectralSplit

__all__ = [
    "ReductionSolver",
    "HSolution",
    "ReducedCriticalPoint",
    "CriticalPointSearch",
    "DecayProfile",
    "solve_h",
    "solve_h_info",
    "reduced_value",
    "reduced_gradient",
    "reduced_hessian",
    "lipschitz_audit",
    "find_reduced_critical_points",
    "decay_audit",
]

POLISH_THRESHOLD = 1e-4
FACTOR_SLACK = 0.05


@dataclass(frozen=True)
class ReductionSolver:
    """Everything needed to evaluate the reduction map.

    Attributes:
        problem: The functional.
        split: Splitting of ``problem.B_inf``; must have a kernel.
        consts: Operator constants of the split.
        cdata: Certified contraction data.
        fp_tol: Residual target for ``||(I - P0) A(z + h)||``.
        max_iter: Iteration budget of the fixed-point loop.
        polish: Whether to finish with Newton steps once the residual is small.
    """

    problem: FunctionalProblem
    split: SpectralSplit
    consts: OperatorConstants
    cdata: ContractionData
    fp_tol: float = 1e-10
    max_iter: int = 10_000
    polish: bool = True

    def __post_init__(self):
        if self.split.nu == 0:
            raise ValueError("reduction needs a nontrivial kernel")
        if not self.fp_tol > 0:
            raise ValueError("fp_tol must be positive")

    @cached_property
    def W(self) -> np.ndarray:
        return self.split.basis_complement

    @cached_property
    def D(self) -> np.ndarray:
        return self.split.eig_complement

    @cached_property
    def Z(self) -> np.ndarray:
        return self.split.basis_zero

    def kernel_point(self, coords) -> np.ndarray:
        """Full vector of the kernel point with the given coordinates."""
        return self.Z @ np.atleast_1d(np.asarray(coords, dtype=float))

    def check_kernel(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape != (self.split.dim,):
            raise ValueError(f"kernel point must have length {self.split.dim}")
        off = np.linalg.norm(self.W.T @ z)
        if off > 1e-10 * max(1.0, np.linalg.norm(z)):
            raise ValueError(f"point is not in the kernel (off-kernel part {off:.3e})")
        if np.linalg.norm(z) < self.cdata.R1 * (1 - 1e-12):
            raise ValueError(f"||z|| = {np.linalg.norm(z):.6g} is below R1 = {self.cdata.R1:.6g}")
        return z


@dataclass(frozen=True)
class HSolution:
    """Result of the fixed-point solve with its diagnostics."""

    h: np.ndarray
    iterations: int
    residual: float
    max_factor: float
    polished: bool


def solve_h_info(s: ReductionSolver, z, x0=None) -> HSolution:
    """Solve ``(I - P0) A(z + h) = 0`` for ``h`` in the complement.

    Args:
        s: The solver.
        z: Kernel point with ``||z|| >= R1``.
        x0: Optional starting point in the complement (default zero).

    Returns:
        The solution with iteration count, final residual and the largest
        observed Picard contraction factor.

    Raises:
        ContractionViolated: A Picard step contracted by more than
            ``1/kappa + 0.05`` relative to the previous one.
        LeftBall: An iterate left ``B(0, rho_A)`` (finite ``rho_A`` only).
        NoConvergence: The budget ran out.
    """
    z = s.check_kernel(z)
    p, W, D = s.problem, s.W, s.D
    y = np.zeros(W.shape[1]) if x0 is None else W.T @ np.asarray(x0, dtype=float)
    rho = s.cdata.rho_A
    limit = 1.0 / s.cdata.kappa + FACTOR_SLACK

    def resid(y):
        return W.T @ np.asarray(p.eval_A(z + W @ y), dtype=float)

    r = resid(y)
    rn = float(np.linalg.norm(r))
    prev_gap = None
    max_factor = 0.0
    polish = s.polish
    polished = False
    it = 0
    while rn > s.fp_tol:
        if it >= s.max_iter:
            raise NoConvergence(it, rn, "fixed-point iteration")
        it += 1
        if polish and rn < POLISH_THRESHOLD:
            jac = W.T @ np.asarray(p.eval_B(z + W @ y), dtype=float) @ W
            try:
                y_new = y - np.linalg.solve(jac, r)
            except np.linalg.LinAlgError:
                y_new = None
            if y_new is not None:
                r_new = resid(y_new)
                rn_new = float(np.linalg.norm(r_new))
                if rn_new < rn:
                    y, r, rn = y_new, r_new, rn_new
                    polished = True
                    continue
            polish = False  # Newton stalled; finish with plain Picard steps
            prev_gap = None
        y_new = y - r / D
        gap = float(np.linalg.norm(y_new - y))
        floor = 1e-11 * (1.0 + np.linalg.norm(y))
        if prev_gap is not None and prev_gap > floor:
            factor = gap / prev_gap
            max_factor = max(max_factor, factor)
            if factor > limit:
                raise ContractionViolated(
                    (z + W @ y, z + W @ y_new), factor, limit,
                    f"Picard factor {factor:.4g} exceeds 1/kappa + {FACTOR_SLACK}",
                )
        prev_gap = gap
        y = y_new
        ny = float(np.linalg.norm(y))
        if math.isfinite(rho) and ny > rho:
            raise LeftBall(ny, rho)
        r = resid(y)
        rn = float(np.linalg.norm(r))
    return HSolution(W @ y, it, rn, max_factor, polished)


def solve_h(s: ReductionSolver, z, x0=None) -> np.ndarray:
    """The reduction map ``h(z)`` as a full vector (see :func:`solve_h_info`)."""
    return solve_h_info(s, z, x0).h


def reduced_value(s: ReductionSolver, z) -> float:
    """``L(z + h(z))``."""
    z = np.asarray(z, dtype=float)
    return float(s.problem.eval_L(z + solve_h(s, z)))


def reduced_gradient(s: ReductionSolver, z) -> np.ndarray:
    """``P0 A(z + h(z))`` as a full (kernel) vector."""
    z = np.asarray(z, dtype=float)
    a = np.asarray(s.problem.eval_A(z + solve_h(s, z)), dtype=float)
    return s.Z @ (s.Z.T @ a)


def reduced_hessian(s: ReductionSolver, z, h=None) -> np.ndarray:
    """Hessian of the reduced functional in kernel coordinates.

    It is the Schur complement of the complement block of ``B(z + h)``,
    since ``dh/dz = -(W^T B W)^-1 W^T B Z``.
    """
    z = np.asarray(z, dtype=float)
    if h is None:
        h = solve_h(s, z)
    b = np.asarray(s.problem.eval_B(z + h), dtype=float)
    Z, W = s.Z, s.W
    bzz = Z.T @ b @ Z
    bzw = Z.T @ b @ W
    bww = W.T @ b @ W
    return bzz - bzw @ np.linalg.solve(bww, bzw.T)


def lipschitz_bound(cdata: ContractionData) -> float:
    """Bound ``1/(kappa - 1) + 0.05`` that :func:`lipschitz_audit` must respect."""
    return 1.0 / (cdata.kappa - 1.0) + FACTOR_SLACK


def lipschitz_audit(s: ReductionSolver, pairs: int = 100, seed: int = 0) -> float:
    """Largest sampled ``||h(z1) - h(z2)|| / ||z1 - z2||``.

    Half the pairs are independent points with norms in ``[R1, 10 R1]``;
    the other half are close pairs, which probe the local slope.

    Raises:
        ValueError: If the contraction data is not in ``E_infty`` mode.
    """
    if s.cdata.mode != E_INFTY:
        raise ValueError("Lipschitz bound only holds for E_infty contraction data")
    rng = np.random.default_rng(seed)
    R1 = s.cdata.R1
    worst = 0.0
    for i in range(pairs):
        z1 = unit_in(s.Z, rng) * rng.uniform(R1, 10 * R1)
        if i % 2:
            step = unit_in(s.Z, rng) * R1 * 10.0 ** rng.uniform(-4, -1)
            z2 = z1 + step
            if np.linalg.norm(z2) < R1:
                z2 = z1 - step
        else:
            z2 = unit_in(s.Z, rng) * rng.uniform(R1, 10 * R1)
        dz = np.linalg.norm(z1 - z2)
        if dz == 0:
            continue
        worst = max(worst, float(np.linalg.norm(solve_h(s, z1) - solve_h(s, z2)) / dz))
    return worst


@dataclass(frozen=True)
class ReducedCriticalPoint:
    """A critical point of the reduced functional, lifted to the full space."""

    z: np.ndarray
    h: np.ndarray
    full_point: np.ndarray
    grad_norm: float


@dataclass(frozen=True)
class CriticalPointSearch:
    """Outcome of :func:`find_reduced_critical_points`.

    Iterating over it yields the points. ``degenerate_flat`` is set when the
    reduced gradient vanishes on every probe, in which case no points are
    listed.
    """

    points: tuple
    degenerate_flat: bool
    starts: int
    probe_min_grad: float

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]


def _newton_reduced(s: ReductionSolver, zc, band, tol, max_steps=50):
    """Damped Newton on the reduced gradient, from kernel coordinates ``zc``."""
    lo, hi = band

    def state(c):
        z = s.kernel_point(c)
        h = solve_h(s, z)
        a = np.asarray(s.problem.eval_A(z + h), dtype=float)
        return z, h, a, s.Z.T @ a

    try:
        z, h, a, g = state(zc)
        for _ in range(max_steps):
            if np.linalg.norm(a) <= tol:
                return ReducedCriticalPoint(z, h, z + h, float(np.linalg.norm(a)))
            hess = reduced_hessian(s, z, h)
            step = -np.linalg.lstsq(hess, g, rcond=None)[0]
            f0 = float(g @ g)
            t = 1.0
            for _ in range(31):
                cand = zc + t * step
                r = np.linalg.norm(cand)
                if lo <= r <= hi:
                    cz, ch, ca, cg = state(cand)
                    if float(cg @ cg) <= (1 - 2e-4 * t) * f0:
                        break
                t *= 0.5
            else:
                return None
            zc, z, h, a, g = cand, cz, ch, ca, cg
    except (ValueError, NoConvergence, LeftBall, ContractionViolated, np.linalg.LinAlgError):
        return None
    if np.linalg.norm(a) <= tol:
        return ReducedCriticalPoint(z, h, z + h, float(np.linalg.norm(a)))
    return None


def find_reduced_critical_points(
    s: ReductionSolver,
    search_radius_band=None,
    starts: int = 32,
    seed: int = 0,
    merge_tol: float = 1e-6,
    probes: int = 100,
) -> CriticalPointSearch:
    """Multistart damped Newton on the reduced gradient over a kernel annulus.

    Every hit is lifted to ``z + h(z)`` and accepted only if the full gradient
    satisfies ``||A(z + h)|| <= 10 fp_tol``. Steps are damped by Armijo
    backtracking on ``||grad||^2`` (factor 0.5, at most 30 halvings) and
    iterates are kept inside the annulus.

    Args:
        s: Reduction solver.
        search_radius_band: ``(lo, hi)`` kernel radii; ``lo >= R1``. Defaults
            to ``(R1, 2 R1)``.
        starts: Number of random starting points.
        seed: Random seed.
        merge_tol: Distance under which two hits are merged.
        probes: Probe points for the flatness test.
    """
    lo, hi = search_radius_band or (s.cdata.R1, 2 * s.cdata.R1)
    if lo < s.cdata.R1 or hi <= lo:
        raise ValueError("band must satisfy R1 <= lo < hi")
    rng = np.random.default_rng(seed)
    tol = 10 * s.fp_tol

    def draw():
        return s.Z.T @ (unit_in(s.Z, rng) * rng.uniform(lo, hi))

    probe_pts = [draw() for _ in range(probes)]
    grads = parallel_map(lambda c: float(np.linalg.norm(reduced_gradient(s, s.kernel_point(c)))), probe_pts)
    probe_min = min(grads) if grads else math.inf
    if grads and max(grads) < tol:
        return CriticalPointSearch((), True, starts, probe_min)

    start_pts = [draw() for _ in range(starts)]
    hits = [r for r in parallel_map(lambda c: _newton_reduced(s, c, (lo, hi), tol), start_pts) if r]
    hits.sort(key=lambda r: tuple(s.Z.T @ r.z))
    merged = []
    for r in hits:
        if not any(np.linalg.norm(r.z - m.z) <= merge_tol for m in merged):
            merged.append(r)
    return CriticalPointSearch(tuple(merged), False, starts, probe_min)


@dataclass(frozen=True)
class DecayProfile:
    """Envelope of ``||h||`` along a radius ladder.

    Attributes:
        radii: The ladder.
        envelope: Largest ``||h(z)||`` over sampled directions at each radius.
        non_increasing: Whether the envelope is non-increasing within 10%.
        flag: ``"no decay, M(A)>0"`` when the sampled M(A) is nonzero (no
            decay is promised then), else ``"decaying"`` or ``"not monotone"``.
        passed: False only when M(A) is sampled as zero yet the envelope grows.
    """

    radii: tuple
    envelope: tuple
    non_increasing: bool
    flag: str
    passed: bool

    def __iter__(self):
        return iter(self.envelope)

    def __len__(self):
        return len(self.envelope)


def decay_audit(s: ReductionSolver, radii, directions: int = 16, seed: int = 0, zero_tol: float = 1e-8) -> DecayProfile:
    """Sample ``max ||h(z)||`` over kernel directions at each radius."""
    radii = tuple(float(r) for r in radii)
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be increasing")
    if radii and radii[0] < s.cdata.R1:
        raise ValueError("radii must be >= R1")
    rng = np.random.default_rng(seed)
    dirs = [unit_in(s.Z, rng) for _ in range(directions)]
    if s.split.nu == 1:
        dirs = [s.Z[:, 0], -s.Z[:, 0]]
    env = tuple(max(float(np.linalg.norm(solve_h(s, d * r))) for d in dirs) for r in radii)
    non_inc = all(b <= 1.1 * a + 1e-15 for a, b in zip(env, env[1:]))
    m_zero = s.cdata.M_A <= zero_tol
    if not m_zero:
        flag = "no decay, M(A)>0"
    elif non_inc:
        flag = "decaying"
    else:
        flag = "not monotone"
    return DecayProfile(radii, env, non_inc, flag, non_inc or not m_zero)
