"""Problem interface and sampling auditors for its asymptotic hypotheses.

A :class:`FunctionalProblem` bundles a functional ``L`` with its gradient
``A``, Hessian field ``B`` and limiting Hessian ``B_inf``. The auditors below
check, on random samples drawn from a fixed seed, that these pieces are
mutually consistent and that ``B`` approaches ``B_inf`` in the directions the
reduction needs. A pass means "no violation among the samples drawn"; the
sample count and seed are always carried in the report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._util import ball_in, unit, unit_in
from .errors import ContractionViolated, RhoTooSmall
from .hilbert import OperatorConstants, SpectralSplit, sym_operator

__all__ = [
    "FunctionalProblem",
    "ContractionData",
    "ConditionResult",
    "HypothesisReport",
    "fd_step",
    "audit_gradient",
    "audit_hessian",
    "audit_D_infty",
    "contraction_ratios",
    "estimate_contraction",
    "E_INFTY",
    "E_PRIME_INFTY",
]

E_INFTY = "E_infty"
E_PRIME_INFTY = "E_prime_infty"

GRADIENT_RTOL = 1e-5
HESSIAN_RTOL = 1e-4


@dataclass(frozen=True)
class FunctionalProblem:
    """A functional on R^dim together with its derivatives.

    Attributes:
        dim: Dimension of the space.
        eval_L: ``x -> L(x)``.
        eval_A: ``x -> grad L(x)``.
        eval_B: ``x -> Hessian of L at x`` (symmetric matrix).
        B_inf: Limiting Hessian at infinity.
        infinity_radius: Radius beyond which asymptotic conditions are asserted.
        name: Free-form label used in reports.
    """

    dim: int
    eval_L: Callable[[np.ndarray], float]
    eval_A: Callable[[np.ndarray], np.ndarray]
    eval_B: Callable[[np.ndarray], np.ndarray]
    B_inf: np.ndarray
    infinity_radius: float
    name: str = "problem"

    def __post_init__(self):
        b = sym_operator(self.B_inf)
        if b.shape != (self.dim, self.dim):
            raise ValueError(f"B_inf shape {b.shape} does not match dim {self.dim}")
        if not self.infinity_radius > 0:
            raise ValueError("infinity_radius must be positive")
        object.__setattr__(self, "B_inf", b)


@dataclass(frozen=True)
class ContractionData:
    """Certified data of the contraction argument.

    Attributes:
        kappa: Contraction margin, the map contracts by ``1/kappa``.
        rho_A: Radius of the ball in the complement where it holds.
        R1: Kernel radius beyond which it holds.
        M_A: Sampled size of the off-kernel gradient on the kernel far out.
        mode: ``"E_infty"`` (z varies) or ``"E_prime_infty"`` (z shared).
        max_ratio: Largest Lipschitz ratio observed while sampling.
        samples: Number of sampled pairs.
    """

    kappa: float
    rho_A: float
    R1: float
    M_A: float
    mode: str
    max_ratio: float = 0.0
    samples: int = 0

    @property
    def factor(self) -> float:
        """Certified contraction factor ``1/kappa``."""
        return 1.0 / self.kappa


@dataclass(frozen=True)
class ConditionResult:
    """Outcome of one audited condition."""

    name: str
    passed: bool
    worst_sample: np.ndarray
    worst_value: float
    samples_used: int
    tolerance: float
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class HypothesisReport:
    """Collection of condition results produced from one seed."""

    entries: tuple
    seed: int

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def __getitem__(self, name: str) -> ConditionResult:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def names(self) -> list:
        return [e.name for e in self.entries]

    def merged(self, other: "HypothesisReport") -> "HypothesisReport":
        return HypothesisReport(self.entries + other.entries, self.seed)


def fd_step(x) -> float:
    """Central-difference step ``max(1e-6, 1e-6 * ||x||)``."""
    return max(1e-6, 1e-6 * float(np.linalg.norm(x)))


def _far_point(p: FunctionalProblem, rng) -> np.ndarray:
    r = rng.uniform(p.infinity_radius, 4 * p.infinity_radius)
    return unit(p.dim, rng) * r


def audit_gradient(p: FunctionalProblem, samples: int = 50, seed: int = 0) -> HypothesisReport:
    """Compare ``(A(x), u)`` with central differences of ``L``.

    Points ``x`` have norm in ``[R, 4R]`` with ``R = p.infinity_radius``; the
    directions ``u`` are unit vectors. The relative error is taken against
    the largest of ``|(A(x), u)|``, the difference quotient and ``||A(x)||``.

    Returns:
        Report with one entry, ``gradient_consistency``, tolerance 1e-5.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    worst, worst_x = -1.0, None
    for _ in range(samples):
        x = _far_point(p, rng)
        u = unit(p.dim, rng)
        h = fd_step(x)
        fd = (p.eval_L(x + h * u) - p.eval_L(x - h * u)) / (2 * h)
        a = np.asarray(p.eval_A(x), dtype=float)
        exact = float(a @ u)
        denom = max(abs(exact), abs(fd), float(np.linalg.norm(a)), 1e-300)
        err = abs(fd - exact) / denom
        if err > worst:
            worst, worst_x = err, x
    res = ConditionResult(
        "gradient_consistency", worst <= GRADIENT_RTOL, worst_x, worst, samples, GRADIENT_RTOL
    )
    return HypothesisReport((res,), seed)


def audit_hessian(p: FunctionalProblem, samples: int = 50, seed: int = 0) -> HypothesisReport:
    """Compare ``B(x) u`` with central differences of ``A``, and check symmetry.

    Returns:
        Report with entries ``hessian_consistency`` (relative tolerance 1e-4)
        and ``hessian_symmetry`` (relative tolerance 1e-12).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    worst, worst_x = -1.0, None
    asym, asym_x = 0.0, None
    for _ in range(samples):
        x = _far_point(p, rng)
        u = unit(p.dim, rng)
        h = fd_step(x)
        fd = (np.asarray(p.eval_A(x + h * u)) - np.asarray(p.eval_A(x - h * u))) / (2 * h)
        b = np.asarray(p.eval_B(x), dtype=float)
        bu = b @ u
        denom = max(np.linalg.norm(bu), np.linalg.norm(fd), 1e-300)
        err = float(np.linalg.norm(fd - bu) / denom)
        if err > worst:
            worst, worst_x = err, x
        s = float(np.max(np.abs(b - b.T)) / max(1.0, np.max(np.abs(b))))
        if s >= asym:
            asym, asym_x = s, x
    entries = (
        ConditionResult("hessian_consistency", worst <= HESSIAN_RTOL, worst_x, worst, samples, HESSIAN_RTOL),
        ConditionResult("hessian_symmetry", asym <= 1e-12, asym_x, asym, samples, 1e-12),
    )
    return HypothesisReport(entries, seed)


def _asymptotic_point(split: SpectralSplit, radius: float, rho: float, rng) -> np.ndarray:
    """Kernel point on the sphere of ``radius`` plus a complement point in ``B(0, rho)``."""
    if split.nu == 0:
        return unit(split.dim, rng) * radius
    return unit_in(split.basis_zero, rng) * radius + ball_in(split.basis_complement, rho, rng)


def audit_D_infty(
    p: FunctionalProblem,
    split: SpectralSplit,
    radii,
    samples_per_radius: int = 32,
    seed: int = 0,
    complement_radius: float = 1.0,
) -> HypothesisReport:
    """Decay of ``B(x) - B_inf`` seen from the kernel and negative directions.

    At each radius, ``omega`` is the largest value over the samples of
    ``sup |((B(x) - B_inf) u, v)| / (||u|| ||v||)`` with ``v`` in
    ``H0 + H-``. The sup over ``u, v`` is computed exactly as a spectral
    norm, so only ``x`` is sampled. At the largest radius the quadratic form
    of ``B(x)`` is also checked to be positive on ``H+`` and at most
    ``-a_infty`` on ``H-``.

    Returns:
        Report with entries ``omega_decay``, ``plus_coercive`` and
        ``minus_coercive``. The decay entry passes when ``omega`` is
        non-increasing along ``radii`` and its last value is below
        ``a_infty / 2``; its ``detail`` holds the profile.
    """
    radii = [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be increasing")
    if radii and radii[0] < p.infinity_radius:
        raise ValueError("radii must be >= infinity_radius")
    rng = np.random.default_rng(seed)
    w = np.hstack([split.basis_zero, split.basis_minus])
    omegas, worst_pts = [], []
    last_pts = []
    for r in radii:
        best, best_x = 0.0, None
        pts = []
        for _ in range(samples_per_radius):
            x = _asymptotic_point(split, r, complement_radius, rng)
            pts.append(x)
            if w.shape[1] == 0:
                val = 0.0
            else:
                d = np.asarray(p.eval_B(x), dtype=float) - p.B_inf
                val = float(np.linalg.norm(w.T @ d, 2))
            if best_x is None or val > best:
                best, best_x = val, x
        omegas.append(best)
        worst_pts.append(best_x)
        last_pts = pts
    rounding = 1e-12
    monotone = all(b <= a * (1 + rounding) + rounding for a, b in zip(omegas, omegas[1:]))
    final = omegas[-1] if omegas else 0.0
    decay = ConditionResult(
        "omega_decay",
        monotone and final < split.a_infty / 2,
        worst_pts[-1] if worst_pts else None,
        final,
        samples_per_radius * len(radii),
        split.a_infty / 2,
        {"radii": radii, "omega": omegas, "monotone": monotone},
    )

    # Sign bounds at the largest radius.
    plus_min, plus_x = math.inf, None
    minus_max, minus_x = -math.inf, None
    for x in last_pts:
        b = np.asarray(p.eval_B(x), dtype=float)
        if split.n_plus:
            bp = split.basis_plus
            lo = float(np.linalg.eigvalsh(bp.T @ b @ bp)[0])
            if lo < plus_min:
                plus_min, plus_x = lo, x
        if split.mu:
            bm = split.basis_minus
            hi = float(np.linalg.eigvalsh(bm.T @ b @ bm)[-1])
            if hi > minus_max:
                minus_max, minus_x = hi, x
    n_last = len(last_pts)
    plus = ConditionResult(
        "plus_coercive",
        split.n_plus == 0 or plus_min > 0,
        plus_x,
        plus_min if split.n_plus else 0.0,
        n_last,
        0.0,
    )
    minus = ConditionResult(
        "minus_coercive",
        split.mu == 0 or minus_max <= -split.a_infty,
        minus_x,
        minus_max if split.mu else 0.0,
        n_last,
        -split.a_infty,
    )
    return HypothesisReport((decay, plus, minus), seed)


def _off_kernel_residual(p, w, d, x):
    """``(I - P0) A(x) - B_inf x`` in complement coordinates."""
    return w.T @ np.asarray(p.eval_A(x), dtype=float) - d * (w.T @ x)


def contraction_ratios(
    p: FunctionalProblem,
    split: SpectralSplit,
    mode: str,
    trial_rho: float,
    R1: float,
    samples: int,
    seed: int = 0,
    shared_z: bool = False,
):
    """Sampled Lipschitz ratios of ``x -> (I - P0) A(z + x) - B_inf x``.

    Half the pairs are drawn independently, half as local perturbations of
    log-uniform size, so that both global and infinitesimal behavior is
    probed. Kernel points ``z`` have norm in ``[R1, 10 R1]``.

    In ``E_prime_infty`` mode both points share ``z``; in ``E_infty`` mode the
    kernel points differ and the ratio is taken against the full distance.
    The random stream does not depend on the mode, so ``E_infty`` with
    ``shared_z=True`` reproduces ``E_prime_infty`` exactly.

    Returns:
        ``(ratios, pairs)`` with ``pairs[i] = (point1, point2)``.
    """
    if mode not in (E_INFTY, E_PRIME_INFTY):
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    w = split.basis_complement
    d = split.eig_complement
    ratios = np.empty(samples)
    pairs = []
    for i in range(samples):
        z1 = unit_in(split.basis_zero, rng) * rng.uniform(R1, 10 * R1)
        z2 = unit_in(split.basis_zero, rng) * rng.uniform(R1, 10 * R1)
        x1 = ball_in(w, trial_rho, rng)
        x2 = ball_in(w, trial_rho, rng)
        if i % 2:
            scale = trial_rho * 10.0 ** rng.uniform(-3, 0)
            x2 = x1 + unit_in(w, rng) * scale * rng.uniform()
            nx2 = np.linalg.norm(x2)
            if nx2 > trial_rho:
                x2 *= trial_rho / nx2
            if split.nu:
                z2 = z1 + unit_in(split.basis_zero, rng) * scale * rng.uniform()
        if mode == E_PRIME_INFTY or shared_z:
            z2 = z1
        y1, y2 = z1 + x1, z2 + x2
        num = np.linalg.norm(_off_kernel_residual(p, w, d, y1) - _off_kernel_residual(p, w, d, y2))
        den = np.linalg.norm(x1 - x2) if mode == E_PRIME_INFTY else np.linalg.norm(y1 - y2)
        ratios[i] = num / den if den > 0 else 0.0
        pairs.append((y1, y2))
    return ratios, pairs


def estimate_contraction(
    p: FunctionalProblem,
    split: SpectralSplit,
    consts: OperatorConstants,
    kappa: float,
    trial_rho: float,
    R1: float,
    samples: int = 200,
    seed: int = 0,
    mode: str = E_INFTY,
) -> ContractionData:
    """Certify (by sampling) the contraction data of the reduction.

    Args:
        p: The problem.
        split: Splitting of ``p.B_inf``.
        consts: Operator constants of ``split``.
        kappa: Required margin, ``> 1``.
        trial_rho: Radius of the complement ball.
        R1: Kernel radius, at least ``p.infinity_radius``.
        samples: Number of sampled pairs (the M_A estimate uses the same count).
        seed: Random seed.
        mode: ``"E_infty"`` or ``"E_prime_infty"``.

    Raises:
        ContractionViolated: A sampled ratio exceeds ``1/(kappa * c1_infty)``.
        RhoTooSmall: ``trial_rho <= kappa/(kappa-1) * c1_infty * M_A``.
    """
    if not kappa > 1:
        raise ValueError("kappa must exceed 1")
    if not trial_rho > 0:
        raise ValueError("trial_rho must be positive")
    if R1 < p.infinity_radius:
        raise ValueError("R1 must be >= infinity_radius")
    bound = 1.0 / (kappa * consts.c1_infty)
    ratios, pairs = contraction_ratios(p, split, mode, trial_rho, R1, samples, seed)
    worst = int(np.argmax(ratios)) if samples else 0
    max_ratio = float(ratios[worst]) if samples else 0.0
    if max_ratio > bound:
        raise ContractionViolated(pairs[worst], max_ratio, bound)

    m_a = 0.0
    if split.nu:
        rng = np.random.default_rng(seed + 1)
        w = split.basis_complement
        for _ in range(samples):
            z = unit_in(split.basis_zero, rng) * rng.uniform(R1, 10 * R1)
            m_a = max(m_a, float(np.linalg.norm(w.T @ np.asarray(p.eval_A(z)))))
    required = kappa / (kappa - 1) * consts.c1_infty * m_a
    if trial_rho <= required:
        raise RhoTooSmall(trial_rho, required)
    return ContractionData(kappa, float(trial_rho), float(R1), m_a, mode, max_ratio, samples)
