"""Finite-dimensional Hilbert space tools.

The space is R^n with the plain dot product. A symmetric operator is split
into its kernel, positive and negative spectral subspaces; the bases are
returned as column matrices so that ``basis.T @ v`` gives coordinates and
``basis @ c`` maps coordinates back.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateComplement, DimensionMismatch, GapViolation, NonSymmetric

__all__ = [
    "SpectralSplit",
    "OperatorConstants",
    "sym_operator",
    "spectral_split",
    "project",
    "operator_constants",
    "format_matrix",
    "parse_matrix",
]

PARTS = ("zero", "plus", "minus", "nonkernel")


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def sym_operator(entries, rtol: float = 1e-12) -> np.ndarray:
    """Validate a dense symmetric matrix and return a read-only copy.

    Args:
        entries: Square array-like.
        rtol: Symmetry tolerance, relative to the largest entry.

    Raises:
        NonSymmetric: If entries are non-finite or asymmetric.
        DimensionMismatch: If the array is not square.
    """
    m = np.asarray(entries, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionMismatch(f"operator must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonSymmetric("operator has non-finite entries")
    scale = max(float(np.max(np.abs(m))), 1.0)
    if np.max(np.abs(m - m.T)) > rtol * scale:
        raise NonSymmetric(f"asymmetry {np.max(np.abs(m - m.T)):.3e} exceeds tolerance")
    return _frozen(m)


@dataclass(frozen=True)
class SpectralSplit:
    """Orthogonal splitting ``H = H0 + H+ + H-`` of a symmetric operator.

    Attributes:
        basis_zero: ``(dim, nu)`` orthonormal columns spanning the kernel.
        basis_plus: Columns spanning the positive spectral subspace.
        basis_minus: ``(dim, mu)`` columns spanning the negative subspace.
        eig_plus: Eigenvalues belonging to ``basis_plus`` (ascending).
        eig_minus: Eigenvalues belonging to ``basis_minus`` (ascending).
        a_infty: Half the smallest nonzero eigenvalue modulus.
        zero_tol: Threshold below which an eigenvalue counts as zero.
    """

    basis_zero: np.ndarray
    basis_plus: np.ndarray
    basis_minus: np.ndarray
    eig_plus: np.ndarray
    eig_minus: np.ndarray
    a_infty: float
    zero_tol: float

    @property
    def dim(self) -> int:
        return self.basis_zero.shape[0]

    @property
    def nu(self) -> int:
        return self.basis_zero.shape[1]

    @property
    def mu(self) -> int:
        return self.basis_minus.shape[1]

    @property
    def n_plus(self) -> int:
        return self.basis_plus.shape[1]

    @property
    def basis_complement(self) -> np.ndarray:
        """Columns ``[basis_plus | basis_minus]`` spanning the complement."""
        return np.hstack([self.basis_plus, self.basis_minus])

    @property
    def eig_complement(self) -> np.ndarray:
        return np.concatenate([self.eig_plus, self.eig_minus])

    def basis(self, part: str) -> np.ndarray:
        """Column basis for ``part`` in ``zero``, ``plus``, ``minus``, ``nonkernel``."""
        if part == "zero":
            return self.basis_zero
        if part == "plus":
            return self.basis_plus
        if part == "minus":
            return self.basis_minus
        if part == "nonkernel":
            return self.basis_complement
        raise ValueError(f"unknown part {part!r}, expected one of {PARTS}")


@dataclass(frozen=True)
class OperatorConstants:
    """Norm of the inverse on the complement, and of the complement projector."""

    c1_infty: float
    c2_infty: float


def _canonical_cluster(vecs: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of ``span(vecs)``.

    Coordinate vectors are projected onto the span in ascending index order
    and kept greedily (pivoted Gram-Schmidt). For a single vector this only
    fixes the sign so that its first significant component is positive.
    """
    dim, k = vecs.shape
    if k == 1:
        v = vecs[:, 0].copy()
        idx = np.flatnonzero(np.abs(v) > 1e-8 * np.max(np.abs(v)))[0]
        return (v if v[idx] > 0 else -v)[:, None]
    proj = vecs @ vecs.T
    out = []
    for i in range(dim):
        w = proj[:, i].copy()
        for u in out:
            w -= (u @ w) * u
        n = np.linalg.norm(w)
        if n > 1e-6:
            w /= n
            for u in out:  # second pass keeps orthogonality tight
                w -= (u @ w) * u
            out.append(w / np.linalg.norm(w))
        if len(out) == k:
            break
    return np.column_stack(out)


def _eigensystem(m: np.ndarray):
    vals, vecs = np.linalg.eigh(m)
    scale = max(1.0, float(np.max(np.abs(vals))))
    out = np.empty_like(vecs)
    start = 0
    n = len(vals)
    while start < n:
        stop = start + 1
        while stop < n and vals[stop] - vals[stop - 1] <= 1e-10 * scale:
            stop += 1
        out[:, start:stop] = _canonical_cluster(vecs[:, start:stop])
        start = stop
    return vals, out


def spectral_split(B_inf, zero_tol: float = 1e-9) -> SpectralSplit:
    """Split the space along the spectrum of ``B_inf``.

    Eigenvalues with ``|lam| <= zero_tol`` form the kernel. Any eigenvalue with
    modulus in the guard band ``(zero_tol, 2 * zero_tol)`` is rejected, since
    zero would not be numerically isolated.

    Args:
        B_inf: Symmetric matrix.
        zero_tol: Kernel threshold, positive.

    Returns:
        The split, with bases ordered by ascending eigenvalue.

    Raises:
        NonSymmetric: If ``B_inf`` is not symmetric.
        GapViolation: If an eigenvalue lands in the guard band.
    """
    if not zero_tol > 0:
        raise ValueError("zero_tol must be positive")
    m = sym_operator(B_inf)
    vals, vecs = _eigensystem(m)
    mod = np.abs(vals)
    band = (mod > zero_tol) & (mod < 2 * zero_tol)
    if np.any(band):
        raise GapViolation(vals[band][0], zero_tol)
    zero = mod <= zero_tol
    plus = vals > zero_tol
    minus = vals < -zero_tol
    nonzero = mod[~zero]
    a_infty = float(np.min(nonzero) / 2) if nonzero.size else float("inf")
    return SpectralSplit(
        basis_zero=_frozen(vecs[:, zero]),
        basis_plus=_frozen(vecs[:, plus]),
        basis_minus=_frozen(vecs[:, minus]),
        eig_plus=_frozen(vals[plus]),
        eig_minus=_frozen(vals[minus]),
        a_infty=a_infty,
        zero_tol=float(zero_tol),
    )


def project(split: SpectralSplit, v, part: str) -> np.ndarray:
    """Orthogonal projection of ``v`` onto one of the spectral subspaces.

    Args:
        split: The splitting.
        v: Vector of length ``split.dim``.
        part: ``"zero"``, ``"plus"``, ``"minus"`` or ``"nonkernel"``.

    Raises:
        DimensionMismatch: If ``v`` has the wrong length.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (split.dim,):
        raise DimensionMismatch(f"expected vector of length {split.dim}, got {v.shape}")
    b = split.basis(part)
    return b @ (b.T @ v)


def operator_constants(B_inf, split: SpectralSplit) -> OperatorConstants:
    """Constants of the reduction: ``||(B_inf|complement)^-1||`` and ``||I - P0||``.

    Raises:
        DegenerateComplement: When the kernel is the whole space.
    """
    sym_operator(B_inf)
    if split.nu == split.dim:
        raise DegenerateComplement("kernel is the whole space")
    c1 = float(np.max(1.0 / np.abs(split.eig_complement)))
    # I - P0 is an orthogonal projector onto a nontrivial subspace: its norm is 1.
    comp = split.basis_complement
    c2 = float(np.linalg.norm(comp @ comp.T, 2))
    return OperatorConstants(c1_infty=c1, c2_infty=c2)


def format_matrix(m) -> str:
    """Plain-text matrix block: one row per line, 17 significant digits."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    return "\n".join(" ".join(f"{x:.17g}" for x in row) for row in m)


def parse_matrix(text: str) -> np.ndarray:
    """Inverse of :func:`format_matrix`; blank lines are ignored."""
    rows = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not rows:
        raise ValueError("empty matrix block")
    m = np.loadtxt(io.StringIO("\n".join(rows)), ndmin=2)
    return m
