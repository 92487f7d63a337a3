import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from morseinf.errors import DegenerateComplement, DimensionMismatch, GapViolation, NonSymmetric
from morseinf.hilbert import (
    format_matrix,
    operator_constants,
    parse_matrix,
    project,
    spectral_split,
    sym_operator,
)

PARTS = ("zero", "plus", "minus")


def sine_shift(a, n=6):
    j = np.arange(1, n + 1)
    return np.diag(1.0 - a / j**2)


def random_symmetric(seed, n=7, kernel=2):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    vals = np.concatenate([np.zeros(kernel), rng.uniform(0.5, 3, n - kernel) * rng.choice([-1, 1], n - kernel)])
    m = q @ np.diag(vals) @ q.T
    return (m + m.T) / 2


def test_diagonal_split():
    s = spectral_split(np.diag([2.0, -2.0, 0.0]), 1e-9)
    assert (s.nu, s.mu, s.n_plus) == (1, 1, 1)
    assert s.a_infty == 1.0
    assert np.allclose(np.abs(s.basis_zero[:, 0]), [0, 0, 1])


def test_identity_split():
    s = spectral_split(np.eye(4), 1e-9)
    assert (s.nu, s.mu, s.n_plus) == (0, 0, 4)
    assert s.a_infty == 0.5


def test_sine_shift_at_second_eigenvalue():
    s = spectral_split(sine_shift(4.0))
    assert (s.nu, s.mu) == (1, 1)


def test_guard_band_rejects_half_isolated_zero():
    with pytest.raises(GapViolation):
        spectral_split(np.diag([1.0, 1.5e-9, -1.0]), 1e-9)
    # exactly on the threshold still counts as kernel; just past the band is nonzero
    assert spectral_split(np.diag([1.0, 1e-9])).nu == 1
    assert spectral_split(np.diag([1.0, 2e-9])).nu == 0


def test_nonsymmetric_and_nonfinite():
    with pytest.raises(NonSymmetric):
        spectral_split(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        sym_operator(np.array([[np.nan, 0.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        spectral_split(np.eye(2), 0.0)


def test_project_examples():
    s = spectral_split(np.diag([2.0, -2.0, 0.0]))
    assert np.allclose(project(s, [1, 1, 1], "zero"), [0, 0, 1], atol=1e-15)
    for part in PARTS + ("nonkernel",):
        assert np.array_equal(project(s, np.zeros(3), part), np.zeros(3))
    s6 = spectral_split(sine_shift(4.0))
    e2 = np.eye(6)[1]
    assert np.linalg.norm(project(s6, e2, "nonkernel")) <= 1e-15
    with pytest.raises(DimensionMismatch):
        project(s, [1.0, 2.0], "zero")


def test_operator_constants_examples():
    c = operator_constants(np.diag([2.0, -2.0, 0.0]), spectral_split(np.diag([2.0, -2.0, 0.0])))
    assert c.c1_infty == 0.5 and abs(c.c2_infty - 1) < 1e-14
    b1 = sine_shift(1.0)
    assert abs(operator_constants(b1, spectral_split(b1)).c1_infty - 4 / 3) <= 1e-12
    b4 = sine_shift(4.0)
    assert abs(operator_constants(b4, spectral_split(b4)).c1_infty - 9 / 5) <= 1e-12
    z = np.zeros((3, 3))
    with pytest.raises(DegenerateComplement):
        operator_constants(z, spectral_split(z))


def test_exact_split_constant_bound():
    # for an exact split every nonzero |lam| >= 2 a_infty
    m = random_symmetric(3)
    s = spectral_split(m)
    c = operator_constants(m, s)
    assert c.c1_infty <= 1 / (2 * s.a_infty) + 1e-9


def test_deterministic_bases():
    m = np.diag([1.0, 1.0, 0.0, -3.0])
    a, b = spectral_split(m), spectral_split(m.copy())
    for part in PARTS:
        assert np.array_equal(a.basis(part), b.basis(part))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), v=arrays(np.float64, 7, elements=st.floats(-1e3, 1e3)))
def test_reconstruction_and_orthonormality(seed, v):
    s = spectral_split(random_symmetric(seed))
    total = sum(project(s, v, p) for p in PARTS)
    assert np.linalg.norm(total - v) <= 1e-12 * max(1.0, np.linalg.norm(v))
    basis = np.hstack([s.basis(p) for p in PARTS])
    assert basis.shape == (7, 7)
    assert np.abs(basis.T @ basis - np.eye(7)).max() <= 1e-10
    assert s.nu + s.mu + s.n_plus == 7


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_sign_certificates(seed):
    m = random_symmetric(seed)
    s = spectral_split(m)
    rng = np.random.default_rng(seed)
    for part, sign in (("plus", 1), ("minus", -1)):
        b = s.basis(part)
        if b.shape[1] == 0:
            continue
        for _ in range(100):
            v = b @ rng.standard_normal(b.shape[1])
            v /= np.linalg.norm(v)
            assert sign * (v @ m @ v) >= 2 * s.a_infty - 1e-12
    for v in s.basis_zero.T:
        assert np.linalg.norm(m @ v) <= s.zero_tol


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_c1_brute_force(seed):
    m = random_symmetric(seed)
    s = spectral_split(m)
    c = operator_constants(m, s)
    W = s.basis_complement
    restricted = W.T @ m @ W
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(50):
        y = rng.standard_normal(W.shape[1])
        best = max(best, np.linalg.norm(np.linalg.solve(restricted, y)) / np.linalg.norm(y))
    # random right-hand sides approach the norm from below; the extremal one attains it
    eig = np.linalg.eigh(restricted)
    y_star = eig.eigenvectors[:, np.argmin(np.abs(eig.eigenvalues))]
    sharp = np.linalg.norm(np.linalg.solve(restricted, y_star))
    assert best <= c.c1_infty + 1e-10
    assert abs(max(best, sharp) - c.c1_infty) <= 1e-10


def test_matrix_text_roundtrip():
    m = random_symmetric(9)
    assert np.array_equal(parse_matrix(format_matrix(m)), m)
    assert np.array_equal(parse_matrix("1 0\n\n0 -2\n"), np.diag([1.0, -2.0]))
    with pytest.raises(ValueError):
        parse_matrix("   \n")
