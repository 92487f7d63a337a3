"""Built-in model problems with closed-form derivatives.

Coordinates of the three-dimensional models are ``(z, x_plus, x_minus)``:
the first axis is the kernel of ``B_inf``, the second its positive and the
third its negative direction.

``trig``
    ``L = x+^2 - x-^2 + eps sin(z) (x+ + x-) + gamma cos(z)``, with
    ``B_inf = diag(0, 2, -2)``. The off-kernel gradient is affine in ``x``, so
    the reduction is explicit: ``h(z) = eps sin(z) (-1/2, 1/2)``, the reduced
    functional is ``gamma cos(z)`` and the fiber functional is
    ``u+^2 - u-^2``. The coupling to ``z`` does not fade far out, so the
    Hessian perturbation stays of size ``eps`` at every radius.

``trig_decay``
    The same structure with ``sin z`` and ``cos z`` divided by
    ``sqrt(1 + z^2)``, so that ``B(x) - B_inf`` decays like ``1/|z|``.
"""

from __future__ import annotations

import math

import numpy as np

from .functional import FunctionalProblem

__all__ = [
    "trig_model",
    "trig_decay_model",
    "quadratic_model",
    "coupled_quadratic_model",
    "diagonal_model",
    "scaled_norm_model",
    "perturbed_definite_model",
    "MODELS",
    "get_model",
]


def trig_model(eps: float = 0.1, gamma: float = 1.0, radius: float = 10.0) -> FunctionalProblem:
    """The three-dimensional trigonometric model (see module docstring)."""

    def L(x):
        z, p, m = x
        return p * p - m * m + eps * math.sin(z) * (p + m) + gamma * math.cos(z)

    def A(x):
        z, p, m = x
        s, c = math.sin(z), math.cos(z)
        return np.array([eps * c * (p + m) - gamma * s, 2 * p + eps * s, -2 * m + eps * s])

    def B(x):
        z, p, m = x
        s, c = math.sin(z), math.cos(z)
        return np.array(
            [
                [-eps * s * (p + m) - gamma * c, eps * c, eps * c],
                [eps * c, 2.0, 0.0],
                [eps * c, 0.0, -2.0],
            ]
        )

    return FunctionalProblem(3, L, A, B, np.diag([0.0, 2.0, -2.0]), radius, "trig")


def trig_h(z: float, eps: float = 0.1) -> np.ndarray:
    """Closed-form reduction map of :func:`trig_model` as a full vector."""
    s = math.sin(z)
    return np.array([0.0, -eps * s / 2, eps * s / 2])


def trig_decay_model(eps: float = 0.1, gamma: float = 1.0, radius: float = 10.0) -> FunctionalProblem:
    """Trig model with couplings damped by ``1/sqrt(1 + z^2)``."""

    def f(z):
        w = 1.0 / math.sqrt(1 + z * z)
        s, c = math.sin(z), math.cos(z)
        w1 = -z * w**3
        w2 = (2 * z * z - 1) * w**5
        return (
            (s * w, c * w + s * w1, -s * w + 2 * c * w1 + s * w2),
            (c * w, -s * w + c * w1, -c * w - 2 * s * w1 + c * w2),
        )

    def L(x):
        z, p, m = x
        (fs, _, _), (fc, _, _) = f(z)
        return p * p - m * m + eps * fs * (p + m) + gamma * fc

    def A(x):
        z, p, m = x
        (fs, fs1, _), (_, fc1, _) = f(z)
        return np.array([eps * fs1 * (p + m) + gamma * fc1, 2 * p + eps * fs, -2 * m + eps * fs])

    def B(x):
        z, p, m = x
        (_, fs1, fs2), (_, _, fc2) = f(z)
        return np.array(
            [
                [eps * fs2 * (p + m) + gamma * fc2, eps * fs1, eps * fs1],
                [eps * fs1, 2.0, 0.0],
                [eps * fs1, 0.0, -2.0],
            ]
        )

    return FunctionalProblem(3, L, A, B, np.diag([0.0, 2.0, -2.0]), radius, "trig_decay")


def quadratic_model(B_inf, radius: float = 1.0, name: str = "quadratic") -> FunctionalProblem:
    """``L(x) = (B_inf x, x) / 2`` with exact gradient and constant Hessian."""
    b = np.array(B_inf, dtype=float)
    dim = b.shape[0]
    return FunctionalProblem(
        dim,
        lambda x: 0.5 * float(x @ b @ x),
        lambda x: b @ x,
        lambda x: b,
        b,
        radius,
        name,
    )


def coupled_quadratic_model(c: float = 0.1, radius: float = 1.0) -> FunctionalProblem:
    """``L = x+^2 - x-^2 + c x+ x-`` declared against ``B_inf = diag(0, 2, -2)``.

    The fiber maximizer over the negative axis is ``c u+ / 2``.
    """
    b = np.array([[0.0, 0.0, 0.0], [0.0, 2.0, c], [0.0, c, -2.0]])
    return FunctionalProblem(
        3,
        lambda x: x[1] ** 2 - x[2] ** 2 + c * x[1] * x[2],
        lambda x: b @ x,
        lambda x: b,
        np.diag([0.0, 2.0, -2.0]),
        radius,
        "coupled",
    )


def diagonal_model(coeffs, radius: float = 1.0, name: str = "diagonal") -> FunctionalProblem:
    """``L = sum_i coeffs[i] x_i^2``, so ``B_inf = diag(2 * coeffs)``."""
    return quadratic_model(np.diag(2.0 * np.asarray(coeffs, dtype=float)), radius, name)


def scaled_norm_model(a: float = 2.0, dim: int = 6, radius: float = 1.0) -> FunctionalProblem:
    """``L(u) = a ||u||^2``, positive definite with ``B_inf = 2a I``."""
    return quadratic_model(2.0 * a * np.eye(dim), radius, "definite")


def perturbed_definite_model(dim: int = 6, radius: float = 10.0) -> FunctionalProblem:
    """``L(u) = ||u||^2 + sin(||u||)/||u||`` with ``B_inf = 2 I``."""

    def derivs(r):
        s, c = math.sin(r), math.cos(r)
        f = s / r
        f1 = c / r - s / r**2
        f2 = -s / r - 2 * c / r**2 + 2 * s / r**3
        return f, f1, f2

    def L(u):
        r = float(np.linalg.norm(u))
        return r * r + derivs(r)[0]

    def A(u):
        r = float(np.linalg.norm(u))
        return 2 * u + derivs(r)[1] * u / r

    def B(u):
        r = float(np.linalg.norm(u))
        _, f1, f2 = derivs(r)
        e = u / r
        outer = np.outer(e, e)
        return 2 * np.eye(dim) + f2 * outer + (f1 / r) * (np.eye(dim) - outer)

    return FunctionalProblem(dim, L, A, B, 2.0 * np.eye(dim), radius, "perturbed_definite")


MODELS = {
    "trig": trig_model,
    "trig_decay": trig_decay_model,
    "quadratic": lambda: quadratic_model(np.diag([2.0, -2.0, 0.0])),
    "coupled": coupled_quadratic_model,
    "diagonal": lambda: diagonal_model([0.0, 4.0, -1.0], name="diagonal"),
    "definite": scaled_norm_model,
    "indefinite": lambda: diagonal_model([1.0, 1.0, -1.5], name="indefinite"),
    "perturbed_definite": perturbed_definite_model,
}


def get_model(name: str) -> FunctionalProblem:
    """Instantiate a built-in model by key (see :data:`MODELS`)."""
    try:
        return MODELS[name]()
    except KeyError:
        raise KeyError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None
