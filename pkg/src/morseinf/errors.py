"""Exception hierarchy shared across the package.

Every error raised deliberately by the library derives from
:class:`MorseInfinityError`, so callers can catch the whole family at once.
Each one also derives from the closest builtin (``ValueError`` for bad
input, ``RuntimeError`` for a numerical process that did not deliver).
"""

from __future__ import annotations


class MorseInfinityError(Exception):
    """Base class for all library errors."""


# -- linear algebra -----------------------------------------------------------


class NonSymmetric(MorseInfinityError, ValueError):
    """Operator entries are not symmetric (or not finite)."""


class DimensionMismatch(MorseInfinityError, ValueError):
    """A vector or matrix has the wrong length for the space."""


class GapViolation(MorseInfinityError, ValueError):
    """An eigenvalue sits in the guard band ``(zero_tol, 2 * zero_tol)``.

    Zero is then not numerically isolated in the spectrum, so the kernel is
    not well defined at the requested tolerance.
    """

    def __init__(self, eigenvalue: float, zero_tol: float):
        self.eigenvalue = float(eigenvalue)
        self.zero_tol = float(zero_tol)
        super().__init__(
            f"eigenvalue {eigenvalue:.3e} inside guard band "
            f"({zero_tol:.3e}, {2 * zero_tol:.3e})"
        )


class DegenerateComplement(MorseInfinityError, ValueError):
    """The complement of the kernel is trivial (kernel is everything)."""


# -- contraction / reduction --------------------------------------------------


class ContractionViolated(MorseInfinityError, RuntimeError):
    """A sampled Lipschitz ratio exceeded the certified contraction bound.

    Attributes:
        pair: The two points witnessing the violation.
        ratio: The observed ratio.
        bound: The bound it was checked against.
    """

    def __init__(self, pair, ratio: float, bound: float, message: str = ""):
        self.pair = pair
        self.ratio = float(ratio)
        self.bound = float(bound)
        super().__init__(
            message or f"observed ratio {ratio:.6g} exceeds bound {bound:.6g}"
        )


class RhoTooSmall(MorseInfinityError, ValueError):
    """The chosen ball radius cannot contain the fixed point."""

    def __init__(self, rho: float, required: float):
        self.rho = float(rho)
        self.required = float(required)
        super().__init__(f"rho_A={rho:.6g} must exceed {required:.6g}")


class NoConvergence(MorseInfinityError, RuntimeError):
    """An iteration exhausted its budget.

    Attributes:
        iterations: Iterations performed.
        last_residual: Residual norm at the final iterate.
    """

    def __init__(self, iterations: int, last_residual: float, what: str = "iteration"):
        self.iterations = int(iterations)
        self.last_residual = float(last_residual)
        super().__init__(
            f"{what} did not converge after {iterations} steps "
            f"(residual {last_residual:.3e})"
        )


class LeftBall(MorseInfinityError, RuntimeError):
    """The fixed-point iterates left the certified ball ``B(0, rho_A)``."""

    def __init__(self, norm: float, rho: float):
        self.norm = float(norm)
        self.rho = float(rho)
        super().__init__(f"iterate norm {norm:.6g} left ball of radius {rho:.6g}")


# -- normal form --------------------------------------------------------------


class ConcavityViolation(MorseInfinityError, RuntimeError):
    """The fiber functional is not uniformly concave on the negative space."""

    def __init__(self, curvature: float, bound: float):
        self.curvature = float(curvature)
        self.bound = float(bound)
        super().__init__(
            f"largest curvature {curvature:.6g} on negative space exceeds {bound:.6g}"
        )


class NegativeRadicand(MorseInfinityError, RuntimeError):
    """A square root in the coordinate map received a negative argument."""

    def __init__(self, value: float):
        self.value = float(value)
        super().__init__(f"negative radicand {value:.3e}")


class BracketFailure(MorseInfinityError, RuntimeError):
    """A scalar root-find could not bracket a sign change.

    Attributes:
        direction: Unit direction of the ray being searched.
        last_interval: The last interval examined, as ``(lo, hi)``.
    """

    def __init__(self, direction, last_interval, message: str = ""):
        self.direction = direction
        self.last_interval = tuple(float(t) for t in last_interval)
        super().__init__(message or f"no sign change found up to {self.last_interval}")


class MonotonicityViolation(MorseInfinityError, RuntimeError):
    """A sampled radial derivative failed the monotonicity certificate."""

    def __init__(self, t: float, value: float, bound: float):
        self.t = float(t)
        self.value = float(value)
        self.bound = float(bound)
        super().__init__(
            f"radial derivative {value:.6g} below bound {bound:.6g} at t={t:.6g}"
        )


class OutsideCertifiedRegion(MorseInfinityError, ValueError):
    """A chart was evaluated outside the region where it is certified."""


class HypothesisViolation(MorseInfinityError, ValueError):
    """A structural hypothesis needed to build an object does not hold."""


# -- boundary value problem ---------------------------------------------------


class QuadratureUnderflow(MorseInfinityError, ValueError):
    """Too few quadrature nodes for the number of modes (aliasing guard)."""


class GuardBand(MorseInfinityError, ValueError):
    """A slope lies within 1e-9 of an eigenvalue without being equal to it."""


class NotResonant(MorseInfinityError, ValueError):
    """The slope at infinity is not an eigenvalue."""


class ScenarioMismatch(MorseInfinityError, ValueError):
    """Scenario hypotheses are not met.

    Attributes:
        failed: Names of the failing hypotheses.
    """

    def __init__(self, scenario: str, failed):
        self.scenario = scenario
        self.failed = tuple(failed)
        super().__init__(f"scenario {scenario!r} hypotheses fail: {', '.join(self.failed)}")


# -- command line -------------------------------------------------------------


class ConfigParse(MorseInfinityError, ValueError):
    """Malformed or invalid configuration.

    Attributes:
        line: 1-based line number (0 when not tied to a file line).
        column: 1-based column (0 when unknown).
    """

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.message = message
        self.line = int(line)
        self.column = int(column)
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)


class IoFailure(MorseInfinityError, OSError):
    """An artifact could not be written or read."""
