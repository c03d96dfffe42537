"""
Exception hierarchy shared by the solver, the CLI and the service.

Configuration problems map to CLI exit code 2 / HTTP 400, numerical
failures to exit code 1 / HTTP 422.
"""

from typing import Optional


class FsiError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(FsiError, ValueError):
    """Invalid case description, boundary kind, stencil term or bracket."""


class NumericalFailure(FsiError):
    """A run or solve that could not produce a trustworthy result."""


class BlowUpError(NumericalFailure):
    """Velocity exceeded the detector threshold or became non-finite."""

    def __init__(self, step: int, t: float, max_speed: float, threshold: float):
        self.step = step
        self.t = t
        self.max_speed = max_speed
        self.threshold = threshold
        super().__init__(
            f"blow-up at step {step} (t={t:.6g}): max|u|={max_speed:.6g} "
            f"exceeds {threshold:.6g}"
        )


class SolverError(NumericalFailure):
    """Krylov iteration broke down or hit its iteration cap."""

    def __init__(self, method: str, iterations: int, residual: float, info: Optional[int] = None):
        self.method = method
        self.iterations = iterations
        self.residual = residual
        self.info = info
        super().__init__(
            f"{method} did not converge after {iterations} iterations "
            f"(relative residual {residual:.3e}, info={info})"
        )


class DegenerateDeformationError(NumericalFailure):
    """Near-singular deformation gradient inside the interface band."""

    def __init__(self, count: int):
        self.count = count
        super().__init__(f"{count} degenerate deformation cells inside the interface band")


class ContourError(NumericalFailure):
    """The zero isoline is open or split into several components."""

    def __init__(self, components: int, closed: bool = True):
        self.components = components
        self.closed = closed
        state = "closed" if closed else "open"
        super().__init__(f"expected one closed contour, found {components} ({state})")
