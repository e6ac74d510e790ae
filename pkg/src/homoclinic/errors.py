"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class HomoclinicError(Exception):
    """Base class for every error raised by this package."""


class NonFiniteOutput(HomoclinicError):
    pass


class AsymmetryDetected(HomoclinicError):
    pass


class ValidationFailed(HomoclinicError):
    def __init__(self, tag: str, report=None, message: str | None = None):
        self.tag = tag
        self.report = report
        super().__init__(message or f"hypothesis {tag} violated")


class SymplecticDriftExceeded(HomoclinicError):
    def __init__(self, defect: float, tol: float):
        self.defect = defect
        self.tol = tol
        super().__init__(f"symplectic defect {defect:.3e} exceeds {tol:.1e}; increase steps")


class EigenSolverFailure(HomoclinicError):
    pass


class NotHyperbolic(HomoclinicError):
    def __init__(self, side: str | None = None, margin: float | None = None):
        self.side = side
        self.margin = margin
        where = f" on side {side!r}" if side else ""
        super().__init__(f"asymptotic system not hyperbolic{where} (margin={margin})")


class FactorizationFailure(HomoclinicError):
    pass


class RankAmbiguous(HomoclinicError):
    def __init__(self, singular_values, threshold: float):
        self.singular_values = list(singular_values)
        self.threshold = threshold
        super().__init__(
            f"singular values {self.singular_values} straddle the rank threshold {threshold:.3e}; refine the grid"
        )


class NoNegativeEigenvalue(HomoclinicError):
    pass


class TailUnderflow(HomoclinicError):
    pass


class DegenerateKernel(HomoclinicError):
    pass


class ModeMismatch(HomoclinicError):
    pass


class NoConvergence(HomoclinicError):
    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"Newton failed after {iterations} iterations (residual {residual:.3e})")


class SingularJacobian(HomoclinicError):
    pass


class KernelNotSimple(HomoclinicError):
    pass


class ConfigInvalid(HomoclinicError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class IoFailure(HomoclinicError):
    def __init__(self, path, message: str = ""):
        self.path = str(path)
        super().__init__(f"cannot write {self.path}: {message}")
