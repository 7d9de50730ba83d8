"""Exception hierarchy. Each error carries the context needed to act on it."""
from __future__ import annotations


class SturmError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(SturmError, ValueError):
    pass


class EvaluationError(SturmError):
    """A nonlinearity returned NaN or infinity."""


class EmptyDomainError(SturmError):
    """No sampled point satisfies the validity predicate."""


class TrajectoryEscapeError(SturmError):
    def __init__(self, a: float, x_escape: float):
        super().__init__(f"shooting trajectory from a={a!r} escaped at x={x_escape:.6g}")
        self.a = a
        self.x_escape = x_escape


class StiffnessError(SturmError):
    def __init__(self, a: float, x_stop: float):
        super().__init__(f"step size underflow for a={a!r} at x={x_stop:.6g}")
        self.a = a
        self.x_stop = x_stop


class NonHyperbolicError(SturmError):
    def __init__(self, a: float, margin: float, threshold: float):
        super().__init__(
            f"equilibrium at a={a!r} is not hyperbolic: |p_a(pi)|={margin:.3e} <= {threshold:.1e}"
        )
        self.a = a
        self.margin = margin


class ResolutionError(SturmError):
    """Two roots (or two terminal values) are closer than the separation tolerance."""


class IntegrationCorruptionError(SturmError):
    """Winding angle below -pi/2: the integrated tangent is not trustworthy."""


class IndeterminateAngleError(SturmError):
    """Winding angle sits on a multiple of pi within the guard band."""


class ProfilesTooCloseError(SturmError):
    """Difference of two profiles vanishes on too much of the grid."""


class MethodDisagreementError(SturmError):
    def __init__(self, j: int, k: int, shooting: int, profiles: int):
        super().__init__(
            f"zero number z(e{j}-e{k}): shooting formula gives {shooting}, "
            f"profile count gives {profiles}"
        )
        self.pair = (j, k)
        self.shooting = shooting
        self.profiles = profiles


class MorseDisagreementError(SturmError):
    def __init__(self, j: int, angle: int, spectral: int):
        super().__init__(
            f"Morse index of e{j}: angle formula gives {angle}, spectral count gives {spectral}"
        )
        self.j = j
        self.angle = angle
        self.spectral = spectral


class InconsistencyError(SturmError):
    """Direct adjacency edges differ from the cascade closure of Hasse edges."""

    def __init__(self, message: str, only_direct, only_cascade, context: dict):
        super().__init__(message)
        self.only_direct = sorted(only_direct)
        self.only_cascade = sorted(only_cascade)
        self.context = context


class DomainViolationError(SturmError):
    def __init__(self, t: float, index: int, x: float):
        super().__init__(
            f"state left the validity domain of the evolution equation at t={t:.6g}, "
            f"grid index {index} (x={x:.6g})"
        )
        self.t = t
        self.index = index
        self.x = x


class BlowUpError(SturmError):
    def __init__(self, t: float, index: int):
        super().__init__(f"non-finite state at t={t:.6g}, grid index {index}")
        self.t = t
        self.index = index


class UnresolvedProbeError(SturmError):
    def __init__(self, message: str, nearest: int, distance: float):
        super().__init__(message)
        self.nearest = nearest
        self.distance = distance


class ConfigError(SturmError, ValueError):
    pass
