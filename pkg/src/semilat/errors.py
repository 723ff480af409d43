"""Exception hierarchy for the semilat toolkit."""


class SemilatError(Exception):
    """Base class for all toolkit errors."""


class InputError(SemilatError):
    """Bad user input: dimension mismatch, missing seeds, unknown model."""


class RootFindError(SemilatError):
    """Newton iteration failed to converge; carries the last residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class IntegrationError(SemilatError):
    """Adaptive integrator failed (step-size underflow or step budget)."""


class NoPeriodError(SemilatError):
    """No return of the joint flow found within the search horizon."""


class HypothesisViolation(SemilatError):
    """A checkable hypothesis (H1/H2/H'3/H4) failed on the supplied system."""

    def __init__(self, hypothesis, message):
        super().__init__(f"({hypothesis}) {message}")
        self.hypothesis = hypothesis


class FrameError(SemilatError):
    """Degenerate or rank-deficient Lagrangian frame."""


class UndersamplingError(SemilatError):
    """Phase jump between consecutive frames too large; increase n_frames."""


class TruncationError(SemilatError):
    """Matrix truncation too small; retained eigenvectors touch the basis edge."""


class DegeneracyError(SemilatError):
    """Eigenvalue cluster boundary too close to the clustering tolerance."""


class SamplerStarvationError(SemilatError):
    """Monte Carlo shell acceptance rate collapsed."""


class WindowOverlapError(SemilatError):
    """Multiplicity counting cubes overlap; decrease C or h."""


class ConfigError(SemilatError):
    """Experiment configuration failed validation."""
