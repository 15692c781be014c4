"""Exception types shared across the package."""


class JmscatterError(Exception):
    """Base class for all package-specific errors."""


class NumericalError(JmscatterError):
    """A numerical procedure failed to reach its accuracy target."""


class SeriesConvergenceError(NumericalError):
    """A series or iterative refinement did not converge within its cap."""


class PoleProximityError(NumericalError):
    """Evaluation requested too close to an eigenvalue of the truncated
    Hamiltonian, where the resolvent-type matrix is singular.

    Use a displaced energy or the curve-level routines, which evaluate a
    pole-free reformulation.
    """


class DetectionMismatchError(JmscatterError):
    """The two isolated-state detection routes disagreed.

    Raised when the shared-eigenvalue test and the vanishing-last-component
    test identify different level sets, which indicates a borderline or
    ill-conditioned spectrum rather than a genuine isolated state.
    """


class DegenerateSpectrumError(JmscatterError):
    """Candidate isolated-state levels are too close to separate reliably."""


class ConfigError(JmscatterError):
    """A run configuration file is malformed or inconsistent."""


class FitError(JmscatterError):
    """Parameter fitting failed (e.g. the minimum sits on a search bound)."""
