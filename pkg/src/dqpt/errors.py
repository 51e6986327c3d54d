"""Exception hierarchy for dqpt.

Every numerical failure mode raises a dedicated subclass of DqptError so
callers (and the CLI) can distinguish "your input is outside the model's
domain" from "the solver degenerated".
"""


class DqptError(Exception):
    """Base class for all dqpt errors."""


class NonHermitianInput(DqptError):
    """Quadratic-coefficient matrix is not Hermitian / pairing matrix not symmetric."""


class UnstableDrift(DqptError):
    """Drift matrix is not strictly stable (some eigenvalue of -W has Re >= 0)."""


class SolveFailure(DqptError):
    """A linear or Lyapunov solve produced an unacceptable residual."""


class ToleranceFailure(DqptError):
    """An adaptive integrator or finite-difference check failed its tolerance."""


class NonPhysical(DqptError):
    """Covariance matrix violates the uncertainty bound (some nu < 1/2)."""


class SingularState(DqptError):
    """State is pure (nu ~ 1/2) in some direction; exponent form undefined."""


class SingularReference(DqptError):
    """Reference state of a relative entropy is singular in some direction."""


class DefectiveMatrix(DqptError):
    """Matrix is not diagonalizable to working precision."""


class DegenerateOverlap(DqptError):
    """Relaxation-time denominator vanishes relative to the numerator scale."""


class DegenerateSoftMode(DqptError):
    """Two distinct eigenvalue branches tie for the spectral gap."""


class NoCrossing(DqptError):
    """Freeze-out condition is not met inside the protocol window."""


class RankDeficient(DqptError):
    """Density matrix has eigenvalues below the flooring threshold."""


class NonConvergentF(DqptError):
    """Dissipative-channel integral does not converge (drift not Hurwitz)."""


class MultipleSteadyStates(DqptError):
    """Liouvillian kernel is more than one-dimensional."""


class CutoffTooSmall(DqptError):
    """Truncated Fock space leaks population into its top levels."""


class NonHermitianH(DqptError):
    """Hamiltonian matrix is not Hermitian."""


class InsufficientPoints(DqptError):
    """Too few data points inside the fit window."""


class NonPositiveData(DqptError):
    """Log-log fit requires strictly positive data."""


class NoOverlap(DqptError):
    """Rescaled finite-size curves share no common abscissa range."""


class ConfigError(DqptError):
    """Experiment configuration failed to parse or validate."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"config field '{field}': {message}")
