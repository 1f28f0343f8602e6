"""Exception hierarchy used across the library.

All library-specific failures derive from :class:`SchurFlowError` so callers
can catch one base class.  Precondition violations on plain arguments
(bad shapes, non-finite entries, out-of-range scalars) raise the standard
``ValueError`` / ``TypeError`` instead.
"""


class SchurFlowError(Exception):
    """Base class for all library errors."""


class FastSectorNotPD(SchurFlowError):
    """Fast-sector block is not positive definite; elimination is ill posed."""


class FastSectorUnstable(SchurFlowError):
    """Fast-sector generator has an eigenvalue with non-negative real part."""


class ZeroTensor(SchurFlowError):
    """A tensor collapsed below the zero floor and cannot be normalized."""


class DegenerateDraw(SchurFlowError):
    """A random draw remained degenerate after the allowed resample budget."""


class FlowCollapsed(SchurFlowError):
    """A flow trajectory collapsed to zero mid-run.

    The partially completed trajectory record is attached as ``record``.
    """

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


class NoValidRecords(SchurFlowError):
    """A grid cell produced no valid trajectories to aggregate."""


class ResponseNotPD(SchurFlowError):
    """A response tensor required to be positive definite is not."""


class UnstableDrift(SchurFlowError):
    """Drift matrix is not Hurwitz; no stationary state exists."""


class StepTooLarge(SchurFlowError):
    """Integration step violates the explicit-scheme stability guard."""


class SingularCovariance(SchurFlowError):
    """Sample covariance is numerically singular; inverse is unreliable."""


class ConfigInvalid(SchurFlowError):
    """A run configuration failed validation."""
