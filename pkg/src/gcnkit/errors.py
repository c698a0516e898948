"""Exception types shared across the package."""


class GcnkitError(Exception):
    """Base class for all package errors."""


class ShapeError(GcnkitError):
    """Operands have incompatible dimensions."""


class ValidationError(GcnkitError):
    """An input violates a documented invariant."""


class DatasetError(GcnkitError):
    """A dataset directory is missing, malformed, or inconsistent."""


class TrainingDiverged(GcnkitError):
    """Training produced a non-finite loss.

    Carries the epoch and the loss components at the point of failure so the
    run can be diagnosed without re-running.
    """

    def __init__(self, epoch, components):
        self.epoch = epoch
        self.components = components
        super().__init__(
            f"non-finite loss at epoch {epoch}: "
            + ", ".join(f"{k}={v!r}" for k, v in components.items())
        )
