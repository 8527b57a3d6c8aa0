"""Exception and warning types shared across the package."""


class NotFittedError(ValueError, AttributeError):
    """Estimator used before ``fit`` was called."""


class EmptyDiagramError(ValueError):
    """Every prediction was filtered out before binning."""


class DegenerateBoundsWarning(RuntimeWarning):
    """Linear rescaling context has zero width; output pinned to 0.5."""
