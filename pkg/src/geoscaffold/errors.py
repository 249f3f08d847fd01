"""Exception hierarchy shared across the package."""


class GeoscaffoldError(Exception):
    """Base class for all package-specific errors."""


# --- point-map container -----------------------------------------------------

class BadMagic(GeoscaffoldError):
    """File does not start with the GPM1 magic bytes."""


class TruncatedFile(GeoscaffoldError):
    """File ended before all declared payload bytes were read."""


class DimensionMismatch(GeoscaffoldError):
    """Array dimensions disagree with the declared width/height."""


class NonFiniteValue(GeoscaffoldError):
    """A position is non-finite or a confidence is outside [0, 1]."""


class IoFailure(GeoscaffoldError):
    """Underlying I/O operation failed."""


# --- geometry ----------------------------------------------------------------

class DegenerateInput(GeoscaffoldError):
    """Too few matches or rank-deficient normal equations."""


class BadWaypointOrder(GeoscaffoldError):
    """Waypoint frame indices are not strictly increasing from 0 to n-1."""


# --- dynamic editing ---------------------------------------------------------

class EmptySegment(GeoscaffoldError):
    """No cloud points survive box containment and depth filtering."""


class OverlappingSegments(GeoscaffoldError):
    """Two edit tracks claim the same point index."""


# --- diffusion ---------------------------------------------------------------

class ShapeMismatch(GeoscaffoldError):
    """Tensor shapes disagree with the model configuration."""


class BadDimensions(GeoscaffoldError):
    """Frame dimensions are not divisible by the codec factor."""


class NonFiniteLoss(GeoscaffoldError):
    """Training loss became NaN or infinite."""


# --- metrics -----------------------------------------------------------------

class LengthMismatch(GeoscaffoldError):
    """Trajectory samples have different lengths."""


class TooSmall(GeoscaffoldError):
    """Image smaller than the SSIM window."""
