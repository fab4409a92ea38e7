"""Exception types shared across the package."""


class FacetexError(Exception):
    """Base class for every error this package raises on purpose."""


class DecodeError(FacetexError):
    """Malformed or truncated image file; the message names the byte offset."""


class UnsupportedFormatError(FacetexError):
    """Well-formed file in a variant we do not handle (bit depth, palette, ...)."""


class BoundsError(FacetexError):
    """A rectangle or index falls outside its source image."""


class ManifestError(FacetexError):
    """Dataset or ROI manifest violates its schema."""


class ParameterError(FacetexError):
    """Invalid parameter value (non-positive wavelength, even k, ...)."""


class ConfigError(FacetexError):
    """Bad configuration: unknown key, inconsistent method/bank combination."""


class DatasetError(FacetexError):
    """Dataset cannot support the requested operation (missing class, too small)."""


class ShapeError(FacetexError):
    """Array dimensions incompatible with the operation."""


class ConvergenceError(FacetexError):
    """Iterative solver failed to converge; message reports the final violation."""


class MetricUndefinedError(FacetexError):
    """A requested metric is undefined for the given inputs (empty class, ...)."""


# Used by the CLI to map exceptions onto exit codes.
INPUT_ERRORS = (
    DecodeError,
    UnsupportedFormatError,
    BoundsError,
    ManifestError,
    ParameterError,
    ConfigError,
    DatasetError,
    ShapeError,
)
RUNTIME_ERRORS = (ConvergenceError, MetricUndefinedError)
