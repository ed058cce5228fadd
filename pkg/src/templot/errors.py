"""Exception taxonomy.

Three families map onto the CLI exit codes: ConfigError (2), DataError and
its subclasses (3), and anything else (4, internal invariant violation).
"""


class TemplotError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(TemplotError):
    """Invalid run configuration: missing paths, contradictory switches."""


class DataError(TemplotError):
    """Malformed or inconsistent input data."""


class EmptyMask(DataError):
    """Segment mask has no foreground pixel where one is required."""


class MalformedRuns(DataError):
    """RLE run lengths do not cover width * height pixels."""


class SchemaError(DataError):
    """JSON document does not match the expected schema."""


class DimensionMismatch(DataError):
    """Shapes disagree: mask vs image, or feature vector vs stats."""


class ImageLoadError(DataError):
    """Referenced image file could not be loaded."""


class InvalidGrid(DataError):
    """Point grid parameters produce no valid grid."""


class EmptyRegion(DataError):
    """Histogram region contributes zero pixels."""


class ZeroVariance(DataError):
    """Histogram is constant across all bins; correlation undefined."""


class ZeroVector(DataError):
    """Feature vector has zero norm; cosine undefined."""


class DegenerateData(DataError):
    """Sample matrix has rank zero after centering."""


class NoSharedCluster(DataError):
    """No color cluster is shared across all sample images."""


class AllZeroMasks(DataError):
    """Every candidate cluster masks zero pixels on the sample image."""


class UnfillableMask(DataError):
    """Inpainting mask covers the whole image; no boundary to fill from."""


class PlacementFailure(DataError):
    """Scene spec too dense: non-overlap icon placement failed."""
