"""Exception hierarchy shared across the toolkit.

Two broad failure classes matter to callers (and to the CLI exit codes):
data problems (bad files, mismatched dimensions, missing landmarks) and
numerical problems (degenerate geometry, rank collapse).
"""


class AssmError(Exception):
    """Base class for all toolkit errors."""


class DataError(AssmError):
    """Invalid or inconsistent input data (CLI exit code 2)."""


class DimensionError(DataError):
    """Vector/matrix dimensions do not match the expected model shape."""


class TopologyError(DataError):
    """Meshes or landmarks refer to different topologies."""


class MissingLandmarkError(DataError):
    """A recipe references a landmark name that was not supplied."""


class InsufficientDataError(DataError):
    """Not enough samples to perform the requested operation."""


class NumericalError(AssmError):
    """Numerical failure such as rank loss or degenerate geometry (exit code 3)."""


class DegenerateGeometryError(NumericalError):
    """Input points do not determine the fitted primitive (coplanar, collinear...)."""


class RankError(NumericalError):
    """A matrix that must be full rank is numerically rank deficient."""
