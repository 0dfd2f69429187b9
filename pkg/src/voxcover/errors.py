"""Exception types shared across the toolkit."""


class VoxcoverError(Exception):
    """Base class for all toolkit errors."""


class InputError(VoxcoverError):
    """Rejected input: non-finite values, bad shapes, violated preconditions."""


class SchemaError(VoxcoverError):
    """A file or record does not match its declared schema."""


class EmptySceneError(VoxcoverError):
    """No valid points remain after filtering."""


class DegenerateSceneError(VoxcoverError):
    """Scene bounds collapse to a single point; no voxel size exists."""


class OutOfBoundsError(VoxcoverError):
    """A point lies outside the scene bounds beyond tolerance."""


class EmptyInstanceError(VoxcoverError):
    """A coverage instance with no frame sets."""


class InstanceTooLargeError(VoxcoverError):
    """Exhaustive enumeration would exceed the combinatorial guard."""


class InvalidGroupError(VoxcoverError):
    """Group advantage computation needs at least two rewards."""


class InvalidRecordError(VoxcoverError):
    """A reward record with no candidates."""


class DegenerateRoomError(VoxcoverError):
    """Too few floor points to estimate a room area."""


class DegenerateGeometryError(VoxcoverError):
    """Coincident points make a direction angle undefined."""


class ManifestMismatchError(VoxcoverError):
    """Prediction ids do not line up with ground-truth ids."""

    def __init__(self, message, missing=(), unknown=(), duplicates=()):
        super().__init__(message)
        self.missing = sorted(missing)
        self.unknown = sorted(unknown)
        self.duplicates = sorted(duplicates)
