"""Exception types shared across the toolkit."""


class RelaudioError(Exception):
    """Base class for all toolkit errors."""


class InputTooShortError(RelaudioError, ValueError):
    """Input has fewer time steps than an operation requires."""


class ShapeError(RelaudioError, ValueError):
    """Array dimensions do not match the declared layer sizes."""


class TrainingDivergedError(RelaudioError, RuntimeError):
    """Loss or gradients became non-finite during training."""


class FileFormatError(RelaudioError, ValueError):
    """A binary artifact file could not be decoded."""


class VersionError(FileFormatError):
    """A file was written by an unsupported format version."""


class CorruptFileError(FileFormatError):
    """A file failed its checksum or was truncated."""


class ManifestError(RelaudioError, ValueError):
    """A dataset manifest is malformed."""


class DuplicateClipError(ManifestError):
    """The same clip path appears more than once in a manifest."""


class EmptyManifestError(ManifestError):
    """A manifest contains no records."""
