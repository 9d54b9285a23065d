"""Exception types shared across the pipeline."""


class HypermapError(Exception):
    """Base class for all pipeline errors."""


class CubeFormatError(HypermapError):
    """An HSC file violates the cube format or a cube invariant."""


class CorruptHeaderError(CubeFormatError):
    """Bad magic, impossible dimensions, or a short/garbled header."""


class TruncatedPayloadError(CubeFormatError):
    """The sample payload is shorter (or longer) than the header declares."""


class InvalidWavelengthsError(CubeFormatError):
    """Wavelengths are not strictly increasing or do not match the band count."""


class DatabaseError(HypermapError):
    """Spectral database constraint violation."""


class DuplicateClassError(DatabaseError):
    """A class with this name already exists."""


class UnknownClassError(DatabaseError):
    """No class with this id exists."""


class ZeroSpectrumError(HypermapError):
    """A zero spectrum was used where a direction in spectral space is required."""
