"""Exception hierarchy shared across glyphforge modules."""


class GlyphforgeError(Exception):
    """Base class for every error raised by this package."""


# path dialect

class PathError(GlyphforgeError, ValueError):
    """Raised when a path string or command sequence is not acceptable."""


class UnsupportedCommand(PathError):
    pass


class MalformedNumber(PathError):
    pass


class ArityMismatch(PathError):
    pass


class EmptyPath(PathError):
    pass


class CoordOutOfRange(PathError):
    pass


# font ingestion

class FontError(GlyphforgeError):
    pass


class NotTrueType(FontError):
    pass


class MalformedTable(FontError):
    pass


class UnsupportedComposite(FontError):
    pass


class CharNotMapped(FontError, KeyError):
    pass


# geometry / raster

class EmptyOutline(GlyphforgeError, ValueError):
    pass


class EmptyCloud(GlyphforgeError, ValueError):
    pass


class DimensionMismatch(GlyphforgeError, ValueError):
    pass


class TooSmall(GlyphforgeError, ValueError):
    pass


class MissingGlyph(GlyphforgeError, KeyError):
    pass


# corpus / prompts

class ExternalCountMissing(GlyphforgeError, KeyError):
    pass


class NoTags(GlyphforgeError, ValueError):
    pass


class RefCountOutOfRange(GlyphforgeError, ValueError):
    pass


class RecognizerUnavailable(GlyphforgeError):
    pass


# evaluation

class GroundTruthUnrecognizable(GlyphforgeError):
    pass


class DimMismatch(GlyphforgeError, ValueError):
    pass


class TooFewSamples(GlyphforgeError, ValueError):
    pass


class NumericalFailure(GlyphforgeError, ArithmeticError):
    pass


class KeyMismatch(GlyphforgeError, KeyError):
    pass


class ConfigError(GlyphforgeError, ValueError):
    pass
