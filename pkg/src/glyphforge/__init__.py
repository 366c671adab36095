"""Vector-glyph corpus tooling: path model, TrueType ingest, geometry, raster and evaluation."""

from .path_model import GlyphPath, Mode, PathCommand, convert_mode, parse_path, serialize_path

__version__ = "0.1.0"

__all__ = ["GlyphPath", "Mode", "PathCommand", "convert_mode", "parse_path", "serialize_path",
           "__version__"]
