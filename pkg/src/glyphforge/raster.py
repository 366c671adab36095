"""Glyph rasterization and image-similarity metrics."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from . import kernels
from .errors import DimensionMismatch, MissingGlyph, TooSmall
from .geometry import flatten
from .path_model import GlyphPath, Mode, convert_mode
from .truetype import NormalizedGlyph

DEFAULT_SIZE = 192
DEFAULT_PADDING = 0.1
SUPERSAMPLE = 4
PSNR_CAP = 99.0


@dataclass(frozen=True)
class RasterImage:
    """Coverage grid, row-major, 1.0 = fully inked."""
    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2:
            raise ValueError("pixels must be a 2-D array")
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def blank(cls, size: int) -> "RasterImage":
        return cls(np.zeros((size, size)))

    def to_gray8(self) -> np.ndarray:
        # dark ink on a white background
        return np.round(255.0 * (1.0 - np.clip(self.pixels, 0.0, 1.0))).astype(np.uint8)

    def to_pgm(self) -> bytes:
        return f"P5\n{self.width} {self.height}\n255\n".encode("ascii") + self.to_gray8().tobytes()

    def to_png(self) -> bytes:
        from PIL import Image
        buf = io.BytesIO()
        Image.fromarray(self.to_gray8(), mode="L").save(buf, format="PNG")
        return buf.getvalue()

    @classmethod
    def from_pgm(cls, data: bytes) -> "RasterImage":
        parts = data.split(maxsplit=4)
        if parts[0] != b"P5" or int(parts[3]) != 255:
            raise ValueError("only 8-bit binary PGM is supported")
        w, h = int(parts[1]), int(parts[2])
        gray = np.frombuffer(parts[4][: w * h], dtype=np.uint8).reshape(h, w)
        return cls(1.0 - gray / 255.0)

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        data = self.to_png() if path.suffix.lower() == ".png" else self.to_pgm()
        path.write_bytes(data)
        return path


def png_available() -> bool:
    try:
        import PIL  # noqa: F401
    except ImportError:
        return False
    return True


def _bbox(polys: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    pts = np.concatenate(polys)
    return pts.min(axis=0), pts.max(axis=0)


def _fill(polys: list[np.ndarray], size: int, center, scale: float) -> RasterImage:
    ss = SUPERSAMPLE
    n = size * ss
    edges = []
    for poly in polys:
        # canonical y-up -> image y-down, in supersample units
        x = ((poly[:, 0] - center[0]) * scale + size / 2.0) * ss
        y = (size / 2.0 - (poly[:, 1] - center[1]) * scale) * ss
        xy = np.stack([x, y], axis=1)
        edges.append(np.concatenate([xy, np.roll(xy, -1, axis=0)], axis=1))
    acc = kernels.crossings(np.concatenate(edges), n, n)
    inside = np.cumsum(acc, axis=1)[:, :n] != 0
    cov = inside.reshape(size, ss, size, ss).mean(axis=(1, 3))
    return RasterImage(cov)


def _fit(ctrl_extent: float, size: int, padding: float,
         flatten_at) -> RasterImage:
    if ctrl_extent == 0:
        return RasterImage.blank(size)
    target = size * (1.0 - 2.0 * padding)
    # a quarter of a supersample, measured in path units
    polys = flatten_at(max(ctrl_extent / target, 1e-9) / (4.0 * SUPERSAMPLE))
    if not polys:
        return RasterImage.blank(size)
    lo, hi = _bbox(polys)
    extent = float(np.max(hi - lo))
    if extent == 0:
        return RasterImage.blank(size)
    return _fill(polys, size, (lo + hi) / 2.0, target / extent)


def _check_canvas(size: int, padding: float) -> None:
    if size < 8:
        raise ValueError("size must be >= 8")
    if not 0 <= padding < 0.5:
        raise ValueError("padding must be in [0, 0.5)")


def _ctrl_extent(points: list[tuple[float, float]]) -> float:
    if not points:
        return 0.0
    pts = np.asarray(points, dtype=np.float64)
    return float(np.max(pts.max(axis=0) - pts.min(axis=0)))


def rasterize(p: GlyphPath, size: int = DEFAULT_SIZE, padding: float = DEFAULT_PADDING) -> RasterImage:
    """Center the glyph bbox and scale its longer side to size*(1-2*padding) px.

    Filling uses the nonzero winding rule with 4x4 supersampling.
    """
    _check_canvas(size, padding)
    if p.is_empty:
        return RasterImage.blank(size)
    ctrl = [(x / 10.0, y / 10.0) for x, y in p.absolute_points()]
    return _fit(_ctrl_extent(ctrl), size, padding, lambda tol: flatten(p, tol))


def _glyph_table(glyphs) -> dict[str, NormalizedGlyph]:
    return dict(glyphs) if isinstance(glyphs, Mapping) else {g.char: g for g in glyphs}


def _pen_positions(table: Mapping[str, NormalizedGlyph], text: str,
                   space_advance: int | None) -> list[tuple[NormalizedGlyph, int]]:
    placed = []
    pen = 0
    for ch in text:
        g = table.get(ch)
        if g is None:
            if ch.isspace() and space_advance is not None:
                pen += space_advance
                continue
            raise MissingGlyph(ch)
        placed.append((g, pen))
        pen += g.advance
    return placed


def layout_line(glyphs: Mapping[str, NormalizedGlyph] | Iterable[NormalizedGlyph], text: str,
                space_advance: int | None = None) -> GlyphPath:
    """Set ``text`` on a shared baseline as one path, advancing by each glyph's width.

    The result must fit the path coordinate range; long lines should go
    through ``render_wordmark``, which lays out in floating point.
    """
    commands = []
    for g, pen in _pen_positions(_glyph_table(glyphs), text, space_advance):
        if not g.path.is_empty:
            commands.extend(convert_mode(g.path, Mode.ABSOLUTE).translated(pen, 0).commands)
    return GlyphPath(tuple(commands))


def render_wordmark(glyphs, text: str, size: int = DEFAULT_SIZE, padding: float = DEFAULT_PADDING,
                    space_advance: int | None = None) -> RasterImage:
    _check_canvas(size, padding)
    placed = [(g, pen / 10.0) for g, pen in _pen_positions(_glyph_table(glyphs), text, space_advance)
              if not g.path.is_empty]
    ctrl = [(x / 10.0 + pen, y / 10.0) for g, pen in placed for x, y in g.path.absolute_points()]

    def flatten_all(tol):
        return [poly + (pen, 0.0) for g, pen in placed for poly in flatten(g.path, tol)]

    return _fit(_ctrl_extent(ctrl), size, padding, flatten_all)


# --- metrics --------------------------------------------------------------------

def _pair(a: RasterImage, b: RasterImage) -> tuple[np.ndarray, np.ndarray]:
    pa = a.pixels if isinstance(a, RasterImage) else np.asarray(a, dtype=np.float64)
    pb = b.pixels if isinstance(b, RasterImage) else np.asarray(b, dtype=np.float64)
    if pa.shape != pb.shape:
        raise DimensionMismatch(f"{pa.shape} vs {pb.shape}")
    return pa, pb


def image_l2(a: RasterImage, b: RasterImage) -> float:
    pa, pb = _pair(a, b)
    return float(np.mean((pa - pb) ** 2))


def image_psnr(a: RasterImage, b: RasterImage) -> float:
    mse = image_l2(a, b)
    if mse == 0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(1.0 / mse))


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(x ** 2) / (2 * sigma ** 2))
    return g / g.sum()


def _filter_valid(img: np.ndarray, g: np.ndarray) -> np.ndarray:
    k = len(g)
    rows = np.lib.stride_tricks.sliding_window_view(img, k, axis=1) @ g
    return np.lib.stride_tricks.sliding_window_view(rows, k, axis=0) @ g


def image_ssim(a: RasterImage, b: RasterImage, window: int = 11, sigma: float = 1.5,
               k1: float = 0.01, k2: float = 0.03) -> float:
    """Mean SSIM over all fully-contained Gaussian windows (data range 1)."""
    pa, pb = _pair(a, b)
    if min(pa.shape) < window:
        raise TooSmall(f"image {pa.shape} smaller than the {window}x{window} window")
    c1, c2 = k1 ** 2, k2 ** 2
    g = gaussian_window(window, sigma)
    mu_a = _filter_valid(pa, g)
    mu_b = _filter_valid(pb, g)
    var_a = _filter_valid(pa * pa, g) - mu_a * mu_a
    var_b = _filter_valid(pb * pb, g) - mu_b * mu_b
    cov = _filter_valid(pa * pb, g) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))
