import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glyphforge.errors import DimensionMismatch, MissingGlyph, TooSmall
from glyphforge.fixtures import FixtureStyle, build_fixture_font
from glyphforge.path_model import GlyphPath, parse_path
from glyphforge.raster import (
    PSNR_CAP,
    RasterImage,
    image_l2,
    image_psnr,
    image_ssim,
    layout_line,
    png_available,
    rasterize,
    render_wordmark,
)
from glyphforge.truetype import ALPHANUMERICS, extract_glyph, load_font, normalize_glyph

from conftest import ORACLES

O_SHAPE = "M 0 0 L 100 0 L 100 100 L 0 100 Z M 25 25 L 25 75 L 75 75 L 75 25 Z"


def shoelace(pts):
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def convex_polygon(rng, n):
    ang = np.sort(rng.uniform(0, 2 * np.pi, n))
    pts = np.stack([np.cos(ang), np.sin(ang)], axis=1) * rng.uniform(50, 400) + rng.uniform(-300, 300, 2)
    return np.round(pts, 1)


def polygon_d(pts):
    return "M " + " L ".join(f"{x:.1f} {y:.1f}" for x, y in pts) + " Z"


def expected_ink(pts, size=192, padding=0.1):
    extent = np.max(pts.max(axis=0) - pts.min(axis=0))
    scale = size * (1 - 2 * padding) / extent
    return shoelace(pts) * scale ** 2 / size ** 2


def test_square_ink_fraction():
    img = rasterize(parse_path("M 0 0 L 500 0 L 500 500 L 0 500 Z"), 192, 0.1)
    assert abs(img.pixels.mean() - ORACLES["square_ink_fraction"]) <= 0.02 * ORACLES["square_ink_fraction"]


@given(st.integers(0, 2 ** 32 - 1), st.integers(3, 12))
@settings(max_examples=40)
def test_convex_polygon_area(seed, n):
    pts = convex_polygon(np.random.default_rng(seed), n)
    truth = expected_ink(pts)
    if truth < 0.02:  # sliver polygons have no meaningful relative error
        return
    ink = rasterize(parse_path(polygon_d(pts))).pixels.mean()
    assert abs(ink - truth) <= 0.02 * truth


def test_nonzero_hole():
    img = rasterize(parse_path(O_SHAPE), 100, 0.0).pixels
    assert img[30:70, 30:70].max() == 0.0
    assert img[5:20, 5:95].min() == 1.0
    same_dir = "M 0 0 L 100 0 L 100 100 L 0 100 Z M 25 25 L 75 25 L 75 75 L 25 75 Z"
    assert rasterize(parse_path(same_dir), 100, 0.0).pixels[30:70, 30:70].min() == 1.0


def test_y_axis_points_up():
    # a triangle wide at the bottom (small y) must be wide at the bottom of the image
    img = rasterize(parse_path("M 0 0 L 100 0 L 50 100 Z"), 64, 0.0).pixels
    assert img[-2].sum() > img[1].sum()


def test_empty_path_is_blank():
    assert rasterize(GlyphPath(())).pixels.sum() == 0
    assert rasterize(parse_path("M 0 0 L 0 0 Z")).pixels.sum() == 0


def test_pixels_in_unit_range():
    img = rasterize(parse_path("M 0 0 Q 50 120 100 0 L 60 -40 Z"))
    assert img.pixels.min() >= 0 and img.pixels.max() <= 1
    assert img.width * img.height == img.pixels.size


@pytest.fixture(scope="module")
def font_glyphs():
    font = load_font(build_fixture_font(FixtureStyle("Raster", "Regular")))
    out = {}
    for ch in ALPHANUMERICS + " ":
        out[ch] = normalize_glyph(extract_glyph(font, ch), font.units_per_em, char=ch)
    return out


def test_wordmark_spans_all_glyphs(font_glyphs):
    size, pad = 192, 0.1
    img = render_wordmark(font_glyphs, "GgAa", size, pad).pixels
    cols = np.nonzero(img.sum(axis=0))[0]
    target = size * (1 - 2 * pad)
    assert cols.max() - cols.min() + 1 >= target * 0.98
    # every glyph's advance box carries ink
    total = sum(font_glyphs[c].advance for c in "GgAa")
    pen = 0
    for c in "GgAa":
        lo = int(cols.min() + pen / total * (cols.max() - cols.min()))
        hi = int(cols.min() + (pen + font_glyphs[c].advance) / total * (cols.max() - cols.min()))
        assert img[:, lo:hi].sum() > 0, c
        pen += font_glyphs[c].advance


def test_single_char_wordmark(font_glyphs):
    a = render_wordmark(font_glyphs, "g")
    b = rasterize(font_glyphs["g"].path)
    np.testing.assert_array_equal(a.pixels, b.pixels)


def test_pangram_renders(font_glyphs):
    img = render_wordmark(font_glyphs, "The quick brown fox jumps over the lazy dog", 256)
    assert img.pixels.sum() > 0


def test_missing_glyph(font_glyphs):
    with pytest.raises(MissingGlyph):
        layout_line(font_glyphs, "A?")
    some = {c: g for c, g in font_glyphs.items() if c != " "}
    with pytest.raises(MissingGlyph):
        layout_line(some, "A A")
    assert len(layout_line(some, "A A", space_advance=2500)) == 2 * len(some["A"].path)


def test_l2_examples():
    z, o = RasterImage(np.zeros((8, 8))), RasterImage(np.ones((8, 8)))
    half = np.zeros((8, 8))
    half[:, :4] = 1
    assert image_l2(z, z) == 0 and image_l2(z, o) == 1.0
    assert image_l2(z, RasterImage(half)) == 0.5
    with pytest.raises(DimensionMismatch):
        image_l2(z, RasterImage(np.zeros((8, 9))))


def test_psnr_examples():
    z = RasterImage(np.zeros((16, 16)))
    assert image_psnr(z, z) == PSNR_CAP == 99.0
    assert image_psnr(z, RasterImage(np.full((16, 16), 0.1))) == pytest.approx(ORACLES["psnr_mse_0.01"], abs=1e-9)
    assert image_psnr(z, RasterImage(np.ones((16, 16)))) == 0.0


def test_ssim_examples():
    x = rasterize(parse_path(O_SHAPE), 64)
    assert abs(image_ssim(x, x) - 1.0) <= 1e-9
    assert image_ssim(x, RasterImage(1 - x.pixels)) < image_ssim(x, x)
    a, b = RasterImage(np.full((32, 32), 0.25)), RasterImage(np.full((32, 32), 0.75))
    assert image_ssim(a, b) == pytest.approx(ORACLES["ssim_constant_0.25_vs_0.75"], abs=1e-12)
    with pytest.raises(TooSmall):
        image_ssim(RasterImage(np.zeros((10, 10))), RasterImage(np.zeros((10, 10))))


def test_pgm_round_trip(tmp_path):
    img = rasterize(parse_path(O_SHAPE), 40)
    data = img.to_pgm()
    assert data.startswith(b"P5\n40 40\n255\n")
    back = RasterImage.from_pgm(data)
    assert np.max(np.abs(back.pixels - img.pixels)) <= 0.5 / 255 + 1e-12
    # background is white
    assert img.to_gray8()[0, 0] == 255 or img.pixels[0, 0] > 0
    assert img.save(tmp_path / "o.pgm").read_bytes() == data


@pytest.mark.skipif(not png_available(), reason="Pillow not installed")
def test_png_output(tmp_path):
    from PIL import Image
    img = rasterize(parse_path(O_SHAPE), 40)
    path = img.save(tmp_path / "o.png")
    np.testing.assert_array_equal(np.asarray(Image.open(path)), img.to_gray8())
