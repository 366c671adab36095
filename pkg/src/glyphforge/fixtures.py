"""Deterministic synthetic font corpus built from a 5-column bitmap alphabet.

Styles vary the outline construction so the corpus exercises straight
contours, quadratic corners, all-off-curve contours, translation-only
composites and very long outlines.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .fontbuild import Component, GlyphSpec, build_font
from .truetype import ALPHANUMERICS

# rows top to bottom; the first 7 sit on/above the baseline, any extra rows descend
BITMAPS: dict[str, tuple[str, ...]] = {
    "0": (".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."),
    "1": ("..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."),
    "2": (".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"),
    "3": ("#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."),
    "4": ("...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."),
    "5": ("#####", "#....", "####.", "....#", "....#", "#...#", ".###."),
    "6": ("..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."),
    "7": ("#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."),
    "8": (".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."),
    "9": (".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."),
    "A": (".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),
    "B": ("####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."),
    "C": (".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."),
    "D": ("###..", "#..#.", "#...#", "#...#", "#...#", "#..#.", "###.."),
    "E": ("#####", "#....", "#....", "####.", "#....", "#....", "#####"),
    "F": ("#####", "#....", "#....", "####.", "#....", "#....", "#...."),
    "G": (".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####"),
    "H": ("#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),
    "I": (".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."),
    "J": ("..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."),
    "K": ("#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"),
    "L": ("#....", "#....", "#....", "#....", "#....", "#....", "#####"),
    "M": ("#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"),
    "N": ("#...#", "#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#"),
    "O": (".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."),
    "P": ("####.", "#...#", "#...#", "####.", "#....", "#....", "#...."),
    "Q": (".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"),
    "R": ("####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"),
    "S": (".####", "#....", "#....", ".###.", "....#", "....#", "####."),
    "T": ("#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."),
    "U": ("#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."),
    "V": ("#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."),
    "W": ("#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#."),
    "X": ("#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"),
    "Y": ("#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."),
    "Z": ("#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"),
    "a": (".....", ".....", ".###.", "....#", ".####", "#...#", ".####"),
    "b": ("#....", "#....", "#.##.", "##..#", "#...#", "#...#", "####."),
    "c": (".....", ".....", ".###.", "#....", "#....", "#...#", ".###."),
    "d": ("....#", "....#", ".##.#", "#..##", "#...#", "#...#", ".####"),
    "e": (".....", ".....", ".###.", "#...#", "#####", "#....", ".###."),
    "f": ("..##.", ".#..#", ".#...", "###..", ".#...", ".#...", ".#..."),
    "g": (".....", ".....", ".####", "#...#", "#...#", "#...#", ".####", "....#", ".###."),
    "h": ("#....", "#....", "#.##.", "##..#", "#...#", "#...#", "#...#"),
    "i": ("..#..", ".....", ".##..", "..#..", "..#..", "..#..", ".###."),
    "j": ("...#.", ".....", "..##.", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."),
    "k": ("#....", "#....", "#..#.", "#.#..", "##...", "#.#..", "#..#."),
    "l": (".##..", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."),
    "m": (".....", ".....", "##.#.", "#.#.#", "#.#.#", "#...#", "#...#"),
    "n": (".....", ".....", "#.##.", "##..#", "#...#", "#...#", "#...#"),
    "o": (".....", ".....", ".###.", "#...#", "#...#", "#...#", ".###."),
    "p": (".....", ".....", "####.", "#...#", "#...#", "#...#", "####.", "#....", "#...."),
    "q": (".....", ".....", ".####", "#...#", "#...#", "#...#", ".####", "....#", "....#"),
    "r": (".....", ".....", "#.##.", "##..#", "#....", "#....", "#...."),
    "s": (".....", ".....", ".###.", "#....", ".###.", "....#", "####."),
    "t": (".#...", ".#...", "###..", ".#...", ".#...", ".#..#", "..##."),
    "u": (".....", ".....", "#...#", "#...#", "#...#", "#..##", ".##.#"),
    "v": (".....", ".....", "#...#", "#...#", "#...#", ".#.#.", "..#.."),
    "w": (".....", ".....", "#...#", "#...#", "#.#.#", "#.#.#", ".#.#."),
    "x": (".....", ".....", "#...#", ".#.#.", "..#..", ".#.#.", "#...#"),
    "y": (".....", ".....", "#...#", "#...#", "#...#", "#...#", ".####", "....#", ".###."),
    "z": (".....", ".....", "#####", "...#.", "..#..", ".#...", "#####"),
}

ALTERNATES: dict[str, tuple[str, ...]] = {
    "a": (".....", ".....", ".####", "#...#", "#...#", "#..##", ".##.#"),
    "g": (".....", ".....", ".###.", "#...#", "#...#", "#...#", ".####", "....#", "###.."),
    "4": ("#..#.", "#..#.", "#..#.", "#####", "...#.", "...#.", "...#."),
}

assert set(BITMAPS) == set(ALPHANUMERICS)

DESIGN_UPM = 1000
SIDE_BEARING = 50


@dataclass(frozen=True)
class FixtureStyle:
    family: str
    style: str = "Regular"
    upm: int = 1000
    cell_w: int = 100
    cell_h: int = 100
    inset: int = 0  # negative values thicken
    slant: float = 0.0
    shape: str = "rect"  # rect | round | dot | serrated | composite
    alternates: tuple[str, ...] = ()
    missing: tuple[str, ...] = ()
    unicase: bool = False
    tags: tuple[str, ...] = ()
    file_name: str = ""

    @property
    def name(self) -> str:
        return self.file_name or f"{self.family}-{self.style}".replace(" ", "") + ".ttf"


def _runs(rows: tuple[str, ...]) -> list[tuple[int, int, int, int]]:
    """Rectangles (col0, col1, row0, row1) covering the bitmap, merged vertically."""
    spans = []
    for r, row in enumerate(rows):
        c = 0
        while c < len(row):
            if row[c] == "#":
                start = c
                while c < len(row) and row[c] == "#":
                    c += 1
                spans.append((start, c, r))
            else:
                c += 1
    rects: list[list[int]] = []
    for c0, c1, r in spans:
        for rect in rects:
            if rect[0] == c0 and rect[1] == c1 and rect[3] == r:
                rect[3] = r + 1
                break
        else:
            rects.append([c0, c1, r, r + 1])
    return [tuple(x) for x in rects]


class _Designer:
    def __init__(self, st: FixtureStyle):
        self.st = st
        self.k = st.upm / DESIGN_UPM

    def pt(self, x: float, y: float, on: bool = True) -> tuple[int, int, bool]:
        x = x + self.st.slant * y
        return (int(round(x * self.k)), int(round(y * self.k)), on)

    def cell_box(self, c0, c1, r0, r1):
        st = self.st
        x0 = SIDE_BEARING + c0 * st.cell_w
        x1 = SIDE_BEARING + c1 * st.cell_w
        y1 = (7 - r0) * st.cell_h
        y0 = (7 - r1) * st.cell_h
        return x0 + st.inset, y0 + st.inset, x1 - st.inset, y1 - st.inset

    def rect(self, x0, y0, x1, y1):
        return [self.pt(x0, y0), self.pt(x0, y1), self.pt(x1, y1), self.pt(x1, y0)]

    def rounded(self, x0, y0, x1, y1):
        r = min(x1 - x0, y1 - y0) / 4.0
        p = self.pt
        return [p(x0, y0 + r), p(x0, y1 - r), p(x0, y1, False), p(x0 + r, y1),
                p(x1 - r, y1), p(x1, y1, False), p(x1, y1 - r), p(x1, y0 + r),
                p(x1, y0, False), p(x1 - r, y0), p(x0 + r, y0), p(x0, y0, False)]

    def dot(self, cx, cy, r):
        p = self.pt
        return [p(cx - r, cy, False), p(cx, cy + r, False), p(cx + r, cy, False), p(cx, cy - r, False)]

    def star(self, cx, cy, r_out, r_in, n=24):
        pts = []
        for k in range(n):
            ang = math.pi / 2 - 2 * math.pi * k / n  # clockwise
            rr = r_out if k % 2 == 0 else r_in
            pts.append(self.pt(cx + rr * math.cos(ang), cy + rr * math.sin(ang)))
        return pts

    def contours(self, rows: tuple[str, ...]):
        st = self.st
        out = []
        if st.shape in ("rect", "round"):
            for c0, c1, r0, r1 in _runs(rows):
                box = self.cell_box(c0, c1, r0, r1)
                out.append(self.rect(*box) if st.shape == "rect" else self.rounded(*box))
            return out
        for r, row in enumerate(rows):
            for c, ch in enumerate(row):
                if ch != "#":
                    continue
                x0, y0, x1, y1 = self.cell_box(c, c + 1, r, r + 1)
                cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
                half = min(x1 - x0, y1 - y0) / 2
                if st.shape == "dot":
                    out.append(self.dot(cx, cy, half * 1.25))
                else:
                    out.append(self.star(cx, cy, half * 1.2, half * 0.8))
        return out

    def advance(self) -> int:
        return int(round((2 * SIDE_BEARING + 5 * self.st.cell_w) * self.k))


def build_fixture_font(st: FixtureStyle) -> bytes:
    d = _Designer(st)
    glyphs: dict[str, GlyphSpec] = {".notdef": GlyphSpec(
        [d.rect(SIDE_BEARING, 0, SIDE_BEARING + 400, 700)], d.advance())}
    cmap: dict[str, str] = {}
    adv = d.advance()
    if st.shape == "composite":
        box = d.cell_box(0, 1, 6, 7)  # a cell sitting on the baseline at column 0
        glyphs["cell"] = GlyphSpec([d.rect(*box)], adv)

    for ch in ALPHANUMERICS:
        if ch in st.missing:
            continue
        src = "G" if (st.unicase and ch == "g") else ch
        rows = ALTERNATES[src] if src in st.alternates and src in ALTERNATES else BITMAPS[src]
        name = f"u{ord(ch):04X}"
        if st.shape == "composite":
            comps = []
            for r, row in enumerate(rows):
                for c, bit in enumerate(row):
                    if bit == "#":
                        dx = int(round(c * st.cell_w * d.k))
                        dy = int(round((6 - r) * st.cell_h * d.k))
                        comps.append(Component("cell", dx, dy))
            glyphs[name] = GlyphSpec(advance=adv, components=comps)
        else:
            glyphs[name] = GlyphSpec(d.contours(rows), adv)
        cmap[ch] = name
    glyphs["space"] = GlyphSpec([], int(round(300 * d.k)))
    cmap[" "] = "space"
    return build_font(glyphs, cmap, upm=st.upm, family=st.family, style=st.style)


def corpus_styles() -> list[FixtureStyle]:
    """The 20-font acceptance corpus.

    Specials: one font lacks "Q"; "Blocky Copy" repeats Blocky Regular's
    outlines under another name; "Caps" draws g as G; "Filigree" is very long.
    """
    base = [
        FixtureStyle("Blocky", "Regular", tags=("sans-serif", "geometric", "400 weight", "display")),
        FixtureStyle("Blocky", "Bold", inset=-12, tags=("sans-serif", "geometric", "700 weight")),
        FixtureStyle("Blocky", "Oblique", upm=2048, slant=0.2,
                     tags=("sans-serif", "italic style", "geometric")),
        FixtureStyle("Roundel", "Regular", shape="round", tags=("rounded sans-serif", "friendly", "cute")),
        FixtureStyle("Roundel", "Light", shape="round", upm=1024, inset=15,
                     tags=("rounded sans-serif", "300 weight", "calm")),
        FixtureStyle("Dotty", "Regular", shape="dot", tags=("dotted", "display", "playful")),
        FixtureStyle("Dotty", "Heavy", shape="dot", inset=-10, tags=("dotted", "900 weight")),
        FixtureStyle("Dotty", "Oblique", shape="dot", slant=0.15, tags=("dotted", "italic style")),
        FixtureStyle("Stencil", "Regular", upm=2000, inset=10, tags=("stencil", "industrial")),
        FixtureStyle("Stencil", "Oblique", inset=10, slant=0.15, tags=("stencil", "italic style")),
        FixtureStyle("Modular", "Regular", shape="composite", tags=("modular", "pixel", "monospace")),
        FixtureStyle("Modular", "Wide", shape="composite", cell_w=120, tags=("modular", "wide")),
        FixtureStyle("Blocky Alt", "Regular", alternates=("a", "g", "4"),
                     tags=("sans-serif", "geometric", "single-story a")),
        FixtureStyle("Roundel Alt", "Regular", shape="round", alternates=("a", "g"),
                     tags=("rounded sans-serif", "single-story a")),
        FixtureStyle("Tall", "Regular", cell_h=120, tags=("condensed", "tall x-height")),
        FixtureStyle("Tall", "Bold", cell_h=120, inset=-10, tags=("condensed", "700 weight")),
    ]
    specials = [
        FixtureStyle("Gappy", "Regular", inset=20, missing=("Q",), tags=("stencil", "incomplete")),
        replace(base[0], family="Blocky Copy", tags=("sans-serif", "duplicate")),
        FixtureStyle("Caps", "Regular", shape="round", inset=-8, unicase=True,
                     tags=("small caps", "unicase")),
        FixtureStyle("Filigree", "Regular", shape="serrated",
                     tags=("decorative", "ornamental", "filigree")),
    ]
    return base + specials


@dataclass
class FixtureCorpus:
    directory: Path
    files: dict[str, FixtureStyle] = field(default_factory=dict)
    font_ids: dict[str, str] = field(default_factory=dict)


def write_fixture_corpus(out: str | Path, styles: list[FixtureStyle] | None = None) -> FixtureCorpus:
    """Write fonts, ``tags.jsonl`` and ``mock_recognizer.json`` into ``out``."""
    from .corpus import font_id_of

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    corpus = FixtureCorpus(out)
    tag_lines = []
    responses = {}
    for st in styles if styles is not None else corpus_styles():
        data = build_fixture_font(st)
        (out / st.name).write_bytes(data)
        fid = font_id_of(data)
        corpus.files[st.name] = st
        corpus.font_ids[st.name] = fid
        tag_lines.append(json.dumps({"file": st.name, "tags": list(st.tags)}))
        if st.unicase:
            responses[fid] = "GGAA"
    (out / "tags.jsonl").write_text("\n".join(tag_lines) + "\n", encoding="utf-8")
    mock = {"default": "GgAa", "responses": dict(sorted(responses.items()))}
    (out / "mock_recognizer.json").write_text(json.dumps(mock, indent=2) + "\n", encoding="utf-8")
    return corpus
