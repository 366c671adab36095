"""TrueType outline reader and canonical-frame normalization.

Only the tables needed for outlines and advances are decoded: head, hhea,
maxp, cmap (formats 4 and 12), hmtx, loca, glyf, and name.
"""

from __future__ import annotations

import string
import struct
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import (
    CharNotMapped,
    CoordOutOfRange,
    MalformedTable,
    NotTrueType,
    UnsupportedComposite,
)
from .path_model import MAX_DECI, GlyphPath, Kind, PathCommand, _check_range

ALPHANUMERICS = string.digits + string.ascii_lowercase + string.ascii_uppercase
CANONICAL_UPM = 1000

# (x, y, on_curve) in font units
Point = tuple[int, int, bool]
Contour = tuple[Point, ...]

_ARG_1_AND_2_ARE_WORDS = 0x0001
_ARGS_ARE_XY_VALUES = 0x0002
_WE_HAVE_A_SCALE = 0x0008
_MORE_COMPONENTS = 0x0020
_WE_HAVE_AN_X_AND_Y_SCALE = 0x0040
_WE_HAVE_A_TWO_BY_TWO = 0x0080

_F2DOT14_ONE = 0x4000
_MAX_COMPOSITE_DEPTH = 8


@dataclass(frozen=True)
class FontOutline:
    units_per_em: int
    char_map: Mapping[str, int]
    glyphs: Mapping[int, tuple[Contour, ...]]
    advances: Mapping[int, int]
    family_name: str = ""
    style_name: str = ""
    num_glyphs: int = 0


@dataclass(frozen=True)
class RawGlyph:
    """Explicit segments in font units; implied on-curve points may be halves."""
    contours: tuple[tuple[tuple[str, tuple[Fraction, ...]], ...], ...]
    advance: int

    @property
    def is_empty(self) -> bool:
        return not self.contours

    def to_d(self) -> str:
        def fmt(v: Fraction) -> str:
            return str(v.numerator) if v.denominator == 1 else f"{float(v):g}"
        parts = []
        for contour in self.contours:
            for letter, args in contour:
                parts.append(" ".join([letter, *(fmt(v) for v in args)]))
        return " ".join(parts)


@dataclass(frozen=True)
class NormalizedGlyph:
    char: str
    path: GlyphPath
    advance: int  # deci-units


# --- binary reading ----------------------------------------------------------

def _table_checksum(data: bytes) -> int:
    padded = data + b"\0" * (-len(data) % 4)
    return sum(struct.unpack(f">{len(padded) // 4}I", padded)) & 0xFFFFFFFF


def _unpack(fmt: str, buf: bytes, offset: int, what: str):
    try:
        return struct.unpack_from(fmt, buf, offset)
    except struct.error as exc:
        raise MalformedTable(f"{what}: truncated at offset {offset}") from exc


def _read_tables(data: bytes, verify_checksums: bool) -> dict[str, bytes]:
    if len(data) < 12:
        raise NotTrueType("file too short to be an sfnt font")
    tag = data[:4]
    if tag == b"OTTO":
        raise NotTrueType("CFF-flavoured OpenType (cubic outlines) is not supported")
    if tag == b"ttcf":
        raise NotTrueType("font collections are not supported")
    if tag not in (b"\x00\x01\x00\x00", b"true"):
        raise NotTrueType(f"unrecognised sfnt version {tag!r}")
    (num_tables,) = struct.unpack_from(">H", data, 4)
    tables: dict[str, bytes] = {}
    for i in range(num_tables):
        rec_tag, checksum, offset, length = _unpack(">4sIII", data, 12 + 16 * i, "table directory")
        if offset + length > len(data):
            raise MalformedTable(f"table {rec_tag!r} extends past end of file")
        name = rec_tag.decode("latin-1")
        body = data[offset:offset + length]
        if verify_checksums:
            check = body
            if name == "head" and len(body) >= 12:
                check = body[:8] + b"\0\0\0\0" + body[12:]
            if _table_checksum(check) != checksum:
                raise MalformedTable(f"checksum mismatch in table {name!r}")
        tables[name] = body
    if "glyf" not in tables or "loca" not in tables:
        if "CFF " in tables or "CFF2" in tables:
            raise NotTrueType("font has CFF outlines instead of glyf")
        raise NotTrueType("font has no glyf/loca tables")
    for required in ("head", "hhea", "maxp", "cmap", "hmtx"):
        if required not in tables:
            raise MalformedTable(f"missing required table {required!r}")
    return tables


def _parse_cmap(cmap: bytes) -> dict[int, int]:
    _, n = _unpack(">HH", cmap, 0, "cmap")
    by_priority: dict[int, int] = {}
    records = []
    for i in range(n):
        platform, encoding, offset = _unpack(">HHI", cmap, 4 + 8 * i, "cmap records")
        if offset >= len(cmap):
            raise MalformedTable("cmap subtable offset out of range")
        (fmt,) = _unpack(">H", cmap, offset, "cmap subtable")
        if fmt not in (4, 12):
            continue
        # Unicode full repertoire beats BMP; Windows beats Unicode platform.
        rank = {(3, 10): 0, (0, 4): 1, (0, 6): 1, (3, 1): 2, (0, 3): 3}.get((platform, encoding))
        if rank is None and platform == 0:
            rank = 4
        if rank is not None:
            records.append((rank, fmt, offset))
    if not records:
        return {}
    records.sort()
    for _, fmt, offset in reversed(records):
        mapping = _cmap_format12(cmap, offset) if fmt == 12 else _cmap_format4(cmap, offset)
        by_priority.update(mapping)
    return by_priority


def _cmap_format4(cmap: bytes, offset: int) -> dict[int, int]:
    _, length, _, seg_x2 = _unpack(">HHHH", cmap, offset, "cmap format 4")
    seg = seg_x2 // 2
    base = offset + 14
    ends = _unpack(f">{seg}H", cmap, base, "cmap format 4 endCode")
    starts = _unpack(f">{seg}H", cmap, base + seg_x2 + 2, "cmap format 4 startCode")
    deltas = _unpack(f">{seg}h", cmap, base + 2 * seg_x2 + 2, "cmap format 4 idDelta")
    ro_base = base + 3 * seg_x2 + 2
    range_offsets = _unpack(f">{seg}H", cmap, ro_base, "cmap format 4 idRangeOffset")
    out: dict[int, int] = {}
    for i in range(seg):
        start, end, delta, ro = starts[i], ends[i], deltas[i], range_offsets[i]
        if start > end:
            raise MalformedTable("cmap format 4 segment with start > end")
        for code in range(start, end + 1):
            if code == 0xFFFF:
                continue
            if ro == 0:
                gid = (code + delta) & 0xFFFF
            else:
                addr = ro_base + 2 * i + ro + 2 * (code - start)
                (gid,) = _unpack(">H", cmap, addr, "cmap format 4 glyphIdArray")
                if gid:
                    gid = (gid + delta) & 0xFFFF
            if gid:
                out[code] = gid
    return out


def _cmap_format12(cmap: bytes, offset: int) -> dict[int, int]:
    _, _, _, _, n = _unpack(">HHIII", cmap, offset, "cmap format 12")
    out: dict[int, int] = {}
    for i in range(n):
        start, end, gid0 = _unpack(">III", cmap, offset + 16 + 12 * i, "cmap format 12 groups")
        if start > end or end > 0x10FFFF:
            raise MalformedTable("cmap format 12 group out of range")
        if end - start > 0x10000:
            raise MalformedTable("cmap format 12 group implausibly large")
        for k, code in enumerate(range(start, end + 1)):
            if gid0 + k:
                out[code] = gid0 + k
    return out


def _parse_name(name: bytes) -> tuple[str, str]:
    try:
        _, count, storage = struct.unpack_from(">HHH", name, 0)
    except struct.error:
        return "", ""
    found: dict[int, tuple[int, str]] = {}
    for i in range(count):
        try:
            platform, encoding, lang, name_id, length, off = struct.unpack_from(">6H", name, 6 + 12 * i)
        except struct.error:
            break
        if name_id not in (1, 2, 16, 17):
            continue
        raw = name[storage + off:storage + off + length]
        if platform in (0, 3):
            text, rank = raw.decode("utf-16-be", errors="replace"), 0 if platform == 3 else 1
        elif platform == 1 and encoding == 0:
            text, rank = raw.decode("mac_roman", errors="replace"), 2
        else:
            continue
        if name_id not in found or rank < found[name_id][0]:
            found[name_id] = (rank, text)
    family = found.get(16, found.get(1, (0, "")))[1]
    style = found.get(17, found.get(2, (0, "")))[1]
    return family, style


def _parse_simple(buf: bytes, n_contours: int, gid: int) -> tuple[Contour, ...]:
    what = f"glyph {gid}"
    ends = _unpack(f">{n_contours}H", buf, 10, what)
    if any(b < a for a, b in zip(ends, ends[1:])):
        raise MalformedTable(f"{what}: endPtsOfContours not increasing")
    n_points = ends[-1] + 1 if ends else 0
    pos = 10 + 2 * n_contours
    (ins_len,) = _unpack(">H", buf, pos, what)
    pos += 2 + ins_len
    flags = []
    while len(flags) < n_points:
        (f,) = _unpack(">B", buf, pos, what)
        pos += 1
        flags.append(f)
        if f & 0x08:
            (rep,) = _unpack(">B", buf, pos, what)
            pos += 1
            flags.extend([f] * rep)
    if len(flags) > n_points:
        raise MalformedTable(f"{what}: flag repeat overruns point count")

    def coords(short_bit: int, same_bit: int) -> list[int]:
        nonlocal pos
        vals, v = [], 0
        for f in flags:
            if f & short_bit:
                (d,) = _unpack(">B", buf, pos, what)
                pos += 1
                v += d if f & same_bit else -d
            elif not f & same_bit:
                (d,) = _unpack(">h", buf, pos, what)
                pos += 2
                v += d
            vals.append(v)
        return vals

    xs = coords(0x02, 0x10)
    ys = coords(0x04, 0x20)
    contours = []
    start = 0
    for end in ends:
        contours.append(tuple((xs[i], ys[i], bool(flags[i] & 0x01)) for i in range(start, end + 1)))
        start = end + 1
    return tuple(contours)


class _GlyfReader:
    def __init__(self, glyf: bytes, offsets: list[int]):
        self.glyf = glyf
        self.offsets = offsets
        self.cache: dict[int, tuple[Contour, ...]] = {}

    def get(self, gid: int, depth: int = 0) -> tuple[Contour, ...]:
        if gid in self.cache:
            return self.cache[gid]
        if gid + 1 >= len(self.offsets):
            raise MalformedTable(f"glyph index {gid} out of range")
        if depth > _MAX_COMPOSITE_DEPTH:
            raise MalformedTable("composite glyph nesting too deep (cycle?)")
        start, end = self.offsets[gid], self.offsets[gid + 1]
        if start == end:
            result: tuple[Contour, ...] = ()
        else:
            buf = self.glyf[start:end]
            (n,) = _unpack(">h", buf, 0, f"glyph {gid}")
            result = _parse_simple(buf, n, gid) if n >= 0 else self._composite(buf, gid, depth)
        self.cache[gid] = result
        return result

    def _composite(self, buf: bytes, gid: int, depth: int) -> tuple[Contour, ...]:
        what = f"composite glyph {gid}"
        pos = 10
        out: list[Contour] = []
        while True:
            flags, child = _unpack(">HH", buf, pos, what)
            pos += 4
            if not flags & _ARGS_ARE_XY_VALUES:
                raise UnsupportedComposite(f"{what}: point-matched component placement")
            if flags & _ARG_1_AND_2_ARE_WORDS:
                dx, dy = _unpack(">hh", buf, pos, what)
                pos += 4
            else:
                dx, dy = _unpack(">bb", buf, pos, what)
                pos += 2
            if flags & _WE_HAVE_A_SCALE:
                matrix = _unpack(">h", buf, pos, what)
                pos += 2
                identity = (_F2DOT14_ONE,)
            elif flags & _WE_HAVE_AN_X_AND_Y_SCALE:
                matrix = _unpack(">hh", buf, pos, what)
                pos += 4
                identity = (_F2DOT14_ONE, _F2DOT14_ONE)
            elif flags & _WE_HAVE_A_TWO_BY_TWO:
                matrix = _unpack(">hhhh", buf, pos, what)
                pos += 8
                identity = (_F2DOT14_ONE, 0, 0, _F2DOT14_ONE)
            else:
                matrix = identity = ()
            if matrix != identity:
                raise UnsupportedComposite(f"{what}: component {child} is scaled or rotated")
            for contour in self.get(child, depth + 1):
                out.append(tuple((x + dx, y + dy, on) for x, y, on in contour))
            if not flags & _MORE_COMPONENTS:
                break
        return tuple(out)


def load_font(data: bytes, chars: Iterable[str] | None = None,
              verify_checksums: bool = True) -> FontOutline:
    """Decode a TrueType font.

    With ``chars`` given, only glyphs reachable from those characters are
    decoded, and ``char_map`` is restricted to them.
    """
    tables = _read_tables(bytes(data), verify_checksums)
    head = tables["head"]
    if len(head) < 54:
        raise MalformedTable("head table too short")
    (magic,) = struct.unpack_from(">I", head, 12)
    if magic != 0x5F0F3CF5:
        raise MalformedTable("bad head magic number")
    (upm,) = struct.unpack_from(">H", head, 18)
    (loc_format,) = struct.unpack_from(">h", head, 50)
    if upm == 0:
        raise MalformedTable("unitsPerEm is zero")
    (num_glyphs,) = _unpack(">H", tables["maxp"], 4, "maxp")
    (num_hmetrics,) = _unpack(">H", tables["hhea"], 34, "hhea")
    if num_hmetrics == 0 or num_hmetrics > num_glyphs:
        raise MalformedTable("hhea numberOfHMetrics inconsistent with maxp")

    loca = tables["loca"]
    if loc_format == 0:
        offsets = [2 * v for v in _unpack(f">{num_glyphs + 1}H", loca, 0, "loca")]
    elif loc_format == 1:
        offsets = list(_unpack(f">{num_glyphs + 1}I", loca, 0, "loca"))
    else:
        raise MalformedTable(f"unknown indexToLocFormat {loc_format}")
    glyf = tables["glyf"]
    if any(b < a for a, b in zip(offsets, offsets[1:])) or offsets[-1] > len(glyf):
        raise MalformedTable("loca offsets are not monotone or exceed glyf")

    hmtx = tables["hmtx"]
    adv_list = [v for v in _unpack(f">{2 * num_hmetrics}H", hmtx, 0, "hmtx")[0::2]]

    def advance(gid: int) -> int:
        return adv_list[min(gid, num_hmetrics - 1)]

    codes = _parse_cmap(tables["cmap"])
    char_map: dict[str, int] = {}
    for code, gid in codes.items():
        if gid >= num_glyphs:
            raise MalformedTable(f"cmap maps U+{code:04X} to missing glyph {gid}")
        char_map[chr(code)] = gid
    if chars is not None:
        wanted = set(chars)
        char_map = {c: g for c, g in char_map.items() if c in wanted}
        gids: Iterable[int] = sorted(set(char_map.values()))
    else:
        gids = range(num_glyphs)

    reader = _GlyfReader(glyf, offsets)
    glyphs = {gid: reader.get(gid) for gid in gids}
    advances = {gid: advance(gid) for gid in glyphs}
    family, style = _parse_name(tables["name"]) if "name" in tables else ("", "")
    return FontOutline(upm, char_map, glyphs, advances, family, style, num_glyphs)


# --- outlines ------------------------------------------------------------------

def _contour_segments(points: Contour) -> tuple[tuple[str, tuple[Fraction, ...]], ...]:
    pts = [(Fraction(x), Fraction(y), on) for x, y, on in points]

    def mid(p, q):
        return ((p[0] + q[0]) / 2, (p[1] + q[1]) / 2, True)

    first_on = next((i for i, p in enumerate(pts) if p[2]), None)
    if first_on is None:
        start = mid(pts[-1], pts[0])
        seq = pts
    else:
        start = pts[first_on]
        seq = pts[first_on + 1:] + pts[:first_on]
    segs: list[tuple[str, tuple[Fraction, ...]]] = [("M", (start[0], start[1]))]
    pending = None
    for p in seq + [start]:
        if p[2]:
            if pending is None:
                segs.append(("L", (p[0], p[1])))
            else:
                segs.append(("Q", (pending[0], pending[1], p[0], p[1])))
                pending = None
        else:
            if pending is not None:
                m = mid(pending, p)
                segs.append(("Q", (pending[0], pending[1], m[0], m[1])))
            pending = p
    # the closing edge back to the start is implied by Z
    if segs[-1][0] == "L" and segs[-1][1] == (start[0], start[1]):
        segs.pop()
    segs.append(("Z", ()))
    return tuple(segs)


def extract_glyph(font: FontOutline, c: str) -> RawGlyph:
    if c not in font.char_map:
        raise CharNotMapped(c)
    gid = font.char_map[c]
    contours = tuple(_contour_segments(ct) for ct in font.glyphs[gid] if len(ct) >= 2)
    return RawGlyph(contours, font.advances[gid])


def _scale_to_deci(v: Fraction, upm: int) -> int:
    exact = v * CANONICAL_UPM * 10 / upm
    sign = -1 if exact < 0 else 1
    return sign * int(abs(exact) + Fraction(1, 2))


def normalize_glyph(raw: RawGlyph, upm: int, advance: int | None = None,
                    char: str = "") -> NormalizedGlyph:
    """Scale font units to the 1000-UPM canonical frame and quantize.

    The TrueType baseline (y = 0) is kept at y = 0; y stays upward.
    """
    if upm <= 0:
        raise ValueError("upm must be positive")
    if advance is None:
        advance = raw.advance
    commands = []
    for contour in raw.contours:
        for letter, args in contour:
            deci = tuple(_scale_to_deci(v, upm) for v in args)
            _check_range(deci, len(commands))
            commands.append(PathCommand(Kind(letter), False, deci))
    adv = _scale_to_deci(Fraction(advance), upm)
    if abs(adv) > MAX_DECI:
        raise CoordOutOfRange(f"advance {advance} out of range after scaling")
    return NormalizedGlyph(char, GlyphPath(tuple(commands)), adv)


def coverage_check(font: FontOutline) -> tuple[bool, frozenset[str]]:
    missing = set()
    for c in ALPHANUMERICS:
        gid = font.char_map.get(c)
        if gid is None or gid not in font.glyphs:
            missing.add(c)
            continue
        if not font.glyphs[gid] and font.advances.get(gid, 0) <= 0:
            missing.add(c)
    return not missing, frozenset(missing)
