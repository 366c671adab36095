"""Minimal TrueType writer used to generate deterministic fixture fonts.

Writes head, hhea, maxp, OS/2-free tables sufficient for outline readers:
cmap (format 4, optionally 12), hmtx, loca, glyf, name, post.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

_EPOCH_1904_TO_2020 = 3660595200  # fixed timestamp keeps output byte-stable


@dataclass
class Component:
    glyph: str
    dx: int
    dy: int
    scale: float | None = None  # only for producing rejected fixtures


@dataclass
class GlyphSpec:
    contours: list[list[tuple[int, int, bool]]] = field(default_factory=list)
    advance: int = 0
    components: list[Component] | None = None


def _checksum(data: bytes) -> int:
    padded = data + b"\0" * (-len(data) % 4)
    return sum(struct.unpack(f">{len(padded) // 4}I", padded)) & 0xFFFFFFFF


def _encode_simple(contours, bbox) -> bytes:
    ends, flags, xs, ys = [], [], b"", b""
    n = 0
    px = py = 0
    for contour in contours:
        for x, y, on in contour:
            f = 0x01 if on else 0
            dx, dy = x - px, y - py
            if dx == 0:
                f |= 0x10
            elif -256 < dx < 256:
                f |= 0x02 | (0x10 if dx > 0 else 0)
                xs += struct.pack(">B", abs(dx))
            else:
                xs += struct.pack(">h", dx)
            if dy == 0:
                f |= 0x20
            elif -256 < dy < 256:
                f |= 0x04 | (0x20 if dy > 0 else 0)
                ys += struct.pack(">B", abs(dy))
            else:
                ys += struct.pack(">h", dy)
            flags.append(f)
            px, py = x, y
            n += 1
        ends.append(n - 1)
    # run-length encode flags with the repeat bit
    packed = b""
    i = 0
    while i < len(flags):
        j = i
        while j + 1 < len(flags) and flags[j + 1] == flags[i] and j - i < 255:
            j += 1
        run = j - i
        if run:
            packed += struct.pack(">BB", flags[i] | 0x08, run)
        else:
            packed += struct.pack(">B", flags[i])
        i = j + 1
    header = struct.pack(">hhhhh", len(contours), *bbox)
    return header + struct.pack(f">{len(ends)}H", *ends) + struct.pack(">H", 0) + packed + xs + ys


def _encode_composite(components, order, bbox) -> bytes:
    out = struct.pack(">hhhhh", -1, *bbox)
    for i, comp in enumerate(components):
        flags = 0x0002
        words = not (-128 <= comp.dx <= 127 and -128 <= comp.dy <= 127)
        if words:
            flags |= 0x0001
        if i + 1 < len(components):
            flags |= 0x0020
        if comp.scale is not None:
            flags |= 0x0008
        out += struct.pack(">HH", flags, order.index(comp.glyph))
        out += struct.pack(">hh" if words else ">bb", comp.dx, comp.dy)
        if comp.scale is not None:
            out += struct.pack(">h", int(round(comp.scale * 0x4000)))
    return out


def _cmap(mapping: dict[int, int], with_format12: bool) -> bytes:
    bmp = sorted((c, g) for c, g in mapping.items() if c <= 0xFFFF)
    segs: list[list[int]] = []  # [start, end, delta]
    for code, gid in bmp:
        if segs and code == segs[-1][1] + 1 and gid - code == segs[-1][2]:
            segs[-1][1] = code
        else:
            segs.append([code, code, gid - code])
    segs.append([0xFFFF, 0xFFFF, 1])
    n = len(segs)
    search = 2 ** (n.bit_length() - 1)
    body = struct.pack(">HHHH", 2 * n, 2 * search, search.bit_length() - 1, 2 * n - 2 * search)
    body += struct.pack(f">{n}H", *(s[1] for s in segs)) + b"\0\0"
    body += struct.pack(f">{n}H", *(s[0] for s in segs))
    body += struct.pack(f">{n}h", *(((s[2] + 32768) % 65536) - 32768 for s in segs))
    body += struct.pack(f">{n}H", *([0] * n))
    fmt4 = struct.pack(">HHH", 4, 6 + len(body), 0) + body

    subtables = [(3, 1, fmt4)]
    if with_format12:
        groups = []
        for code, gid in sorted(mapping.items()):
            if groups and code == groups[-1][1] + 1 and gid == groups[-1][2] + (code - groups[-1][0]):
                groups[-1][1] = code
            else:
                groups.append([code, code, gid])
        fmt12 = struct.pack(">HHIII", 12, 0, 16 + 12 * len(groups), 0, len(groups))
        fmt12 += b"".join(struct.pack(">III", *g) for g in groups)
        subtables.append((3, 10, fmt12))
    out = struct.pack(">HH", 0, len(subtables))
    offset = 4 + 8 * len(subtables)
    blobs = b""
    for platform, encoding, blob in subtables:
        out += struct.pack(">HHI", platform, encoding, offset + len(blobs))
        blobs += blob
    return out + blobs


def _name(family: str, style: str) -> bytes:
    records = [(1, family), (2, style), (4, f"{family} {style}".strip())]
    strings = b""
    recs = b""
    for name_id, text in records:
        raw = text.encode("utf-16-be")
        recs += struct.pack(">6H", 3, 1, 0x409, name_id, len(raw), len(strings))
        strings += raw
    return struct.pack(">HHH", 0, len(records), 6 + len(recs)) + recs + strings


def build_font(glyphs: dict[str, GlyphSpec], cmap: dict[str, str], *, upm: int = 1000,
               family: str = "Fixture", style: str = "Regular", long_loca: bool = False,
               with_format12: bool = False, omit: tuple[str, ...] = ()) -> bytes:
    """Serialize glyphs into TrueType bytes.

    ``cmap`` maps characters to glyph names; ``.notdef`` is always glyph 0.
    ``omit`` drops named tables, for producing broken fixtures.
    """
    order = [".notdef"] + [g for g in glyphs if g != ".notdef"]
    specs = {".notdef": glyphs.get(".notdef", GlyphSpec(advance=upm // 2)), **glyphs}

    def flat(name, depth=0):
        spec = specs[name]
        if spec.components is None:
            return [pt for c in spec.contours for pt in c]
        pts = []
        for comp in spec.components:
            pts.extend((x + comp.dx, y + comp.dy, on) for x, y, on in flat(comp.glyph, depth + 1))
        return pts

    glyf = b""
    offsets = [0]
    bboxes = []
    max_points = max_contours = 0
    for name in order:
        spec = specs[name]
        pts = flat(name)
        if pts:
            bbox = (min(p[0] for p in pts), min(p[1] for p in pts),
                    max(p[0] for p in pts), max(p[1] for p in pts))
        else:
            bbox = (0, 0, 0, 0)
        bboxes.append(bbox)
        if spec.components is not None:
            blob = _encode_composite(spec.components, order, bbox)
        elif spec.contours:
            blob = _encode_simple(spec.contours, bbox)
            max_points = max(max_points, len(pts))
            max_contours = max(max_contours, len(spec.contours))
        else:
            blob = b""
        blob += b"\0" * (-len(blob) % 4)
        glyf += blob
        offsets.append(len(glyf))
    if not long_loca and offsets[-1] >= 0x20000:
        long_loca = True
    loca = (struct.pack(f">{len(offsets)}I", *offsets) if long_loca
            else struct.pack(f">{len(offsets)}H", *(o // 2 for o in offsets)))

    n = len(order)
    real = [b for b in bboxes if b != (0, 0, 0, 0)] or [(0, 0, 0, 0)]
    xmin, ymin = min(b[0] for b in real), min(b[1] for b in real)
    xmax, ymax = max(b[2] for b in real), max(b[3] for b in real)
    head = struct.pack(
        ">IIIIHHqqhhhhHHhhh",
        0x00010000, 0x00010000, 0, 0x5F0F3CF5, 0x000B, upm,
        _EPOCH_1904_TO_2020, _EPOCH_1904_TO_2020,
        xmin, ymin, xmax, ymax, 0, 8, 2, 1 if long_loca else 0, 0,
    )
    advances = [specs[g].advance for g in order]
    hhea = struct.pack(">IhhhHhhhhhhhhhhhH", 0x00010000, ymax, ymin, 0, max(advances),
                       xmin, 0, xmax, 1, 0, 0, 0, 0, 0, 0, 0, n)
    maxp = struct.pack(">IHHHHHHHHHHHHHH", 0x00010000, n, max_points, max_contours,
                       0, 0, 2, 0, 0, 0, 0, 0, 0, 2, 1)
    hmtx = b"".join(struct.pack(">Hh", specs[g].advance, bboxes[i][0]) for i, g in enumerate(order))
    mapping = {ord(c): order.index(g) for c, g in cmap.items()}
    post = struct.pack(">IIhhIIIII", 0x00030000, 0, 0, 0, 0, 0, 0, 0, 0)

    tables = {
        "cmap": _cmap(mapping, with_format12), "glyf": glyf, "head": head, "hhea": hhea,
        "hmtx": hmtx, "loca": loca, "maxp": maxp, "name": _name(family, style), "post": post,
    }
    for tag in omit:
        tables.pop(tag, None)
    tags = sorted(tables)
    num = len(tags)
    search = 2 ** (num.bit_length() - 1)
    header = struct.pack(">IHHHH", 0x00010000, num, 16 * search,
                         search.bit_length() - 1, 16 * num - 16 * search)
    offset = 12 + 16 * num
    directory = b""
    body = b""
    head_offset = None
    for tag in tags:
        data = tables[tag]
        if tag == "head":
            head_offset = offset + len(body)
        directory += struct.pack(">4sIII", tag.encode("latin-1"), _checksum(data),
                                 offset + len(body), len(data))
        body += data + b"\0" * (-len(data) % 4)
    font = bytearray(header + directory + body)
    if head_offset is not None:
        adjust = (0xB1B0AFBA - _checksum(bytes(font))) & 0xFFFFFFFF
        struct.pack_into(">I", font, head_offset + 8, adjust)
    return bytes(font)
