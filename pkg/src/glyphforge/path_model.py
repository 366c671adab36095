"""Restricted SVG path dialect: M/m, L/l, Q/q, Z/z on a fixed-point grid.

Coordinates are stored as signed integers of deci-units (0.1 path units), so
every conversion between absolute and relative form is exact integer work.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal, InvalidOperation
from enum import Enum
from typing import Iterable, Iterator, Sequence

from .errors import (
    ArityMismatch,
    CoordOutOfRange,
    EmptyPath,
    MalformedNumber,
    PathError,
    UnsupportedCommand,
)

MAX_DECI = 100_000  # |coordinate| <= 10000.0


class Kind(str, Enum):
    MOVE = "M"
    LINE = "L"
    QUAD = "Q"
    CLOSE = "Z"


class Mode(str, Enum):
    ABSOLUTE = "absolute"
    RELATIVE = "relative"


ARITY = {Kind.MOVE: 2, Kind.LINE: 2, Kind.QUAD: 4, Kind.CLOSE: 0}


@dataclass(frozen=True, slots=True)
class PathCommand:
    kind: Kind
    relative: bool = False
    args: tuple[int, ...] = ()

    @property
    def letter(self) -> str:
        letter = Kind(self.kind).value
        return letter.lower() if self.relative else letter

    def __str__(self) -> str:
        return " ".join([self.letter, *(format_deci(v) for v in self.args)])


@dataclass(frozen=True)
class GlyphPath:
    commands: tuple[PathCommand, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not isinstance(self.commands, tuple):
            object.__setattr__(self, "commands", tuple(self.commands))

    def __len__(self) -> int:
        return len(self.commands)

    def __iter__(self) -> Iterator[PathCommand]:
        return iter(self.commands)

    def __getitem__(self, i):
        return self.commands[i]

    def __str__(self) -> str:
        return serialize_path(self)

    @property
    def is_empty(self) -> bool:
        return not self.commands

    def translated(self, dx: int, dy: int) -> "GlyphPath":
        """Shift by (dx, dy) deci-units. Relative commands other than a
        leading MoveTo are translation-invariant and kept as they are."""
        out = []
        for i, cmd in enumerate(self.commands):
            if cmd.kind is Kind.CLOSE or (cmd.relative and i > 0):
                out.append(cmd)
                continue
            args = tuple(v + (dy if j % 2 else dx) for j, v in enumerate(cmd.args))
            _check_range(args, i)
            out.append(PathCommand(cmd.kind, cmd.relative, args))
        return GlyphPath(tuple(out))

    def absolute_points(self) -> list[tuple[int, int]]:
        """Every on- and off-curve point in absolute deci-units."""
        pts = []
        for cmd in convert_mode(self, Mode.ABSOLUTE):
            pts.extend(zip(cmd.args[0::2], cmd.args[1::2]))
        return pts


def format_deci(v: int) -> str:
    sign = "-" if v < 0 else ""
    q, r = divmod(abs(v), 10)
    return f"{sign}{q}.{r}"


def to_deci(text: str) -> int:
    """Parse a decimal literal into deci-units, rounding half away from zero."""
    try:
        value = Decimal(text)
    except InvalidOperation as exc:
        raise MalformedNumber(f"malformed number {text!r}") from exc
    if not value.is_finite():
        raise MalformedNumber(f"malformed number {text!r}")
    return int((value * 10).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def _check_range(args: Sequence[int], index: int) -> None:
    for v in args:
        if abs(v) > MAX_DECI:
            raise CoordOutOfRange(
                f"command {index}: coordinate {format_deci(v)} exceeds ±{format_deci(MAX_DECI)}"
            )


_TOKEN = re.compile(
    r"(?P<sep>[\s,]+)"
    r"|(?P<cmd>[A-Za-z])"
    r"|(?P<num>[+-]?(?:\d+(?:\.\d*)?|\.\d+))"
)
_EXPONENT = re.compile(r"[eE][+-]?\d")
_LETTERS = {"M": Kind.MOVE, "L": Kind.LINE, "Q": Kind.QUAD, "Z": Kind.CLOSE}


def _tokenize(d: str) -> Iterator[tuple[str, str]]:
    pos = 0
    n = len(d)
    while pos < n:
        m = _TOKEN.match(d, pos)
        if m is None:
            raise MalformedNumber(f"unexpected character {d[pos]!r} at offset {pos}")
        kind = m.lastgroup
        pos = m.end()
        if kind == "sep":
            continue
        if kind == "num" and _EXPONENT.match(d, pos):
            raise MalformedNumber(f"exponent notation is not accepted at offset {m.start()}")
        yield kind, m.group()


def parse_path(d: str) -> GlyphPath:
    """Parse the content of a ``d`` attribute.

    Extra argument groups after a command repeat it, as in SVG; surplus
    pairs after a MoveTo become LineTos of the same mode.
    """
    groups: list[tuple[str, list[str]]] = []
    for kind, text in _tokenize(d):
        if kind == "cmd":
            if text.upper() not in _LETTERS:
                raise UnsupportedCommand(f"unsupported command {text!r}")
            groups.append((text, []))
        else:
            if not groups:
                raise MalformedNumber(f"number {text!r} before the first command")
            groups[-1][1].append(text)
    if not groups:
        raise EmptyPath("path has no commands")

    commands: list[PathCommand] = []
    for letter, nums in groups:
        kind = _LETTERS[letter.upper()]
        relative = letter.islower()
        arity = ARITY[kind]
        if arity == 0:
            if nums:
                raise ArityMismatch(f"{letter} takes no arguments, got {len(nums)}")
            commands.append(PathCommand(kind, relative))
            continue
        if not nums or len(nums) % arity:
            raise ArityMismatch(f"{letter} takes {arity} arguments per segment, got {len(nums)}")
        values = [to_deci(t) for t in nums]
        for j in range(0, len(values), arity):
            args = tuple(values[j:j + arity])
            _check_range(args, len(commands))
            k = Kind.LINE if (kind is Kind.MOVE and j) else kind
            commands.append(PathCommand(k, relative, args))
    return GlyphPath(tuple(commands))


def serialize_path(p: GlyphPath | Iterable[PathCommand]) -> str:
    return " ".join(str(cmd) for cmd in p)


def convert_mode(p: GlyphPath, target: Mode | str) -> GlyphPath:
    """Rewrite every command in absolute or relative form.

    The first MoveTo always stays absolute.
    """
    target = Mode(target)
    cx = cy = 0
    sx = sy = 0
    out: list[PathCommand] = []
    for i, cmd in enumerate(p.commands):
        kind = Kind(cmd.kind)
        if kind is Kind.CLOSE:
            out.append(PathCommand(kind, target is Mode.RELATIVE))
            cx, cy = sx, sy
            continue
        a = cmd.args
        if cmd.relative:
            absargs = tuple(v + (cy if j % 2 else cx) for j, v in enumerate(a))
        else:
            absargs = tuple(a)
        if target is Mode.ABSOLUTE or i == 0:
            newargs, rel = absargs, False
        else:
            newargs = tuple(v - (cy if j % 2 else cx) for j, v in enumerate(absargs))
            rel = True
        _check_range(newargs, i)
        out.append(PathCommand(kind, rel, newargs))
        cx, cy = absargs[-2], absargs[-1]
        if kind is Kind.MOVE:
            sx, sy = cx, cy
    return GlyphPath(tuple(out))


@dataclass(frozen=True)
class Violation:
    index: int
    rule: str
    message: str = ""

    def __str__(self) -> str:
        return f"{self.rule} @{self.index}" + (f": {self.message}" if self.message else "")


def validate_path(p) -> list[Violation]:
    """Return every invariant violation; an empty list means the path is valid.

    Accepts anything iterable of command-like objects and never raises.
    """
    try:
        commands = list(p.commands if hasattr(p, "commands") else p)
    except Exception as exc:  # diagnostic op: report, don't abort
        return [Violation(0, "not-a-path", repr(exc))]
    if not commands:
        return [Violation(0, "empty-path")]

    out: list[Violation] = []
    kinds: list[Kind | None] = []
    for i, cmd in enumerate(commands):
        try:
            kind = Kind(getattr(cmd, "kind"))
        except (ValueError, AttributeError):
            out.append(Violation(i, "unsupported-command", repr(getattr(cmd, "kind", cmd))))
            kinds.append(None)
            continue
        kinds.append(kind)
        args = getattr(cmd, "args", ())
        try:
            args = tuple(args)
        except TypeError:
            args = (args,)
        if len(args) != ARITY[kind]:
            out.append(Violation(i, "arity", f"{kind.value} expects {ARITY[kind]} args, got {len(args)}"))
        if any(not isinstance(v, int) or isinstance(v, bool) for v in args):
            out.append(Violation(i, "non-integer-coord"))
        elif any(abs(v) > MAX_DECI for v in args):
            out.append(Violation(i, "coord-out-of-range"))

    if kinds[0] is not Kind.MOVE:
        out.append(Violation(0, "first-command-not-moveto"))

    open_move = None
    drawn = False
    for i, kind in enumerate(kinds):
        if kind is Kind.MOVE:
            if open_move is not None and not drawn:
                out.append(Violation(open_move, "empty-subcontour"))
            open_move, drawn = i, False
        elif kind is not None:
            drawn = True
    if open_move is not None and not drawn:
        out.append(Violation(open_move, "empty-subcontour"))
    out.sort(key=lambda v: v.index)
    return out


# --- completions -----------------------------------------------------------

_PATH_ELEMENT = re.compile(r"<path\b[^>]*?/?>(?:\s*</path\s*>)?", re.IGNORECASE)
_D_ATTR = re.compile(r"""\sd\s*=\s*(?:"([^"]*)"|'([^']*)')""", re.IGNORECASE)


@dataclass(frozen=True)
class Diagnostic:
    line: int
    kind: str  # "non-path-content" | "invalid-path"
    error: str = ""
    text: str = ""

    def to_dict(self) -> dict:
        return {"line": self.line, "kind": self.kind, "error": self.error, "text": self.text}


@dataclass
class Extraction:
    paths: list[GlyphPath]
    diagnostics: list[Diagnostic]

    @property
    def invalid(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.kind == "invalid-path"]


def extract_paths_from_completion(raw: str) -> Extraction:
    """Pull every ``<path d="...">`` out of a model completion, line by line."""
    paths: list[GlyphPath] = []
    diags: list[Diagnostic] = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        for m in _PATH_ELEMENT.finditer(line):
            element = m.group()
            dm = _D_ATTR.search(element)
            if dm is None:
                diags.append(Diagnostic(lineno, "invalid-path", "MissingD", element))
                continue
            d = dm.group(1) if dm.group(1) is not None else dm.group(2)
            try:
                path = parse_path(d)
            except PathError as exc:
                diags.append(Diagnostic(lineno, "invalid-path", f"{type(exc).__name__}: {exc}", element))
                continue
            violations = validate_path(path)
            if violations:
                diags.append(Diagnostic(lineno, "invalid-path",
                                        "InvalidPath: " + "; ".join(map(str, violations)), element))
                continue
            paths.append(path)
        rest = _PATH_ELEMENT.sub("", line).strip()
        if rest:
            diags.append(Diagnostic(lineno, "non-path-content", "", rest))
    return Extraction(paths, diags)
