"""Font-corpus ingestion, filtering cascade, family splits and statistics."""

from __future__ import annotations

import hashlib
import logging
import math
import random
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import ExternalCountMissing, FontError, PathError
from .manifest_io import read_jsonl
from .path_model import Mode, convert_mode, parse_path, serialize_path
from .raster import image_ssim, rasterize, render_wordmark
from .recognizer import ABSTAIN, DEFAULT_INSTRUCTION, Recognizer, RecognizerRequest, recognize_all
from .truetype import (
    ALPHANUMERICS,
    NormalizedGlyph,
    extract_glyph,
    load_font,
    normalize_glyph,
)

log = logging.getLogger(__name__)

PANGRAM = "The quick brown fox jumps over the lazy dog"
SANITY_TEXT = "GgAa"
MAX_TAGS = 15
FONT_SUFFIXES = (".ttf", ".otf")
UNICASE_SSIM = 0.95


def font_id_of(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


def path_hash(d_abs: str) -> str:
    return hashlib.sha256(d_abs.encode("utf-8")).hexdigest()


@dataclass
class FontRecord:
    font_id: str
    family: str
    style: str
    tags: list[str]
    source_path: str

    def to_dict(self) -> dict:
        return {"font_id": self.font_id, "family": self.family, "style": self.style,
                "tags": list(self.tags), "source_path": self.source_path}

    @classmethod
    def from_dict(cls, d: Mapping) -> "FontRecord":
        return cls(d["font_id"], d["family"], d["style"], list(d.get("tags", [])), d.get("source_path", ""))


@dataclass
class GlyphRecord:
    font_id: str
    family: str
    char: str
    d_abs: str
    d_rel: str
    advance: int
    token_len: int

    def to_dict(self) -> dict:
        return {"font_id": self.font_id, "family": self.family, "char": self.char,
                "d_abs": self.d_abs, "d_rel": self.d_rel, "advance": self.advance,
                "token_len": self.token_len}

    @classmethod
    def from_dict(cls, d: Mapping) -> "GlyphRecord":
        return cls(d["font_id"], d["family"], d["char"], d["d_abs"], d["d_rel"],
                   int(d["advance"]), int(d["token_len"]))

    @property
    def key(self) -> tuple[str, str]:
        return self.font_id, self.char

    def normalized(self) -> NormalizedGlyph:
        return NormalizedGlyph(self.char, parse_path(self.d_abs), self.advance)


@dataclass
class Corpus:
    fonts: list[FontRecord]
    glyphs: list[GlyphRecord]

    def __post_init__(self):
        self.fonts = sorted(self.fonts, key=lambda f: f.font_id)
        self.glyphs = sorted(self.glyphs, key=lambda g: (g.font_id, g.char))

    def glyphs_by_font(self) -> dict[str, dict[str, GlyphRecord]]:
        out: dict[str, dict[str, GlyphRecord]] = {f.font_id: {} for f in self.fonts}
        for g in self.glyphs:
            out.setdefault(g.font_id, {})[g.char] = g
        return out

    def restrict(self, font_ids: Iterable[str]) -> "Corpus":
        keep = set(font_ids)
        return Corpus([f for f in self.fonts if f.font_id in keep],
                      [g for g in self.glyphs if g.font_id in keep])

    @classmethod
    def load(cls, directory: str | Path) -> "Corpus":
        directory = Path(directory)
        fonts = [FontRecord.from_dict(d) for d in read_jsonl(directory / "fonts.jsonl")]
        glyphs = [GlyphRecord.from_dict(d) for d in read_jsonl(directory / "glyphs.jsonl")]
        return cls(fonts, glyphs)


# --- token counting --------------------------------------------------------------

class TokenMode(str, Enum):
    CHARS = "chars"
    FIELDS = "fields"
    EXTERNAL = "external"


class TokenCounter:
    """Counts path tokens; External mode looks counts up by (font_id, char)."""

    def __init__(self, mode: TokenMode | str = TokenMode.FIELDS,
                 counts: Mapping[tuple[str, str], int] | None = None):
        self.mode = TokenMode(mode)
        self.counts = dict(counts or {})

    @classmethod
    def from_file(cls, path: str | Path) -> "TokenCounter":
        counts = {(r["font_id"], r["char"]): int(r["count"]) for r in read_jsonl(path)}
        return cls(TokenMode.EXTERNAL, counts)

    def __call__(self, d: str, key: tuple[str, str] | None = None) -> int:
        if self.mode is TokenMode.CHARS:
            return len(d)
        if self.mode is TokenMode.FIELDS:
            return len(d.split())
        if key is None or key not in self.counts:
            raise ExternalCountMissing(key)
        return self.counts[key]


def token_count(d: str, mode: TokenMode | str = TokenMode.FIELDS,
                external: Mapping[tuple[str, str], int] | None = None,
                key: tuple[str, str] | None = None) -> int:
    return TokenCounter(mode, external)(d, key)


def nearest_rank(values: Iterable[float], q: float):
    """The ceil(q*n)-th smallest value, without interpolation."""
    vals = sorted(values)
    if not vals:
        return None
    rank = max(1, math.ceil(Decimal(str(q)) * len(vals)))
    return vals[min(rank, len(vals)) - 1]


# --- ingestion -----------------------------------------------------------------

@dataclass
class IngestResult:
    corpus: Corpus
    diagnostics: list[dict] = field(default_factory=list)


def load_tags(path: str | Path | None) -> dict[str, list[str]]:
    if path is None:
        return {}
    return {row["file"]: list(row.get("tags", [])) for row in read_jsonl(path)}


def glyph_records_for(data: bytes, font_id: str, family: str,
                      counter: TokenCounter) -> tuple[list[GlyphRecord], str, str]:
    font = load_font(data, chars=ALPHANUMERICS + " ")
    records = []
    for ch in ALPHANUMERICS:
        if ch not in font.char_map:
            continue
        raw = extract_glyph(font, ch)
        if raw.is_empty:
            continue
        g = normalize_glyph(raw, font.units_per_em, char=ch)
        d_abs = serialize_path(g.path)
        d_rel = serialize_path(convert_mode(g.path, Mode.RELATIVE))
        records.append(GlyphRecord(font_id, family, ch, d_abs, d_rel, g.advance,
                                   counter(d_abs, (font_id, ch))))
    return records, font.family_name, font.style_name


def _ingest_one(path: Path, root: Path, tags: dict[str, list[str]], counter: TokenCounter):
    rel = path.relative_to(root).as_posix()
    try:
        data = path.read_bytes()
    except OSError as exc:
        return None, {"source_path": rel, "stage": "ingest", "reason": f"unreadable: {exc}"}
    fid = font_id_of(data)
    font_tags = tags.get(rel, tags.get(path.name, []))
    if len(font_tags) > MAX_TAGS:
        return None, {"source_path": rel, "font_id": fid, "stage": "ingest",
                      "reason": f"over-cap: {len(font_tags)} tags > {MAX_TAGS}"}
    try:
        font = load_font(data, chars=())
        family = font.family_name or path.stem
        style = font.style_name or "Regular"
        glyphs, _, _ = glyph_records_for(data, fid, family, counter)
    except (FontError, PathError, ExternalCountMissing) as exc:
        return None, {"source_path": rel, "font_id": fid, "stage": "ingest",
                      "reason": f"{type(exc).__name__}: {exc}"}
    return (FontRecord(fid, family, style, list(font_tags), rel), glyphs), None


def ingest(directory: str | Path, tags_file: str | Path | None = None,
           counter: TokenCounter | None = None, jobs: int = 1) -> IngestResult:
    root = Path(directory)
    if not root.is_dir():
        raise FileNotFoundError(f"font directory not found: {root}")
    counter = counter or TokenCounter()
    tags = load_tags(tags_file)
    files = sorted(p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in FONT_SUFFIXES)

    def work(p):
        return _ingest_one(p, root, tags, counter)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, files))
    else:
        results = [work(p) for p in files]

    fonts, glyphs, diags = [], [], []
    seen: dict[str, str] = {}
    for ok, diag in results:
        if diag is not None:
            log.info("skipping %s: %s", diag["source_path"], diag["reason"])
            diags.append(diag)
            continue
        rec, recs = ok
        if rec.font_id in seen:
            diags.append({"source_path": rec.source_path, "font_id": rec.font_id, "stage": "ingest",
                          "reason": f"duplicate-file: same bytes as {seen[rec.font_id]}"})
            continue
        seen[rec.font_id] = rec.source_path
        fonts.append(rec)
        glyphs.extend(recs)
    return IngestResult(Corpus(fonts, glyphs), diags)


# --- font filters --------------------------------------------------------------

@dataclass
class StageResult:
    corpus: Corpus
    dropped: list[dict] = field(default_factory=list)


def filter_coverage(corpus: Corpus) -> StageResult:
    by_font = corpus.glyphs_by_font()
    keep, dropped = [], []
    for f in corpus.fonts:
        missing = [c for c in ALPHANUMERICS if c not in by_font.get(f.font_id, {})]
        if missing:
            dropped.append({"font_id": f.font_id, "stage": "coverage",
                            "reason": "missing " + "".join(missing)})
        else:
            keep.append(f.font_id)
    return StageResult(corpus.restrict(keep), dropped)


def _pangram_paths(glyphs: Mapping[str, GlyphRecord]) -> list[GlyphRecord]:
    return [glyphs[c] for c in PANGRAM if not c.isspace()]


def pangram_length(glyphs: Mapping[str, GlyphRecord], counter: TokenCounter) -> int:
    recs = _pangram_paths(glyphs)
    if counter.mode is TokenMode.EXTERNAL:
        return sum(counter(r.d_abs, r.key) for r in recs)
    return counter(" ".join(r.d_abs for r in recs))


def filter_pangram_length(corpus: Corpus, q: float = 0.9,
                          counter: TokenCounter | None = None) -> StageResult:
    counter = counter or TokenCounter()
    by_font = corpus.glyphs_by_font()
    lengths = {f.font_id: pangram_length(by_font[f.font_id], counter) for f in corpus.fonts}
    cut = nearest_rank(lengths.values(), q)
    keep = [fid for fid, n in lengths.items() if n <= cut]
    dropped = [{"font_id": fid, "stage": "pangram_length", "reason": f"length {n} > quantile {cut}"}
               for fid, n in sorted(lengths.items()) if n > cut]
    return StageResult(corpus.restrict(keep), dropped)


def pangram_hash(glyphs: Mapping[str, GlyphRecord]) -> str:
    return path_hash("\n".join(r.d_abs for r in _pangram_paths(glyphs)))


def dedup_pangram(corpus: Corpus) -> StageResult:
    by_font = corpus.glyphs_by_font()
    first: dict[str, str] = {}
    dropped = []
    for f in corpus.fonts:  # sorted by font_id, so the smallest id wins
        h = pangram_hash(by_font[f.font_id])
        if h in first:
            dropped.append({"font_id": f.font_id, "stage": "dedup", "reason": f"duplicate of {first[h]}"})
        else:
            first[h] = f.font_id
    return StageResult(corpus.restrict(first.values()), dropped)


def sanity_check(corpus: Corpus, recognizer: Recognizer | None = None, size: int = 192,
                 padding: float = 0.1, jobs: int = 1,
                 instruction: str = DEFAULT_INSTRUCTION) -> StageResult:
    """Drop unicase and unreadable fonts by recognizing a "GgAa" wordmark.

    Without a recognizer, a font is flagged when its G and g rasters have
    SSIM above 0.95.
    """
    by_font = corpus.glyphs_by_font()
    keep, dropped = [], []
    if recognizer is None:
        for f in corpus.fonts:
            g = by_font[f.font_id]
            s = image_ssim(rasterize(parse_path(g["G"].d_abs), size, padding),
                           rasterize(parse_path(g["g"].d_abs), size, padding))
            if s > UNICASE_SSIM:
                dropped.append({"font_id": f.font_id, "stage": "sanity",
                                "reason": f"unicase-heuristic: ssim(G, g) = {s:.4f}"})
            else:
                keep.append(f.font_id)
        return StageResult(corpus.restrict(keep), dropped)

    requests = []
    for f in corpus.fonts:
        glyphs = {c: by_font[f.font_id][c].normalized() for c in set(SANITY_TEXT)}
        img = render_wordmark(glyphs, SANITY_TEXT, size, padding)
        requests.append(RecognizerRequest(img.to_pgm(), instruction, ALPHANUMERICS, f.font_id))
    labels = recognize_all(recognizer, requests, jobs)
    for f, label in zip(corpus.fonts, labels):
        text = label.strip()
        if text == SANITY_TEXT:
            keep.append(f.font_id)
            continue
        if text == ABSTAIN:
            reason = "abstain"
        elif text.casefold() == SANITY_TEXT.casefold():
            reason = f"case-collapsed: {text!r}"
        else:
            reason = f"mismatch: {text!r}"
        dropped.append({"font_id": f.font_id, "stage": "sanity", "reason": reason})
    return StageResult(corpus.restrict(keep), dropped)


@dataclass
class CascadeResult:
    corpus: Corpus
    counts: dict[str, int]
    dropped: list[dict]

    def report(self) -> dict:
        return {"counts": dict(self.counts), "dropped": list(self.dropped)}


def run_cascade(corpus: Corpus, q: float = 0.9, counter: TokenCounter | None = None,
                recognizer: Recognizer | None = None, size: int = 192, padding: float = 0.1,
                jobs: int = 1) -> CascadeResult:
    """coverage -> pangram length -> dedup -> sanity, in that fixed order."""
    counts = {"input": len(corpus.fonts)}
    dropped: list[dict] = []
    stages = [
        ("coverage", lambda c: filter_coverage(c)),
        ("pangram_length", lambda c: filter_pangram_length(c, q, counter)),
        ("dedup", lambda c: dedup_pangram(c)),
        ("sanity", lambda c: sanity_check(c, recognizer, size, padding, jobs)),
    ]
    for name, stage in stages:
        res = stage(corpus)
        corpus = res.corpus
        dropped.extend(res.dropped)
        counts[name] = len(corpus.fonts)
    return CascadeResult(corpus, counts, dropped)


# --- splits --------------------------------------------------------------------

@dataclass
class SplitManifest:
    seed: int
    test_fraction: float
    train_families: list[str]
    test_families: list[str]

    def label(self, family: str) -> str:
        return "test" if family in set(self.test_families) else "train"

    def to_dict(self) -> dict:
        return {"seed": self.seed, "test_fraction": self.test_fraction,
                "train_families": list(self.train_families), "test_families": list(self.test_families)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "SplitManifest":
        return cls(int(d["seed"]), float(d["test_fraction"]), list(d["train_families"]),
                   list(d["test_families"]))


def split_families(fonts: Iterable[FontRecord], seed: int, test_fraction: float) -> SplitManifest:
    if not 0 <= test_fraction <= 1:
        raise ValueError("test_fraction must be within [0, 1]")
    families = sorted({f.family for f in fonts})
    random.Random(seed).shuffle(families)
    n_test = math.ceil(Decimal(str(test_fraction)) * len(families))
    return SplitManifest(seed, test_fraction, sorted(families[n_test:]), sorted(families[:n_test]))


@dataclass
class GlyphSplit:
    train: list[GlyphRecord]
    test: list[GlyphRecord]
    dropped: list[dict] = field(default_factory=list)


def glyph_filters(records: Iterable[GlyphRecord], split: SplitManifest, q: float = 0.9) -> GlyphSplit:
    """Drop over-long training glyphs and test glyphs that duplicate training outlines."""
    records = list(records)
    test_fams = set(split.test_families)
    train = [r for r in records if r.family not in test_fams]
    test = [r for r in records if r.family in test_fams]
    dropped = []
    cut = nearest_rank((r.token_len for r in train), q)
    seen = {path_hash(r.d_abs) for r in train}
    kept_train = []
    for r in train:
        if r.token_len > cut:
            dropped.append({"font_id": r.font_id, "char": r.char, "split": "train",
                            "reason": f"token_len {r.token_len} > quantile {cut}"})
        else:
            kept_train.append(r)
    kept_test = []
    for r in test:
        if path_hash(r.d_abs) in seen:
            dropped.append({"font_id": r.font_id, "char": r.char, "split": "test",
                            "reason": "outline duplicates a training glyph"})
        else:
            kept_test.append(r)
    return GlyphSplit(kept_train, kept_test, dropped)


# --- statistics ----------------------------------------------------------------

def _histogram(values: list[int], bins: int = 20) -> dict:
    if not values:
        return {"edges": [], "counts": []}
    lo, hi = min(values), max(values)
    if lo == hi:
        return {"edges": [float(lo), float(hi) + 1.0], "counts": [len(values)]}
    counts, edges = np.histogram(np.asarray(values, dtype=np.float64), bins=bins, range=(lo, hi))
    return {"edges": [float(e) for e in edges], "counts": [int(c) for c in counts]}


def style_description(tags: Iterable[str]) -> str:
    return ", ".join(tags)


def corpus_stats(corpus: Corpus, counter: TokenCounter | None = None, bins: int = 20) -> dict:
    counter = counter or TokenCounter()
    text_counter = counter if counter.mode is not TokenMode.EXTERNAL else TokenCounter()
    tag_hist = Counter(len(f.tags) for f in corpus.fonts)
    input_lengths = [text_counter(style_description(f.tags)) for f in corpus.fonts]
    output_lengths = [g.token_len for g in corpus.glyphs]
    return {
        "fonts": len(corpus.fonts),
        "glyphs": len(corpus.glyphs),
        "tag_count": {str(k): tag_hist[k] for k in sorted(tag_hist)},
        "input_token_length": _histogram(input_lengths, bins),
        "output_token_length": _histogram(output_lengths, bins),
    }


def stats_csv(stats: dict) -> str:
    lines = ["histogram,bin_lo,bin_hi,count"]
    for k, v in stats["tag_count"].items():
        lines.append(f"tag_count,{k},{k},{v}")
    for name in ("input_token_length", "output_token_length"):
        h = stats[name]
        for lo, hi, c in zip(h["edges"], h["edges"][1:], h["counts"]):
            lines.append(f"{name},{lo:g},{hi:g},{c}")
    return "\n".join(lines) + "\n"

