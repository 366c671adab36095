"""Prompt assembly for text- and image-referenced glyph generation."""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .errors import NoTags, RefCountOutOfRange

SYSTEM_PROMPT = (
    "You are a specialized vector glyph designer creating SVG path elements.\n"
    "Critical requirements:\n"
    "- Each glyph must be a complete, self-contained <path> element, in reading order of the given text.\n"
    "- Terminate each <path> element with a newline character.\n"
    "- Output ONLY valid SVG <path> elements."
)
TEXT_TEMPLATE = "Font design requirements: {style}.\nText content: {char}."
IMAGE_STYLE = "faithfully match the provided reference images for style and metrics"
MIN_REFS, MAX_REFS = 1, 8


class PromptMode(str, Enum):
    TEXT = "text"
    IMAGE = "image"


@dataclass(frozen=True)
class PromptBundle:
    system: str
    instruction: str
    target_char: str
    reference_image_paths: tuple[str, ...] = ()


def permute_tags(tags: Sequence[str], seed: int | None) -> list[str]:
    """Seeded permutation; ``seed=None`` keeps the given order."""
    out = list(tags)
    if seed is not None:
        random.Random(seed).shuffle(out)
    return out


def build_prompt(char: str, mode: PromptMode | str = PromptMode.TEXT,
                 tags: Sequence[str] = (), refs: Sequence[str] = (),
                 seed: int | None = None) -> PromptBundle:
    mode = PromptMode(mode)
    if mode is PromptMode.TEXT:
        if not tags:
            raise NoTags(f"text-referenced prompt for {char!r} needs at least one tag")
        style = ", ".join(permute_tags(tags, seed))
        return PromptBundle(SYSTEM_PROMPT, TEXT_TEMPLATE.format(style=style, char=char), char)
    if not MIN_REFS <= len(refs) <= MAX_REFS:
        raise RefCountOutOfRange(f"{len(refs)} reference images; expected {MIN_REFS}-{MAX_REFS}")
    return PromptBundle(SYSTEM_PROMPT, TEXT_TEMPLATE.format(style=IMAGE_STYLE, char=char), char,
                        tuple(str(r) for r in refs))


def prompt_row(font_id: str, bundle: PromptBundle, mode: PromptMode | str) -> dict:
    return {"font_id": font_id, "char": bundle.target_char, "mode": PromptMode(mode).value,
            "system": bundle.system, "instruction": bundle.instruction,
            "refs": list(bundle.reference_image_paths)}


def row_seed(seed: int, font_id: str, char: str) -> int:
    # stable across processes, unlike hash()
    return (seed * 1_000_003) ^ int(font_id[:12], 16) ^ (ord(char) << 48)


def choose_refs(available: Iterable[str], target: str, n: int, seed: int, font_id: str) -> list[str]:
    pool = sorted(c for c in available if c != target)
    rng = random.Random(row_seed(seed, font_id, target))
    return sorted(rng.sample(pool, min(n, len(pool))))


def ref_image_path(ref_dir: str | Path, font_id: str, char: str) -> str:
    # case-insensitive filesystems would merge "a" and "A"
    tag = f"u{ord(char):04X}"
    return (Path(ref_dir) / font_id / f"{tag}.pgm").as_posix()
