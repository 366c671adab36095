from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from glyphforge.corpus import Corpus, ingest, run_cascade
from glyphforge.fixtures import write_fixture_corpus
from glyphforge.path_model import GlyphPath, Kind, Mode, PathCommand, convert_mode
from glyphforge.recognizer import MockRecognizer

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ORACLES = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# --- random path construction ----------------------------------------------------

def mix_modes(absolute: GlyphPath, flags) -> GlyphPath:
    """Per-command choice between absolute and relative spelling of one path."""
    rel = convert_mode(absolute, Mode.RELATIVE)
    return GlyphPath(tuple(r if f else a for a, r, f in zip(absolute, rel, flags)))


def random_path(rng: np.random.Generator, lim: int = 50_000) -> GlyphPath:
    cmds = []
    for _ in range(int(rng.integers(1, 4))):
        cmds.append(PathCommand(Kind.MOVE, False, tuple(int(v) for v in rng.integers(-lim, lim + 1, 2))))
        for _ in range(int(rng.integers(1, 8))):
            if rng.random() < 0.5:
                cmds.append(PathCommand(Kind.LINE, False, tuple(int(v) for v in rng.integers(-lim, lim + 1, 2))))
            else:
                cmds.append(PathCommand(Kind.QUAD, False, tuple(int(v) for v in rng.integers(-lim, lim + 1, 4))))
        if rng.random() < 0.8:
            cmds.append(PathCommand(Kind.CLOSE))
    p = GlyphPath(tuple(cmds))
    return mix_modes(p, rng.random(len(p)) < 0.5)


coord = st.integers(-50_000, 50_000)


@st.composite
def glyph_paths(draw):
    cmds = []
    for _ in range(draw(st.integers(1, 3))):
        cmds.append(PathCommand(Kind.MOVE, False, (draw(coord), draw(coord))))
        for _ in range(draw(st.integers(1, 6))):
            if draw(st.booleans()):
                cmds.append(PathCommand(Kind.LINE, False, (draw(coord), draw(coord))))
            else:
                cmds.append(PathCommand(Kind.QUAD, False, tuple(draw(coord) for _ in range(4))))
        if draw(st.booleans()):
            cmds.append(PathCommand(Kind.CLOSE))
    p = GlyphPath(tuple(cmds))
    return mix_modes(p, draw(st.lists(st.booleans(), min_size=len(p), max_size=len(p))))


# --- fixture corpus ------------------------------------------------------------

@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory) -> Path:
    d = tmp_path_factory.mktemp("fixture_fonts")
    write_fixture_corpus(d)
    return d


@pytest.fixture(scope="session")
def ingested(fixture_dir):
    return ingest(fixture_dir, fixture_dir / "tags.jsonl")


@pytest.fixture(scope="session")
def cascade(ingested, fixture_dir):
    rec = MockRecognizer.from_file(fixture_dir / "mock_recognizer.json")
    return run_cascade(ingested.corpus, recognizer=rec)


@pytest.fixture(scope="session")
def filtered(cascade) -> Corpus:
    return cascade.corpus
