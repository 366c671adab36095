"""``glyphforge`` command-line entry point.

Exit status: 0 success, 1 validation failure, 2 I/O or remote failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Sequence

from . import corpus as cp
from .config import RunConfig, resolve_config
from .errors import (
    ConfigError,
    DimMismatch,
    ExternalCountMissing,
    GlyphforgeError,
    GroundTruthUnrecognizable,
    KeyMismatch,
    NoTags,
    NumericalFailure,
    PathError,
    RecognizerUnavailable,
    RefCountOutOfRange,
    TooFewSamples,
)
from .eval_suite import EmbeddingSet, ScoreConfig, evaluate, frechet_distance, load_external_scores, perfect_recognizer
from .manifest_io import atomic_dir, atomic_write, read_jsonl, write_json, write_jsonl
from .path_model import extract_paths_from_completion, parse_path, serialize_path
from .prompts import PromptMode, build_prompt, choose_refs, prompt_row, ref_image_path, row_seed
from .raster import rasterize, render_wordmark
from .recognizer import MockRecognizer, RemoteRecognizer

log = logging.getLogger("glyphforge")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2
DEFAULT_SPACE_ADVANCE = 2500  # deci-units, a quarter em

VALIDATION_ERRORS = (ConfigError, PathError, GroundTruthUnrecognizable, KeyMismatch, DimMismatch,
                     TooFewSamples, NumericalFailure, NoTags, RefCountOutOfRange, ExternalCountMissing)


class Ctx:
    def __init__(self, args: argparse.Namespace, cfg: RunConfig):
        self.args = args
        self.cfg = cfg

    def counter(self) -> cp.TokenCounter:
        if self.cfg.token_mode == cp.TokenMode.EXTERNAL.value:
            path = getattr(self.args, "token_counts", None)
            if not path:
                raise ConfigError("--token-mode external needs --token-counts FILE")
            return cp.TokenCounter.from_file(path)
        return cp.TokenCounter(self.cfg.token_mode)

    def recognizer(self, mock_default=None):
        spec = self.cfg.recognizer
        if spec == "none":
            return None
        if spec == "mock":
            mock_file = getattr(self.args, "mock_file", None)
            if mock_file:
                return MockRecognizer.from_file(mock_file)
            return mock_default() if mock_default else MockRecognizer(default=cp.SANITY_TEXT)
        return RemoteRecognizer(spec, max_in_flight=self.cfg.concurrency_limit)


# --- subcommands -----------------------------------------------------------------

def cmd_fixtures(ctx: Ctx) -> int:
    from .fixtures import write_fixture_corpus
    with atomic_dir(ctx.args.out) as tmp:
        fc = write_fixture_corpus(tmp)
    print(f"wrote {len(fc.files)} fixture fonts to {ctx.args.out}", file=sys.stderr)
    return EXIT_OK


def _write_corpus(out: Path, corpus: cp.Corpus) -> None:
    write_jsonl(out / "fonts.jsonl", (f.to_dict() for f in corpus.fonts))
    write_jsonl(out / "glyphs.jsonl", (g.to_dict() for g in corpus.glyphs))


def cmd_ingest(ctx: Ctx) -> int:
    a = ctx.args
    res = cp.ingest(a.directory, a.tags, ctx.counter(), jobs=ctx.cfg.concurrency_limit)
    out = Path(a.out)
    _write_corpus(out, res.corpus)
    write_jsonl(out / "diagnostics.jsonl", res.diagnostics)
    for d in res.diagnostics:
        print(f"skipped {d['source_path']}: {d['reason']}", file=sys.stderr)
    print(f"{len(res.corpus.fonts)} fonts, {len(res.corpus.glyphs)} glyphs", file=sys.stderr)
    return EXIT_OK


def cmd_filter(ctx: Ctx) -> int:
    a, cfg = ctx.args, ctx.cfg
    src = Path(a.manifests)
    corpus = cp.Corpus.load(src)
    res = cp.run_cascade(corpus, cfg.quantile, ctx.counter(), ctx.recognizer(), cfg.image_size,
                         cfg.padding, cfg.concurrency_limit)
    out = Path(a.out) if a.out else src / "filtered"
    _write_corpus(out, res.corpus)
    write_json(out / "cascade.json", res.report())
    print(json.dumps(res.counts), file=sys.stderr)
    return EXIT_OK


def cmd_split(ctx: Ctx) -> int:
    a, cfg = ctx.args, ctx.cfg
    src = Path(a.manifests)
    corpus = cp.Corpus.load(src)
    manifest = cp.split_families(corpus.fonts, cfg.seed, cfg.test_fraction)
    gs = cp.glyph_filters(corpus.glyphs, manifest, cfg.quantile)
    out = Path(a.out) if a.out else src
    write_json(out / "split.json", manifest.to_dict())
    write_jsonl(out / "train.jsonl", (g.to_dict() for g in gs.train))
    write_jsonl(out / "test.jsonl", (g.to_dict() for g in gs.test))
    write_jsonl(out / "glyph_filter_drops.jsonl", gs.dropped)
    print(f"{len(manifest.train_families)} train / {len(manifest.test_families)} test families; "
          f"{len(gs.train)} train / {len(gs.test)} test glyphs", file=sys.stderr)
    return EXIT_OK


def cmd_stats(ctx: Ctx) -> int:
    a = ctx.args
    stats = cp.corpus_stats(cp.Corpus.load(a.manifests), ctx.counter())
    if a.csv:
        atomic_write(a.csv, cp.stats_csv(stats))
    if a.out:
        write_json(a.out, stats)
    else:
        print(json.dumps(stats, indent=2))
    return EXIT_OK


def _image_bytes(img, fmt: str) -> bytes:
    return img.to_png() if fmt == "png" else img.to_pgm()


def cmd_render(ctx: Ctx) -> int:
    a, cfg = ctx.args, ctx.cfg
    corpus = cp.Corpus.load(a.manifests)
    by_font = corpus.glyphs_by_font()
    with atomic_dir(a.out) as tmp:
        for fid in sorted(by_font):
            glyphs = {c: g.normalized() for c, g in by_font[fid].items()}
            if a.text:
                img = render_wordmark(glyphs, a.text, cfg.image_size, cfg.padding, DEFAULT_SPACE_ADVANCE)
                (tmp / f"{fid}.{a.format}").write_bytes(_image_bytes(img, a.format))
                continue
            (tmp / fid).mkdir()
            for ch, g in sorted(glyphs.items()):
                img = rasterize(g.path, cfg.image_size, cfg.padding)
                (tmp / fid / f"u{ord(ch):04X}.{a.format}").write_bytes(_image_bytes(img, a.format))
    return EXIT_OK


def cmd_prompts(ctx: Ctx) -> int:
    a, cfg = ctx.args, ctx.cfg
    src = Path(a.manifests)
    corpus = cp.Corpus.load(src)
    records = [cp.GlyphRecord.from_dict(r) for r in read_jsonl(a.glyphs)] if a.glyphs else corpus.glyphs
    fonts = {f.font_id: f for f in corpus.fonts}
    by_font = corpus.glyphs_by_font()
    mode = PromptMode(a.mode)
    rows, skipped = [], 0
    ref_dir = Path(a.ref_dir) if a.ref_dir else Path(a.out).with_name(Path(a.out).stem + "_refs")
    needed: set[tuple[str, str]] = set()
    for rec in sorted(records, key=lambda r: (r.font_id, r.char)):
        seed = row_seed(cfg.seed, rec.font_id, rec.char)
        try:
            if mode is PromptMode.TEXT:
                bundle = build_prompt(rec.char, mode, fonts[rec.font_id].tags, seed=seed)
            else:
                chars = choose_refs(by_font[rec.font_id], rec.char, a.refs, cfg.seed, rec.font_id)
                needed.update((rec.font_id, c) for c in chars)
                bundle = build_prompt(rec.char, mode, refs=[ref_image_path(ref_dir, rec.font_id, c)
                                                            for c in chars])
        except NoTags as exc:
            skipped += 1
            log.warning("%s/%s: %s", rec.font_id, rec.char, exc)
            continue
        rows.append(prompt_row(rec.font_id, bundle, mode))
    if needed:
        with atomic_dir(ref_dir) as tmp:
            for fid, ch in sorted(needed):
                img = rasterize(parse_path(by_font[fid][ch].d_abs), cfg.image_size, cfg.padding)
                dest = tmp / Path(ref_image_path("", fid, ch))
                dest.parent.mkdir(parents=True, exist_ok=True)
                dest.write_bytes(img.to_pgm())
    write_jsonl(a.out, rows)
    print(f"{len(rows)} prompts written, {skipped} skipped", file=sys.stderr)
    return EXIT_OK


def cmd_validate(ctx: Ctx) -> int:
    a = ctx.args
    raw = Path(a.completions).read_text(encoding="utf-8")
    ext = extract_paths_from_completion(raw)
    for d in ext.diagnostics:
        print(json.dumps(d.to_dict()))
    if a.out:
        write_json(a.out, {"paths": [serialize_path(p) for p in ext.paths],
                           "diagnostics": [d.to_dict() for d in ext.diagnostics]})
    print(f"{len(ext.paths)} valid paths, {len(ext.invalid)} invalid, "
          f"{len(ext.diagnostics) - len(ext.invalid)} non-path lines", file=sys.stderr)
    return EXIT_INVALID if ext.invalid else EXIT_OK


def cmd_eval(ctx: Ctx) -> int:
    a, cfg = ctx.args, ctx.cfg
    gt_rows = list(read_jsonl(a.gt))
    pred_rows = list(read_jsonl(a.pred))
    score_cfg = ScoreConfig(size=cfg.image_size, padding=cfg.padding, frame=a.frame)
    rec = ctx.recognizer(lambda: perfect_recognizer(gt_rows, score_cfg))
    embeddings = None
    if a.gen_embeddings or a.ref_embeddings:
        if not (a.gen_embeddings and a.ref_embeddings):
            raise ConfigError("--gen-embeddings and --ref-embeddings go together")
        embeddings = (EmbeddingSet.load(a.gen_embeddings, "generated"),
                      EmbeddingSet.load(a.ref_embeddings, "reference"))
    external = {}
    for spec in a.external or ():
        name, sep, path = spec.partition("=")
        if not sep or not name:
            raise ConfigError(f"--external expects NAME=FILE, got {spec!r}")
        external[name] = load_external_scores(path)
    report = evaluate(pred_rows, gt_rows, rec, embeddings, external, score_cfg, cfg.concurrency_limit)
    if a.out:
        write_json(a.out, report)
    else:
        print(json.dumps(report, indent=2))
    agg = report["aggregates"]
    print(" ".join(f"{k}={v:.4f}" for k, v in agg.items() if v is not None), file=sys.stderr)
    return EXIT_OK


def cmd_fid(ctx: Ctx) -> int:
    a = ctx.args
    value = frechet_distance(EmbeddingSet.load(a.a, "generated"), EmbeddingSet.load(a.b, "reference"))
    print(json.dumps({"fid": value}))
    return EXIT_OK


# --- argument parsing ------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    # SUPPRESS keeps a subcommand's unset flags from clobbering ones given before it
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = p.add_argument_group("run configuration")
    g.add_argument("--seed", type=int)
    g.add_argument("--quantile", type=float)
    g.add_argument("--test-fraction", type=float)
    g.add_argument("--size", type=int, dest="image_size")
    g.add_argument("--padding", type=float)
    g.add_argument("--token-mode", choices=[m.value for m in cp.TokenMode])
    g.add_argument("--recognizer", help="none, mock, or an http(s) endpoint")
    g.add_argument("--jobs", type=int, dest="concurrency_limit")
    g.add_argument("--print-config", action="store_true",
                   help="print the resolved configuration as JSON and exit")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="glyphforge", parents=[common],
                                     description="Vector-glyph corpus pipeline and evaluation.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add(name: str, fn: Callable[[Ctx], int], help: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, parents=[common], help=help, description=help)
        sp.set_defaults(func=fn)
        return sp

    sp = add("fixtures", cmd_fixtures, "write the synthetic test-font corpus")
    sp.add_argument("--out", required=True)

    sp = add("ingest", cmd_ingest, "load fonts into font and glyph manifests")
    sp.add_argument("directory")
    sp.add_argument("--tags")
    sp.add_argument("--out", required=True)
    sp.add_argument("--token-counts")

    sp = add("filter", cmd_filter, "run the coverage/length/dedup/sanity cascade")
    sp.add_argument("manifests")
    sp.add_argument("--out", help="default: MANIFESTS/filtered")
    sp.add_argument("--mock-file")
    sp.add_argument("--token-counts")

    sp = add("split", cmd_split, "family-level train/test split plus glyph filters")
    sp.add_argument("manifests")
    sp.add_argument("--out", help="default: MANIFESTS")

    sp = add("stats", cmd_stats, "tag-count and token-length histograms")
    sp.add_argument("manifests")
    sp.add_argument("--out")
    sp.add_argument("--csv")
    sp.add_argument("--token-counts")

    sp = add("render", cmd_render, "rasterize glyphs or a wordmark per font")
    sp.add_argument("manifests")
    sp.add_argument("--out", required=True)
    sp.add_argument("--text", help="render this wordmark instead of single glyphs")
    sp.add_argument("--format", choices=("pgm", "png"), default="pgm")

    sp = add("prompts", cmd_prompts, "assemble text- or image-referenced prompts")
    sp.add_argument("manifests")
    sp.add_argument("--out", required=True)
    sp.add_argument("--mode", choices=[m.value for m in PromptMode], default="text")
    sp.add_argument("--glyphs", help="glyph manifest to prompt for (default: all glyphs)")
    sp.add_argument("--refs", type=int, default=4, help="reference images per image prompt")
    sp.add_argument("--ref-dir")

    sp = add("validate", cmd_validate, "extract and check <path> elements from completions")
    sp.add_argument("--completions", required=True)
    sp.add_argument("--out")

    sp = add("eval", cmd_eval, "score predictions against ground truth")
    sp.add_argument("--pred", required=True)
    sp.add_argument("--gt", required=True)
    sp.add_argument("--out")
    sp.add_argument("--mock-file")
    sp.add_argument("--frame", choices=("gt", "independent"), default="gt")
    sp.add_argument("--gen-embeddings")
    sp.add_argument("--ref-embeddings")
    sp.add_argument("--external", action="append", metavar="NAME=FILE")

    sp = add("fid", cmd_fid, "Frechet distance between two embedding files")
    sp.add_argument("a")
    sp.add_argument("b")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    keys = ("seed", "quantile", "test_fraction", "image_size", "padding", "token_mode",
            "recognizer", "concurrency_limit")
    try:
        cfg = resolve_config({k: getattr(args, k, None) for k in keys})
    except ConfigError as exc:
        print(f"glyphforge: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if getattr(args, "print_config", False):
        print(json.dumps(cfg.to_dict(), indent=2))
        return EXIT_OK
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return EXIT_IO
    try:
        return args.func(Ctx(args, cfg))
    except VALIDATION_ERRORS as exc:
        print(f"glyphforge {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, ValueError, RecognizerUnavailable, GlyphforgeError) as exc:
        print(f"glyphforge {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
