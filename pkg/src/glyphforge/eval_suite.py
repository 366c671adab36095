"""Metric battery for generated glyphs: R-ACC, Chamfer variants, raster metrics, FID."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DimMismatch,
    EmptyOutline,
    GroundTruthUnrecognizable,
    KeyMismatch,
    NumericalFailure,
    PathError,
    TooFewSamples,
)
from .geometry import AlignMode, apply_normalization, chamfer, icp_align, normalization, sample_uniform
from .path_model import GlyphPath, extract_paths_from_completion, parse_path, serialize_path, validate_path
from .raster import RasterImage, image_l2, image_psnr, image_ssim, rasterize
from .recognizer import ABSTAIN, DEFAULT_INSTRUCTION, Recognizer, RecognizerRequest, recognize_all
from .truetype import ALPHANUMERICS

FID_EPS = 1e-6
EIG_CLAMP = -1e-8
METRICS = ("cd", "cd_t", "cd_st", "l2", "psnr", "ssim")


# --- recognition accuracy ------------------------------------------------------

def _accuracy(labels: Sequence[str], targets: Sequence[str], cased: bool) -> float:
    if not targets:
        return 0.0
    hits = 0
    for label, target in zip(labels, targets):
        if label == ABSTAIN:
            continue
        if label == target or (not cased and label.casefold() == target.casefold()):
            hits += 1
    return hits / len(targets)


def r_acc(gen_labels: Sequence[str], gt_labels: Sequence[str], targets: Sequence[str],
          cased: bool = True) -> float:
    """100 * acc(generated) / acc(ground truth); may exceed 100."""
    if not len(gen_labels) == len(gt_labels) == len(targets):
        raise ValueError("label and target lists must have equal length")
    gt = _accuracy(gt_labels, targets, cased)
    if gt == 0:
        raise GroundTruthUnrecognizable("no ground-truth glyph was recognized")
    return 100.0 * _accuracy(gen_labels, targets, cased) / gt


# --- pair scoring --------------------------------------------------------------

@dataclass(frozen=True)
class ParseFailure:
    error: str
    raw: str = ""


@dataclass(frozen=True)
class GlyphPair:
    id: str
    target_char: str
    gt: GlyphPath
    pred: GlyphPath | ParseFailure
    tags: tuple[str, ...] = ()


@dataclass(frozen=True)
class Sentinel:
    cd: float = 100.0
    l2: float = 1.0
    psnr: float = 0.0
    ssim: float = 0.0

    def metrics(self) -> dict:
        return {"cd": self.cd, "cd_t": self.cd, "cd_st": self.cd,
                "l2": self.l2, "psnr": self.psnr, "ssim": self.ssim}


@dataclass(frozen=True)
class ScoreConfig:
    n_points: int = 200
    size: int = 192
    padding: float = 0.1
    frame: str = "gt"  # "gt": both clouds in the ground truth's normalized frame; "independent"
    sentinel: Sentinel = Sentinel()

    def __post_init__(self):
        if self.frame not in ("gt", "independent"):
            raise ValueError(f"unknown frame {self.frame!r}")


@lru_cache(maxsize=4096)
def _raster_cached(d: str, size: int, padding: float) -> RasterImage:
    return rasterize(parse_path(d), size, padding)


@lru_cache(maxsize=4096)
def _cloud_cached(d: str, n: int):
    return sample_uniform(parse_path(d), n)


def score_pair(pair: GlyphPair, cfg: ScoreConfig = ScoreConfig()) -> dict:
    """Per-pair metrics; a failed prediction gets the sentinel row."""
    if isinstance(pair.pred, ParseFailure):
        return {**cfg.sentinel.metrics(), "parse_failure": pair.pred.error}
    gt_d, pred_d = serialize_path(pair.gt), serialize_path(pair.pred)
    try:
        pred_cloud = _cloud_cached(pred_d, cfg.n_points)
    except EmptyOutline as exc:
        return {**cfg.sentinel.metrics(), "parse_failure": f"EmptyOutline: {exc}"}
    gt_cloud = _cloud_cached(gt_d, cfg.n_points)
    center, scale = normalization(gt_cloud)
    g = apply_normalization(gt_cloud, center, scale)
    if cfg.frame == "gt":
        p = apply_normalization(pred_cloud, center, scale)
    else:
        p = apply_normalization(pred_cloud, *normalization(pred_cloud))
    cd = chamfer(p, g)
    t_align, cd_t = icp_align(p, g, AlignMode.TRANSLATION)
    cd_t = min(cd_t, cd)
    _, cd_st = icp_align(p, g, AlignMode.TRANSLATION_SCALE, inits=[t_align])
    cd_st = min(cd_st, cd_t)
    ra = _raster_cached(pred_d, cfg.size, cfg.padding)
    rb = _raster_cached(gt_d, cfg.size, cfg.padding)
    return {"cd": cd, "cd_t": cd_t, "cd_st": cd_st, "l2": image_l2(ra, rb),
            "psnr": image_psnr(ra, rb), "ssim": image_ssim(ra, rb), "parse_failure": None}


# --- Frechet distance ------------------------------------------------------------

@dataclass(frozen=True)
class EmbeddingSet:
    label: str
    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise ValueError("vectors must be an N x dim array")
        if not np.all(np.isfinite(v)):
            raise ValueError("embedding vectors must be finite")
        object.__setattr__(self, "vectors", v)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @classmethod
    def load(cls, path: str | Path, label: str | None = None) -> "EmbeddingSet":
        """Binary (JSON header line + float32 LE rows) or CSV, chosen by suffix."""
        path = Path(path)
        if path.suffix.lower() == ".csv":
            with path.open(newline="", encoding="utf-8") as fh:
                rows = [[float(x) for x in row] for row in csv.reader(fh) if row]
            return cls(label or path.stem, np.array(rows, dtype=np.float64).reshape(len(rows), -1))
        data = path.read_bytes()
        head, _, body = data.partition(b"\n")
        meta = json.loads(head.decode("utf-8"))
        n, dim = int(meta["n"]), int(meta["dim"])
        if len(body) != 4 * n * dim:
            raise ValueError(f"{path}: expected {4 * n * dim} payload bytes, found {len(body)}")
        vecs = np.frombuffer(body, dtype="<f4").reshape(n, dim)
        return cls(label or meta.get("label", path.stem), vecs)

    def to_bytes(self) -> bytes:
        head = json.dumps({"label": self.label, "dim": self.dim, "n": len(self)})
        return head.encode("utf-8") + b"\n" + self.vectors.astype("<f4").tobytes()


def _stats(e: EmbeddingSet) -> tuple[np.ndarray, np.ndarray]:
    if len(e) < e.dim + 1:
        raise TooFewSamples(f"{e.label}: {len(e)} vectors for dim {e.dim}; need at least {e.dim + 1}")
    mu = e.vectors.mean(axis=0)
    sigma = np.atleast_2d(np.cov(e.vectors, rowvar=False, ddof=1))
    return mu, sigma + FID_EPS * np.eye(e.dim)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = _eigh(m)
    return (v * np.sqrt(w)) @ v.T


def _eigh(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    try:
        w, v = np.linalg.eigh((m + m.T) / 2.0)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigendecomposition failed: {exc}") from exc
    if not np.all(np.isfinite(w)) or w.min() < EIG_CLAMP:
        raise NumericalFailure(f"matrix is not positive semidefinite (min eigenvalue {w.min():.3e})")
    return np.clip(w, 0.0, None), v


def frechet_distance(a: EmbeddingSet, b: EmbeddingSet) -> float:
    """|mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2))."""
    if a.dim != b.dim:
        raise DimMismatch(f"embedding dims differ: {a.dim} vs {b.dim}")
    mu_a, sa = _stats(a)
    mu_b, sb = _stats(b)
    root_a = _psd_sqrt(sa)
    w, _ = _eigh(root_a @ sb @ root_a)
    tr_sqrt = float(np.sum(np.sqrt(w)))
    diff = mu_a - mu_b
    return float(diff @ diff + np.trace(sa) + np.trace(sb) - 2.0 * tr_sqrt)


# --- end-to-end evaluation -------------------------------------------------------

def prediction_path(row: Mapping) -> GlyphPath | ParseFailure:
    """Parse ``d`` (or ``d_abs``) directly; route ``raw_completion`` through extraction."""
    if "raw_completion" in row:
        raw = row["raw_completion"]
        ext = extract_paths_from_completion(raw)
        if ext.paths:
            return ext.paths[0]
        err = ext.invalid[0].error if ext.invalid else "no <path> element in completion"
        return ParseFailure(err, raw)
    d = row.get("d", row.get("d_abs"))
    if d is None:
        return ParseFailure("prediction row has no d, d_abs or raw_completion")
    try:
        p = parse_path(d)
    except PathError as exc:
        return ParseFailure(f"{type(exc).__name__}: {exc}", d)
    bad = validate_path(p)
    if bad:
        return ParseFailure(f"{bad[0].rule}: {bad[0].message}", d)
    return p


def _mean(values: Iterable[float]) -> float | None:
    vals = list(values)
    return float(np.mean(vals)) if vals else None


def _recognize_images(recognizer: Recognizer, images: Sequence[tuple[str, RasterImage]],
                      instruction: str, jobs: int) -> list[str]:
    reqs = [RecognizerRequest(img.to_pgm(), instruction, ALPHANUMERICS, key) for key, img in images]
    return recognize_all(recognizer, reqs, jobs)


def pair_images(pairs: Sequence[GlyphPair], cfg: ScoreConfig) -> tuple[list, list]:
    gen, ref = [], []
    for pr in pairs:
        ref.append((f"{pr.id}/gt", _raster_cached(serialize_path(pr.gt), cfg.size, cfg.padding)))
        if isinstance(pr.pred, ParseFailure):
            gen.append(None)
        else:
            gen.append((f"{pr.id}/pred", _raster_cached(serialize_path(pr.pred), cfg.size, cfg.padding)))
    return gen, ref


def evaluate(pred_rows: Iterable[Mapping], gt_rows: Iterable[Mapping],
             recognizer: Recognizer | None = None,
             embeddings: tuple[EmbeddingSet, EmbeddingSet] | None = None,
             external_scores: Mapping[str, Mapping[tuple[str, str], float]] | None = None,
             cfg: ScoreConfig = ScoreConfig(), jobs: int = 1,
             instruction: str = DEFAULT_INSTRUCTION) -> dict:
    """Score predictions against ground truth; returns the report as an ordered dict."""
    gt = {(r["font_id"], r["char"]): r for r in gt_rows}
    preds = {}
    for r in pred_rows:
        key = (r["font_id"], r["char"])
        if key not in gt:
            raise KeyMismatch(f"prediction {key} has no ground truth")
        preds[key] = r
    keys = sorted(preds)
    pairs = [GlyphPair(f"{fid}:{ch}", ch, parse_path(gt[(fid, ch)]["d_abs"]), prediction_path(preds[(fid, ch)]),
                       tuple(gt[(fid, ch)].get("tags", ())))
             for fid, ch in keys]

    def work(pr):
        return score_pair(pr, cfg)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            scores = list(pool.map(work, pairs))
    else:
        scores = [work(pr) for pr in pairs]

    recognized: list[str | None] = [None] * len(pairs)
    gt_recognized: list[str | None] = [None] * len(pairs)
    aggregates: dict = {"r_acc": None, "r_acc_u": None}
    if recognizer is not None and pairs:
        gen_imgs, ref_imgs = pair_images(pairs, cfg)
        gt_recognized = _recognize_images(recognizer, ref_imgs, instruction, jobs)
        live = [i for i, g in enumerate(gen_imgs) if g is not None]
        labels = _recognize_images(recognizer, [gen_imgs[i] for i in live], instruction, jobs)
        recognized = [ABSTAIN] * len(pairs)
        for i, lab in zip(live, labels):
            recognized[i] = lab.strip()
        gt_recognized = [lab.strip() for lab in gt_recognized]
        targets = [pr.target_char for pr in pairs]
        aggregates["r_acc"] = r_acc(recognized, gt_recognized, targets, cased=True)
        aggregates["r_acc_u"] = r_acc(recognized, gt_recognized, targets, cased=False)

    for m in METRICS:
        aggregates[m] = _mean(s[m] for s in scores)
    valid = [s for s in scores if s["parse_failure"] is None]
    aggregates_valid = {m: _mean(s[m] for s in valid) for m in METRICS}
    aggregates["fid"] = frechet_distance(*embeddings) if embeddings is not None else None

    external = {}
    for name, table in sorted((external_scores or {}).items()):
        external[name] = _mean(table[k] for k in keys if k in table)

    rows = []
    for (fid, ch), s, rec, grec in zip(keys, scores, recognized, gt_recognized):
        row = {"font_id": fid, "char": ch}
        row.update({m: s[m] for m in METRICS})
        row["recognized"] = rec
        row["gt_recognized"] = grec
        row["parse_failure"] = s["parse_failure"]
        for name, table in sorted((external_scores or {}).items()):
            row[name] = table.get((fid, ch))
        rows.append(row)

    return {
        "counts": {"pairs": len(pairs), "parse_failures": len(pairs) - len(valid),
                   "unmatched_gt": len(gt) - len(keys)},
        "aggregates": aggregates,
        "aggregates_valid": aggregates_valid,
        "external": external,
        "sentinel": {"cd": cfg.sentinel.cd, "l2": cfg.sentinel.l2, "psnr": cfg.sentinel.psnr,
                     "ssim": cfg.sentinel.ssim, "recognized": ABSTAIN},
        "config": {"n_points": cfg.n_points, "size": cfg.size, "padding": cfg.padding, "frame": cfg.frame},
        "pairs": rows,
    }


def perfect_recognizer(gt_rows: Iterable[Mapping], cfg: ScoreConfig = ScoreConfig()):
    """Mock that reads each ground-truth raster back as its own character."""
    from .recognizer import MockRecognizer
    return MockRecognizer.perfect((r["char"], _raster_cached(r["d_abs"], cfg.size, cfg.padding).to_pgm())
                                  for r in gt_rows)


def load_external_scores(path: str | Path) -> dict[tuple[str, str], float]:
    from .manifest_io import read_jsonl
    return {(r["font_id"], r["char"]): float(r["score"]) for r in read_jsonl(path)}

