"""Outline flattening, arc-length sampling, Chamfer distance and ICP."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .errors import EmptyCloud, EmptyOutline
from .path_model import GlyphPath, Kind, Mode, convert_mode

DEFAULT_TOLERANCE = 0.05  # path units; half a deci-unit


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    source: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class Alignment:
    translation: tuple[float, float] = (0.0, 0.0)
    scale: float = 1.0

    def apply(self, pts: np.ndarray) -> np.ndarray:
        return self.scale * np.asarray(pts, dtype=np.float64) + np.asarray(self.translation)


class AlignMode(str, Enum):
    TRANSLATION = "translation"
    TRANSLATION_SCALE = "translation_scale"


@dataclass(frozen=True)
class ICPConfig:
    max_iter: int = 50
    tol: float = 1e-6
    scale_min: float = 0.2
    scale_max: float = 5.0


def _quad_steps(p0, p1, p2, tolerance: float) -> int:
    # chord deviation of a uniform piece is |p0 - 2 p1 + p2| / (4 n^2)
    ddx = p0[0] - 2 * p1[0] + p2[0]
    ddy = p0[1] - 2 * p1[1] + p2[1]
    dev = math.hypot(ddx, ddy) / 4.0
    if dev <= tolerance:
        return 1
    return math.ceil(math.sqrt(dev / tolerance))


def flatten(p: GlyphPath, tolerance: float = DEFAULT_TOLERANCE) -> list[np.ndarray]:
    """One closed polyline (vertex array, closing edge implicit) per subcontour."""
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    polys: list[np.ndarray] = []
    verts: list[tuple[float, float]] = []

    def close():
        if len(verts) > 1 and verts[-1] == verts[0]:
            verts.pop()
        if len(verts) >= 2:
            polys.append(np.array(verts, dtype=np.float64))

    cur = (0.0, 0.0)
    for cmd in convert_mode(p, Mode.ABSOLUTE) if len(p) else ():
        a = [v / 10.0 for v in cmd.args]
        if cmd.kind is Kind.MOVE:
            close()
            verts = [(a[0], a[1])]
            cur = verts[0]
        elif cmd.kind is Kind.LINE:
            cur = (a[0], a[1])
            verts.append(cur)
        elif cmd.kind is Kind.QUAD:
            c, end = (a[0], a[1]), (a[2], a[3])
            n = _quad_steps(cur, c, end, tolerance)
            for k in range(1, n):
                t = k / n
                u = 1.0 - t
                verts.append((u * u * cur[0] + 2 * u * t * c[0] + t * t * end[0],
                              u * u * cur[1] + 2 * u * t * c[1] + t * t * end[1]))
            verts.append(end)
            cur = end
        else:
            close()
            cur = verts[0] if verts else cur
            verts = [cur]
    close()
    return polys


def _segments(polys: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    starts = np.concatenate([poly for poly in polys])
    ends = np.concatenate([np.roll(poly, -1, axis=0) for poly in polys])
    return starts, ends


def sample_uniform(p: GlyphPath, n: int = 200, tolerance: float = DEFAULT_TOLERANCE,
                   source: str = "") -> PointCloud:
    """``n`` points at arc positions k*L/n along the concatenated outline."""
    if n < 1:
        raise ValueError("n must be >= 1")
    polys = flatten(p, tolerance)
    if not polys:
        raise EmptyOutline("path has no drawable outline")
    starts, ends = _segments(polys)
    lengths = np.hypot(*(ends - starts).T)
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    total = cum[-1]
    if total == 0:
        return PointCloud(np.repeat(starts[:1], n, axis=0), source)
    s = np.arange(n) * (total / n)
    i = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(lengths) - 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(lengths[i] > 0, (s - cum[i]) / lengths[i], 0.0)
    pts = starts[i] + frac[:, None] * (ends[i] - starts[i])
    return PointCloud(pts, source)


def normalization(c: PointCloud) -> tuple[np.ndarray, float]:
    """(bbox centre, scale) mapping the longer bbox side onto [-1, 1]."""
    if not len(c):
        raise EmptyCloud("cannot normalize an empty cloud")
    lo = c.points.min(axis=0)
    hi = c.points.max(axis=0)
    extent = float(np.max(hi - lo))
    return (lo + hi) / 2.0, (2.0 / extent if extent > 0 else 1.0)


def apply_normalization(c: PointCloud, center: np.ndarray, scale: float) -> PointCloud:
    return PointCloud((c.points - center) * scale, c.source)


def normalize_cloud(c: PointCloud) -> PointCloud:
    center, scale = normalization(c)
    return apply_normalization(c, center, scale)


def _as_points(c) -> np.ndarray:
    pts = c.points if isinstance(c, PointCloud) else np.asarray(c, dtype=np.float64).reshape(-1, 2)
    if not len(pts):
        raise EmptyCloud("chamfer needs non-empty clouds")
    return pts


def chamfer(a, b) -> float:
    """Symmetric mean nearest-neighbour Euclidean distance, times 100."""
    pa, pb = _as_points(a), _as_points(b)
    ab = kernels.nearest(pa, pb)[0].mean()
    ba = kernels.nearest(pb, pa)[0].mean()
    return float(100.0 * 0.5 * (ab + ba))


def _icp_run(A, B, scale, trans, mode, cfg):
    for _ in range(cfg.max_iter):
        moved = scale * A + trans
        _, j = kernels.nearest(moved, B)
        matched = B[j]
        if mode is AlignMode.TRANSLATION:
            new_scale = scale
            new_trans = trans + (matched - moved).mean(axis=0)
        else:
            am, bm = A.mean(axis=0), matched.mean(axis=0)
            a0, b0 = A - am, matched - bm
            denom = float(np.sum(a0 * a0))
            new_scale = scale
            if denom > 0:
                new_scale = float(np.clip(np.sum(a0 * b0) / denom, cfg.scale_min, cfg.scale_max))
            new_trans = bm - new_scale * am
        step = max(float(np.max(np.abs(new_trans - trans))), abs(new_scale - scale))
        scale, trans = new_scale, new_trans
        if step < cfg.tol:
            break
    return scale, trans


def icp_align(a, b, mode: AlignMode | str = AlignMode.TRANSLATION,
              cfg: ICPConfig = ICPConfig(), inits: list[Alignment] | None = None
              ) -> tuple[Alignment, float]:
    """Align ``a`` (prediction) onto ``b`` (reference) without rotation.

    ICP is started from the identity, from centroid/spread matching, and from
    any extra ``inits``; the best end state is kept. The returned chamfer is
    never worse than the unaligned one.
    """
    mode = AlignMode(mode)
    A, B = _as_points(a), _as_points(b)
    starts = [Alignment()]
    am, bm = A.mean(axis=0), B.mean(axis=0)
    s0 = 1.0
    if mode is AlignMode.TRANSLATION_SCALE:
        ra = math.sqrt(float(np.mean(np.sum((A - am) ** 2, axis=1))))
        rb = math.sqrt(float(np.mean(np.sum((B - bm) ** 2, axis=1))))
        if ra > 0 and rb > 0:
            s0 = float(np.clip(rb / ra, cfg.scale_min, cfg.scale_max))
    starts.append(Alignment(tuple(bm - s0 * am), s0))
    for init in inits or ():
        starts.append(init if mode is AlignMode.TRANSLATION_SCALE else Alignment(init.translation))

    best = Alignment()
    best_cd = chamfer(A, B)
    for init in starts:
        scale, trans = _icp_run(A, B, init.scale, np.asarray(init.translation, dtype=np.float64),
                                mode, cfg)
        cd = chamfer(scale * A + trans, B)
        if cd < best_cd:
            best, best_cd = Alignment((float(trans[0]), float(trans[1])), float(scale)), cd
    return best, best_cd
