"""Brute-force geometry references that share no code with the package."""

from __future__ import annotations

import math

import numpy as np

from glyphforge.path_model import Kind, Mode, convert_mode


def dense_contours(p, steps: int = 256) -> list[np.ndarray]:
    """Closed polylines from direct evaluation of B(t) on a fine uniform grid."""
    out, cur, verts = [], None, []
    for cmd in convert_mode(p, Mode.ABSOLUTE):
        a = [v / 10.0 for v in cmd.args]
        if cmd.kind is Kind.MOVE:
            if len(verts) > 1:
                out.append(np.array(verts))
            verts = [(a[0], a[1])]
            cur = verts[0]
        elif cmd.kind is Kind.LINE:
            cur = (a[0], a[1])
            verts.append(cur)
        elif cmd.kind is Kind.QUAD:
            t = np.linspace(0, 1, steps + 1)[1:, None]
            p0, c, p2 = np.array(cur), np.array(a[:2]), np.array(a[2:])
            verts.extend(map(tuple, (1 - t) ** 2 * p0 + 2 * (1 - t) * t * c + t ** 2 * p2))
            cur = (a[2], a[3])
        else:
            if len(verts) > 1:
                out.append(np.array(verts))
            verts = [verts[0]] if verts else []
            cur = verts[0] if verts else cur
    if len(verts) > 1:
        out.append(np.array(verts))
    return out


def closed_segments(contours):
    starts = np.concatenate([c for c in contours])
    ends = np.concatenate([np.roll(c, -1, axis=0) for c in contours])
    return starts, ends


def arc_length(contours) -> float:
    s, e = closed_segments(contours)
    return float(np.hypot(*(e - s).T).sum())


def monotone_arc_positions(points: np.ndarray, contours, window: int = 400) -> np.ndarray:
    """Arc coordinate of each point, walking forward along the reference outline."""
    s, e = closed_segments(contours)
    d = e - s
    seg_len = np.hypot(d[:, 0], d[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    pos = []
    j0 = 0
    for p in points:
        lo, hi = max(0, j0 - 2), min(len(s), j0 + window)
        ds, dd, ll = s[lo:hi], d[lo:hi], seg_len[lo:hi]
        with np.errstate(invalid="ignore", divide="ignore"):
            t = np.clip(np.where(ll > 0, ((p - ds) * dd).sum(axis=1) / (ll * ll), 0.0), 0, 1)
        q = ds + t[:, None] * dd
        dist = np.hypot(*(q - p).T)
        k = int(np.argmin(dist))
        j0 = lo + k
        pos.append(cum[j0] + t[k] * ll[k])
    return np.array(pos)


def max_deviation_quad(poly: np.ndarray, p0, c, p2, steps: int = 4000) -> float:
    """Largest distance from the analytic curve to the polyline, and back."""
    t = np.linspace(0, 1, steps + 1)[:, None]
    curve = (1 - t) ** 2 * np.array(p0) + 2 * (1 - t) * t * np.array(c) + t ** 2 * np.array(p2)

    def to_polyline(pts, line):
        a, b = line[:-1], line[1:]
        d = b - a
        l2 = (d * d).sum(axis=1)
        best = np.full(len(pts), np.inf)
        for i in range(len(a)):
            tt = np.clip(((pts - a[i]) @ d[i]) / l2[i], 0, 1) if l2[i] > 0 else np.zeros(len(pts))
            q = a[i] + tt[:, None] * d[i]
            best = np.minimum(best, np.hypot(*(pts - q).T))
        return best.max()

    return max(to_polyline(curve, poly), to_polyline(poly, curve))


def brute_nearest(a: np.ndarray, b: np.ndarray):
    dist = np.empty(len(a))
    idx = np.empty(len(a), dtype=np.int64)
    for i, p in enumerate(a):
        best, bj = math.inf, -1
        for j, q in enumerate(b):
            dd = (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2
            if dd < best:
                best, bj = dd, j
        dist[i], idx[i] = math.sqrt(best), bj
    return dist, idx


def star_path_d(rng: np.random.Generator, n: int = 8, r: float = 300.0, quads: bool = True) -> str:
    """Simple closed curve around the origin: on-curve points at increasing angles."""
    ang = np.sort(rng.uniform(0, 2 * np.pi, n))
    rad = rng.uniform(0.5 * r, r, n)
    pts = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
    parts = [f"M {pts[0, 0]:.1f} {pts[0, 1]:.1f}"]
    for i in range(1, n + 1):
        q = pts[i % n]
        if quads and rng.random() < 0.6:
            mid = (ang[i - 1] + (ang[i % n] + (2 * np.pi if i == n else 0))) / 2
            cr = rng.uniform(0.5 * r, r)
            parts.append(f"Q {cr * np.cos(mid):.1f} {cr * np.sin(mid):.1f} {q[0]:.1f} {q[1]:.1f}")
        else:
            parts.append(f"L {q[0]:.1f} {q[1]:.1f}")
    return " ".join(parts) + " Z"
