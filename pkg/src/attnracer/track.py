"""Closed-loop track geometry.

A track is a closed centerline polyline with a constant width. Progress `s`
is arc length along the polyline from its first vertex; lateral offset `d`
is signed positive to the left of the direction of travel.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SAMPLE_SPACING = 0.01  # m between resampled centerline vertices


@dataclass(eq=False)
class Track:
    name: str
    centerline: np.ndarray  # (N, 2) closed implicitly: last connects to first
    width: float
    lane_count: int = 1
    _geom: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        pts = np.asarray(self.centerline, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
            raise ValueError(f"centerline must be (N>=3, 2), got {pts.shape}")
        if np.allclose(pts[0], pts[-1]):
            pts = pts[:-1]
        self.centerline = pts
        if not self.width > 0:
            raise ValueError(f"width must be positive, got {self.width}")
        p0 = pts
        p1 = np.roll(pts, -1, axis=0)
        vec = p1 - p0
        seg_len = np.hypot(vec[:, 0], vec[:, 1])
        if (seg_len == 0).any():
            raise ValueError("centerline has coincident consecutive points")
        cum = np.concatenate([[0.0], np.cumsum(seg_len)])
        self._geom = {
            "p0": p0, "vec": vec, "len": seg_len,
            "cum": cum[:-1], "total": float(cum[-1]),
            "inv_len2": 1.0 / (seg_len * seg_len),
        }

    @property
    def length(self) -> float:
        return self._geom["total"]

    def project(self, x: float, y: float) -> tuple[float, float]:
        """Nearest-point projection: returns (progress s, signed offset d)."""
        g = self._geom
        q = np.array([x, y])
        rel = q - g["p0"]
        t = np.clip((rel * g["vec"]).sum(axis=1) * g["inv_len2"], 0.0, 1.0)
        closest = g["p0"] + t[:, None] * g["vec"]
        diff = q - closest
        d2 = (diff * diff).sum(axis=1)
        i = int(np.argmin(d2))
        s = g["cum"][i] + t[i] * g["len"][i]
        # sign from the segment tangent cross offset: left of travel positive
        cross = g["vec"][i, 0] * diff[i, 1] - g["vec"][i, 1] * diff[i, 0]
        d = math.copysign(math.sqrt(d2[i]), cross) if cross != 0 else math.sqrt(d2[i])
        return s, d

    def point_at(self, s: float) -> tuple[float, float, float]:
        """Centerline point and tangent heading at progress s (wraps)."""
        g = self._geom
        s = s % g["total"]
        i = int(np.searchsorted(g["cum"], s, side="right")) - 1
        t = (s - g["cum"][i]) / g["len"][i]
        x, y = g["p0"][i] + t * g["vec"][i]
        heading = math.atan2(g["vec"][i, 1], g["vec"][i, 0])
        return float(x), float(y), heading

    def pose_at(self, s: float, offset: float = 0.0) -> tuple[float, float, float]:
        """World pose on the track: offset is lateral, positive left."""
        x, y, heading = self.point_at(s)
        return (x - offset * math.sin(heading),
                y + offset * math.cos(heading), heading)


def resample_closed(points: np.ndarray, spacing: float = SAMPLE_SPACING) -> np.ndarray:
    """Uniform arc-length resampling of a closed polyline."""
    pts = np.asarray(points, dtype=np.float64)
    if np.allclose(pts[0], pts[-1]):
        pts = pts[:-1]
    loop = np.vstack([pts, pts[:1]])
    seg = np.diff(loop, axis=0)
    cum = np.concatenate([[0.0], np.cumsum(np.hypot(seg[:, 0], seg[:, 1]))])
    total = cum[-1]
    n = max(int(round(total / spacing)), 16)
    s = np.linspace(0.0, total, n, endpoint=False)
    x = np.interp(s, cum, loop[:, 0])
    y = np.interp(s, cum, loop[:, 1])
    return np.stack([x, y], axis=1)


def validate_track(track: Track) -> list[str]:
    """Geometry lint: tight curvature and pinch points. Empty list = OK."""
    problems: list[str] = []
    g = track._geom
    pts, vec, seg_len, cum = g["p0"], g["vec"], g["len"], g["cum"]
    n = len(pts)
    # discrete curvature: turn angle at each vertex over mean adjacent length
    t0 = vec / seg_len[:, None]
    t1 = np.roll(t0, -1, axis=0)
    dot = np.clip((t0 * t1).sum(axis=1), -1.0, 1.0)
    turn = np.arccos(dot)
    mean_len = 0.5 * (seg_len + np.roll(seg_len, -1))
    with np.errstate(divide="ignore"):
        radius = np.where(turn > 1e-12, mean_len / turn, np.inf)
    min_r = radius.min()
    if min_r < track.width / 2:
        i = int(np.argmin(radius))
        s_bad = cum[i] + seg_len[i]
        problems.append(
            f"curvature radius {min_r:.3f} m at s={s_bad:.2f} is tighter than "
            f"half width {track.width / 2:.3f} m")
    # pinch: far-apart (by arc) points that come close in the plane
    min_arc = 2.0 * track.width
    idx_window = max(int(min_arc / max(seg_len.min(), 1e-9)), 1)
    best = np.inf
    best_pair = (0, 0)
    for i in range(0, n, 8):  # stride keeps this O(n^2/8) but dense enough
        d = np.hypot(pts[:, 0] - pts[i, 0], pts[:, 1] - pts[i, 1])
        lo = max(i - idx_window, 0)
        d[lo:min(i + idx_window, n)] = np.inf
        if i + idx_window > n:
            d[:(i + idx_window) % n] = np.inf
        if i - idx_window < 0:
            d[(i - idx_window) % n:] = np.inf
        j = int(np.argmin(d))
        if d[j] < best:
            best, best_pair = float(d[j]), (i, j)
    if best < track.width:
        i, j = best_pair
        problems.append(
            f"centerline pinch: s={cum[i]:.2f} and s={cum[j]:.2f} are only "
            f"{best:.3f} m apart (width {track.width})")
    return problems


# ---------------------------------------------------------------------------
# builtin tracks


def _stadium(straight: float, radius: float) -> np.ndarray:
    """Counterclockwise stadium: straights along x at y = -/+ radius."""
    h = straight / 2.0
    pieces = []
    n_arc = 256
    pieces.append(np.stack([np.linspace(-h, h, 512, endpoint=False),
                            np.full(512, -radius)], axis=1))
    u = np.linspace(-math.pi / 2, math.pi / 2, n_arc, endpoint=False)
    pieces.append(np.stack([h + radius * np.cos(u), radius * np.sin(u)], axis=1))
    pieces.append(np.stack([np.linspace(h, -h, 512, endpoint=False),
                            np.full(512, radius)], axis=1))
    u = np.linspace(math.pi / 2, 3 * math.pi / 2, n_arc, endpoint=False)
    pieces.append(np.stack([-h + radius * np.cos(u), radius * np.sin(u)], axis=1))
    return np.vstack(pieces)


def _rounded_rect(len_x: float, len_y: float, radius: float) -> np.ndarray:
    """Counterclockwise rectangle with quarter-circle corners; len_x/len_y
    are the straight lengths."""
    hx, hy = len_x / 2.0, len_y / 2.0
    out_y = hy + radius
    out_x = hx + radius
    pieces = []
    n_arc = 128

    def arc(cx, cy, a0, a1):
        u = np.linspace(a0, a1, n_arc, endpoint=False)
        return np.stack([cx + radius * np.cos(u), cy + radius * np.sin(u)], axis=1)

    pieces.append(np.stack([np.linspace(-hx, hx, 256, endpoint=False),
                            np.full(256, -out_y)], axis=1))
    pieces.append(arc(hx, -hy, -math.pi / 2, 0.0))
    pieces.append(np.stack([np.full(128, out_x),
                            np.linspace(-hy, hy, 128, endpoint=False)], axis=1))
    pieces.append(arc(hx, hy, 0.0, math.pi / 2))
    pieces.append(np.stack([np.linspace(hx, -hx, 256, endpoint=False),
                            np.full(256, out_y)], axis=1))
    pieces.append(arc(-hx, hy, math.pi / 2, math.pi))
    pieces.append(np.stack([np.full(128, -out_x),
                            np.linspace(hy, -hy, 128, endpoint=False)], axis=1))
    pieces.append(arc(-hx, -hy, math.pi, 3 * math.pi / 2))
    return np.vstack(pieces)


def _wavy_loop() -> np.ndarray:
    """Irregular closed loop with left and right curves of varying radius."""
    theta = np.linspace(0.0, 2 * math.pi, 4096, endpoint=False)
    rho = 2.8 + 0.55 * np.cos(2 * theta) + 0.2 * np.sin(3 * theta)
    return np.stack([rho * np.cos(theta), rho * np.sin(theta)], axis=1)


def builtin_track(name: str) -> Track:
    if name == "oval":
        pts = resample_closed(_stadium(straight=3.0, radius=1.5))
        return Track("oval", pts, width=0.6)
    if name == "loop_a":
        pts = resample_closed(_rounded_rect(2.4, 1.0, 0.8))
        return Track("loop_a", pts, width=0.6)
    if name == "complex_b":
        pts = resample_closed(_wavy_loop())
        return Track("complex_b", pts, width=0.8, lane_count=2)
    raise KeyError(f"unknown builtin track {name!r}; have {BUILTIN_TRACKS}")


BUILTIN_TRACKS = ("oval", "loop_a", "complex_b")


# ---------------------------------------------------------------------------
# JSON round trip


def save_track(track: Track, path: str | Path) -> None:
    doc = {
        "name": track.name,
        "width": track.width,
        "lane_count": track.lane_count,
        "centerline": track.centerline.tolist(),
    }
    Path(path).write_text(json.dumps(doc))


def load_track(path: str | Path) -> Track:
    doc = json.loads(Path(path).read_text())
    try:
        return Track(
            name=doc["name"],
            centerline=np.asarray(doc["centerline"], dtype=np.float64),
            width=float(doc["width"]),
            lane_count=int(doc.get("lane_count", 1)),
        )
    except KeyError as e:
        raise ValueError(f"track file {path} missing key {e}") from e
