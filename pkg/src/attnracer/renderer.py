"""Software ground-plane renderer.

Per pixel: cast a ray from the camera, intersect the ground plane, classify
the hit against a precomputed signed-distance raster of the track, texture
it, then composite bot billboards by depth and apply the lighting field.
Everything is vectorized over the full pixel grid; a 64x48 frame costs
roughly a millisecond.

Mask classes: 0 void, 1 drivable surface, 2 center line, 3 edge line, 4 bot.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .camera import CameraConfig, pixel_rays, project_point
from .texture import DomainAppearance, light_field, surface_rgb
from .track import Track

MASK_VOID = 0
MASK_SURFACE = 1
MASK_LINE_CENTER = 2
MASK_LINE_EDGE = 3
MASK_BOT = 4

EDGE_LINE_WIDTH = 0.05    # m, white boundary lines
CENTER_LINE_WIDTH = 0.04  # m, yellow center line
LINE_RGB_EDGE = (0.92, 0.92, 0.90)
LINE_RGB_CENTER = (0.85, 0.75, 0.10)
SKY_RGB_TOP = (0.13, 0.14, 0.18)
SKY_RGB_HORIZON = (0.32, 0.33, 0.38)
OFFTRACK_DIM = 0.55      # ground beyond the edge lines is the same surface,
                         # dimmed so the boundary stays visible
BOT_BODY_RGB = (0.10, 0.22, 0.55)
BOT_TOP_RGB = (0.35, 0.45, 0.75)
BOT_WIDTH = 0.22         # m, billboard size
BOT_HEIGHT = 0.16


class TrackRaster:
    """Signed lateral distance |to centerline| sampled on a uniform grid.

    Queries outside the grid return +inf. Bilinear interpolation keeps the
    line bands smooth at render resolution.
    """

    def __init__(self, track: Track, cell: float = 0.02, margin: float = 1.0):
        pts = track.centerline
        self.cell = cell
        self.x0 = pts[:, 0].min() - margin
        self.y0 = pts[:, 1].min() - margin
        nx = int(math.ceil((pts[:, 0].max() + margin - self.x0) / cell)) + 1
        ny = int(math.ceil((pts[:, 1].max() + margin - self.y0) / cell)) + 1
        gx = self.x0 + np.arange(nx) * cell
        gy = self.y0 + np.arange(ny) * cell
        # coarse polyline is plenty below render resolution
        coarse = pts[::5] if len(pts) > 600 else pts
        p0 = coarse
        p1 = np.roll(coarse, -1, axis=0)
        vec = p1 - p0
        inv_len2 = 1.0 / (vec * vec).sum(axis=1)
        grid = np.stack(np.meshgrid(gx, gy, indexing="xy"), axis=-1)  # (ny,nx,2)
        flat = grid.reshape(-1, 2)
        dist = np.full(len(flat), np.inf)
        sign = np.ones(len(flat))
        chunk = 4096
        for lo in range(0, len(flat), chunk):
            q = flat[lo:lo + chunk]
            rel = q[:, None, :] - p0[None, :, :]
            t = np.clip((rel * vec[None]).sum(-1) * inv_len2[None], 0.0, 1.0)
            diff = rel - t[..., None] * vec[None]
            d2 = (diff * diff).sum(-1)
            j = np.argmin(d2, axis=1)
            rows = np.arange(len(q))
            dist[lo:lo + chunk] = np.sqrt(d2[rows, j])
            cross = (vec[j, 0] * diff[rows, j, 1]
                     - vec[j, 1] * diff[rows, j, 0])
            sign[lo:lo + chunk] = np.where(cross >= 0, 1.0, -1.0)
        self.d = (dist * sign).reshape(ny, nx)
        self.nx, self.ny = nx, ny

    def sample(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Bilinear signed distance at world points; +inf off the grid."""
        fx = (np.asarray(x) - self.x0) / self.cell
        fy = (np.asarray(y) - self.y0) / self.cell
        ok = (fx >= 0) & (fx <= self.nx - 1) & (fy >= 0) & (fy <= self.ny - 1)
        fx = np.clip(fx, 0, self.nx - 1.000001)
        fy = np.clip(fy, 0, self.ny - 1.000001)
        ix = fx.astype(np.int64)
        iy = fy.astype(np.int64)
        tx = fx - ix
        ty = fy - iy
        d00 = self.d[iy, ix]
        d10 = self.d[iy, ix + 1]
        d01 = self.d[iy + 1, ix]
        d11 = self.d[iy + 1, ix + 1]
        top = d00 + (d10 - d00) * tx
        bot = d01 + (d11 - d01) * tx
        out = top + (bot - top) * ty
        return np.where(ok, out, np.inf)


@dataclass
class Frame:
    image: np.ndarray  # (H, W, 3) float64 in [0, 1]
    mask: np.ndarray   # (H, W) uint8 class ids


class Renderer:
    def __init__(self, track: Track, camera: CameraConfig = CameraConfig(),
                 appearance: DomainAppearance = DomainAppearance(),
                 raster_cell: float = 0.02):
        self.track = track
        self.camera = camera
        self.appearance = appearance
        self.raster = TrackRaster(track, cell=raster_cell)
        self._light = light_field(appearance.lighting, camera.height,
                                  camera.width, appearance.strength)

    def render(self, pose, bot_poses=()) -> Frame:
        """pose: (x, y, heading) or an object with those attributes."""
        if hasattr(pose, "heading"):
            px, py, heading = pose.x, pose.y, pose.heading
        else:
            px, py, heading = pose
        cam = self.camera
        h, w = cam.height, cam.width
        origin, dirs = pixel_rays(px, py, heading, cam)
        dz = dirs[..., 2]
        below = dz < -1e-9
        t = np.where(below, -origin[2] / np.where(below, dz, -1.0), np.inf)
        gx = origin[0] + t * dirs[..., 0]
        gy = origin[1] + t * dirs[..., 1]

        image = self._sky(h, w)
        mask = np.zeros((h, w), dtype=np.uint8)

        ground = np.isfinite(t)
        d = np.abs(self.raster.sample(gx[ground], gy[ground]))
        half = self.track.width / 2.0
        surf = surface_rgb(self.appearance.surface, gx[ground], gy[ground],
                           self.appearance.seed)

        g_img = surf.copy()
        g_mask = np.full(d.shape, MASK_SURFACE, dtype=np.uint8)
        off = d > half
        g_img[off] *= OFFTRACK_DIM
        g_mask[off] = MASK_VOID
        edge = (d >= half - EDGE_LINE_WIDTH) & (d <= half)
        g_img[edge] = LINE_RGB_EDGE
        g_mask[edge] = MASK_LINE_EDGE
        center = d <= CENTER_LINE_WIDTH / 2.0
        g_img[center] = LINE_RGB_CENTER
        g_mask[center] = MASK_LINE_CENTER

        image[ground] = g_img
        mask[ground] = g_mask

        self._draw_bots(image, mask, t, (px, py, heading), bot_poses)
        image *= self._light[..., None]
        return Frame(image=np.clip(image, 0.0, 1.0), mask=mask)

    def _sky(self, h: int, w: int) -> np.ndarray:
        ramp = np.linspace(0.0, 1.0, h)[:, None, None]
        top = np.array(SKY_RGB_TOP)[None, None, :]
        hor = np.array(SKY_RGB_HORIZON)[None, None, :]
        return np.broadcast_to(top + (hor - top) * ramp, (h, w, 3)).copy()

    def _draw_bots(self, image, mask, ground_t, pose, bot_poses) -> None:
        """Depth-sorted billboards anchored at each bot's ground point."""
        px, py, heading = pose
        cam = self.camera
        h, w = cam.height, cam.width
        hits = []
        for bx, by, _ in bot_poses:
            hit = project_point((bx, by, 0.0), px, py, heading, cam)
            if hit is not None:
                hits.append((hit[2], hit[0], hit[1], bx, by))
        # far to near so closer bots overdraw
        for depth, u, v, bx, by in sorted(hits, reverse=True):
            if cam.geometry == "pinhole":
                px_per_m = cam.focal_px / depth
            else:
                px_per_m = (w - 1) / cam.fov / depth
            half_w = 0.5 * BOT_WIDTH * px_per_m
            height_px = BOT_HEIGHT * px_per_m
            u0 = int(math.floor(u - half_w))
            u1 = int(math.ceil(u + half_w))
            v1 = int(math.ceil(v))                 # ground anchor
            v0 = int(math.floor(v - height_px))
            u0c, u1c = max(u0, 0), min(u1, w - 1)
            v0c, v1c = max(v0, 0), min(v1, h - 1)
            if u0c > u1c or v0c > v1c:
                continue
            region_t = ground_t[v0c:v1c + 1, u0c:u1c + 1]
            visible = region_t > depth  # in front of whatever ground is there
            body = np.array(BOT_BODY_RGB)
            top = np.array(BOT_TOP_RGB)
            sub_img = image[v0c:v1c + 1, u0c:u1c + 1]
            sub_mask = mask[v0c:v1c + 1, u0c:u1c + 1]
            rows = np.arange(v0c, v1c + 1)
            top_rows = rows < v - 0.6 * height_px
            color = np.where(top_rows[:, None, None], top[None, None, :],
                             body[None, None, :])
            sub_img[visible] = np.broadcast_to(color, sub_img.shape)[visible]
            sub_mask[visible] = MASK_BOT

    def render_array(self, pose, bot_poses=()) -> np.ndarray:
        """(3, H, W) float image, the policy's input layout."""
        return self.render(pose, bot_poses).image.transpose(2, 0, 1)


def write_ppm(image: np.ndarray, path: str | Path) -> None:
    """Binary P6 at 8 bits per channel from a float image in [0, 1]."""
    arr = np.clip(np.asarray(image), 0.0, 1.0)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"want (H, W, 3), got {arr.shape}")
    h, w, _ = arr.shape
    data = (arr * 255.0 + 0.5).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode())
        f.write(data.tobytes())


def read_ppm(path: str | Path) -> np.ndarray:
    """Inverse of write_ppm; returns float (H, W, 3) in [0, 1]."""
    raw = Path(path).read_bytes()
    if not raw.startswith(b"P6"):
        raise ValueError("not a binary PPM file")
    parts = raw.split(maxsplit=4)
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    data = np.frombuffer(parts[4], dtype=np.uint8, count=w * h * 3)
    return data.reshape(h, w, 3).astype(np.float64) / maxval
