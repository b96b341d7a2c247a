"""Camera models: pinhole and spherical (equirectangular) projections.

Camera frame: +x forward along the view axis, +y left, +z up. Pixel u grows
rightward, v downward. The horizontal field of view spans the pixel centers,
so azimuth +fov/2 lands exactly on u = W-1 in the spherical model; the
vertical span keeps square pixels: vfov = fov * (H-1) / (W-1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GEOMETRIES = ("pinhole", "spherical")


@dataclass(frozen=True)
class CameraConfig:
    geometry: str = "pinhole"
    width: int = 64
    height: int = 48
    fov: float = math.pi / 2          # horizontal, radians
    cam_height: float = 0.15          # m above the ground plane
    pitch: float = 0.35               # downward tilt, radians
    forward_offset: float = 0.05      # m ahead of the vehicle CG

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"geometry must be one of {GEOMETRIES}, "
                             f"got {self.geometry!r}")
        if not (0 < self.fov < math.pi):
            raise ValueError(f"fov must be in (0, pi), got {self.fov}")

    @property
    def vfov(self) -> float:
        return self.fov * (self.height - 1) / (self.width - 1)

    @property
    def focal_px(self) -> float:
        return ((self.width - 1) / 2.0) / math.tan(self.fov / 2.0)


def camera_pose(x: float, y: float, heading: float,
                config: CameraConfig) -> tuple[np.ndarray, np.ndarray]:
    """World-frame camera origin and rotation whose columns are the camera
    axes (forward, left, up)."""
    cp, sp = math.cos(config.pitch), math.sin(config.pitch)
    ch, sh = math.cos(heading), math.sin(heading)
    forward = np.array([ch * cp, sh * cp, -sp])
    left = np.array([-sh, ch, 0.0])
    up = np.cross(forward, left)
    origin = np.array([x + config.forward_offset * ch,
                       y + config.forward_offset * sh,
                       config.cam_height])
    return origin, np.stack([forward, left, up], axis=1)


def _pixel_dirs_camera(config: CameraConfig) -> np.ndarray:
    """(H, W, 3) unit ray directions in the camera frame."""
    w, h = config.width, config.height
    u = np.arange(w, dtype=np.float64)
    v = np.arange(h, dtype=np.float64)
    if config.geometry == "pinhole":
        f = config.focal_px
        ry = -(u - (w - 1) / 2.0) / f          # +y is left, u grows right
        rz = -(v - (h - 1) / 2.0) / f          # +z is up, v grows down
        dirs = np.empty((h, w, 3))
        dirs[..., 0] = 1.0
        dirs[..., 1] = ry[None, :]
        dirs[..., 2] = rz[:, None]
    else:
        az = (u / (w - 1) - 0.5) * config.fov   # positive to the right
        el = -(v / (h - 1) - 0.5) * config.vfov
        caz, saz = np.cos(az), np.sin(az)
        cel, sel = np.cos(el), np.sin(el)
        dirs = np.empty((h, w, 3))
        dirs[..., 0] = cel[:, None] * caz[None, :]
        dirs[..., 1] = cel[:, None] * -saz[None, :]
        dirs[..., 2] = sel[:, None] * np.ones_like(caz)[None, :]
    return dirs / np.linalg.norm(dirs, axis=-1, keepdims=True)


_DIR_CACHE: dict[CameraConfig, np.ndarray] = {}


def pixel_rays(x: float, y: float, heading: float,
               config: CameraConfig) -> tuple[np.ndarray, np.ndarray]:
    """World-frame (origin, (H, W, 3) ray directions) for every pixel."""
    if config not in _DIR_CACHE:
        _DIR_CACHE[config] = _pixel_dirs_camera(config)
    origin, rot = camera_pose(x, y, heading, config)
    dirs = _DIR_CACHE[config] @ rot.T
    return origin, dirs


def project_point(point, x: float, y: float, heading: float,
                  config: CameraConfig) -> tuple[float, float, float] | None:
    """World point -> (u, v, depth along the view axis); None if behind."""
    origin, rot = camera_pose(x, y, heading, config)
    p = rot.T @ (np.asarray(point, dtype=np.float64) - origin)
    px, py, pz = p
    if px <= 1e-9:
        return None
    w, h = config.width, config.height
    if config.geometry == "pinhole":
        f = config.focal_px
        u = (w - 1) / 2.0 - f * (py / px)
        v = (h - 1) / 2.0 - f * (pz / px)
    else:
        az = math.atan2(-py, px)
        el = math.atan2(pz, math.hypot(px, py))
        u = (az / config.fov + 0.5) * (w - 1)
        v = (-el / config.vfov + 0.5) * (h - 1)
    return u, v, px
