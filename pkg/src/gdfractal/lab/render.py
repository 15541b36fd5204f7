"""Density images of point clouds as binary PGM files."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from ..attractor import PointCloud
from ..errors import EmptyCloud, UnsupportedDimension

PAD = 0.05


def _frame(lo: np.ndarray, hi: np.ndarray):
    span = np.maximum(hi - lo, 1e-12)
    return lo - PAD * span, hi + PAD * span


def density_image(points: np.ndarray, pixels: int = 512) -> np.ndarray:
    """uint8 image, darkest where most points fall.  1D clouds become a strip."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if len(pts) == 0:
        raise EmptyCloud("cannot render an empty cloud")
    if pts.shape[1] not in (1, 2):
        raise UnsupportedDimension("only 1D and 2D clouds can be rendered; export 3D clouds as CSV")
    if pixels < 64:
        raise ValueError("pixels must be at least 64")
    lo, hi = _frame(pts.min(axis=0), pts.max(axis=0))
    if pts.shape[1] == 1:
        hist, _ = np.histogram(pts[:, 0], bins=pixels, range=(lo[0], hi[0]))
        rows = max(16, pixels // 8)
        hist = np.tile(hist, (rows, 1))
    else:
        # square pixels: pad the shorter side
        side = (hi - lo).max()
        mid = 0.5 * (lo + hi)
        lo, hi = mid - side / 2, mid + side / 2
        h, _, _ = np.histogram2d(pts[:, 0], pts[:, 1], bins=pixels,
                                 range=[[lo[0], hi[0]], [lo[1], hi[1]]])
        hist = h.T[::-1]  # y grows upward
    scale = np.log1p(hist.max())
    shade = np.log1p(hist) / scale
    return (255 - np.rint(255 * shade)).astype(np.uint8)


def write_pgm(image: np.ndarray, path: str | Path) -> Path:
    path = Path(path)
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(image, dtype=np.uint8).tobytes())
    return path


def render(cloud: PointCloud | np.ndarray, path: str | Path, pixels: int = 512) -> Path:
    pts = cloud.points if isinstance(cloud, PointCloud) else cloud
    return write_pgm(density_image(pts, pixels), path)
