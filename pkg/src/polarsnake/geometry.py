"""Polar frame in image space, contour sampling, rasterization, local windows.

Pixel coordinates are (x, y) with x = column, y = row; pixel centers sit on
integer coordinates.  Arrays are indexed [y, x].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bspline import RHO_MIN, BSplineContour, evaluate
from .errors import ConfigurationError, InputError


@dataclass(frozen=True)
class PolarFrame:
    """Fixed origin and initial radius anchoring the polar parameterization."""

    origin: tuple[float, float]   # (x, y), pixels
    initial_radius: float

    def __post_init__(self) -> None:
        if not self.initial_radius > 0:
            raise ConfigurationError(f"initial radius must be positive, got {self.initial_radius}")


@dataclass
class SampledContour:
    thetas: np.ndarray   # (M,) strictly increasing in [0, 2*pi)
    radii: np.ndarray    # (M,)
    points: np.ndarray   # (M, 2) cartesian (x, y)


def origin_inside(frame: PolarFrame, image_shape: tuple[int, int]) -> bool:
    h, w = image_shape
    ox, oy = frame.origin
    return 0 <= ox <= w - 1 and 0 <= oy <= h - 1


def sample_contour(contour: BSplineContour, frame: PolarFrame, n_samples: int,
                   rho_min: float = RHO_MIN) -> SampledContour:
    """Evaluate the contour at n_samples uniform angles 2*pi*i/M."""
    if n_samples < contour.n_knots:
        raise InputError(f"need at least one sample per knot: {n_samples} < {contour.n_knots}")
    thetas = 2.0 * np.pi * np.arange(n_samples, dtype=np.float64) / n_samples
    radii = evaluate(contour, thetas, rho_min=rho_min)
    ox, oy = frame.origin
    points = np.stack([ox + radii * np.cos(thetas), oy + radii * np.sin(thetas)], axis=1)
    return SampledContour(thetas=thetas, radii=radii, points=points)


def pixel_polar_grids(frame: PolarFrame, image_shape: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel radius and angle (in [0, 2*pi)) about the frame origin."""
    h, w = image_shape
    ox, oy = frame.origin
    ys = np.arange(h, dtype=np.float64)[:, None] - oy
    xs = np.arange(w, dtype=np.float64)[None, :] - ox
    r = np.hypot(xs, ys)
    ang = np.arctan2(ys, xs) % (2.0 * np.pi)
    return r, ang


def rasterize_inside(contour: BSplineContour, frame: PolarFrame,
                     image_shape: tuple[int, int], rho_min: float = RHO_MIN) -> np.ndarray:
    """Boolean mask: pixel is inside iff its polar radius is strictly below the
    contour radius at its polar angle (pixels exactly on the contour count as outside)."""
    if not origin_inside(frame, image_shape):
        raise InputError(f"frame origin {frame.origin} outside image of shape {image_shape}")
    r, ang = pixel_polar_grids(frame, image_shape)
    rho = evaluate(contour, ang, rho_min=rho_min)
    return r < rho


def local_neighborhood(point: tuple[float, float], radius: float,
                       image_shape: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """All pixels within Euclidean distance ``radius`` of ``point``, clipped to bounds.

    Returns (ys, xs) integer index arrays in row-major order.
    """
    if not radius > 0:
        raise InputError(f"neighborhood radius must be positive, got {radius}")
    h, w = image_shape
    px, py = float(point[0]), float(point[1])
    x_lo = max(int(np.ceil(px - radius)), 0)
    x_hi = min(int(np.floor(px + radius)), w - 1)
    y_lo = max(int(np.ceil(py - radius)), 0)
    y_hi = min(int(np.floor(py + radius)), h - 1)
    if x_lo > x_hi or y_lo > y_hi:
        return np.empty(0, dtype=np.intp), np.empty(0, dtype=np.intp)
    ys = np.arange(y_lo, y_hi + 1, dtype=np.intp)[:, None]
    xs = np.arange(x_lo, x_hi + 1, dtype=np.intp)[None, :]
    keep = (xs - px) ** 2 + (ys - py) ** 2 <= radius * radius
    yy, xx = np.nonzero(keep)
    return ys[:, 0][yy], xs[0, :][xx]


def bilinear(image: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Bilinear interpolation at (x, y) points; coordinates clamped to the image."""
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    h, w = image.shape
    x = np.clip(pts[:, 0], 0.0, w - 1.0)
    y = np.clip(pts[:, 1], 0.0, h - 1.0)
    x0 = np.floor(x).astype(np.intp)
    y0 = np.floor(y).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    v = (image[y0, x0] * (1 - fx) * (1 - fy)
         + image[y0, x1] * fx * (1 - fy)
         + image[y1, x0] * (1 - fx) * fy
         + image[y1, x1] * fx * fy)
    return float(v[0]) if single else v
