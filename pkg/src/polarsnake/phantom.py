"""Synthetic star-convex phantoms standing in for an upstream segmentation model.

Each phantom is a random low-order Fourier radius profile about a random
interior origin, rendered three ways: a clean truth mask, a noisy intensity
image (two levels + Gaussian noise + a smooth illumination ramp), and a
degraded probability map (blurred truth with optional boundary erosion,
angular notches, and value flips near the shape).  Everything is a pure
function of the seed and config.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .config import PhantomConfig

#: hard floor on the generated radius profile, pixels
MIN_RADIUS = 5.0


@dataclass(frozen=True)
class StarShape:
    """Fourier radius profile about a fixed origin."""

    origin: tuple[float, float]
    base_radius: float
    cos_amps: np.ndarray
    sin_amps: np.ndarray

    def radius(self, thetas: np.ndarray) -> np.ndarray:
        thetas = np.asarray(thetas, dtype=np.float64)
        r = np.full(thetas.shape, self.base_radius)
        for m, (a, b) in enumerate(zip(self.cos_amps, self.sin_amps), start=1):
            r = r + a * np.cos(m * thetas) + b * np.sin(m * thetas)
        return np.maximum(r, MIN_RADIUS)


def sample_shape(rng: np.random.Generator, config: PhantomConfig) -> StarShape:
    size = config.size
    center = (size - 1) / 2.0
    origin = (center + rng.uniform(-0.1, 0.1) * size,
              center + rng.uniform(-0.1, 0.1) * size)
    base = rng.uniform(config.base_radius_lo, config.base_radius_hi) * size
    raw_c = rng.uniform(-1.0, 1.0, config.harmonics)
    raw_s = rng.uniform(-1.0, 1.0, config.harmonics)
    total = np.sum(np.abs(raw_c)) + np.sum(np.abs(raw_s))
    budget = rng.uniform(0.4, 1.0) * config.irregularity * base
    scale = budget / total if total > 0 else 0.0
    return StarShape(origin=origin, base_radius=base,
                     cos_amps=raw_c * scale, sin_amps=raw_s * scale)


def _polar_grids(shape: StarShape, size: int) -> tuple[np.ndarray, np.ndarray]:
    ox, oy = shape.origin
    ys = np.arange(size, dtype=np.float64)[:, None] - oy
    xs = np.arange(size, dtype=np.float64)[None, :] - ox
    return np.hypot(xs, ys), np.arctan2(ys, xs) % (2.0 * np.pi)

def render_mask(shape: StarShape, size: int) -> np.ndarray:
    r, ang = _polar_grids(shape, size)
    return r < shape.radius(ang)


def generate_phantom(seed: int, config: PhantomConfig = PhantomConfig()
                     ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (image, prob_map, truth_mask); deterministic per seed."""
    rng = np.random.default_rng(seed)
    size = config.size
    shape = sample_shape(rng, config)
    r, ang = _polar_grids(shape, size)
    profile = shape.radius(ang)
    truth = r < profile

    # intensity image: two levels, smooth illumination ramp, additive noise
    img = np.where(truth, config.inside_level, config.outside_level)
    fx, fy = rng.uniform(0.5, 1.5, 2)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    yy, xx = np.mgrid[0:size, 0:size]
    bias = config.bias_amplitude * np.sin(2.0 * np.pi * (fx * xx + fy * yy) / size + phase)
    img = img + bias + rng.normal(0.0, config.noise_sigma, (size, size))
    img = np.clip(img, 0.0, 1.0)

    # probability map: corrupted truth, blurred
    corrupt = truth
    if config.n_notches > 0 and config.notch_depth_px > 0:
        half_w = np.deg2rad(config.notch_width_deg) / 2.0
        carved = r < profile - config.notch_depth_px
        for _ in range(config.n_notches):
            theta_c = rng.uniform(0.0, 2.0 * np.pi)
            diff = np.abs((ang - theta_c + np.pi) % (2.0 * np.pi) - np.pi)
            corrupt = np.where(diff <= half_w, carved & corrupt, corrupt)
    if config.erosion_px > 0:
        corrupt = ndimage.binary_erosion(corrupt, iterations=config.erosion_px)
    prob = ndimage.gaussian_filter(corrupt.astype(np.float64), config.blur_sigma)
    if config.flip_fraction > 0:
        in_band = (r < profile * config.flip_band_factor) \
            & (np.abs(r - profile) > config.flip_margin_px)
        band = np.flatnonzero(in_band.ravel())
        n_flip = int(round(config.flip_fraction * band.size))
        if n_flip:
            sel = rng.choice(band, size=n_flip, replace=False)
            flat = prob.ravel()
            flat[sel] = 1.0 - flat[sel]
            prob = flat.reshape(prob.shape)
    prob = np.clip(prob, 0.0, 1.0)
    return img, prob, truth
