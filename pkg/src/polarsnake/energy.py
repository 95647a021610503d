"""Localized region statistics, the boundary feature, gradient assembly in
coefficient space, and the gradient-descent evolution loop.

Per sampled boundary point, the statistics are the mean intensities inside and
outside the contour restricted to a circular window around that point.  Window
centers are anchored to the pixel lattice (nearest pixel to the sampled
boundary point), which keeps the statistics exact pixel sums; the boundary
intensity itself is read at the true sub-pixel point.

The descent loop steps along the normalized feature gradient and accepts a
step only if the first-order work of the feature field along the step is
negative (trapezoid of the endpoint features against the radial displacement),
shrinking the step otherwise; the contour therefore comes to rest where the
feature itself vanishes.  Two equivalent stats paths exist: direct gathering
of window pixels (fast for small windows) and FFT convolution of whole-image
fields (fast when windows cover most of the image).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import fft as _fft

from .bspline import RHO_MIN, BSplineContour, support_indices_weights
from .errors import DivergenceError, InputError, ShapeMismatchError
from .geometry import PolarFrame, SampledContour, bilinear, local_neighborhood

#: below this gradient magnitude the contour is considered at rest
_GRAD_EPS = 1e-15

#: step-scale shrink factor applied when a trial step fails the descent test
_BACKOFF = 0.25

#: window elements above which whole-image FFT convolution beats direct gathering
_FFT_CROSSOVER = 8


@dataclass(frozen=True)
class LocalStats:
    """Window statistics at one boundary point."""

    mean_inside: float     # u: mean intensity over window pixels inside the contour
    mean_outside: float    # v: mean over window pixels outside
    area_inside: float     # pixel count inside
    area_outside: float    # pixel count outside
    intensity: float       # image value at the boundary point

    @property
    def degenerate(self) -> bool:
        return self.area_inside < 1 or self.area_outside < 1


def local_stats(image: np.ndarray, inside_mask: np.ndarray,
                point: tuple[float, float], radius: float) -> LocalStats:
    """Inside/outside means and areas within ``radius`` of ``point``.

    An empty partition on either side yields a degenerate result; the feature
    for such samples is zero rather than an error (this happens transiently
    when the contour hugs the image border).
    """
    if image.shape != inside_mask.shape:
        raise ShapeMismatchError(f"image {image.shape} and mask {inside_mask.shape} shapes differ")
    ys, xs = local_neighborhood(point, radius, image.shape)
    m = inside_mask[ys, xs]
    vals = image[ys, xs]
    a_in = int(np.count_nonzero(m))
    a_out = int(m.size - a_in)
    u = float(vals[m].sum() / a_in) if a_in else 0.0
    v = float(vals[~m].sum() / a_out) if a_out else 0.0
    return LocalStats(mean_inside=u, mean_outside=v, area_inside=float(a_in),
                      area_outside=float(a_out), intensity=bilinear(image, point))


def yezzi_feature(stats: LocalStats) -> float:
    """Signed boundary feature from localized means: positive values shrink the
    boundary at that angle under descent, negative values grow it."""
    if stats.degenerate:
        return 0.0
    du = stats.intensity - stats.mean_inside
    dv = stats.intensity - stats.mean_outside
    return du * du / stats.area_inside - dv * dv / stats.area_outside


def _assemble(feature_values: np.ndarray, knot_idx: np.ndarray, weights: np.ndarray,
              dtheta: float, n_knots: int) -> np.ndarray:
    contrib = (feature_values[:, None] * weights) * dtheta
    return np.bincount(knot_idx.ravel(), weights=contrib.ravel(), minlength=n_knots)


def energy_gradient(feature_values: np.ndarray, contour: BSplineContour,
                    samples: SampledContour) -> np.ndarray:
    """Quadrature of feature * basis over the sampled boundary, one component
    per coefficient, with periodic index wrapping."""
    g = np.asarray(feature_values, dtype=np.float64)
    if g.shape != samples.thetas.shape:
        raise InputError(f"need one feature value per sample: {g.shape} vs {samples.thetas.shape}")
    kidx, w = support_indices_weights(contour, samples.thetas)
    dtheta = 2.0 * np.pi / samples.thetas.size
    return _assemble(g, kidx, w, dtheta, contour.n_knots)


class _FeatureData:
    """Per-image buffers and lazily built convolution statics."""

    def __init__(self, image: np.ndarray):
        self.image = np.ascontiguousarray(image, dtype=np.float64)
        self.flat = self.image.ravel()
        self.conv_sum = None   # window sum of image values at every center


class _Workspace:
    """Cached geometry and image buffers for one evolution problem.

    Valid for a fixed frame, image shape, contour layout (knot count, degree,
    scale), sample count, window radius, and feature image list.
    """

    def __init__(self, contour: BSplineContour, frame: PolarFrame,
                 images: Sequence[np.ndarray], radius: float, n_samples: int,
                 rho_min: float = RHO_MIN):
        shape = images[0].shape
        for im in images:
            if im.shape != shape:
                raise ShapeMismatchError(f"feature image shapes differ: {im.shape} vs {shape}")
        if n_samples < contour.n_knots:
            raise InputError(f"need at least one sample per knot: {n_samples} < {contour.n_knots}")
        self.frame = frame
        self.shape = shape
        self.radius = float(radius)
        self.rho_min = float(rho_min)
        self.n_samples = n_samples
        self.n_knots = contour.n_knots
        self.degree = contour.degree
        self.scale = contour.scale
        self.diagonal = math.hypot(shape[0], shape[1])
        self.features = [_FeatureData(im) for im in images]

        h, w = shape
        ox, oy = frame.origin
        ys = np.arange(h, dtype=np.float64)[:, None] - oy
        xs = np.arange(w, dtype=np.float64)[None, :] - ox
        self.r_flat = np.hypot(xs, ys).ravel()
        ang = (np.arctan2(ys, xs) % (2.0 * np.pi)).ravel()
        kpix, wpix = support_indices_weights(contour, ang)
        self.pix_kidx = [np.ascontiguousarray(kpix[:, j]) for j in range(self.degree + 1)]
        self.pix_w = [np.ascontiguousarray(wpix[:, j]) for j in range(self.degree + 1)]

        self.thetas = 2.0 * np.pi * np.arange(n_samples, dtype=np.float64) / n_samples
        self.samp_kidx, self.samp_w = support_indices_weights(contour, self.thetas)
        self.dtheta = 2.0 * np.pi / n_samples
        self.cos_t = np.cos(self.thetas)
        self.sin_t = np.sin(self.thetas)

        knot_thetas = 2.0 * np.pi * np.arange(self.n_knots, dtype=np.float64) / self.n_knots
        self.knot_kidx, self.knot_w = support_indices_weights(contour, knot_thetas)

        ri = int(math.floor(self.radius))
        dy, dx = np.mgrid[-ri:ri + 1, -ri:ri + 1]
        keep = dy * dy + dx * dx <= self.radius * self.radius
        self.off_y = dy[keep].astype(np.int64)
        self.off_x = dx[keep].astype(np.int64)
        self.off_flat = self.off_y * w + self.off_x
        self.window_size = self.off_flat.size

        self.use_fft = n_samples * self.window_size > _FFT_CROSSOVER * h * w
        self._fft_shape = None
        self._kernel_fft = None
        self._conv_ones = None

    # -- contour evaluation on cached supports ------------------------------

    def radii_at_samples(self, c: np.ndarray) -> np.ndarray:
        rho = np.einsum("ij,ij->i", c[self.samp_kidx], self.samp_w)
        return np.maximum(rho, self.rho_min)

    def radii_at_knots(self, c: np.ndarray) -> np.ndarray:
        rho = np.einsum("ij,ij->i", c[self.knot_kidx], self.knot_w)
        return np.maximum(rho, self.rho_min)

    def _psi_at_pixels(self, c: np.ndarray, flat_idx: np.ndarray) -> np.ndarray:
        acc = self.pix_w[0].take(flat_idx) * c.take(self.pix_kidx[0].take(flat_idx))
        for j in range(1, self.degree + 1):
            acc += self.pix_w[j].take(flat_idx) * c.take(self.pix_kidx[j].take(flat_idx))
        return np.maximum(acc, self.rho_min)

    def inside_mask_flat(self, c: np.ndarray) -> np.ndarray:
        rho = self.pix_w[0] * c.take(self.pix_kidx[0])
        for j in range(1, self.degree + 1):
            rho += self.pix_w[j] * c.take(self.pix_kidx[j])
        return self.r_flat < np.maximum(rho, self.rho_min)

    # -- window statistics ---------------------------------------------------

    def _fft_setup(self) -> None:
        h, w = self.shape
        ri = int(math.floor(self.radius))
        side = 2 * ri + 1
        kernel = np.zeros((side, side))
        kernel[self.off_y + ri, self.off_x + ri] = 1.0
        fs = (_fft.next_fast_len(h + side - 1, real=True),
              _fft.next_fast_len(w + side - 1, real=True))
        self._fft_shape = (fs, ri)
        self._kernel_fft = _fft.rfft2(kernel, fs)
        self._conv_ones = np.rint(self._convolve(np.ones((h, w))))

    def _convolve(self, field: np.ndarray) -> np.ndarray:
        fs, ri = self._fft_shape
        h, w = self.shape
        full = _fft.irfft2(_fft.rfft2(field, fs) * self._kernel_fft, fs)
        return full[ri:ri + h, ri:ri + w]

    def _stats_fft(self, mask_flat: np.ndarray, centers_y: np.ndarray, centers_x: np.ndarray):
        if self._kernel_fft is None:
            self._fft_setup()
        h, w = self.shape
        mask2d = mask_flat.reshape(h, w).astype(np.float64)
        a_in = np.rint(self._convolve(mask2d))[centers_y, centers_x]
        a_tot = self._conv_ones[centers_y, centers_x]
        sums = []
        for feat in self.features:
            if feat.conv_sum is None:
                feat.conv_sum = self._convolve(feat.image)
            s_in = self._convolve(feat.image * mask2d)[centers_y, centers_x]
            s_tot = feat.conv_sum[centers_y, centers_x]
            sums.append((s_in, s_tot))
        return a_in, a_tot, sums

    def _stats_gather(self, c: np.ndarray, centers_y: np.ndarray, centers_x: np.ndarray):
        h, w = self.shape
        interior = (centers_y.min() >= self.radius and centers_y.max() <= h - 1 - self.radius
                    and centers_x.min() >= self.radius and centers_x.max() <= w - 1 - self.radius)
        if interior:
            idx = (centers_y * w + centers_x)[:, None] + self.off_flat[None, :]
            flat = idx.ravel()
            member = (self.r_flat.take(flat) < self._psi_at_pixels(c, flat)).reshape(idx.shape)
            member = member.astype(np.float64)
            a_tot = np.full(centers_y.size, float(self.window_size))
            valid = None
        else:
            rows = centers_y[:, None] + self.off_y[None, :]
            cols = centers_x[:, None] + self.off_x[None, :]
            valid = ((rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)).astype(np.float64)
            idx = np.clip(rows, 0, h - 1) * w + np.clip(cols, 0, w - 1)
            flat = idx.ravel()
            member = (self.r_flat.take(flat) < self._psi_at_pixels(c, flat)).reshape(idx.shape)
            member = member.astype(np.float64)
            member *= valid
            a_tot = valid.sum(axis=1)
        a_in = member.sum(axis=1)
        sums = []
        for feat in self.features:
            iv = feat.flat.take(idx)
            s_in = np.einsum("ij,ij->i", iv, member)
            if valid is None:
                s_tot = iv.sum(axis=1)
            else:
                s_tot = np.einsum("ij,ij->i", iv, valid)
            sums.append((s_in, s_tot))
        return a_in, a_tot, sums

    # -- full state evaluation ------------------------------------------------

    def evaluate_state(self, c: np.ndarray, feature_weights: Sequence[float],
                       anchor_thetas: np.ndarray, anchor_radii: np.ndarray,
                       anchor_weight: float) -> "_State":
        h, w = self.shape
        radii = self.radii_at_samples(c)
        px = self.frame.origin[0] + radii * self.cos_t
        py = self.frame.origin[1] + radii * self.sin_t
        centers_x = np.clip(np.rint(px).astype(np.int64), 0, w - 1)
        centers_y = np.clip(np.rint(py).astype(np.int64), 0, h - 1)

        if self.use_fft:
            mask_flat = self.inside_mask_flat(c)
            a_in, a_tot, sums = self._stats_fft(mask_flat, centers_y, centers_x)
        else:
            a_in, a_tot, sums = self._stats_gather(c, centers_y, centers_x)
        a_out = a_tot - a_in

        ok = (a_in >= 1.0) & (a_out >= 1.0)
        safe_in = np.where(a_in >= 1.0, a_in, 1.0)
        safe_out = np.where(a_out >= 1.0, a_out, 1.0)

        energy = 0.0
        grad = np.zeros(self.n_knots)
        points = np.stack([px, py], axis=1)
        feature_values = []
        for (s_in, s_tot), feat, fw in zip(sums, self.features, feature_weights):
            u = s_in / safe_in
            v = (s_tot - s_in) / safe_out
            ival = bilinear(feat.image, points)
            du = ival - u
            dv = ival - v
            g = np.where(ok, du * du / safe_in - dv * dv / safe_out, 0.0)
            feature_values.append(g)
            if fw != 0.0:
                grad += fw * _assemble(g, self.samp_kidx, self.samp_w, self.dtheta, self.n_knots)
                sep = np.where(ok, u - v, 0.0)
                energy += fw * (-0.5) * self.dtheta * float(np.sum(sep * sep))

        anchor_sq = 0.0
        if anchor_thetas.size:
            ak, aw = support_indices_weights(
                BSplineContour(c, self.degree, self.scale), anchor_thetas)
            psi = np.maximum(np.einsum("ij,ij->i", c[ak], aw), self.rho_min)
            resid = psi - anchor_radii
            anchor_sq = float(np.sum(resid * resid))
            energy += anchor_weight * anchor_sq
            contrib = (2.0 * anchor_weight) * resid[:, None] * aw
            grad += np.bincount(ak.ravel(), weights=contrib.ravel(), minlength=self.n_knots)

        return _State(energy=energy, grad=grad, max_radius=float(radii.max()),
                      feature_values=feature_values, radii=radii, anchor_sq=anchor_sq)


@dataclass
class _State:
    energy: float
    grad: np.ndarray
    max_radius: float
    feature_values: list[np.ndarray]
    radii: np.ndarray
    anchor_sq: float


def separation_energy(contour: BSplineContour, frame: PolarFrame, image: np.ndarray,
                      radius: float, n_samples: int | None = None,
                      rho_min: float = RHO_MIN) -> float:
    """Discretized localized separation energy: -1/2 (u - v)^2 integrated over
    the sampled boundary.  Lower means stronger inside/outside contrast; this
    is the scalar the descent loop monitors."""
    if n_samples is None:
        n_samples = 4 * contour.n_knots
    ws = _Workspace(contour, frame, [np.asarray(image, dtype=np.float64)],
                    radius, n_samples, rho_min)
    state = ws.evaluate_state(contour.coefficients, [1.0],
                              np.empty(0), np.empty(0), 0.0)
    return state.energy


def _step_work(cur: "_State", cand: "_State", feature_weights: Sequence[float],
               anchor_weight: float, dtheta: float) -> float:
    """First-order work done by the feature field along the step: trapezoid of
    the endpoint features against the radial displacement, plus the exact
    change of the anchor term.  Negative work means the step descends."""
    drho = cand.radii - cur.radii
    work = 0.0
    for g_cur, g_cand, fw in zip(cur.feature_values, cand.feature_values, feature_weights):
        if fw != 0.0:
            work += fw * 0.5 * dtheta * float(np.dot(g_cur + g_cand, drho))
    work += anchor_weight * (cand.anchor_sq - cur.anchor_sq)
    return work


def descend(contour: BSplineContour, frame: PolarFrame, images: Sequence[np.ndarray],
            feature_weights: Sequence[float], radius: float, step: float,
            max_iters: int, tol: float, *, anchors: Sequence[tuple[float, float]] = (),
            anchor_weight: float = 0.0, n_samples: int | None = None,
            rho_min: float = RHO_MIN, workspace: _Workspace | None = None,
            ) -> tuple[BSplineContour, int, bool, _Workspace]:
    """Shared descent loop: normalized gradient direction, per-iteration step
    capped at ``step`` pixels, step shrinking whenever a trial fails to lower
    the energy.  Stops when knot displacement falls below ``tol``, when no
    decrease is possible at sub-tolerance steps, or after ``max_iters``.
    """
    if step <= 0 or tol <= 0:
        raise InputError("step and tol must be positive")
    if n_samples is None:
        n_samples = 4 * contour.n_knots
    if workspace is None:
        workspace = _Workspace(contour, frame,
                               [np.asarray(im, dtype=np.float64) for im in images],
                               radius, n_samples, rho_min)

    anchor_thetas = np.asarray([a[0] for a in anchors], dtype=np.float64)
    anchor_radii = np.asarray([a[1] for a in anchors], dtype=np.float64)

    c = contour.coefficients.copy()
    state = workspace.evaluate_state(c, feature_weights, anchor_thetas, anchor_radii, anchor_weight)
    step_scale = 1.0
    iterations = 0
    converged = False
    for it in range(1, max_iters + 1):
        iterations = it
        gmax = float(np.max(np.abs(state.grad)))
        if gmax <= _GRAD_EPS:
            converged = True
            break
        cand_c = np.maximum(c - (step * step_scale / gmax) * state.grad, rho_min)
        cand = workspace.evaluate_state(cand_c, feature_weights, anchor_thetas,
                                        anchor_radii, anchor_weight)
        if _step_work(state, cand, feature_weights, anchor_weight, workspace.dtheta) < 0.0:
            disp = float(np.max(np.abs(workspace.radii_at_knots(cand_c)
                                       - workspace.radii_at_knots(c))))
            c = cand_c
            state = cand
            if state.max_radius > workspace.diagonal:
                raise DivergenceError(
                    f"contour radius {state.max_radius:.1f} exceeded image diagonal "
                    f"{workspace.diagonal:.1f}")
            step_scale = min(1.0, 2.0 * step_scale)
            if disp < tol:
                converged = True
                break
        else:
            step_scale *= _BACKOFF
            if step * step_scale < tol:
                converged = True
                break
    return contour.with_coefficients(c), iterations, converged, workspace


def evolve(contour: BSplineContour, frame: PolarFrame, image: np.ndarray,
           radius: float, step: float = 0.5, max_iters: int = 200, tol: float = 0.05,
           *, n_samples: int | None = None, rho_min: float = RHO_MIN,
           ) -> tuple[BSplineContour, int, bool]:
    """Evolve the contour on a single intensity image by localized region descent."""
    out, iterations, converged, _ = descend(
        contour, frame, [np.asarray(image, dtype=np.float64)], [1.0], radius,
        step, max_iters, tol, n_samples=n_samples, rho_min=rho_min)
    return out, iterations, converged
