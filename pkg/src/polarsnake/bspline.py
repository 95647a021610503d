"""Periodic uniform B-spline contours: radius as an explicit function of polar angle.

A closed star-convex boundary is stored as a coefficient vector ``c`` of length N.
The radius at polar angle ``theta`` is a linear combination of shifted copies of the
centered uniform B-spline ``basis(x, d)``, evaluated in knot-index space
``t = theta * N / (2 * pi * scale)`` with periodic coefficient indexing.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import ConfigurationError, InputError

SUPPORTED_DEGREES = (0, 1, 2, 3)

#: Radii are clamped to stay at or above this floor (pixels): the polar
#: parameterization silently assumes a strictly positive radius.
RHO_MIN = 1.0

CONTOUR_FORMAT_VERSION = 1


def _basis_array(x: np.ndarray, degree: int) -> np.ndarray:
    """Vectorized centered B-spline. ``x`` must already be float64."""
    ax = np.abs(x)
    if degree == 0:
        return np.where(ax < 0.5, 1.0, 0.0)
    if degree == 1:
        return np.maximum(1.0 - ax, 0.0)
    if degree == 2:
        inner = 0.75 - ax * ax
        outer = 0.5 * np.square(1.5 - ax)
        return np.where(ax < 0.5, inner, np.where(ax < 1.5, outer, 0.0))
    if degree == 3:
        inner = 2.0 / 3.0 - ax * ax + 0.5 * ax * ax * ax
        t = 2.0 - ax
        outer = t * t * t / 6.0
        return np.where(ax < 1.0, inner, np.where(ax < 2.0, outer, 0.0))
    raise ConfigurationError(f"unsupported B-spline degree {degree}; supported: {SUPPORTED_DEGREES}")


def basis(x, degree: int):
    """Centered uniform symmetric B-spline of the given degree.

    Equals the (degree+1)-fold self-convolution of the indicator of [-1/2, 1/2):
    nonnegative, symmetric, and zero for |x| >= (degree + 1) / 2.
    Accepts scalars or arrays; returns the matching shape.
    """
    if degree not in SUPPORTED_DEGREES:
        raise ConfigurationError(f"unsupported B-spline degree {degree}; supported: {SUPPORTED_DEGREES}")
    arr = np.asarray(x, dtype=np.float64)
    out = _basis_array(arr, degree)
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


@dataclass
class BSplineContour:
    """Closed contour: periodic coefficients, one per knot, plus degree and knot scale."""

    coefficients: np.ndarray
    degree: int = 3
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.degree not in SUPPORTED_DEGREES:
            raise ConfigurationError(f"unsupported B-spline degree {self.degree}")
        if not self.scale > 0:
            raise ConfigurationError(f"scale must be positive, got {self.scale}")
        c = np.array(self.coefficients, dtype=np.float64)
        if c.ndim != 1:
            raise ConfigurationError("coefficients must be a 1-D vector")
        if c.size < 2 * self.degree + 1:
            raise ConfigurationError(
                f"need at least {2 * self.degree + 1} knots for degree {self.degree}, got {c.size}")
        if not np.all(np.isfinite(c)):
            raise ConfigurationError("coefficients must be finite")
        self.coefficients = c

    @property
    def n_knots(self) -> int:
        return self.coefficients.size

    def copy(self) -> "BSplineContour":
        return BSplineContour(self.coefficients.copy(), self.degree, self.scale)

    def with_coefficients(self, coefficients: np.ndarray) -> "BSplineContour":
        return BSplineContour(coefficients, self.degree, self.scale)


def _knot_positions(contour: BSplineContour, theta: np.ndarray) -> np.ndarray:
    """Map angles to knot-index space, wrapping into one period."""
    n = contour.n_knots
    two_pi = 2.0 * np.pi
    t = (np.asarray(theta, dtype=np.float64) % two_pi) * (n / (two_pi * contour.scale))
    return t


def support_indices_weights(contour: BSplineContour, theta) -> tuple[np.ndarray, np.ndarray]:
    """Knot indices (wrapped mod N) and basis weights for each angle.

    Returns arrays of shape ``theta.shape + (degree + 1,)``; weights outside the
    basis support are exactly zero.  The weights along the last axis sum to one.
    """
    d = contour.degree
    n = contour.n_knots
    t = _knot_positions(contour, theta)
    base = np.floor(t - (d + 1) / 2.0).astype(np.int64) + 1
    offsets = np.arange(d + 1, dtype=np.int64)
    k = base[..., None] + offsets
    w = _basis_array(t[..., None] - k, d)
    return (k % n).astype(np.intp), w


def evaluate(contour: BSplineContour, theta, rho_min: float = RHO_MIN):
    """Radius of the contour at polar angle(s) ``theta``, clamped to ``rho_min``.

    Exactly 2*pi-periodic; a constant coefficient vector yields that constant
    radius at every angle (partition of unity).
    """
    k, w = support_indices_weights(contour, theta)
    rho = np.einsum("...j,...j->...", contour.coefficients[k], w)
    rho = np.maximum(rho, rho_min)
    if np.isscalar(theta) or np.ndim(theta) == 0:
        return float(rho)
    return rho


def basis_weights_at(contour: BSplineContour, theta: float) -> dict[int, float]:
    """Sparse map knot index -> basis weight at one angle; weights sum to one."""
    k, w = support_indices_weights(contour, float(theta))
    out: dict[int, float] = {}
    for ki, wi in zip(k.tolist(), w.tolist()):
        if wi != 0.0:
            out[ki] = out.get(ki, 0.0) + wi
    return out


def contour_to_dict(contour: BSplineContour, origin: tuple[float, float]) -> dict[str, Any]:
    """Interchange form shared by file I/O, the service, and the UI."""
    return {
        "version": CONTOUR_FORMAT_VERSION,
        "n_knots": contour.n_knots,
        "degree": contour.degree,
        "scale": contour.scale,
        "origin": [float(origin[0]), float(origin[1])],
        "coefficients": [float(v) for v in contour.coefficients],
    }


def contour_from_dict(data: dict[str, Any]) -> tuple[BSplineContour, tuple[float, float]]:
    version = data.get("version")
    if version != CONTOUR_FORMAT_VERSION:
        raise InputError(f"contour document version {version!r} not supported "
                         f"(expected {CONTOUR_FORMAT_VERSION})")
    coeffs = np.asarray(data["coefficients"], dtype=np.float64)
    if coeffs.size != int(data["n_knots"]):
        raise InputError("coefficient count does not match n_knots")
    contour = BSplineContour(coeffs, degree=int(data["degree"]), scale=float(data["scale"]))
    ox, oy = data["origin"]
    return contour, (float(ox), float(oy))
