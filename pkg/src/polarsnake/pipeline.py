"""Two-stage pipeline: frame initialization from a probability map, batch
smoothing, and interactive session setup, plus the overlap metric.

Stage one fits a smooth star-convex contour to the probability map alone
(window radius large enough to recover from a bad initialization).  Stage two
hands the converged contour to a live session where anchor edits re-run a
bounded descent on the compound energy.
"""
from __future__ import annotations

import base64
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .bspline import BSplineContour, contour_from_dict, contour_to_dict
from .config import PipelineConfig
from .energy import _Workspace, descend
from .errors import InitializationError, InputError, ShapeMismatchError
from .geometry import PolarFrame, origin_inside, rasterize_inside
from .interaction import AnchorPoint, EnergyWeights


def validate_prob_map(prob_map: np.ndarray) -> np.ndarray:
    arr = np.asarray(prob_map, dtype=np.float64)
    if arr.ndim != 2:
        raise InputError(f"probability map must be 2-D, got shape {arr.shape}")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise InputError("probability map values must lie in [0, 1]")
    return arr


def dice(mask_a: np.ndarray, mask_b: np.ndarray) -> float:
    """Overlap 2|A∩B| / (|A| + |B|); defined as 1 when both masks are empty."""
    if mask_a.shape != mask_b.shape:
        raise ShapeMismatchError(f"mask shapes differ: {mask_a.shape} vs {mask_b.shape}")
    a = mask_a.astype(bool)
    b = mask_b.astype(bool)
    total = int(a.sum()) + int(b.sum())
    if total == 0:
        return 1.0
    return 2.0 * int((a & b).sum()) / total


def initialize_frame(prob_map: np.ndarray, threshold: float = 0.5,
                     n_rays: int = 64) -> PolarFrame:
    """Origin = intensity-weighted centroid of the thresholded map; initial
    radius = mean distance from the origin to the last inside pixel along
    uniformly spaced rays."""
    prob = validate_prob_map(prob_map)
    mask = prob >= threshold
    if not mask.any():
        raise InitializationError(
            f"initialization failed: probability map empty after thresholding at {threshold}")
    weights = np.where(mask, prob, 0.0)
    total = weights.sum()
    h, w = prob.shape
    ys = np.arange(h, dtype=np.float64)[:, None]
    xs = np.arange(w, dtype=np.float64)[None, :]
    oy = float((weights * ys).sum() / total)
    ox = float((weights * xs).sum() / total)

    max_r = float(np.hypot(h, w))
    steps = np.arange(0.0, max_r, 0.5)
    thetas = 2.0 * np.pi * np.arange(n_rays) / n_rays
    px = ox + steps[None, :] * np.cos(thetas)[:, None]
    py = oy + steps[None, :] * np.sin(thetas)[:, None]
    ix = np.rint(px).astype(np.int64)
    iy = np.rint(py).astype(np.int64)
    in_bounds = (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
    hit = np.zeros(in_bounds.shape, dtype=bool)
    hit[in_bounds] = mask[iy[in_bounds], ix[in_bounds]]
    any_hit = hit.any(axis=1)
    # distance to the last inside pixel per ray; rays that never hit count as 0
    last = np.where(any_hit, hit.shape[1] - 1 - np.argmax(hit[:, ::-1], axis=1), 0)
    radii = steps[last] * any_hit
    r_c = float(radii.mean())
    if r_c <= 0:
        raise InitializationError("initialization failed: degenerate radius estimate")
    return PolarFrame(origin=(ox, oy), initial_radius=r_c)


@dataclass
class SmoothResult:
    contour: BSplineContour
    frame: PolarFrame
    iterations: int
    converged: bool


def smooth(prob_map: np.ndarray, config: PipelineConfig = PipelineConfig()) -> SmoothResult:
    """Stage one: fit a smooth contour to the probability map.

    Starts from a circle at the frame's initial radius and evolves on the
    continuous map values with the large smoothing window.
    """
    prob = validate_prob_map(prob_map)
    frame = initialize_frame(prob, config.threshold)
    cc = config.contour
    start = BSplineContour(np.full(cc.n_knots, max(frame.initial_radius, cc.rho_min)),
                           degree=cc.degree, scale=cc.scale)
    contour, iterations, converged, _ = descend(
        start, frame, [prob], [1.0], config.evolve.radius_smooth,
        config.evolve.step, config.evolve.max_iters_smooth, config.evolve.tol,
        n_samples=config.n_samples, rho_min=cc.rho_min)
    return SmoothResult(contour=contour, frame=frame, iterations=iterations, converged=converged)


@dataclass
class RefineSession:
    """Mutable state of one interactive editing session."""

    image: np.ndarray
    prob_map: np.ndarray
    frame: PolarFrame
    contour: BSplineContour
    anchors: list[AnchorPoint] = field(default_factory=list)
    weights: EnergyWeights = field(default_factory=EnergyWeights)
    stage: str = "interactive"
    config: PipelineConfig = field(default_factory=PipelineConfig)
    stage_one_contour: BSplineContour | None = None
    last_iterations: int = 0
    last_converged: bool = False
    _next_anchor_id: int = 1
    _workspace: Any = None

    def workspace(self) -> "_Workspace":
        if self._workspace is None:
            self._workspace = _Workspace(
                self.contour, self.frame, [self.image, self.prob_map],
                self.config.evolve.radius_interactive, self.config.n_samples,
                self.config.contour.rho_min)
        return self._workspace

    # -- anchor management ----------------------------------------------------

    def to_polar(self, x: float, y: float) -> tuple[float, float]:
        ox, oy = self.frame.origin
        rho = float(np.hypot(x - ox, y - oy))
        theta = float(np.arctan2(y - oy, x - ox) % (2.0 * np.pi))
        return rho, theta

    def _validate_anchor(self, x: float, y: float) -> tuple[float, float]:
        h, w = self.image.shape
        if not (0 <= x <= w - 1 and 0 <= y <= h - 1):
            raise InputError(f"anchor ({x}, {y}) outside image of shape {self.image.shape}")
        rho, theta = self.to_polar(x, y)
        if not self.config.contour.rho_min < rho < float(np.hypot(h, w)):
            raise InputError(f"anchor radius {rho:.2f} out of range")
        return rho, theta

    def add_anchor(self, x: float, y: float) -> AnchorPoint:
        """Add an anchor at image coordinates; a new anchor within half a knot
        spacing of an existing one replaces it."""
        rho, theta = self._validate_anchor(x, y)
        min_sep = 2.0 * np.pi / (4 * self.contour.n_knots)
        kept = []
        for a in self.anchors:
            diff = abs((a.theta - theta + np.pi) % (2.0 * np.pi) - np.pi)
            if diff >= min_sep:
                kept.append(a)
        anchor = AnchorPoint(rho=rho, theta=theta, id=self._next_anchor_id)
        self._next_anchor_id += 1
        self.anchors = kept + [anchor]
        return anchor

    def move_anchor(self, anchor_id: int, x: float, y: float) -> AnchorPoint:
        rho, theta = self._validate_anchor(x, y)
        for i, a in enumerate(self.anchors):
            if a.id == anchor_id:
                moved = AnchorPoint(rho=rho, theta=theta, id=anchor_id)
                self.anchors[i] = moved
                return moved
        raise KeyError(anchor_id)

    def remove_anchor(self, anchor_id: int) -> None:
        for i, a in enumerate(self.anchors):
            if a.id == anchor_id:
                del self.anchors[i]
                return
        raise KeyError(anchor_id)

    def reset(self) -> None:
        """Back to the stage-one contour with no anchors."""
        if self.stage_one_contour is not None:
            self.contour = self.stage_one_contour.copy()
        self.anchors = []

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        def pack(arr: np.ndarray) -> dict[str, Any]:
            return {"dtype": str(arr.dtype), "shape": list(arr.shape),
                    "data": base64.b64encode(np.ascontiguousarray(arr).tobytes()).decode("ascii")}

        return {
            "version": 1,
            "image": pack(self.image),
            "prob_map": pack(self.prob_map),
            "frame": {"origin": list(self.frame.origin),
                      "initial_radius": self.frame.initial_radius},
            "contour": contour_to_dict(self.contour, self.frame.origin),
            "stage_one_contour": (contour_to_dict(self.stage_one_contour, self.frame.origin)
                                  if self.stage_one_contour is not None else None),
            "anchors": [{"rho": a.rho, "theta": a.theta, "id": a.id} for a in self.anchors],
            "weights": {"alpha": self.weights.alpha, "beta": self.weights.beta,
                        "gamma": self.weights.gamma},
            "stage": self.stage,
            "next_anchor_id": self._next_anchor_id,
            "config": self.config.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RefineSession":
        def unpack(obj: dict[str, Any]) -> np.ndarray:
            raw = base64.b64decode(obj["data"])
            return np.frombuffer(raw, dtype=np.dtype(obj["dtype"])).reshape(obj["shape"]).copy()

        if data.get("version") != 1:
            raise InputError(f"session document version {data.get('version')!r} not supported")
        contour, _ = contour_from_dict(data["contour"])
        stage_one = None
        if data.get("stage_one_contour") is not None:
            stage_one, _ = contour_from_dict(data["stage_one_contour"])
        session = cls(
            image=unpack(data["image"]),
            prob_map=unpack(data["prob_map"]),
            frame=PolarFrame(origin=tuple(data["frame"]["origin"]),
                             initial_radius=data["frame"]["initial_radius"]),
            contour=contour,
            anchors=[AnchorPoint(rho=a["rho"], theta=a["theta"], id=a["id"])
                     for a in data["anchors"]],
            weights=EnergyWeights(**data["weights"]),
            stage=data["stage"],
            config=PipelineConfig.from_dict(data["config"]),
            stage_one_contour=stage_one,
        )
        session._next_anchor_id = int(data["next_anchor_id"])
        return session


def open_session(image: np.ndarray, prob_map: np.ndarray,
                 config: PipelineConfig = PipelineConfig()) -> RefineSession:
    """Run stage one and wrap the result in an interactive session."""
    img = np.asarray(image, dtype=np.float64)
    prob = validate_prob_map(prob_map)
    if img.shape != prob.shape:
        raise ShapeMismatchError(f"image {img.shape} and probability map {prob.shape} shapes differ")
    result = smooth(prob, config)
    if not origin_inside(result.frame, img.shape):
        raise InitializationError("initialization failed: origin outside image")
    return RefineSession(
        image=img, prob_map=prob, frame=result.frame, contour=result.contour,
        weights=config.weights, stage="interactive", config=config,
        stage_one_contour=result.contour.copy())


def session_mask(session: RefineSession) -> np.ndarray:
    return rasterize_inside(session.contour, session.frame, session.image.shape,
                            rho_min=session.config.contour.rho_min)
