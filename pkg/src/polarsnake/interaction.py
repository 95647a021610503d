"""Anchor points, the compound three-term energy, and the live refinement step.

Anchors are user-placed polar targets the contour is pulled through.  Each
anchor penalizes the squared radial gap at its own angle only; the integral
against the point mass collapses analytically, so the anchor gradient is exact
rather than quadrature-dependent.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bspline import RHO_MIN, BSplineContour, evaluate, support_indices_weights
from .energy import _Workspace, descend
from .errors import ConfigurationError, ShapeMismatchError
from .geometry import PolarFrame


@dataclass(frozen=True)
class AnchorPoint:
    """Polar target (radius, angle) with a session-stable id."""

    rho: float
    theta: float
    id: int


@dataclass(frozen=True)
class EnergyWeights:
    alpha: float = 0.5   # image term
    beta: float = 0.3    # probability-map term
    gamma: float = 3.0   # anchor term

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0 or self.gamma < 0:
            raise ConfigurationError("energy weights must be nonnegative")
        if self.alpha == 0 and self.beta == 0 and self.gamma == 0:
            raise ConfigurationError("at least one energy weight must be positive")


def anchor_gradient(contour: BSplineContour, anchors: list[AnchorPoint]) -> np.ndarray:
    """Gradient of the summed squared radial gaps at the anchor angles.

    Each anchor contributes 2 * (psi(theta) - rho) * basis weight to every
    coefficient in its support; an empty list yields a zero gradient, and an
    anchor lying exactly on the contour contributes nothing.
    """
    grad = np.zeros(contour.n_knots)
    if not anchors:
        return grad
    thetas = np.asarray([a.theta for a in anchors], dtype=np.float64)
    rhos = np.asarray([a.rho for a in anchors], dtype=np.float64)
    kidx, w = support_indices_weights(contour, thetas)
    psi = np.maximum(np.einsum("ij,ij->i", contour.coefficients[kidx], w), RHO_MIN)
    resid = 2.0 * (psi - rhos)
    np.add.at(grad, kidx.ravel(), (resid[:, None] * w).ravel())
    return grad


def compound_gradient(contour: BSplineContour, frame: PolarFrame, image: np.ndarray,
                      prob_map: np.ndarray, anchors: list[AnchorPoint],
                      weights: EnergyWeights, radius: float,
                      n_samples: int | None = None) -> np.ndarray:
    """Weighted sum of the image, probability-map, and anchor gradients, all
    evaluated over the same sampled contour and the same inside mask."""
    if image.shape != prob_map.shape:
        raise ShapeMismatchError(f"image {image.shape} and probability map {prob_map.shape} shapes differ")
    if n_samples is None:
        n_samples = 4 * contour.n_knots
    ws = _Workspace(contour, frame,
                    [np.asarray(image, dtype=np.float64), np.asarray(prob_map, dtype=np.float64)],
                    radius, n_samples)
    anchor_t = np.asarray([a.theta for a in anchors], dtype=np.float64)
    anchor_r = np.asarray([a.rho for a in anchors], dtype=np.float64)
    state = ws.evaluate_state(contour.coefficients, [weights.alpha, weights.beta],
                              anchor_t, anchor_r, weights.gamma)
    return state.grad


def interactive_step(session) -> tuple[BSplineContour, float]:
    """One live-refinement tick: bounded descent on the compound energy from the
    session's current contour (warm start).  Updates the session in place and
    returns the new contour plus the net knot displacement."""
    cfg = session.config
    ws = session.workspace()
    before = evaluate(session.contour,
                      2.0 * np.pi * np.arange(session.contour.n_knots) / session.contour.n_knots,
                      rho_min=cfg.contour.rho_min)
    out, iterations, converged, _ = descend(
        session.contour, session.frame, [session.image, session.prob_map],
        [session.weights.alpha, session.weights.beta],
        cfg.evolve.radius_interactive, cfg.evolve.step,
        cfg.evolve.max_iters_interactive, cfg.evolve.tol,
        anchors=[(a.theta, a.rho) for a in session.anchors],
        anchor_weight=session.weights.gamma,
        n_samples=cfg.n_samples, rho_min=cfg.contour.rho_min, workspace=ws)
    after = evaluate(out, 2.0 * np.pi * np.arange(out.n_knots) / out.n_knots,
                     rho_min=cfg.contour.rho_min)
    displacement = float(np.max(np.abs(after - before)))
    session.contour = out
    session.last_iterations = iterations
    session.last_converged = converged
    return out, displacement
