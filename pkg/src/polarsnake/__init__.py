"""Star-convex contour segmentation with periodic B-spline snakes.

A closed boundary is modeled as a periodic B-spline radius profile about a
fixed origin, evolved by gradient descent on localized region energies, and
steered live through user anchor points.
"""

__version__ = "0.1.0"

from .bspline import BSplineContour, basis, basis_weights_at, evaluate
from .config import PipelineConfig
from .energy import LocalStats, energy_gradient, evolve, local_stats, yezzi_feature
from .geometry import PolarFrame, SampledContour, local_neighborhood, rasterize_inside, sample_contour
from .interaction import AnchorPoint, EnergyWeights, anchor_gradient, compound_gradient, interactive_step
from .phantom import generate_phantom
from .pipeline import RefineSession, dice, initialize_frame, open_session, smooth

__all__ = [
    "AnchorPoint",
    "BSplineContour",
    "EnergyWeights",
    "LocalStats",
    "PipelineConfig",
    "PolarFrame",
    "RefineSession",
    "SampledContour",
    "anchor_gradient",
    "basis",
    "basis_weights_at",
    "compound_gradient",
    "dice",
    "energy_gradient",
    "evaluate",
    "evolve",
    "generate_phantom",
    "initialize_frame",
    "interactive_step",
    "local_neighborhood",
    "local_stats",
    "open_session",
    "rasterize_inside",
    "sample_contour",
    "smooth",
    "yezzi_feature",
]
