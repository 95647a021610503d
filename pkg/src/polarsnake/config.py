"""Dataclass configuration for the contour model, evolution loop, and pipeline.

Every default can be overridden from a JSON document (see ``PipelineConfig.from_dict``),
which is what the CLI ``--config`` flag loads.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigurationError
from .interaction import EnergyWeights


@dataclass(frozen=True)
class ContourConfig:
    n_knots: int = 32
    degree: int = 3
    scale: float = 1.0
    samples_per_knot: int = 4
    rho_min: float = 1.0


@dataclass(frozen=True)
class EvolveConfig:
    step: float = 0.5              # max knot displacement per iteration, pixels
    tol: float = 0.05              # convergence threshold on knot displacement, pixels
    max_iters_smooth: int = 200
    max_iters_interactive: int = 30
    radius_smooth: float = 100.0   # local window radius for batch smoothing
    radius_interactive: float = 10.0


@dataclass(frozen=True)
class PhantomConfig:
    size: int = 128
    base_radius_lo: float = 0.16   # fraction of image size
    base_radius_hi: float = 0.26
    harmonics: int = 4
    irregularity: float = 0.35     # cap on summed harmonic amplitude, fraction of base radius
    inside_level: float = 0.75
    outside_level: float = 0.25
    noise_sigma: float = 0.05
    bias_amplitude: float = 0.08
    blur_sigma: float = 1.5
    erosion_px: int = 0
    n_notches: int = 0
    notch_depth_px: float = 0.0
    notch_width_deg: float = 0.0
    flip_fraction: float = 0.0
    flip_band_factor: float = 1.6  # flips restricted to radius < factor * shape radius
    flip_margin_px: float = 3.0    # no flips within this distance of the true boundary

    def with_corruption(self, level: int) -> "PhantomConfig":
        """Preset corruption levels used by the benchmark corpus."""
        if level == 0:
            over: dict[str, Any] = dict(blur_sigma=1.0, erosion_px=0, n_notches=0,
                                        notch_depth_px=0.0, notch_width_deg=0.0,
                                        flip_fraction=0.0)
        elif level == 1:
            over = dict(blur_sigma=1.2, erosion_px=1, n_notches=3,
                        notch_depth_px=6.0, notch_width_deg=22.0, flip_fraction=0.08)
        elif level == 2:
            over = dict(blur_sigma=2.0, erosion_px=2, n_notches=4,
                        notch_depth_px=6.0, notch_width_deg=30.0, flip_fraction=0.14)
        else:
            raise ConfigurationError(f"unknown corruption level {level}")
        return dataclasses.replace(self, **over)


@dataclass(frozen=True)
class PipelineConfig:
    contour: ContourConfig = field(default_factory=ContourConfig)
    evolve: EvolveConfig = field(default_factory=EvolveConfig)
    weights: EnergyWeights = field(default_factory=EnergyWeights)
    phantom: PhantomConfig = field(default_factory=PhantomConfig)
    threshold: float = 0.5

    @property
    def n_samples(self) -> int:
        return self.contour.n_knots * self.contour.samples_per_knot

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PipelineConfig":
        def build(dc_cls, sub: dict[str, Any]):
            names = {f.name for f in dataclasses.fields(dc_cls)}
            bad = set(sub) - names
            if bad:
                raise ConfigurationError(f"unknown {dc_cls.__name__} keys: {sorted(bad)}")
            return dc_cls(**sub)

        kwargs: dict[str, Any] = {}
        for key, dc_cls in (("contour", ContourConfig), ("evolve", EvolveConfig),
                            ("weights", EnergyWeights), ("phantom", PhantomConfig)):
            if key in data:
                kwargs[key] = build(dc_cls, dict(data[key]))
        if "threshold" in data:
            kwargs["threshold"] = float(data["threshold"])
        bad = set(data) - {"contour", "evolve", "weights", "phantom", "threshold"}
        if bad:
            raise ConfigurationError(f"unknown config keys: {sorted(bad)}")
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)
