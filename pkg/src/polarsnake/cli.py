"""Batch command line: smooth a probability map, generate phantoms, run the
benchmark corpus, or serve the interactive session API."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, fileio
from .config import PipelineConfig
from .errors import PolarSnakeError
from .geometry import rasterize_inside
from .phantom import generate_phantom
from .pipeline import dice, smooth

log = logging.getLogger("polarsnake")

REPORT_VERSION = 1


def _load_config(path: str | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    return PipelineConfig.from_file(path)


def _cmd_smooth(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    prob = fileio.load_image(args.prob_map)
    if args.image is not None:
        image = fileio.load_image(args.image)
        if image.shape != prob.shape:
            raise PolarSnakeError(
                f"image shape {image.shape} does not match probability map {prob.shape}")
    result = smooth(prob, config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    contour_path = out_dir / "contour.json"
    mask_path = out_dir / "mask.png"
    fileio.save_contour(result.contour, result.frame, contour_path)
    mask = rasterize_inside(result.contour, result.frame, prob.shape,
                            rho_min=config.contour.rho_min)
    fileio.save_mask(mask, mask_path)
    print(f"wrote {contour_path} and {mask_path} "
          f"(iterations={result.iterations}, converged={result.converged})")
    return 0


def _cmd_phantom(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    pcfg = config.phantom.with_corruption(args.corruption)
    image, prob, truth = generate_phantom(args.seed, pcfg)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fileio.save_image(image, out_dir / "image.png")
    fileio.save_image(prob, out_dir / "prob_map.png")
    fileio.save_mask(truth, out_dir / "truth.png")
    print(f"wrote phantom seed={args.seed} corruption={args.corruption} to {out_dir}")
    return 0


def _bench_case(payload: tuple[int, int, dict]) -> dict:
    seed, corruption, config_dict = payload
    config = PipelineConfig.from_dict(config_dict)
    pcfg = config.phantom.with_corruption(corruption)
    _, prob, truth = generate_phantom(seed, pcfg)
    t0 = time.perf_counter()
    result = smooth(prob, config)
    elapsed_ms = (time.perf_counter() - t0) * 1000.0
    mask = rasterize_inside(result.contour, result.frame, prob.shape,
                            rho_min=config.contour.rho_min)
    return {
        "seed": seed,
        "dice_before": dice(prob >= config.threshold, truth),
        "dice_after": dice(mask, truth),
        "iterations": result.iterations,
        "converged": result.converged,
        "time_ms": elapsed_ms,
    }


def _cmd_bench(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    payloads = [(seed, args.corruption, config.to_dict()) for seed in range(args.seeds)]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            cases = list(pool.map(_bench_case, payloads))
    else:
        cases = [_bench_case(p) for p in payloads]
    cases.sort(key=lambda case: case["seed"])

    before = np.array([c["dice_before"] for c in cases])
    after = np.array([c["dice_after"] for c in cases])
    times = np.array([c["time_ms"] for c in cases])
    report = {
        "version": REPORT_VERSION,
        "metadata": {
            "generated_at": datetime.now(timezone.utc).isoformat(),
            "tool_version": __version__,
            "corruption": args.corruption,
            "n_seeds": args.seeds,
            "config": config.to_dict(),
        },
        "cases": cases,
        "aggregate": {
            "dice_before_mean": float(before.mean()),
            "dice_before_std": float(before.std()),
            "dice_after_mean": float(after.mean()),
            "dice_after_std": float(after.std()),
            "time_ms_mean": float(times.mean()),
            "time_ms_max": float(times.max()),
            "converged_count": int(sum(c["converged"] for c in cases)),
        },
    }
    Path(args.report).parent.mkdir(parents=True, exist_ok=True)
    Path(args.report).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    print(f"bench: {args.seeds} seeds at corruption {args.corruption}: "
          f"dice {before.mean():.4f} -> {after.mean():.4f}; report at {args.report}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    config = _load_config(args.config)
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polarsnake",
                                     description="Star-convex B-spline contour segmentation")
    parser.add_argument("--version", action="version", version=f"polarsnake {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_smooth = sub.add_parser("smooth", help="fit a smooth contour to a probability map")
    p_smooth.add_argument("prob_map", help="probability map image (PGM or PNG)")
    p_smooth.add_argument("--image", help="matching intensity image (shape check only)")
    p_smooth.add_argument("--config", help="JSON config file")
    p_smooth.add_argument("--out", default=".", help="output directory")
    p_smooth.set_defaults(func=_cmd_smooth)

    p_phantom = sub.add_parser("phantom", help="generate a synthetic phantom")
    p_phantom.add_argument("--seed", type=int, required=True)
    p_phantom.add_argument("--corruption", type=int, default=0, choices=(0, 1, 2))
    p_phantom.add_argument("--out-dir", default=".", help="output directory")
    p_phantom.add_argument("--config", help="JSON config file")
    p_phantom.set_defaults(func=_cmd_phantom)

    p_bench = sub.add_parser("bench", help="run the phantom benchmark corpus")
    p_bench.add_argument("--seeds", type=int, default=50, help="number of seeds (0..N-1)")
    p_bench.add_argument("--corruption", type=int, default=1, choices=(0, 1, 2))
    p_bench.add_argument("--report", default="bench_report.json", help="report JSON path")
    p_bench.add_argument("--config", help="JSON config file")
    p_bench.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p_bench.set_defaults(func=_cmd_bench)

    p_serve = sub.add_parser("serve", help="serve the interactive session API")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--config", help="JSON config file")
    p_serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("POLARSNAKE_LOG", "WARNING").upper())
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PolarSnakeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
