"""Interactive latency profile: time 100 anchor edits on a 256x256 phantom
session and print the step-latency distribution."""
import time

import numpy as np

from polarsnake import evaluate, generate_phantom, interactive_step, open_session
from polarsnake.config import PhantomConfig, PipelineConfig


def main() -> None:
    cfg = PipelineConfig(phantom=PhantomConfig(size=256).with_corruption(1))
    image, prob, _ = generate_phantom(7, cfg.phantom)

    t0 = time.perf_counter()
    session = open_session(image, prob, cfg)
    print(f"open_session (smoothing stage): {(time.perf_counter() - t0) * 1000:.0f} ms")

    for _ in range(10):
        _, disp = interactive_step(session)
        if disp < cfg.evolve.tol:
            break

    ox, oy = session.frame.origin
    anchor = session.add_anchor(ox + session.frame.initial_radius + 6, oy)
    rng = np.random.default_rng(1)
    times = []
    for _ in range(100):
        theta = rng.uniform(0, 2 * np.pi)
        rho = evaluate(session.contour, theta) + rng.uniform(-6.0, 6.0)
        session.move_anchor(anchor.id, ox + rho * np.cos(theta), oy + rho * np.sin(theta))
        t0 = time.perf_counter()
        interactive_step(session)
        times.append((time.perf_counter() - t0) * 1000.0)

    times = np.array(times)
    print(f"interactive_step over {times.size} edits:")
    for q in (50, 90, 95, 99):
        print(f"  p{q}: {np.percentile(times, q):6.1f} ms")
    print(f"  max: {times.max():6.1f} ms")


if __name__ == "__main__":
    main()
