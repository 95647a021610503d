"""Disk-recovery experiment: start a circle 10 px off a binary disk and watch
the contour pull in.  Prints the per-iteration radial error trace."""
import time

import numpy as np

from polarsnake import BSplineContour, PolarFrame, evaluate, evolve


def main() -> None:
    size = 128
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    image = (np.hypot(xx - 64.0, yy - 64.0) < 20.0).astype(np.float64)
    frame = PolarFrame(origin=(64.0, 64.0), initial_radius=30.0)
    contour = BSplineContour(np.full(32, 30.0))
    thetas = 2 * np.pi * np.arange(128) / 128

    print("iter  mean|rho-20|  max|rho-20|")
    for k in range(1, 41):
        out, iterations, converged = evolve(contour, frame, image, radius=100.0, max_iters=k)
        err = np.abs(evaluate(out, thetas) - 20.0)
        print(f"{k:4d}  {err.mean():11.4f}  {err.max():10.4f}")
        if converged and iterations < k:
            break

    t0 = time.perf_counter()
    out, iterations, converged = evolve(contour, frame, image, radius=100.0)
    elapsed = (time.perf_counter() - t0) * 1000
    err = np.abs(evaluate(out, thetas) - 20.0)
    print(f"\nfull run: {iterations} iterations, converged={converged}, "
          f"{elapsed:.0f} ms, mean error {err.mean():.3f} px")


if __name__ == "__main__":
    main()
