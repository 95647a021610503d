import numpy as np
import pytest

from polarsnake import BSplineContour, PolarFrame


def make_disk_image(size: int, center: tuple[float, float], radius: float,
                    inside: float = 1.0, outside: float = 0.0) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    r = np.hypot(xx - center[0], yy - center[1])
    return np.where(r < radius, inside, outside)


@pytest.fixture
def disk_problem():
    """128x128 binary disk of radius 20 with a +10 px mis-initialized circle."""
    image = make_disk_image(128, (64.0, 64.0), 20.0)
    frame = PolarFrame(origin=(64.0, 64.0), initial_radius=30.0)
    contour = BSplineContour(np.full(32, 30.0))
    return image, frame, contour


def smooth_random_image(rng: np.random.Generator, size: int, n_waves: int = 4) -> np.ndarray:
    """Smooth random field in [0, 1]: a few low-frequency sinusoids."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    field = np.zeros((size, size))
    for _ in range(n_waves):
        fx, fy = rng.uniform(-2.0, 2.0, 2)
        phase = rng.uniform(0, 2 * np.pi)
        field += rng.uniform(0.3, 1.0) * np.sin(2 * np.pi * (fx * xx + fy * yy) / size + phase)
    lo, hi = field.min(), field.max()
    return (field - lo) / (hi - lo + 1e-12)
