import numpy as np
import pytest

from polarsnake import (AnchorPoint, BSplineContour, EnergyWeights, PolarFrame, anchor_gradient,
                        compound_gradient, evaluate, interactive_step, local_stats,
                        rasterize_inside, sample_contour, yezzi_feature)
from polarsnake.config import PhantomConfig, PipelineConfig
from polarsnake.energy import LocalStats, energy_gradient
from polarsnake.errors import ConfigurationError, InputError
from polarsnake.geometry import bilinear
from polarsnake.phantom import generate_phantom
from polarsnake.pipeline import RefineSession, open_session

from conftest import make_disk_image


def _random_contour(seed=0, n=32, lo=10.0, hi=25.0):
    rng = np.random.default_rng(seed)
    return BSplineContour(rng.uniform(lo, hi, n))


# ---------------------------------------------------------------------------
# anchor gradient


def test_anchor_gradient_empty():
    contour = _random_contour()
    assert np.array_equal(anchor_gradient(contour, []), np.zeros(32))


def test_anchor_on_contour_contributes_nothing():
    contour = _random_contour(3)
    theta = 1.23
    anchor = AnchorPoint(rho=evaluate(contour, theta), theta=theta, id=1)
    np.testing.assert_allclose(anchor_gradient(contour, [anchor]), 0.0, atol=1e-12)


def test_anchor_gradient_matches_finite_differences():
    contour = _random_contour(7)
    anchors = [AnchorPoint(rho=18.0, theta=0.9, id=1),
               AnchorPoint(rho=12.5, theta=4.0, id=2)]

    def scalar(coeffs):
        c = BSplineContour(coeffs)
        return sum((evaluate(c, a.theta) - a.rho) ** 2 for a in anchors)

    grad = anchor_gradient(contour, anchors)
    h = 1e-4
    for k in range(32):
        cp = contour.coefficients.copy()
        cm = contour.coefficients.copy()
        cp[k] += h
        cm[k] -= h
        fd = (scalar(cp) - scalar(cm)) / (2 * h)
        if abs(fd) > 1e-9:
            assert grad[k] == pytest.approx(fd, rel=1e-6)
        else:
            assert grad[k] == pytest.approx(fd, abs=1e-8)


def test_weights_validation():
    with pytest.raises(ConfigurationError):
        EnergyWeights(alpha=-0.1)
    with pytest.raises(ConfigurationError):
        EnergyWeights(alpha=0.0, beta=0.0, gamma=0.0)


# ---------------------------------------------------------------------------
# compound gradient


def _disk_setup():
    image = make_disk_image(128, (64.0, 64.0), 20.0)
    prob = make_disk_image(128, (64.0, 64.0), 20.0, inside=0.9, outside=0.1)
    frame = PolarFrame(origin=(64.0, 64.0), initial_radius=26.0)
    contour = BSplineContour(np.full(32, 26.0))
    return image, prob, frame, contour


def test_compound_reduces_to_anchor_term():
    image, prob, frame, contour = _disk_setup()
    anchors = [AnchorPoint(rho=30.0, theta=0.5, id=1)]
    grad = compound_gradient(contour, frame, image, prob, anchors,
                             EnergyWeights(alpha=0.0, beta=0.0, gamma=3.0), radius=10.0)
    np.testing.assert_allclose(grad, 3.0 * anchor_gradient(contour, anchors),
                               atol=1e-12, rtol=0)


def test_compound_reduces_to_image_term():
    image, prob, frame, contour = _disk_setup()
    alpha = 0.7
    grad = compound_gradient(contour, frame, image, prob, [],
                             EnergyWeights(alpha=alpha, beta=0.0, gamma=0.0), radius=10.0)

    # assemble the image gradient via the public single-term ops
    mask = rasterize_inside(contour, frame, image.shape)
    samples = sample_contour(contour, frame, 128)
    g = np.zeros(128)
    for i in range(128):
        px, py = samples.points[i]
        cx = float(np.clip(np.rint(px), 0, 127))
        cy = float(np.clip(np.rint(py), 0, 127))
        st = local_stats(image, mask, (cx, cy), 10.0)
        st = LocalStats(st.mean_inside, st.mean_outside, st.area_inside, st.area_outside,
                        intensity=bilinear(image, (px, py)))
        g[i] = yezzi_feature(st)
    expected = alpha * energy_gradient(g, contour, samples)
    np.testing.assert_allclose(grad, expected, rtol=1e-12, atol=1e-15)


def test_compound_linearity_in_weights():
    image, prob, frame, contour = _disk_setup()
    anchors = [AnchorPoint(rho=31.0, theta=2.2, id=1)]
    w_full = EnergyWeights(alpha=0.5, beta=0.3, gamma=3.0)
    grad_full = compound_gradient(contour, frame, image, prob, anchors, w_full, radius=10.0)
    parts = (
        0.5 * compound_gradient(contour, frame, image, prob, anchors,
                                EnergyWeights(1.0, 0.0, 0.0), radius=10.0)
        + 0.3 * compound_gradient(contour, frame, image, prob, anchors,
                                  EnergyWeights(0.0, 1.0, 0.0), radius=10.0)
        + 3.0 * compound_gradient(contour, frame, image, prob, anchors,
                                  EnergyWeights(0.0, 0.0, 1.0), radius=10.0)
    )
    np.testing.assert_allclose(grad_full, parts, atol=1e-12, rtol=0)


def test_compound_shape_mismatch():
    image, prob, frame, contour = _disk_setup()
    with pytest.raises(InputError):
        compound_gradient(contour, frame, image, prob[:64, :], [],
                          EnergyWeights(), radius=10.0)


# ---------------------------------------------------------------------------
# interactive stepping


@pytest.fixture(scope="module")
def phantom_session():
    cfg = PipelineConfig(phantom=PhantomConfig().with_corruption(1))
    image, prob, _ = generate_phantom(9, cfg.phantom)
    return open_session(image, prob, cfg)


def _steady(session, max_calls=40):
    for _ in range(max_calls):
        _, disp = interactive_step(session)
        if disp < session.config.evolve.tol:
            break
    return session


def test_interactive_fixed_point(phantom_session):
    session = _steady(phantom_session)
    before = session.contour.coefficients.copy()
    _, disp = interactive_step(session)
    assert disp < session.config.evolve.tol
    thetas = 2 * np.pi * np.arange(32) / 32
    drift = np.abs(evaluate(session.contour, thetas)
                   - evaluate(BSplineContour(before), thetas)).max()
    assert drift < session.config.evolve.tol


def test_anchor_attraction_single_step(phantom_session):
    session = _steady(phantom_session)
    saved = session.contour.copy()
    theta = 0.7
    rho_user = evaluate(session.contour, theta) + 8.0
    ox, oy = session.frame.origin
    session.add_anchor(ox + rho_user * np.cos(theta), oy + rho_user * np.sin(theta))
    gap0 = abs(evaluate(session.contour, theta) - rho_user)
    interactive_step(session)
    gap1 = abs(evaluate(session.contour, theta) - rho_user)
    assert gap1 <= 0.5 * gap0

    # repeated steps satisfy the anchor to within a pixel
    _steady(session)
    assert abs(evaluate(session.contour, theta) - rho_user) <= 1.0

    # restore module-scoped session for other tests
    session.anchors.clear()
    session.contour = saved


def test_monotone_attraction_on_flat_images():
    flat = np.full((96, 96), 0.5)
    frame = PolarFrame(origin=(48.0, 48.0), initial_radius=20.0)
    contour = BSplineContour(np.full(32, 20.0))
    cfg = PipelineConfig()
    session = RefineSession(image=flat, prob_map=flat, frame=frame, contour=contour,
                            weights=cfg.weights, config=cfg)
    theta = 1.1
    rho_user = 27.0
    ox, oy = frame.origin
    session.add_anchor(ox + rho_user * np.cos(theta), oy + rho_user * np.sin(theta))
    gaps = [abs(evaluate(session.contour, theta) - rho_user)]
    for _ in range(25):
        _, disp = interactive_step(session)
        gaps.append(abs(evaluate(session.contour, theta) - rho_user))
        if disp < cfg.evolve.tol:
            break
    gaps = np.array(gaps)
    tol = cfg.evolve.tol
    shrinking = gaps[:-1] > tol
    assert np.all(gaps[1:][shrinking] < gaps[:-1][shrinking])
    assert gaps[-1] < 1.0


def test_anchor_removal_restores_contour():
    # symmetric phantom: clean disk image and probability map
    image = make_disk_image(128, (64.0, 64.0), 22.0, inside=0.85, outside=0.15)
    prob = make_disk_image(128, (64.0, 64.0), 22.0, inside=0.95, outside=0.05)
    cfg = PipelineConfig()
    session = open_session(image, prob, cfg)
    _steady(session)
    baseline = evaluate(session.contour, 2 * np.pi * np.arange(32) / 32)

    theta = 2.4
    rho_user = evaluate(session.contour, theta) + 8.0
    ox, oy = session.frame.origin
    anchor = session.add_anchor(ox + rho_user * np.cos(theta), oy + rho_user * np.sin(theta))
    _steady(session)
    moved = evaluate(session.contour, 2 * np.pi * np.arange(32) / 32)
    assert np.abs(moved - baseline).max() > 2.0

    session.remove_anchor(anchor.id)
    _steady(session, max_calls=80)
    restored = evaluate(session.contour, 2 * np.pi * np.arange(32) / 32)
    assert np.abs(restored - baseline).max() <= 0.2


def test_session_anchor_management():
    flat = np.full((64, 64), 0.5)
    frame = PolarFrame(origin=(32.0, 32.0), initial_radius=15.0)
    session = RefineSession(image=flat, prob_map=flat, frame=frame,
                            contour=BSplineContour(np.full(32, 15.0)))
    a1 = session.add_anchor(50.0, 32.0)
    assert a1.theta == pytest.approx(0.0)
    assert a1.rho == pytest.approx(18.0)

    # a second anchor within half a knot spacing replaces the first
    a2 = session.add_anchor(52.0, 32.3)
    assert len(session.anchors) == 1
    assert session.anchors[0].id == a2.id

    # distinct angle: coexists
    a3 = session.add_anchor(32.0, 52.0)
    assert len(session.anchors) == 2

    session.move_anchor(a3.id, 32.0, 54.0)
    assert session.anchors[-1].rho == pytest.approx(22.0)
    with pytest.raises(KeyError):
        session.move_anchor(999, 40.0, 40.0)
    session.remove_anchor(a3.id)
    assert len(session.anchors) == 1
    with pytest.raises(KeyError):
        session.remove_anchor(a3.id)

    with pytest.raises(InputError):
        session.add_anchor(200.0, 32.0)   # outside the image
    with pytest.raises(InputError):
        session.add_anchor(32.2, 32.0)    # inside the radius floor
