import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import shape_indicator
from fragabrasion.geometry import (
    GeometryError,
    Phase,
    area,
    classify_phase,
    corner_constants,
    isoperimetric_ratio,
    make_rounded_polygon,
    perimeter,
    sample_contour,
)


def polyline_length(pts):
    return float(np.sum(np.hypot(*(np.roll(pts, -1, axis=0) - pts).T)))


def circumradius(p):
    return p.arc_center_distance + p.R


# -- construction -------------------------------------------------------------


def test_sharp_square_angle():
    p = make_rounded_polygon(4, 1, 0)
    assert p.phi == pytest.approx(math.pi / 2)
    assert p.S == pytest.approx(math.sqrt(0.5))
    assert p.C < 0


@pytest.mark.parametrize(
    "args",
    [(3, 1, 0.6), (2, 1, 0.1), (4, 0, 0), (4, -1, 0), (4, 1, -0.01), (4.5, 1, 0.1)],
)
def test_rejects_invalid(args):
    with pytest.raises(GeometryError):
        make_rounded_polygon(*args)


def test_feasibility_tolerance_absorbs_roundoff():
    make_rounded_polygon(5, 1.0, 0.5 + 5e-13)
    with pytest.raises(GeometryError):
        make_rounded_polygon(5, 1.0, 0.5 + 5e-12)


def test_hexagon_at_half_diameter_is_circle():
    p = make_rounded_polygon(6, 1, 0.5)
    assert p.is_circle
    assert classify_phase(p, 0.1) is Phase.CIRCLE


@pytest.mark.parametrize("n", range(3, 13))
def test_corner_constants_ranges(n):
    s, c, k = corner_constants(n)
    assert 0.5 <= s < 1
    assert c < 0
    assert k == pytest.approx(n * math.tan(math.pi / n) / math.pi, rel=1e-14)


# -- closed forms ---------------------------------------------------------------


def test_square_perimeter_and_area():
    p = make_rounded_polygon(4, 1, 0)
    assert perimeter(p) == pytest.approx(4, rel=1e-15)
    assert area(p) == pytest.approx(1, rel=1e-15)


def test_circle_limits():
    p = make_rounded_polygon(4, 1, 0.5)
    assert perimeter(p) == pytest.approx(math.pi, rel=1e-15)
    assert area(p) == pytest.approx(math.pi / 4, rel=1e-15)
    assert isoperimetric_ratio(p) == 1.0


@pytest.mark.parametrize("n", [3, 4, 7, 12])
@pytest.mark.parametrize("a", [0.3, 1.0, 4.0])
def test_circle_limits_any_shape(n, a):
    p = make_rounded_polygon(n, a, a / 2)
    assert abs(perimeter(p) - math.pi * a) <= 1e-12 * a
    assert abs(area(p) - math.pi * a * a / 4) <= 1e-12 * a * a
    assert isoperimetric_ratio(p) == 1.0


def test_rounded_square_perimeter_against_dense_polyline():
    p = make_rounded_polygon(4, 1, 0.1)
    assert perimeter(p) == pytest.approx(3.2 + 0.2 * math.pi, rel=1e-15)
    assert perimeter(p) == pytest.approx(3.828319, abs=1e-6)
    oracle = polyline_length(sample_contour(p, 200_000))
    assert abs(perimeter(p) - oracle) <= 1e-6 * oracle


def test_rounded_square_area_against_monte_carlo():
    p = make_rounded_polygon(4, 1, 0.1)
    assert area(p) == pytest.approx(1 - 0.04 + 0.01 * math.pi, rel=1e-15)
    assert area(p) == pytest.approx(0.991416, abs=1e-6)
    rng = np.random.default_rng(7)
    half = circumradius(p)
    box = (2 * half) ** 2
    hits, total = 0, 10**7
    for _ in range(10):
        pts = rng.uniform(-half, half, (total // 10, 2))
        hits += int(np.count_nonzero(shape_indicator(4, 1, 0.1, pts)))
    frac = hits / total
    sigma = box * math.sqrt(frac * (1 - frac) / total)
    assert abs(box * frac - area(p)) <= 3 * sigma


def test_random_shapes_against_oracles(rng):
    """100 random shapes: dense-polyline perimeter and stratified Monte-Carlo area.

    Jittered sampling has variance no larger than plain sampling, so the
    plain 3-sigma bound is a conservative acceptance band.
    """
    side = 300
    for _ in range(100):
        n = int(rng.integers(3, 13))
        a = float(rng.uniform(0.2, 3.0))
        R = float(rng.uniform(0, a / 2))
        p = make_rounded_polygon(n, a, R)

        oracle_p = polyline_length(sample_contour(p, 200_000))
        assert abs(perimeter(p) - oracle_p) <= 1e-6 * oracle_p, (n, a, R)

        half = circumradius(p)
        cells = (np.arange(side) + 0.5) / side
        gx, gy = np.meshgrid(cells, cells)
        jitter = rng.uniform(-0.5, 0.5, (side * side, 2)) / side
        pts = (np.column_stack((gx.ravel(), gy.ravel())) + jitter) * 2 * half - half
        frac = np.count_nonzero(shape_indicator(n, a, R, pts)) / len(pts)
        box = (2 * half) ** 2
        sigma = box * math.sqrt(frac * (1 - frac) / len(pts))
        assert abs(box * frac - area(p)) <= 3 * sigma, (n, a, R)


def test_isoperimetric_square_and_triangle():
    assert isoperimetric_ratio(make_rounded_polygon(4, 1, 0)) == pytest.approx(math.pi / 4, rel=1e-14)
    tri = isoperimetric_ratio(make_rounded_polygon(3, 1, 0))
    assert tri == pytest.approx(math.pi * math.sqrt(3) / 9, rel=1e-14)
    assert tri == pytest.approx(0.604600, abs=1e-6)


@pytest.mark.parametrize("n", range(3, 13))
def test_isoperimetric_strictly_increasing_in_R(n):
    ratios = [isoperimetric_ratio(make_rounded_polygon(n, 1, R)) for R in np.linspace(0, 0.5, 1000)]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    assert all(0 < r < 1 for r in ratios[:-1])
    assert ratios[-1] == 1.0


@settings(max_examples=200, deadline=None)
@given(
    n=st.integers(3, 40),
    a=st.floats(1e-3, 1e3),
    u=st.floats(0, 1),
)
def test_closed_forms_positive_and_bounded(n, a, u):
    p = make_rounded_polygon(n, a, u * a / 2)
    assert perimeter(p) > 0
    assert area(p) > 0
    assert 0 < isoperimetric_ratio(p) <= 1


# -- sampling ---------------------------------------------------------------------


def test_sample_circle_radius():
    pts = sample_contour(make_rounded_polygon(4, 1, 0.5), 360)
    assert pts.shape == (360, 2)
    assert np.allclose(np.hypot(pts[:, 0], pts[:, 1]), 0.5, atol=1e-12)


def test_sample_square_hits_vertices():
    pts = sample_contour(make_rounded_polygon(4, 1, 0), 16)
    radii = np.hypot(pts[:, 0], pts[:, 1])
    assert np.count_nonzero(np.isclose(radii, math.sqrt(2) / 2, atol=1e-12)) == 4


def test_sample_rounded_triangle_extremes():
    p = make_rounded_polygon(3, 1, 0.1)
    pts = sample_contour(p, 300)
    radii = np.hypot(pts[:, 0], pts[:, 1])
    assert radii.min() == pytest.approx(0.5, abs=1e-12)
    assert radii.max() == pytest.approx(p.arc_center_distance + 0.1, abs=1e-12)


def test_sample_too_few_points():
    with pytest.raises(GeometryError):
        sample_contour(make_rounded_polygon(5, 1, 0.1), 14)


@pytest.mark.parametrize("n,R", [(3, 0.0), (4, 0.1), (7, 0.3), (12, 0.45)])
def test_sample_counterclockwise_centred_uniform(n, R):
    p = make_rounded_polygon(n, 1, R)
    pts = sample_contour(p, 12 * n * 10)
    x, y = pts[:, 0], pts[:, 1]
    signed = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    assert signed > 0
    assert np.allclose(pts.mean(axis=0), 0, atol=1e-12)
    # every point lies on the exact boundary
    dist = np.hypot(x, y)
    assert dist.min() >= 0.5 - 1e-12
    assert dist.max() <= p.arc_center_distance + R + 1e-12


# -- phases -----------------------------------------------------------------------


@pytest.mark.parametrize(
    "R,expected",
    [(0.05, Phase.BELOW_ABRADER), (0.3, Phase.BETWEEN), (0.5, Phase.CIRCLE)],
)
def test_classify_phase(R, expected):
    assert classify_phase(make_rounded_polygon(4, 1, R), 0.1) is expected


def test_circle_tolerance():
    assert classify_phase(make_rounded_polygon(4, 1, 0.5 - 5e-10), 0.1) is Phase.CIRCLE
    assert classify_phase(make_rounded_polygon(4, 1, 0.5 - 5e-9), 0.1) is Phase.BETWEEN
