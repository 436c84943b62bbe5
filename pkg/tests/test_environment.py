import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fragabrasion.environment import (
    AbraderError,
    Constant,
    Dust,
    HomotheticControl,
    Mixed,
    Mixture,
    Polygonal,
    SelfDual,
    StationaryControl,
    average_abrader_radius,
    effective_radius,
    mixture_radius,
    parse_environment,
)
from fragabrasion.geometry import make_rounded_polygon, sample_contour


@pytest.mark.parametrize("n_star", [3, 4, 5, 9, 20])
def test_circular_abrader_reduces_to_radius(n_star):
    assert average_abrader_radius(n_star, 0.3, 0.15) == 0.15


def test_square_abrader_mean_radius():
    assert average_abrader_radius(4, 1, 0) == pytest.approx(2 / math.pi, rel=1e-15)
    assert average_abrader_radius(4, 1, 0) == pytest.approx(0.636620, abs=1e-6)


def test_triangle_abrader_mean_radius():
    expected = 0.1 + (2 * math.sqrt(3) / (2 * math.pi / 3)) * 0.4
    assert average_abrader_radius(3, 1, 0.1) == pytest.approx(expected, rel=1e-14)
    assert average_abrader_radius(3, 1, 0.1) == pytest.approx(0.761595, abs=1e-6)


@pytest.mark.parametrize("n_star,r", [(3, 0.1), (4, 0.0), (6, 0.2), (11, 0.05)])
def test_mean_radius_is_perimeter_over_total_turning(n_star, r):
    # independent route: 1 / mean curvature = P / (2 pi), by dense polyline length
    pts = sample_contour(make_rounded_polygon(n_star, 1.0, r), 400_000)
    length = float(np.sum(np.hypot(*(np.roll(pts, -1, axis=0) - pts).T)))
    assert average_abrader_radius(n_star, 1.0, r) == pytest.approx(length / (2 * math.pi), rel=1e-6)


@pytest.mark.parametrize("args", [(2, 1, 0), (4, 0, 0), (4, 1, -0.1), (4, 1, 0.6)])
def test_rejects_bad_abrader(args):
    with pytest.raises(AbraderError):
        average_abrader_radius(*args)


def test_sharp_abrader_mean_radius_non_increasing_in_fold_count():
    radii = [average_abrader_radius(n, 1.0, 0.0) for n in range(3, 21)]
    assert all(b <= a for a, b in zip(radii, radii[1:]))


def test_mixture_radius_examples():
    assert mixture_radius([(1.0, 0.1)]) == 0.1
    assert mixture_radius([(0.3, 0.2), (0.7, 0.05)]) == pytest.approx(0.095, rel=1e-15)
    assert mixture_radius([(0.5, 0.0), (0.5, 0.0)]) == 0.0


@pytest.mark.parametrize(
    "comps", [[(0.3, 0.2), (0.6, 0.05)], [(1.1, 0.1), (-0.1, 0.1)], [], [(1.0, -0.1)]]
)
def test_mixture_radius_rejects(comps):
    with pytest.raises(AbraderError):
        mixture_radius(comps)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(0.01, 1), st.floats(0, 5)), min_size=1, max_size=6))
def test_mixture_radius_bounded_by_components(raw):
    total = sum(w for w, _ in raw)
    comps = [(w / total, r) for w, r in raw]
    drift = 1 - sum(p for p, _ in comps)
    comps[0] = (comps[0][0] + drift, comps[0][1])
    if abs(sum(p for p, _ in comps) - 1) > 1e-12:
        return
    value = mixture_radius(comps)
    lo, hi = min(r for _, r in comps), max(r for _, r in comps)
    assert lo - 1e-12 * hi <= value <= hi + 1e-12 * hi


def test_mixture_is_state_independent():
    env = Mixture(((0.3, 0.2), (0.7, 0.05)))
    expected = mixture_radius([(0.3, 0.2), (0.7, 0.05)])
    for n in (3, 4, 8):
        for a in (1.0, 0.3):
            for R in np.linspace(0, a / 2, 7):
                assert effective_radius(env, n, R, a) == expected


def test_polygonal_matches_constant_bitwise_when_circular():
    poly, const = Polygonal(5, 0.2, 0.1), Constant(0.1)
    for n in (3, 4, 6, 10):
        for a in (1.0, 0.37):
            for R in np.linspace(0, a / 2, 11):
                assert effective_radius(poly, n, R, a) == effective_radius(const, n, R, a)


def test_homothetic_control_example():
    expected = (math.sqrt(2) - 1) * 0.25 * 0.5
    assert HomotheticControl().effective_radius(4, 0.25, 1) == pytest.approx(expected, rel=1e-14)
    assert HomotheticControl().effective_radius(4, 0.25, 1) == pytest.approx(0.051777, abs=1e-6)


@pytest.mark.parametrize("n", [3, 4, 5, 9])
def test_homothetic_control_zero_at_ends_and_non_negative(n):
    env = HomotheticControl()
    assert env.effective_radius(n, 0.0, 1.0) == 0
    assert env.effective_radius(n, 0.5, 1.0) == 0
    assert all(env.effective_radius(n, R, 1.0) >= 0 for R in np.linspace(0, 0.5, 101))


def test_stationary_control_inversion():
    target = 1 / (math.sqrt(2) - 1) * 0.1
    env = StationaryControl(target)
    assert env.effective_radius(4, 0.2, 1.0) == pytest.approx(0.1, rel=1e-14)
    assert StationaryControl(0.24142).abrader_radius(4) == pytest.approx(0.1, abs=1e-5)


def test_self_dual_example():
    expected = 0.2 + (2 / (math.pi / 2)) * 0.3
    assert SelfDual().effective_radius(4, 0.2, 1.0) == pytest.approx(expected, rel=1e-14)
    assert SelfDual().effective_radius(4, 0.2, 1.0) == pytest.approx(0.581972, abs=1e-6)


def test_mixed_scales_self_dual():
    for R in (0.0, 0.1, 0.4):
        assert Mixed(0.25).effective_radius(5, R, 1.0) == pytest.approx(
            0.25 * SelfDual().effective_radius(5, R, 1.0), rel=1e-15
        )


@pytest.mark.parametrize("p", [0.0, -0.1, 1.5])
def test_mixed_rejects_probability(p):
    with pytest.raises(AbraderError):
        Mixed(p)


def test_dust_is_zero():
    assert Dust().effective_radius(7, 0.2, 1.0) == 0.0


@pytest.mark.parametrize(
    "text,expected",
    [
        ("constant:0.1", Constant(0.1)),
        ("dust", Dust()),
        ("polygonal:4:1:0", Polygonal(4, 1.0, 0.0)),
        ("stationary:0.24142", StationaryControl(0.24142)),
        ("homothetic", HomotheticControl()),
        ("selfdual", SelfDual()),
        ("mixed:0.1", Mixed(0.1)),
    ],
)
def test_parse_round_trip(text, expected):
    env = parse_environment(text)
    assert env == expected
    assert parse_environment(env.spec()) == env


def test_parse_mixture():
    env = parse_environment("mixture:0.3:0.2,0.7:0.05")
    assert env.r_star == pytest.approx(0.095, rel=1e-15)
    assert parse_environment(env.spec()) == env


def test_parse_mixture_with_polygonal_component():
    env = parse_environment("mixture:0.5:4:1:0,0.5:0.1")
    assert env.r_star == pytest.approx(0.5 * 2 / math.pi + 0.05, rel=1e-14)


@pytest.mark.parametrize(
    "text",
    ["mixture:0.3:0.2,0.6:0.05", "constant", "constant:x", "polygonal:4:1", "wind:3", "mixed:2", "dust:1"],
)
def test_parse_rejects(text):
    with pytest.raises(AbraderError):
        parse_environment(text)
