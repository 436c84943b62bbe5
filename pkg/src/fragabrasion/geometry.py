"""Regular n-fold polygons with circular-arc corners.

A shape is fixed by the fold count ``n``, the inscribed-circle diameter ``a``
and the corner arc radius ``R``. Equivalently it is the inner regular n-gon of
inradius ``a/2 - R`` dilated by a disk of radius ``R``, which gives the closed
forms used for perimeter and area below.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

FEASIBILITY_RTOL = 1e-12
CIRCLE_RTOL = 1e-9

# sin(phi/2) where floating-point trig misses the exact value (n = 3 gives
# 0.49999999999999994, which would put the triangle's C a hair below -1)
_EXACT_S = {3: 0.5, 4: math.sqrt(0.5), 6: math.sqrt(3) / 2}


class GeometryError(ValueError):
    """Raised for invalid or geometrically infeasible shape parameters."""


class Phase(enum.Enum):
    BELOW_ABRADER = "BELOW_ABRADER"  # R < R*
    BETWEEN = "BETWEEN"  # R* < R < a/2
    CIRCLE = "CIRCLE"  # R = a/2
    # Only produced by the integrator when it is told to run past the circle.
    INFEASIBLE = "INFEASIBLE"


@lru_cache(maxsize=None)
def corner_constants(n: int) -> tuple[float, float, float]:
    """Return ``(S, C, K)`` for fold count ``n``.

    ``S = sin(phi/2)`` with interior angle ``phi = pi (n-2)/n``,
    ``C = 1 - 1/S`` (always negative) and ``K = 2 cot(phi/2) / (pi - phi)``,
    the factor that turns ``a/2 - R`` into the excess of the mean radius of
    curvature of the polygon over its corner radius.
    """
    if n < 3:
        raise GeometryError(f"fold count must be >= 3, got {n}")
    phi = math.pi * (n - 2) / n
    s = _EXACT_S.get(n, math.sin(phi / 2))
    c = 1.0 - 1.0 / s
    k = 2.0 / math.tan(phi / 2) / (math.pi - phi)
    return s, c, k


@dataclass(frozen=True)
class RoundedPolygon:
    n: int
    a: float
    R: float
    phi: float = field(init=False, repr=False)
    S: float = field(init=False, repr=False)
    C: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or int(self.n) != self.n:
            raise GeometryError(f"fold count must be an integer, got {self.n!r}")
        if self.n < 3:
            raise GeometryError(f"fold count must be >= 3, got {self.n}")
        if not self.a > 0:
            raise GeometryError(f"inscribed diameter must be positive, got {self.a}")
        if not self.R >= 0:
            raise GeometryError(f"corner radius must be non-negative, got {self.R}")
        if self.R > self.a / 2 + FEASIBILITY_RTOL * self.a:
            raise GeometryError(
                f"geometrically infeasible: R={self.R} exceeds a/2={self.a / 2}"
            )
        object.__setattr__(self, "n", int(self.n))
        s, c, _ = corner_constants(self.n)
        object.__setattr__(self, "phi", math.pi * (self.n - 2) / self.n)
        object.__setattr__(self, "S", s)
        object.__setattr__(self, "C", c)

    @property
    def inradius(self) -> float:
        return self.a / 2

    @property
    def is_circle(self) -> bool:
        return abs(self.R - self.a / 2) <= CIRCLE_RTOL * self.a

    @property
    def edge_length(self) -> float:
        """Length of each straight side between two corner arcs."""
        return 2 * math.tan(math.pi / self.n) * max(self.a / 2 - self.R, 0.0)

    @property
    def arc_center_distance(self) -> float:
        """Distance from the centroid to each corner arc centre."""
        return max(self.a / 2 - self.R, 0.0) / math.cos(math.pi / self.n)


def make_rounded_polygon(n: int, a: float, R: float) -> RoundedPolygon:
    return RoundedPolygon(n, float(a), float(R))


def perimeter(p: RoundedPolygon) -> float:
    t = math.tan(math.pi / p.n)
    return 2 * p.n * t * max(p.a / 2 - p.R, 0.0) + 2 * math.pi * p.R


def area(p: RoundedPolygon) -> float:
    t = math.tan(math.pi / p.n)
    r = min(p.R, p.a / 2)
    return p.n * t * ((p.a / 2) ** 2 - r**2) + math.pi * r**2


def isoperimetric_ratio(p: RoundedPolygon) -> float:
    """``4 pi A / P**2``; exactly 1 for the circle."""
    if abs(p.R - p.a / 2) <= FEASIBILITY_RTOL * p.a:
        return 1.0
    return min(4 * math.pi * area(p) / perimeter(p) ** 2, 1.0)


def classify_phase(p: RoundedPolygon, r_star: float) -> Phase:
    if p.is_circle:
        return Phase.CIRCLE
    if p.R < r_star:
        return Phase.BELOW_ABRADER
    return Phase.BETWEEN


def sample_contour(p: RoundedPolygon, m: int) -> np.ndarray:
    """Sample ``m`` counterclockwise points uniformly in arclength.

    The walk starts at the midpoint of the side facing +x, so for ``m``
    divisible by ``n`` every side midpoint and every arc midpoint is hit.
    Returns an ``(m, 2)`` array; the closing segment is implied.
    """
    n = p.n
    if m < 3 * n:
        raise GeometryError(f"need at least 3n={3 * n} samples, got {m}")
    half_edge = p.edge_length / 2
    arc = 2 * math.pi / n * p.R
    period = 2 * half_edge + arc
    total = n * period

    s = np.arange(m) * (total / m)
    k = np.minimum((s // period).astype(int), n - 1)
    u = s - k * period
    # local frame of sector k: side normal along +x, walking towards +y
    x = np.empty(m)
    y = np.empty(m)

    first = u < half_edge
    x[first] = p.a / 2
    y[first] = u[first]

    on_arc = (~first) & (u < half_edge + arc)
    d = p.arc_center_distance
    cx, cy = d * math.cos(math.pi / n), d * math.sin(math.pi / n)
    if p.R > 0:
        theta = (u[on_arc] - half_edge) / p.R
    else:
        theta = np.zeros(np.count_nonzero(on_arc))
    x[on_arc] = cx + p.R * np.cos(theta)
    y[on_arc] = cy + p.R * np.sin(theta)

    last = ~(first | on_arc)
    # second half of the next side, expressed in the rotated frame
    w = u[last] - half_edge - arc - half_edge
    c2, s2 = math.cos(2 * math.pi / n), math.sin(2 * math.pi / n)
    x[last] = p.a / 2 * c2 - w * s2
    y[last] = p.a / 2 * s2 + w * c2

    ang = 2 * math.pi * k / n
    ca, sa = np.cos(ang), np.sin(ang)
    return np.column_stack((ca * x - sa * y, sa * x + ca * y))
