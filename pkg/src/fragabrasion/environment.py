"""Abrader environments.

Every environment reduces, at a fragment state ``(n, R, a)``, to a single
effective circular-abrader radius. The ODE right-hand side only ever sees that
scalar, so adding an environment never touches the integrator.

Text grammar (used by the CLI and config files)::

    constant:<r>   dust   polygonal:<n*>:<a*>:<r*>   stationary:<R>
    homothetic     selfdual   mixed:<p>
    mixture:<p1>:<r1>,<p2>:<r2>,...

A mixture component may also be a polygonal abrader written
``<p>:<n*>:<a*>:<r*>``; it is reduced to its mean radius first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

from .geometry import GeometryError, corner_constants

PROBABILITY_ATOL = 1e-12


class AbraderError(ValueError):
    """Raised for malformed or inconsistent environment parameters."""


def _fmt(x: float) -> str:
    # shortest repr that round-trips exactly
    return repr(float(x))


def average_abrader_radius(n_star: int, a_star: float, r_star: float) -> float:
    """Mean radius of curvature of a rounded polygonal abrader.

    Averaging curvature over the abrader's perimeter gives
    ``r* + K(n*) (a*/2 - r*)``, which collapses to ``r*`` for a circular
    abrader (``a* = 2 r*``).
    """
    if isinstance(n_star, bool) or int(n_star) != n_star or n_star < 3:
        raise AbraderError(f"abrader fold count must be an integer >= 3, got {n_star!r}")
    if not a_star > 0:
        raise AbraderError(f"abrader diameter must be positive, got {a_star}")
    if not r_star >= 0:
        raise AbraderError(f"abrader corner radius must be non-negative, got {r_star}")
    if r_star > a_star / 2 + 1e-12 * a_star:
        raise AbraderError(
            f"infeasible abrader: corner radius {r_star} exceeds a*/2 = {a_star / 2}"
        )
    _, _, k = corner_constants(int(n_star))
    return r_star + k * (a_star / 2 - r_star)


def mixture_radius(components: Sequence[tuple[float, float]]) -> float:
    """Collision-probability weighted mean of abrader radii."""
    if not components:
        raise AbraderError("mixture needs at least one component")
    total = 0.0
    for p, r in components:
        if not p >= 0:
            raise AbraderError(f"negative mixture probability {p}")
        if not r >= 0:
            raise AbraderError(f"negative abrader radius {r}")
        total += p
    if abs(total - 1.0) > PROBABILITY_ATOL:
        raise AbraderError(f"mixture probabilities sum to {total:.12g}, expected 1")
    out = 0.0
    for p, r in components:
        out += p * r
    return out


class Environment:
    """Base class; subclasses are small frozen dataclasses."""

    #: True when the effective radius does not depend on the fragment state.
    constant_radius: bool = False

    def effective_radius(self, n: int, R: float, a: float) -> float:
        raise NotImplementedError

    def spec(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.spec()


@dataclass(frozen=True)
class Constant(Environment):
    r_star: float
    constant_radius = True

    def __post_init__(self) -> None:
        if not self.r_star >= 0:
            raise AbraderError(f"abrader radius must be non-negative, got {self.r_star}")

    def effective_radius(self, n, R, a):
        return self.r_star

    def spec(self):
        return f"constant:{_fmt(self.r_star)}"


@dataclass(frozen=True)
class Dust(Environment):
    constant_radius = True
    r_star = 0.0

    def effective_radius(self, n, R, a):
        return 0.0

    def spec(self):
        return "dust"


@dataclass(frozen=True)
class Mixture(Environment):
    """Several abrader populations hit with fixed probabilities.

    ``components`` holds ``(probability, radius)`` pairs; a radius may also
    be given as a :class:`Polygonal` or :class:`Constant` environment.
    """

    components: tuple
    constant_radius = True

    def __post_init__(self) -> None:
        reduced = []
        for item in self.components:
            try:
                p, r = item
            except (TypeError, ValueError):
                raise AbraderError(f"mixture component must be (p, r), got {item!r}")
            if isinstance(r, Environment):
                if not r.constant_radius:
                    raise AbraderError(f"mixture component {r.spec()} is state dependent")
                r = r.r_star
            reduced.append((float(p), float(r)))
        object.__setattr__(self, "components", tuple(reduced))
        object.__setattr__(self, "_radius", mixture_radius(reduced))

    @property
    def r_star(self) -> float:
        return self._radius

    def effective_radius(self, n, R, a):
        return self._radius

    def spec(self):
        body = ",".join(f"{_fmt(p)}:{_fmt(r)}" for p, r in self.components)
        return f"mixture:{body}"


@dataclass(frozen=True)
class Polygonal(Environment):
    """A fixed rounded-polygon abrader, replaced by its mean radius."""

    n_star: int
    a_star: float
    r_corner: float
    constant_radius = True

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "_radius", average_abrader_radius(self.n_star, self.a_star, self.r_corner)
        )

    @property
    def r_star(self) -> float:
        return self._radius

    def effective_radius(self, n, R, a):
        return self._radius

    def spec(self):
        return f"polygonal:{self.n_star}:{_fmt(self.a_star)}:{_fmt(self.r_corner)}"


@dataclass(frozen=True)
class StationaryControl(Environment):
    """Abrader radius that holds the corner radius at ``r_target``.

    Setting dR/da = 0 gives ``R* = R (1/S - 1)``; the target is stored and the
    inversion done per fold count.
    """

    r_target: float

    def __post_init__(self) -> None:
        if not self.r_target > 0:
            raise AbraderError(f"stationary target must be positive, got {self.r_target}")

    def abrader_radius(self, n: int) -> float:
        s, _, _ = corner_constants(n)
        return self.r_target * (1.0 / s - 1.0)

    def effective_radius(self, n, R, a):
        return self.abrader_radius(n)

    def spec(self):
        return f"stationary:{_fmt(self.r_target)}"


@dataclass(frozen=True)
class HomotheticControl(Environment):
    """State-dependent abrader radius that forces dR/da = R/a."""

    def effective_radius(self, n, R, a):
        s, _, _ = corner_constants(n)
        return (1.0 / s - 1.0) * R * (a - 2 * R) / a

    def spec(self):
        return "homothetic"


@dataclass(frozen=True)
class Mixed(Environment):
    """Self-dual abrasion diluted with dust.

    With probability ``p`` the fragment is hit by an identical copy of itself
    (mean radius ``R + K (a/2 - R)``), otherwise by dust. ``p = 1`` is the
    pure self-dual case.
    """

    p: float = 1.0

    def __post_init__(self) -> None:
        if not 0 < self.p <= 1:
            raise AbraderError(f"self-dual probability must lie in (0, 1], got {self.p}")

    def effective_radius(self, n, R, a):
        _, _, k = corner_constants(n)
        return self.p * (R + k * (a / 2 - R))

    def spec(self):
        return f"mixed:{_fmt(self.p)}"


@dataclass(frozen=True)
class SelfDual(Mixed):
    p: float = 1.0

    def __post_init__(self) -> None:
        if self.p != 1.0:
            raise AbraderError("SelfDual is Mixed with p = 1; use Mixed(p) instead")

    def spec(self):
        return "selfdual"


EnvironmentLike = Union[Environment, str]


def effective_radius(env: Environment, n: int, R: float, a: float) -> float:
    return env.effective_radius(n, R, a)


def _number(token: str, what: str) -> float:
    try:
        x = float(token)
    except ValueError:
        raise AbraderError(f"bad {what} {token!r} in environment spec") from None
    if not math.isfinite(x):
        raise AbraderError(f"non-finite {what} {token!r} in environment spec")
    return x


def _integer(token: str, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise AbraderError(f"bad {what} {token!r} in environment spec") from None


def parse_environment(text: EnvironmentLike) -> Environment:
    """Parse the environment grammar described in the module docstring."""
    if isinstance(text, Environment):
        return text
    head, _, rest = text.strip().partition(":")
    head = head.lower()
    args = rest.split(":") if rest else []

    def want(k: int) -> None:
        if len(args) != k:
            raise AbraderError(f"{head!r} takes {k} argument(s), got {text!r}")

    try:
        if head == "constant":
            want(1)
            return Constant(_number(args[0], "radius"))
        if head == "dust":
            want(0)
            return Dust()
        if head == "polygonal":
            want(3)
            return Polygonal(
                _integer(args[0], "fold count"),
                _number(args[1], "diameter"),
                _number(args[2], "corner radius"),
            )
        if head == "stationary":
            want(1)
            return StationaryControl(_number(args[0], "target radius"))
        if head == "homothetic":
            want(0)
            return HomotheticControl()
        if head == "selfdual":
            want(0)
            return SelfDual()
        if head == "mixed":
            want(1)
            return Mixed(_number(args[0], "probability"))
        if head == "mixture":
            comps = []
            for chunk in rest.split(","):
                parts = chunk.split(":")
                if len(parts) == 2:
                    comps.append((_number(parts[0], "probability"), _number(parts[1], "radius")))
                elif len(parts) == 4:
                    poly = Polygonal(
                        _integer(parts[1], "fold count"),
                        _number(parts[2], "diameter"),
                        _number(parts[3], "corner radius"),
                    )
                    comps.append((_number(parts[0], "probability"), poly))
                else:
                    raise AbraderError(f"bad mixture component {chunk!r}")
            return Mixture(tuple(comps))
    except GeometryError as exc:
        raise AbraderError(str(exc)) from None
    raise AbraderError(f"unknown environment {head!r}")
