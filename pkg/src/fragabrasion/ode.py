"""Corner-radius ODE of the collisional polygon model.

With ``C = 1 - 1/sin(phi/2)`` and the effective abrader radius ``r`` supplied
by the environment, the corner radius follows::

    dR/da = (R C + r) / (2 R C)

as the inscribed diameter ``a`` decreases. The slope is vertical at sharp
corners, so the integrator switches to ``a`` as a function of ``R`` whenever
the slope is steep (``da/dR`` is smooth and vanishes there).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np
from scipy.optimize import brentq

from .environment import Environment, EnvironmentLike, parse_environment
from .geometry import (
    FEASIBILITY_RTOL,
    Phase,
    RoundedPolygon,
    classify_phase,
    corner_constants,
    isoperimetric_ratio,
    make_rounded_polygon,
)

STATIONARY_ATOL = 1e-15
MAX_BISECTIONS = 200


class SingularStateError(ArithmeticError):
    """dR/da evaluated at R = 0, where it is infinite."""


class StationaryPointError(ArithmeticError):
    """da/dR evaluated where dR/da = 0."""


class IntegrationError(RuntimeError):
    pass


class DomainError(ValueError):
    """State outside the branch on which the closed-form solution is defined."""


class Termination(enum.Enum):
    REACHED_CIRCLE = "REACHED_CIRCLE"
    REACHED_SHARP = "REACHED_SHARP"
    VANISHED = "VANISHED"
    REACHED_AMIN = "REACHED_AMIN"


@dataclass(frozen=True)
class StepControl:
    """Integration settings. Lengths left as ``None`` scale with ``a0``.

    ``a_min = 0`` is accepted and lets a run end with ``VANISHED``.
    ``continue_past_circle`` keeps integrating through ``R = a/2`` into the
    geometrically infeasible region instead of stopping there.
    """

    h: Optional[float] = None
    slope_swap_threshold: float = 1.0
    a_min: Optional[float] = None
    event_tol: Optional[float] = None
    continue_past_circle: bool = False
    max_steps: int = 10_000_000

    def resolve(self, a0: float) -> tuple[float, float, float]:
        h = 1e-4 * a0 if self.h is None else self.h
        a_min = 1e-3 * a0 if self.a_min is None else self.a_min
        tol = 1e-12 * a0 if self.event_tol is None else self.event_tol
        if not (h > 0 and tol > 0 and self.slope_swap_threshold > 0):
            raise ValueError("step size, event tolerance and swap threshold must be positive")
        if not 0 <= a_min < a0:
            raise ValueError(f"a_min must lie in [0, a0), got {a_min}")
        return h, a_min, tol


@dataclass(frozen=True)
class Sample:
    a: float
    R: float
    phase: Phase
    i_proj: float


@dataclass
class Trajectory:
    n: int
    environment: str
    samples: list[Sample]
    termination: Termination
    steps_in_radius: int = 0

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[Sample]:
        return iter(self.samples)

    @property
    def a(self) -> np.ndarray:
        return np.array([s.a for s in self.samples])

    @property
    def R(self) -> np.ndarray:
        return np.array([s.R for s in self.samples])

    @property
    def i_proj(self) -> np.ndarray:
        return np.array([s.i_proj for s in self.samples])

    @property
    def last(self) -> Sample:
        return self.samples[-1]

    def circle_tail(self, a_end: float, m: int = 50) -> list[Sample]:
        """Shrinking-circle continuation after ``REACHED_CIRCLE``.

        Not integrated: once round, the shape stays a circle and only shrinks.
        Returns ``m`` samples on ``R = a/2`` strictly below the last size.
        """
        if self.termination is not Termination.REACHED_CIRCLE:
            return []
        a_c = self.last.a
        if not 0 < a_end < a_c:
            return []
        sizes = np.linspace(a_c, a_end, m + 1)[1:]
        return [Sample(float(x), float(x) / 2, Phase.CIRCLE, 1.0) for x in sizes]


def _split(n: int, R: float, a: float, env: Environment) -> tuple[float, float]:
    """Numerator and denominator of dR/da."""
    _, c, _ = corner_constants(n)
    return R * c + env.effective_radius(n, R, a), 2 * R * c


def rhs(n: int, R: float, a: float, env: EnvironmentLike) -> float:
    """dR/da at state (R, a)."""
    env = parse_environment(env)
    if R == 0:
        raise SingularStateError("dR/da is unbounded at R = 0; use inverse_rhs")
    num, den = _split(n, R, a, env)
    return num / den


def inverse_rhs(n: int, R: float, a: float, env: EnvironmentLike) -> float:
    """da/dR at state (R, a); zero at sharp corners."""
    env = parse_environment(env)
    num, den = _split(n, R, a, env)
    if abs(num) < STATIONARY_ATOL:
        raise StationaryPointError(f"dR/da = 0 at R={R}, a={a}")
    return den / num


def stationary_radius(n: int, r_star: float) -> float:
    """Corner radius at which dR/da vanishes for a constant abrader."""
    s, _, _ = corner_constants(n)
    return r_star / (1.0 / s - 1.0)


# --- closed form for a constant abrader radius -------------------------------


def analytic_size(n: int, R: float, R0: float, a0: float, r_star: float) -> float:
    """Inscribed diameter at which the corner radius equals ``R``.

    Closed-form solution of the ODE with ``R(a0) = R0`` and constant abrader
    radius; defined only below the stationary radius.
    """
    if r_star == 0:
        return a0 + 2 * (R - R0)
    if r_star < 0:
        raise DomainError(f"abrader radius must be non-negative, got {r_star}")
    s, _, _ = corner_constants(n)
    arg0 = -R0 + s * (R0 + r_star)
    arg = -R + s * (R + r_star)
    if not (arg0 > 0 and arg > 0):
        raise DomainError(
            f"R={R} or R0={R0} at/above the stationary radius {stationary_radius(n, r_star)}"
        )
    return a0 + (2 * (R - R0) + 2 * s * r_star * (math.log(arg0) - math.log(arg)) / (s - 1))


def analytic_radius(n: int, a: float, R0: float, a0: float, r_star: float) -> float:
    """Invert :func:`analytic_size` for ``R`` by a bracketed root search."""
    if a > a0:
        raise DomainError(f"size {a} exceeds the initial size {a0}")
    if a == a0:
        return R0
    if r_star == 0:
        R = R0 + (a - a0) / 2
        if R < 0:
            raise DomainError(f"corners become sharp before size {a}")
        return R
    r_stat = stationary_radius(n, r_star)
    hi = min(a / 2, r_stat * (1 - 1e-14))
    if R0 >= hi:
        raise DomainError(f"no root: R0={R0} already at or above {hi}")

    def f(R: float) -> float:
        return analytic_size(n, R, R0, a0, r_star) - a

    if f(hi) > 0:
        raise DomainError(f"no root: trajectory reaches the circle before size {a}")
    return brentq(f, R0, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)


# --- integrator ---------------------------------------------------------------


def _sample(n: int, a: float, R: float, env: Environment) -> Sample:
    if R > a / 2 + FEASIBILITY_RTOL * a:
        return Sample(a, R, Phase.INFEASIBLE, math.nan)
    p = RoundedPolygon(n, a, min(max(R, 0.0), a / 2))
    return Sample(a, R, classify_phase(p, env.effective_radius(n, R, a)), isoperimetric_ratio(p))


class _Stepper:
    """Classic RK4 in whichever variable is currently active."""

    def __init__(self, n: int, env: Environment, h: float, threshold: float):
        self.n = n
        self.env = env
        self.h = h
        self.threshold = threshold

    def dRda(self, a: float, R: float) -> float:
        num, den = _split(self.n, R, a, self.env)
        if den == 0:
            raise SingularStateError("stage evaluation hit R = 0")
        return num / den

    def dadR(self, a: float, R: float) -> float:
        num, den = _split(self.n, R, a, self.env)
        if num == 0:
            raise StationaryPointError("stage evaluation hit dR/da = 0")
        return den / num

    def choose(self, a: float, R: float) -> tuple[str, float]:
        """Return the active variable and the signed increment in it.

        ``a`` is always decreasing; in radius mode the direction of ``R``
        follows the sign of the numerator (``2 R C`` is negative).
        """
        num, den = _split(self.n, R, a, self.env)
        if R > 0 and abs(num) <= self.threshold * abs(den):
            return "a", -self.h
        return "R", (self.h if num > 0 else -self.h)

    def advance(self, mode: str, dx: float, a: float, R: float) -> tuple[float, float]:
        if mode == "a":
            f = self.dRda
            k1 = f(a, R)
            k2 = f(a + dx / 2, R + dx / 2 * k1)
            k3 = f(a + dx / 2, R + dx / 2 * k2)
            k4 = f(a + dx, R + dx * k3)
            return a + dx, R + dx / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        g = self.dadR
        k1 = g(a, R)
        k2 = g(a + dx / 2 * k1, R + dx / 2)
        k3 = g(a + dx / 2 * k2, R + dx / 2)
        k4 = g(a + dx * k3, R + dx)
        return a + dx / 6 * (k1 + 2 * k2 + 2 * k3 + k4), R + dx


def _event_value(event, state: tuple[float, float], a_min: float) -> float:
    a, R = state
    if event is Termination.REACHED_SHARP:
        return R
    if event is Termination.REACHED_CIRCLE or event == "crossing":
        return R - a / 2
    if event is Termination.REACHED_AMIN:
        return a - a_min
    return a


def _onto_boundary(event, before, after, a_min: float) -> tuple[float, float]:
    """Secant between the last clear and first triggered state, onto the event."""
    g0, g1 = _event_value(event, before, a_min), _event_value(event, after, a_min)
    theta = 1.0 if g0 == g1 else min(max(g0 / (g0 - g1), 0.0), 1.0)
    return (
        before[0] + theta * (after[0] - before[0]),
        before[1] + theta * (after[1] - before[1]),
    )


def integrate(
    n: int,
    a0: float,
    R0: float,
    env: EnvironmentLike,
    ctrl: Optional[StepControl] = None,
) -> Trajectory:
    """Integrate the corner-radius ODE from ``(a0, R0)`` with decreasing size.

    Fixed-step RK4; events (circle, sharp corners, minimum size) are located
    by bisection on the step fraction and the event variable is snapped onto
    its boundary.
    """
    env = parse_environment(env)
    ctrl = ctrl or StepControl()
    make_rounded_polygon(n, a0, R0)
    a0, R0 = float(a0), float(R0)
    h, a_min, tol = ctrl.resolve(a0)
    stepper = _Stepper(n, env, h, ctrl.slope_swap_threshold)

    a, R = a0, min(R0, a0 / 2)
    samples = [_sample(n, a, R, env)]

    def done(term: Termination) -> Trajectory:
        return Trajectory(n, env.spec(), samples, term, radius_steps)

    radius_steps = 0
    if abs(R - a / 2) <= FEASIBILITY_RTOL * a and not ctrl.continue_past_circle:
        return done(Termination.REACHED_CIRCLE)
    if R == 0 and _split(n, R, a, env)[0] <= 0:
        return done(Termination.REACHED_SHARP)

    for _ in range(ctrl.max_steps):
        mode, dx = stepper.choose(a, R)
        if mode == "R":
            radius_steps += 1
        sharp_armed = R > 0
        circle_armed = R < a / 2 and not ctrl.continue_past_circle
        crossing_armed = R < a / 2 and ctrl.continue_past_circle

        def triggered(state: tuple[float, float]) -> list[Termination | str]:
            ta, tR = state
            hits: list[Termination | str] = []
            if sharp_armed and tR <= 0:
                hits.append(Termination.REACHED_SHARP)
            if circle_armed and tR >= ta / 2:
                hits.append(Termination.REACHED_CIRCLE)
            if crossing_armed and tR >= ta / 2:
                hits.append("crossing")
            if a_min > 0 and ta <= a_min:
                hits.append(Termination.REACHED_AMIN)
            if a_min == 0 and ta <= 0:
                hits.append(Termination.VANISHED)
            return hits

        clipped = mode == "a" and a_min > 0 and a + dx <= a_min
        if clipped:
            # land exactly on a_min instead of bisecting towards it
            dx = a_min - a
        try:
            new = stepper.advance(mode, dx, a, R)
        except ArithmeticError as exc:
            raise IntegrationError(f"step failed at a={a}, R={R}: {exc}") from exc
        hits = triggered(new)
        if clipped:
            new = (a_min, new[1])
            hits = triggered(new)
            if hits == [Termination.REACHED_AMIN]:
                a, R = new
                samples.append(_sample(n, a, R, env))
                return done(Termination.REACHED_AMIN)
        if not hits:
            a, R = new
            samples.append(_sample(n, a, R, env))
            continue

        lo, hi = 0.0, 1.0
        before = (a, R)
        for _ in range(MAX_BISECTIONS):
            if (hi - lo) * abs(dx) < tol:
                break
            mid = (lo + hi) / 2
            state = stepper.advance(mode, mid * dx, a, R)
            if triggered(state):
                hi, new = mid, state
            else:
                lo, before = mid, state
        else:
            raise IntegrationError(f"event bisection did not converge near a={a}, R={R}")
        hits = triggered(new)
        # earliest-listed event wins when several fire in the same sliver
        event = hits[0]
        a, R = _onto_boundary(event, before, new, a_min)
        if event is Termination.REACHED_SHARP:
            R = 0.0
        elif event is Termination.REACHED_CIRCLE or event == "crossing":
            R = a / 2
        elif event is Termination.REACHED_AMIN:
            a = a_min
        elif event is Termination.VANISHED:
            a = 0.0
        last = samples[-1]
        if len(samples) > 1 and abs(last.a - a) <= tol and abs(last.R - R) <= tol:
            # previous step already landed on the event; do not emit a sliver
            samples.pop()
        if event is Termination.VANISHED:
            samples.append(Sample(0.0, R, Phase.INFEASIBLE, math.nan))
            return done(event)
        samples.append(_sample(n, a, R, env))
        if event != "crossing":
            return done(event)
    raise IntegrationError(f"no event after {ctrl.max_steps} steps")
