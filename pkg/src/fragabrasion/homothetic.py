"""Self-similar states of self-dual abrasion diluted with dust.

Along a ray ``R = alpha * a`` the diluted self-dual slope depends on ``alpha``
only::

    F(alpha) = (C + p - p K + p K / (2 alpha)) / (2 C)

and the ray is invariant when ``F(alpha) = alpha``. Clearing ``1/alpha`` gives
the quadratic ``2C alpha^2 - (C + p - pK) alpha - pK/2 = 0``. With
``tau = -ln a`` the ratio obeys ``d alpha/d tau = alpha - F(alpha)``, so a root
attracts exactly when ``g = F - alpha`` has positive slope there.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .geometry import corner_constants


class Stability(enum.Enum):
    STABLE = "STABLE"
    UNSTABLE = "UNSTABLE"


@dataclass(frozen=True)
class BranchPoint:
    n: int
    p: float
    alpha: float
    stability: Stability


def homothetic_residual(n: int, alpha: float, p: float) -> float:
    """``F(alpha) - alpha``; zero on a homothetic ray."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    _, c, k = corner_constants(n)
    return (c + p + p * k * (1 / (2 * alpha) - 1)) / (2 * c) - alpha


def residual_slope(n: int, alpha: float, p: float) -> float:
    """d/d(alpha) of :func:`homothetic_residual`."""
    _, c, k = corner_constants(n)
    return -p * k / (4 * c * alpha**2) - 1


def _quadratic(n: int, p: float) -> tuple[float, float, float]:
    _, c, k = corner_constants(n)
    return 2 * c, -(c + p - p * k), -p * k / 2


def _polish(n: int, alpha: float, p: float) -> float:
    """A few Newton steps on the residual itself."""
    for _ in range(4):
        r = homothetic_residual(n, alpha, p)
        d = residual_slope(n, alpha, p)
        if r == 0 or d == 0:
            break
        step = r / d
        if not math.isfinite(step) or alpha - step <= 0:
            break
        alpha -= step
    return alpha


def solve_alpha(n: int, p: float) -> list[tuple[float, Stability]]:
    """Feasible homothetic ratios for dilution ``p``, ascending."""
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    qa, qb, qc = _quadratic(n, p)
    disc = qb * qb - 4 * qa * qc
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    # cancellation-free pair of roots
    q = -0.5 * (qb + math.copysign(sq, qb))
    roots = {q / qa, qc / q} if q != 0 else {-qb / (2 * qa)}
    out = []
    for alpha in sorted(roots):
        if not 0 < alpha <= 0.5:
            continue
        alpha = _polish(n, alpha, p)
        slope = residual_slope(n, alpha, p)
        out.append((alpha, Stability.STABLE if slope > 0 else Stability.UNSTABLE))
    return out


def fold_point_closed_form(n: int) -> float:
    """Smaller root in ``p`` of the vanishing discriminant.

    ``(C + p(1 - K))^2 + 4 C K p = 0`` is a quadratic in ``p``; its smaller
    root is the largest dilution that still admits homothetic rays.
    """
    _, c, k = corner_constants(n)
    qa = (1 - k) ** 2
    qb = 2 * c * (1 - k) + 4 * c * k
    qc = c * c
    disc = qb * qb - 4 * qa * qc
    if qa == 0 or disc < 0:
        return 1.0
    sq = math.sqrt(disc)
    q = -0.5 * (qb + math.copysign(sq, qb))
    root = min(q / qa, qc / q)
    return min(root, 1.0)


def fold_point_bisection(n: int, tol: float = 1e-12) -> float:
    """Largest ``p`` with a non-empty :func:`solve_alpha`, by bisection."""
    lo, hi = 1e-12, 1.0
    if solve_alpha(n, hi):
        return hi
    if not solve_alpha(n, lo):
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if solve_alpha(n, mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fold_point(n: int) -> float:
    """Fold (saddle-node) dilution for fold count ``n``.

    Computed in closed form and checked against bisection on emptiness of the
    root set.
    """
    closed = fold_point_closed_form(n)
    check = fold_point_bisection(n)
    if abs(closed - check) > 1e-10:
        raise ArithmeticError(f"fold point mismatch for n={n}: {closed} vs {check}")
    return closed


def branch_diagram(n_values: Iterable[int], p_grid: Sequence[float]) -> list[BranchPoint]:
    ps = list(p_grid)
    if any(not 0 < p <= 1 for p in ps):
        raise ValueError("p grid must lie in (0, 1]")
    if any(b < a for a, b in zip(ps, ps[1:])):
        raise ValueError("p grid must be sorted ascending")
    out = []
    for n in n_values:
        for p in ps:
            out.extend(BranchPoint(n, p, alpha, st) for alpha, st in solve_alpha(n, p))
    return out

