"""Chernoff quantity and statistical overlap of single-copy outcome statistics.

For a fixed measurement repeated on every copy the outcome distributions
``p(b|0)`` and ``p(b|1)`` define a binary channel, and the error of the best
decision on ``N`` outcomes decays like ``lambda**N`` with

    lambda = min_{0 < alpha <= 1} sum_b p(b|0)^alpha p(b|1)^(1 - alpha).

Powers follow the ``0**alpha = 0`` (``alpha > 0``), ``0**0 = 1`` convention.
When a channel has an outcome that is impossible under one hypothesis only,
the infimum may sit at an open end of the interval; it is then reported as
the one-sided limit with ``boundary_flag`` set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensemble import Ensemble, MeasurementAngle, helstrom_angle, outcome_prob

__all__ = [
    "BinaryChannel",
    "ChernoffResult",
    "channel_for",
    "unanimity_channel",
    "helstrom_channel",
    "chernoff_value",
    "chernoff_min",
    "statistical_overlap",
    "best_measured_chernoff",
    "golden_section_min",
]

_ALPHA_GRID = np.arange(1, 1001) * 1e-3
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class BinaryChannel:
    """Outcome distributions ``p0 = (p(0|0), p(1|0))`` and ``p1 = (p(0|1), p(1|1))``."""

    p0: tuple[float, float]
    p1: tuple[float, float]

    def __post_init__(self) -> None:
        for dist in (self.p0, self.p1):
            if len(dist) != 2 or min(dist) < 0.0 or abs(sum(dist) - 1.0) > 1e-12:
                raise ValueError(f"not a probability distribution over two outcomes: {dist!r}")


@dataclass(frozen=True)
class ChernoffResult:
    lambda_star: float
    alpha_star: float
    # True when lambda_star is a one-sided limit at alpha -> 0+ (alpha_star =
    # 0.0) or alpha -> 1- (alpha_star = 1.0) rather than an attained value.
    boundary_flag: bool


def channel_for(e: Ensemble, m: MeasurementAngle) -> BinaryChannel:
    return BinaryChannel(
        (outcome_prob(e, m, 0, 0), outcome_prob(e, m, 1, 0)),
        (outcome_prob(e, m, 0, 1), outcome_prob(e, m, 1, 1)),
    )


def unanimity_channel(e: Ensemble) -> BinaryChannel:
    """Channel of the measurement aligned with ``psi_0``."""
    return channel_for(e, MeasurementAngle(e.theta))


def helstrom_channel(e: Ensemble) -> BinaryChannel:
    return channel_for(e, helstrom_angle(e))


def chernoff_value(ch: BinaryChannel, alpha: float) -> float:
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0, 1], got {alpha!r}")
    return sum(a**alpha * b ** (1.0 - alpha) for a, b in zip(ch.p0, ch.p1))


def statistical_overlap(ch: BinaryChannel) -> float:
    return chernoff_value(ch, 0.5)


def golden_section_min(f, lo: float, hi: float, tol: float = 1e-8) -> tuple[float, float]:
    """Minimise a unimodal ``f`` on ``[lo, hi]`` until the bracket is below ``tol``."""
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INV_PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INV_PHI * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def _one_sided_limits(ch: BinaryChannel) -> tuple[float | None, float | None]:
    """Limits of lambda at alpha -> 0+ and alpha -> 1-, where they differ from the formula."""
    lower = upper = None
    if any(a == 0.0 and b > 0.0 for a, b in zip(ch.p0, ch.p1)):
        lower = sum(b for a, b in zip(ch.p0, ch.p1) if a > 0.0)
    if any(b == 0.0 and a > 0.0 for a, b in zip(ch.p0, ch.p1)):
        upper = sum(a for a, b in zip(ch.p0, ch.p1) if b > 0.0)
    return lower, upper


def chernoff_min(ch: BinaryChannel) -> ChernoffResult:
    """Minimise the Chernoff quantity over ``alpha`` in ``(0, 1]``.

    A 1e-3 grid locates the minimum, golden-section search refines it to
    1e-8 in ``alpha`` (the function is log-convex, so the grid bracket holds
    the global minimum), and the one-sided limits are compared last.
    """
    a0 = np.asarray(ch.p0)[:, None]
    a1 = np.asarray(ch.p1)[:, None]
    values = np.sum(a0**_ALPHA_GRID * a1 ** (1.0 - _ALPHA_GRID), axis=0)
    i = int(np.argmin(values))
    best_alpha, best = float(_ALPHA_GRID[i]), float(values[i])
    lo = float(_ALPHA_GRID[i - 1]) if i > 0 else 1e-12
    hi = float(_ALPHA_GRID[min(i + 1, len(_ALPHA_GRID) - 1)])
    if hi > lo:
        x, fx = golden_section_min(lambda t: chernoff_value(ch, t), lo, hi)
        if fx < best:
            best_alpha, best = x, fx

    lower, upper = _one_sided_limits(ch)
    if lower is not None and lower <= best:
        return ChernoffResult(lower, 0.0, True)
    if upper is not None and upper < best:
        return ChernoffResult(upper, 1.0, True)
    return ChernoffResult(best, best_alpha, False)


def _coarse_lambda(e: Ensemble, phis: np.ndarray) -> np.ndarray:
    """Grid-in-alpha Chernoff minimum for many angles at once, limits included."""
    th = e.theta
    p00 = np.cos(phis - th) ** 2
    p10 = np.sin(phis - th) ** 2
    p01 = np.cos(phis + th) ** 2
    p11 = np.sin(phis + th) ** 2
    al = _ALPHA_GRID[None, :]
    vals = (
        p00[:, None] ** al * p01[:, None] ** (1.0 - al)
        + p10[:, None] ** al * p11[:, None] ** (1.0 - al)
    ).min(axis=1)
    lower = np.where(p00 > 0, p01, 0.0) + np.where(p10 > 0, p11, 0.0)
    has_lower = ((p00 == 0) & (p01 > 0)) | ((p10 == 0) & (p11 > 0))
    upper = np.where(p01 > 0, p00, 0.0) + np.where(p11 > 0, p10, 0.0)
    has_upper = ((p01 == 0) & (p00 > 0)) | ((p11 == 0) & (p10 > 0))
    vals = np.where(has_lower, np.minimum(vals, lower), vals)
    return np.where(has_upper, np.minimum(vals, upper), vals)


def best_measured_chernoff(
    e: Ensemble, grid_step: float = 1e-3
) -> tuple[MeasurementAngle, ChernoffResult]:
    """Smallest Chernoff quantity over single-copy measurements in the plane.

    Angles are scanned on a uniform grid over ``[-pi/2, pi/2]``.  The four
    angles at which one outcome becomes impossible under one hypothesis
    (``+-theta`` and ``+-(pi/2 - theta)``) are scanned first: the minimised
    quantity has a cusp there which no finite grid resolves.
    """
    if not (0.0 < grid_step <= 1e-2):
        raise ValueError(f"grid_step must lie in (0, 1e-2], got {grid_step!r}")
    th = e.theta
    special = np.array([th, -th, th - math.pi / 2, math.pi / 2 - th])
    count = int(math.floor(math.pi / grid_step)) + 1
    grid = -math.pi / 2 + grid_step * np.arange(count)
    phis = np.concatenate([special, grid])
    coarse = _coarse_lambda(e, phis)
    k = int(np.argmin(coarse))
    m = MeasurementAngle(float(phis[k]))
    return m, chernoff_min(channel_for(e, m))
