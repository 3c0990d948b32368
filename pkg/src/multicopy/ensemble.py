"""Two-state geometry, single-copy Helstrom optimum and the collective bound.

The two candidate states live in a real plane spanned by an orthonormal pair
``|x>``, ``|y>``::

    |psi_a> = cos(theta)|x> + (-1)^a sin(theta)|y>,   a = 0, 1

so that the overlap is ``c = |<psi_0|psi_1>| = cos(2 theta)``.  A von Neumann
measurement in that plane is a single angle ``phi``: outcome 0 projects onto
the direction at ``phi`` and outcome 1 onto the direction at ``phi - pi/2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

__all__ = [
    "Ensemble",
    "MeasurementAngle",
    "make_ensemble",
    "outcome_prob",
    "helstrom_angle",
    "helstrom_error",
    "collective_error",
    "collective_error_asymptote",
    "posterior_update",
    "detailed_balance_gap",
]


@dataclass(frozen=True)
class Ensemble:
    """A discrimination problem: overlap ``c`` and priors ``(q0, q1)``.

    Build instances with :func:`make_ensemble`, which validates the inputs and
    derives ``theta`` and ``q1``.
    """

    c: float
    theta: float
    q0: float
    q1: float

    @cached_property
    def sin2theta(self) -> float:
        return math.sqrt(1.0 - self.c * self.c)

    def with_priors(self, q0: float) -> "Ensemble":
        return make_ensemble(self.c, q0)


@dataclass(frozen=True)
class MeasurementAngle:
    phi: float

    def prob(self, e: Ensemble, a: int, b: int) -> float:
        return outcome_prob(e, self, a, b)


def make_ensemble(c: float, q0: float) -> Ensemble:
    c = float(c)
    q0 = float(q0)
    if not (0.0 <= c < 1.0):
        raise ValueError(f"parallel or invalid overlap: c={c!r}")
    if not (0.0 <= q0 <= 1.0):
        raise ValueError(f"invalid prior: q0={q0!r}")
    return Ensemble(c=c, theta=0.5 * math.acos(c), q0=q0, q1=1.0 - q0)


def outcome_prob(e: Ensemble, m: MeasurementAngle, a: int, b: int) -> float:
    """Born probability ``p(a|b) = cos^2(phi - a pi/2 - (-1)^b theta)``.

    The ``a = 1`` branch is evaluated as ``sin^2`` of the same offset so that
    a projector aligned with a state yields an exact zero.
    """
    x = m.phi - e.theta if b == 0 else m.phi + e.theta
    if a == 0:
        return math.cos(x) ** 2
    return math.sin(x) ** 2


def helstrom_angle(e: Ensemble) -> MeasurementAngle:
    """Single-copy measurement maximising ``q0 p(0|0) + q1 p(1|1)``.

    ``cos 2phi = (q0 - q1) c / R0`` and ``sin 2phi = sin 2theta / R0``; the
    common factor ``R0`` cancels inside ``atan2`` and ``2phi`` lands in
    ``[0, pi]``.
    """
    return MeasurementAngle(helstrom_phi(e, e.q0, e.q1))


def helstrom_phi(e: Ensemble, q0: float, q1: float) -> float:
    """Helstrom angle of ``e``'s states under priors ``(q0, q1)``."""
    return 0.5 * math.atan2(e.sin2theta, (q0 - q1) * e.c)


def helstrom_error(e: Ensemble) -> float:
    return collective_error(e, 1)


def _check_copies(n: int) -> int:
    if int(n) != n or n < 1:
        raise ValueError(f"copy count must be a positive integer, got {n!r}")
    return int(n)


def collective_error(e: Ensemble, n: int) -> float:
    """Minimum error of any joint measurement on ``n`` copies.

    The ``n``-copy states have overlap ``c**n``, so this is the one-copy
    Helstrom error with ``c`` replaced by ``c**n``.
    """
    k = collective_error_asymptote(e, n)
    # (1 - sqrt(1 - 4k)) / 2 without cancellation; sharing k with the
    # asymptote keeps the rounded value >= k, as it is exactly.
    return 2.0 * k / (1.0 + math.sqrt(1.0 - 4.0 * k))


def collective_error_asymptote(e: Ensemble, n: int) -> float:
    n = _check_copies(n)
    return e.q0 * e.q1 * e.c ** (2 * n)


def posterior_update(
    prior0: float, e: Ensemble, m: MeasurementAngle, a: int
) -> float:
    """Posterior of hypothesis 0 after observing outcome ``a`` under ``m``.

    Raises ``ValueError("impossible outcome")`` when ``a`` has zero
    probability under the current prior.
    """
    if not (0.0 <= prior0 <= 1.0):
        raise ValueError(f"invalid prior: {prior0!r}")
    w0 = prior0 * outcome_prob(e, m, a, 0)
    w1 = (1.0 - prior0) * outcome_prob(e, m, a, 1)
    total = w0 + w1
    if total == 0.0:
        raise ValueError("impossible outcome")
    return w0 / total


def detailed_balance_gap(e: Ensemble) -> float:
    """``|p(0|outcome 0) - p(1|outcome 1)|`` at the Helstrom angle.

    With a certain prior one outcome cannot occur (its float probability may
    be ~1e-33 rather than 0), so the gap is defined as 0 there.
    """
    if e.q0 in (0.0, 1.0):
        return 0.0
    m = helstrom_angle(e)
    posts = []
    for a in (0, 1):
        try:
            post0 = posterior_update(e.q0, e, m, a)
        except ValueError:
            continue
        posts.append(post0 if a == 0 else 1.0 - post0)
    if len(posts) < 2:
        return 0.0
    return abs(posts[0] - posts[1])
