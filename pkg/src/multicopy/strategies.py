"""Measurement policies and decision rules for N individual measurements.

Four strategies are provided:

* ``FIXED_MAJORITY``: the single-copy Helstrom measurement on every copy,
  followed by a majority vote.
* ``UNANIMITY``: measure every copy along the more probable state; guess that
  state only if every outcome agrees with it.
* ``ADAPTIVE_CLOSED``: the optimal adaptive angles from their closed form,
  which depend on the history only through the round and the last outcome.
* ``ADAPTIVE_BAYES``: re-optimise each measurement against the current
  posteriors (Bayesian updating).

Histories are stored chronologically, ``bits[0]`` being the first outcome.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .ensemble import (
    Ensemble,
    MeasurementAngle,
    helstrom_angle,
    helstrom_phi,
)

__all__ = [
    "StrategyKind",
    "OutcomeHistory",
    "BayesState",
    "initial_bayes_state",
    "bayes_step",
    "helstrom_likelihoods",
    "adaptive_angle_closed",
    "next_angle",
    "decide",
    "make_policy",
]


class StrategyKind(enum.Enum):
    FIXED_MAJORITY = "majority"
    UNANIMITY = "unanimity"
    ADAPTIVE_CLOSED = "adaptive-closed"
    ADAPTIVE_BAYES = "adaptive-bayes"

    @classmethod
    def parse(cls, name: str | "StrategyKind") -> "StrategyKind":
        if isinstance(name, cls):
            return name
        try:
            return cls(name)
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown strategy {name!r} (choose from {choices})") from None

    @property
    def adaptive(self) -> bool:
        return self in (StrategyKind.ADAPTIVE_CLOSED, StrategyKind.ADAPTIVE_BAYES)


@dataclass(frozen=True)
class OutcomeHistory:
    bits: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError(f"outcome bits must be 0 or 1: {self.bits!r}")

    @classmethod
    def of(cls, bits: Iterable[int] | str) -> "OutcomeHistory":
        """Build from an iterable of bits or a string such as ``"0110"``."""
        if isinstance(bits, str):
            return cls(tuple(int(ch) for ch in bits))
        return cls(tuple(int(b) for b in bits))

    @property
    def r(self) -> int:
        return len(self.bits)

    @property
    def n1(self) -> int:
        return sum(self.bits)

    @property
    def n0(self) -> int:
        return self.r - self.n1

    @property
    def last(self) -> int | None:
        return self.bits[-1] if self.bits else None

    def append(self, a: int) -> "OutcomeHistory":
        return OutcomeHistory(self.bits + (a,))

    def __str__(self) -> str:
        return "".join(map(str, self.bits))


class BayesState(NamedTuple):
    """Sufficient statistic of Bayesian updating after ``r`` rounds.

    ``p_favored`` is the posterior of the currently favored hypothesis and is
    never below 1/2.  ``p_unfavored`` is its complement, kept separately
    because ``1 - p_favored`` underflows long before the posterior itself
    does (it reaches 1e-20 after a dozen rounds at ``c = 0.1``).
    """

    r: int
    favored: int
    p_favored: float
    p_unfavored: float

    @property
    def posterior0(self) -> float:
        return self.p_favored if self.favored == 0 else self.p_unfavored

    @property
    def posterior1(self) -> float:
        return self.p_unfavored if self.favored == 0 else self.p_favored

    def big_r(self, e: Ensemble) -> float:
        return math.sqrt(max(0.0, 1.0 - 4.0 * self.p_favored * self.p_unfavored * e.c * e.c))


def initial_bayes_state(e: Ensemble) -> BayesState:
    if e.q0 >= e.q1:
        return BayesState(0, 0, e.q0, e.q1)
    return BayesState(0, 1, e.q1, e.q0)


def _bayes_angle(state: BayesState, e: Ensemble) -> MeasurementAngle:
    # Helstrom angle for priors replaced by posteriors; theta does not change.
    return MeasurementAngle(helstrom_phi(e, state.posterior0, state.posterior1))


def helstrom_likelihoods(e: Ensemble, q0: float, q1: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """``p(a|b)`` as ``[a][b]`` at the Helstrom angle for priors ``(q0, q1)``.

    Equal to ``outcome_prob`` at that angle, but the small entries are
    computed as ``(R^2 - N_b^2) / (2R(R +- N_b))`` with
    ``R^2 - N_0^2 = (2 q1 c s)^2`` and ``R^2 - N_1^2 = (2 q0 c s)^2``, so they
    keep full relative precision when one prior is tiny.
    """
    c, s = e.c, e.sin2theta
    d = q0 - q1
    big_r = math.sqrt(d * d * c * c + s * s)
    cols = []
    for n_b, gap in ((d * c * c + s * s, 2.0 * q1 * c * s), (d * c * c - s * s, 2.0 * q0 * c * s)):
        small = gap * gap / (2.0 * big_r * (big_r + abs(n_b)))
        cols.append((1.0 - small, small) if n_b >= 0 else (small, 1.0 - small))
    return (cols[0][0], cols[1][0]), (cols[0][1], cols[1][1])


def bayes_step(state: BayesState, e: Ensemble, a: int) -> BayesState:
    """Measure at the posterior-optimal angle, observe ``a``, update by Bayes' rule."""
    pi0, pi1 = state.posterior0, state.posterior1
    like = helstrom_likelihoods(e, pi0, pi1)[a]
    w0, w1 = pi0 * like[0], pi1 * like[1]
    total = w0 + w1
    if total == 0.0:
        raise ValueError("impossible outcome")
    post0, post1 = w0 / total, w1 / total
    if post0 > post1:
        favored = 0
    elif post1 > post0:
        favored = 1
    else:
        favored = a
    if favored == 0:
        return BayesState(state.r + 1, 0, post0, post1)
    return BayesState(state.r + 1, 1, post1, post0)


def adaptive_angle_closed(e: Ensemble, r: int, i_r: int | None) -> MeasurementAngle:
    """Optimal adaptive angle for copy ``r + 1`` given the last outcome ``i_r``.

    ``cos 2phi_r = (-1)^i_r c sqrt((1 - 4 q0 q1 c^2r) / (1 - 4 q0 q1 c^(2r+2)))``
    with ``sin 2phi_r >= 0``.  For ``r = 0`` the sign is ``sign(q0 - q1)``
    (``+1`` on ties) and ``i_r`` is ignored.
    """
    if r < 0:
        raise ValueError(f"round must be non-negative, got {r}")
    if r == 0:
        sign = 1.0 if e.q0 >= e.q1 else -1.0
    else:
        if i_r not in (0, 1):
            raise ValueError(f"last outcome must be 0 or 1 for r >= 1, got {i_r!r}")
        sign = 1.0 if i_r == 0 else -1.0
    k = 4.0 * e.q0 * e.q1
    c2r = e.c ** (2 * r)
    # The denominator sqrt(1 - k c^(2r+2)) is shared by cos and sin and cancels.
    num = sign * e.c * math.sqrt(max(0.0, 1.0 - k * c2r))
    return MeasurementAngle(0.5 * math.atan2(e.sin2theta, num))


def _unanimity_angle(e: Ensemble) -> MeasurementAngle:
    return MeasurementAngle(e.theta if e.q0 >= e.q1 else -e.theta)


def next_angle(
    kind: StrategyKind,
    e: Ensemble,
    h: OutcomeHistory,
    n_copies: int | None = None,
) -> MeasurementAngle:
    """Angle of the measurement on copy ``h.r + 1``."""
    kind = StrategyKind.parse(kind)
    if n_copies is not None and h.r >= n_copies:
        raise ValueError("history exhausted")
    if kind is StrategyKind.FIXED_MAJORITY:
        return helstrom_angle(e)
    if kind is StrategyKind.UNANIMITY:
        return _unanimity_angle(e)
    if kind is StrategyKind.ADAPTIVE_CLOSED:
        return adaptive_angle_closed(e, h.r, h.last)
    state = initial_bayes_state(e)
    for a in h.bits:
        state = bayes_step(state, e, a)
    return _bayes_angle(state, e)


def decide(kind: StrategyKind, e: Ensemble, h: OutcomeHistory, n_copies: int | None = None) -> int:
    """Final guess after all copies have been measured."""
    kind = StrategyKind.parse(kind)
    if n_copies is not None and h.r != n_copies:
        raise ValueError("incomplete history")
    if h.r == 0:
        raise ValueError("incomplete history")
    return _decide_counts(kind, e, h.n1, h.r, h.bits[-1])


def _decide_counts(kind: StrategyKind, e: Ensemble, n1: int, r: int, last: int) -> int:
    if kind.adaptive:
        return last
    n0 = r - n1
    if kind is StrategyKind.UNANIMITY:
        # Outcome 0 always projects onto the more probable state.
        aligned = 0 if e.q0 >= e.q1 else 1
        return aligned if n1 == 0 else 1 - aligned
    if n0 != n1:
        return 0 if n0 > n1 else 1
    return 1 if e.q1 > e.q0 else 0


# Incremental policies: used by the tree enumerator and the sampler so that a
# path costs one update per copy instead of a replay of the whole history.


class _FixedPolicy:
    def __init__(self, phi: float):
        self.phi = phi

    def start(self):
        return None

    def angle(self, state) -> float:
        return self.phi

    def advance(self, state, a: int):
        return None


class _ClosedPolicy:
    def __init__(self, e: Ensemble, n_copies: int):
        # Markov: one angle per (r, last outcome); r = 0 has a single entry.
        self.table = [
            (adaptive_angle_closed(e, r, 0).phi, adaptive_angle_closed(e, r, 1).phi)
            for r in range(max(n_copies, 1))
        ]

    def start(self):
        return (0, 0)

    def angle(self, state) -> float:
        r, last = state
        return self.table[r][last]

    def advance(self, state, a: int):
        return (state[0] + 1, a)


class _BayesPolicy:
    def __init__(self, e: Ensemble):
        self.e = e

    def start(self) -> BayesState:
        return initial_bayes_state(self.e)

    def angle(self, state: BayesState) -> float:
        return _bayes_angle(state, self.e).phi

    def advance(self, state: BayesState, a: int) -> BayesState:
        return bayes_step(state, self.e, a)


def make_policy(kind: StrategyKind, e: Ensemble, n_copies: int):
    """Incremental angle policy with ``start``, ``angle`` and ``advance``.

    ``advance`` of the Bayesian policy raises ``ValueError`` on an impossible
    outcome, exactly like :func:`bayes_step`.
    """
    kind = StrategyKind.parse(kind)
    if kind is StrategyKind.FIXED_MAJORITY:
        return _FixedPolicy(helstrom_angle(e).phi)
    if kind is StrategyKind.UNANIMITY:
        return _FixedPolicy(_unanimity_angle(e).phi)
    if kind is StrategyKind.ADAPTIVE_CLOSED:
        return _ClosedPolicy(e, n_copies)
    return _BayesPolicy(e)
