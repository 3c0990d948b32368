"""Exact evaluation by depth-first enumeration of the binary outcome tree.

Every node of the tree is a partial history ``x`` carrying the joint
probabilities ``p(x, b) = q_b prod_s p(x_s | b)`` under the strategy's angles.
The walk keeps only the current path, so memory is O(N); children are always
visited outcome 0 first, which makes every sum bit-reproducible.

Subtrees whose two joint probabilities are both exactly zero are skipped, as
are subtrees the Bayesian policy rejects as impossible.  The latter happens
only when a posterior has rounded to exactly 0 while the matching joint is
still below ~1e-30, so the pruned mass is far below every tolerance used.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .ensemble import Ensemble, collective_error
from .strategies import StrategyKind, _decide_counts, adaptive_angle_closed, make_policy

__all__ = [
    "EvalReport",
    "ResidualReport",
    "StationarityReport",
    "MAX_EXACT_N",
    "MAX_VERIFY_N",
    "MAX_STATIONARITY_N",
    "exact_error",
    "collective_report",
    "exact_success_table",
    "r_function",
    "adaptive_success_via_r",
    "completeness_residual",
    "verify_induction_invariant",
    "verify_recursion",
    "verify_r_closed_form",
    "verify_angle_equivalence",
    "stationarity_check",
]

MAX_EXACT_N = 24
MAX_VERIFY_N = 14
MAX_STATIONARITY_N = 8


@dataclass(frozen=True)
class EvalReport:
    strategy: str
    n: int
    error: float
    success: float
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ResidualReport:
    name: str
    n: int
    max_residual: float
    tol: float
    checked: int

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tol


@dataclass(frozen=True)
class StationarityReport:
    n: int
    epsilon: float
    base_success: float
    # (round, last outcome or None for round 0, sign, success delta)
    deltas: tuple[tuple[int, int | None, int, float], ...]
    allowance: float

    @property
    def max_improvement(self) -> float:
        return max((d[3] for d in self.deltas), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_improvement <= self.allowance


def _check_n(n: int, limit: int) -> int:
    if int(n) != n or not (1 <= n <= limit):
        raise ValueError(f"N out of range: {n!r} (allowed 1..{limit})")
    return int(n)


def _walk(
    e: Ensemble,
    policy,
    n: int,
    on_node: Callable[[int, tuple, float, float, float | None], None],
) -> None:
    """Call ``on_node(r, bits, p0, p1, phi)`` for every node, root included.

    ``phi`` is the angle of the measurement taken at that node (``None`` at
    the leaves).  ``bits`` is the chronological history.
    """
    th = e.theta
    cos, sin = math.cos, math.sin

    def rec(r, bits, state, p0, p1):
        if r == n:
            on_node(r, bits, p0, p1, None)
            return
        phi = policy.angle(state)
        on_node(r, bits, p0, p1, phi)
        x0, x1 = phi - th, phi + th
        for a, f in ((0, cos), (1, sin)):
            j0 = p0 * f(x0) ** 2
            j1 = p1 * f(x1) ** 2
            if j0 == 0.0 and j1 == 0.0:
                continue
            try:
                child = policy.advance(state, a)
            except ValueError:
                continue
            rec(r + 1, bits + (a,), child, j0, j1)

    rec(0, (), policy.start(), e.q0, e.q1)


def _success_error(e: Ensemble, kind: StrategyKind, policy, n: int) -> tuple[float, float]:
    th = e.theta
    cos, sin = math.cos, math.sin

    def rec(r, state, p0, p1, n1, last):
        if r == n:
            guess = _decide_counts(kind, e, n1, n, last)
            return (p0, p1) if guess == 0 else (p1, p0)
        phi = policy.angle(state)
        x0, x1 = phi - th, phi + th
        succ = err = 0.0
        for a, f in ((0, cos), (1, sin)):
            j0 = p0 * f(x0) ** 2
            j1 = p1 * f(x1) ** 2
            if j0 == 0.0 and j1 == 0.0:
                continue
            try:
                nxt = policy.advance(state, a)
            except ValueError:
                continue
            s, w = rec(r + 1, nxt, j0, j1, n1 + a, a)
            succ += s
            err += w
        return succ, err

    return rec(0, policy.start(), e.q0, e.q1, 0, 0)


def exact_error(e: Ensemble, kind: StrategyKind | str, n: int) -> EvalReport:
    """Exact error probability of a strategy on ``n`` copies.

    Both the success and the error are accumulated directly from the leaves,
    so tiny error probabilities keep their relative precision.
    """
    kind = StrategyKind.parse(kind)
    n = _check_n(n, MAX_EXACT_N)
    succ, err = _success_error(e, kind, make_policy(kind, e, n), n)
    return EvalReport(
        strategy=kind.value,
        n=n,
        error=err,
        success=succ,
        metadata={"c": e.c, "q0": e.q0, "q1": e.q1},
    )


def collective_report(e: Ensemble, n: int) -> EvalReport:
    err = collective_error(e, n)
    return EvalReport("collective", n, err, 1.0 - err, {"c": e.c, "q0": e.q0, "q1": e.q1})


class _TablePolicy:
    """Markov angle policy read from a table ``angles[r][last]``."""

    def __init__(self, angles):
        self.angles = angles

    def start(self):
        return (0, 0)

    def angle(self, state):
        return self.angles[state[0]][state[1]]

    def advance(self, state, a):
        return (state[0] + 1, a)


def exact_success_table(e: Ensemble, angles, n: int) -> float:
    """Exact success of the guess-the-last-outcome rule with tabulated angles."""
    n = _check_n(n, MAX_EXACT_N)
    succ, _ = _success_error(e, StrategyKind.ADAPTIVE_CLOSED, _TablePolicy(angles), n)
    return succ


def r_function(p0: float, p1: float, e: Ensemble) -> float:
    """``R = sqrt((p0 + p1)^2 - 4 p0 p1 c^2)`` for a pair of joint probabilities."""
    if p0 < 0 or p1 < 0:
        raise ValueError("joint probabilities must be non-negative")
    s = p0 + p1
    return math.sqrt(max(0.0, s * s - 4.0 * p0 * p1 * e.c * e.c))


def adaptive_success_via_r(e: Ensemble, n: int, kind=StrategyKind.ADAPTIVE_BAYES) -> float:
    """``1/2 + 1/2 * sum of R(x)`` over the adaptive tree's nodes of depth n - 1."""
    n = _check_n(n, MAX_EXACT_N)
    total = [0.0]

    def visit(r, bits, p0, p1, phi):
        if r == n - 1:
            total[0] += r_function(p0, p1, e)

    if n == 1:
        total[0] = r_function(e.q0, e.q1, e)
    else:
        _walk(e, make_policy(kind, e, n - 1), n - 1, visit)
    return 0.5 + 0.5 * total[0]


def completeness_residual(e: Ensemble, kind: StrategyKind | str, n: int) -> float:
    """Max over depths r <= n and b of ``|sum_x p(x|b) - 1|``."""
    kind = StrategyKind.parse(kind)
    n = _check_n(n, MAX_EXACT_N)
    sums = [[0.0, 0.0] for _ in range(n + 1)]

    def visit(r, bits, p0, p1, phi):
        sums[r][0] += p0
        sums[r][1] += p1

    _walk(e, make_policy(kind, e, n), n, visit)
    worst = 0.0
    for s0, s1 in sums:
        if e.q0 > 0:
            worst = max(worst, abs(s0 / e.q0 - 1.0))
        if e.q1 > 0:
            worst = max(worst, abs(s1 / e.q1 - 1.0))
    return worst


def verify_induction_invariant(
    e: Ensemble, n: int, tol: float = 1e-12, kind=StrategyKind.ADAPTIVE_BAYES
) -> ResidualReport:
    """Check ``q0 q1 c^2r (p(x,0) + p(x,1))^2 = p(x,0) p(x,1)`` on every node."""
    n = _check_n(n, MAX_VERIFY_N)
    k = e.q0 * e.q1
    worst = [0.0, 0]

    def visit(r, bits, p0, p1, phi):
        s = p0 + p1
        res = abs(k * e.c ** (2 * r) * s * s - p0 * p1)
        worst[0] = max(worst[0], res)
        worst[1] += 1

    _walk(e, make_policy(kind, e, n), n, visit)
    return ResidualReport("induction_invariant", n, worst[0], tol, worst[1])


def verify_recursion(
    e: Ensemble, n: int, tol: float = 1e-12, kind=StrategyKind.ADAPTIVE_BAYES
) -> ResidualReport:
    """Compare the one-step joint recursion with direct product joints.

    For each node ``x`` and outcome ``a`` the recursion predicts
    ``p(ax, b) = p(x,b)/2 * (1 + (-1)^(a+b) [p(x,b) + (1 - 2c^2) p(x,b^1)] / R(x))``.
    """
    n = _check_n(n, MAX_VERIFY_N)
    th = e.theta
    one_m_2c2 = 1.0 - 2.0 * e.c * e.c
    worst = [0.0, 0]

    def visit(r, bits, p0, p1, phi):
        if phi is None:
            return
        big_r = r_function(p0, p1, e)
        if big_r == 0.0:
            return
        joints = (p0, p1)
        for a in (0, 1):
            f = math.cos if a == 0 else math.sin
            direct = (p0 * f(phi - th) ** 2, p1 * f(phi + th) ** 2)
            for b in (0, 1):
                pb, pother = joints[b], joints[1 - b]
                sign = 1.0 if (a + b) % 2 == 0 else -1.0
                predicted = 0.5 * pb * (1.0 + sign * (pb + one_m_2c2 * pother) / big_r)
                worst[0] = max(worst[0], abs(predicted - direct[b]))
                worst[1] += 1

    _walk(e, make_policy(kind, e, n), n, visit)
    return ResidualReport("one_step_recursion", n, worst[0], tol, worst[1])


def verify_r_closed_form(e: Ensemble, n: int, tol: float = 1e-12) -> ResidualReport:
    """``R_r`` of the Bayesian state equals ``sqrt(1 - 4 q0 q1 c^(2r+2))`` on every path."""
    n = _check_n(n, MAX_VERIFY_N)
    policy = make_policy(StrategyKind.ADAPTIVE_BAYES, e, n)
    k = 4.0 * e.q0 * e.q1
    worst = [0.0, 0]

    # The walk only exposes angles, so the Bayesian states are replayed here.
    def rec(state, r):
        closed = math.sqrt(1.0 - k * e.c ** (2 * r + 2))
        worst[0] = max(worst[0], abs(state.big_r(e) - closed))
        worst[1] += 1
        if r == n:
            return
        for a in (0, 1):
            try:
                child = policy.advance(state, a)
            except ValueError:
                continue
            rec(child, r + 1)

    rec(policy.start(), 0)
    return ResidualReport("bayes_r_closed_form", n, worst[0], tol, worst[1])


def verify_angle_equivalence(e: Ensemble, n: int, tol: float = 1e-10) -> ResidualReport:
    """Bayesian-updating angle against the closed form on every history of length < n."""
    n = _check_n(n, MAX_VERIFY_N)
    worst = [0.0, 0]

    def visit(r, bits, p0, p1, phi):
        if phi is None:
            return
        closed = adaptive_angle_closed(e, r, bits[-1] if bits else None).phi
        worst[0] = max(worst[0], abs(phi - closed))
        worst[1] += 1

    _walk(e, make_policy(StrategyKind.ADAPTIVE_BAYES, e, n), n, visit)
    return ResidualReport("closed_form_equals_bayes", n, worst[0], tol, worst[1])


def stationarity_check(e: Ensemble, n: int, epsilon: float = 1e-3) -> StationarityReport:
    """Perturb each adaptive angle ``phi_(r, i_r)`` by ``+-epsilon`` in turn.

    At an interior maximum no single perturbation may raise the exact success
    by more than ``2 epsilon^2``.
    """
    n = _check_n(n, MAX_STATIONARITY_N)
    if not (0.0 <= epsilon <= 0.1):
        raise ValueError(f"epsilon out of range: {epsilon!r}")
    base = [
        [adaptive_angle_closed(e, r, 0).phi, adaptive_angle_closed(e, r, 1).phi]
        for r in range(n)
    ]
    base_success = exact_success_table(e, base, n)
    slots = [(0, None)] + [(r, i) for r in range(1, n) for i in (0, 1)]
    deltas = []
    for r, i in slots:
        col = 0 if i is None else i
        for sign in (1, -1):
            table = [row[:] for row in base]
            table[r][col] += sign * epsilon
            deltas.append((r, i, sign, exact_success_table(e, table, n) - base_success))
    return StationarityReport(n, epsilon, base_success, tuple(deltas), 2.0 * epsilon**2)
