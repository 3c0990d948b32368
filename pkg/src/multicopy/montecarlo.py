"""Seeded Monte Carlo simulation of discrimination experiments.

Random numbers come from a counter-based SplitMix64 construction so that any
port can reproduce every trial bit for bit:

    mix64(z):  z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
               z ^= z >> 27; z *= 0x94D049BB133111EB
               z ^= z >> 31                               (all mod 2**64)
    key(seed, i)   = mix64(seed + (i + 1) * 0x9E3779B97F4A7C15)
    draw(key, j)   = mix64(key  + (j + 1) * 0x9E3779B97F4A7C15)
    uniform        = (draw >> 11) * 2**-53                    in [0, 1)

Trial ``i`` uses draws ``j = 0, 1, ...`` of ``key(seed, i)``: draw 0 picks
the true state (0 iff ``u < q0``) and draw ``s`` the outcome of copy ``s``
(0 iff ``u < p(0 | truth)``).  Trials therefore do not depend on the order or
the process in which they run.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist

from .ensemble import Ensemble, MeasurementAngle, outcome_prob
from .exact import MAX_EXACT_N, exact_error
from .strategies import OutcomeHistory, StrategyKind, _decide_counts, make_policy

__all__ = [
    "GAMMA",
    "mix64",
    "TrialStream",
    "SimConfig",
    "SimReport",
    "wilson_interval",
    "sample_trial",
    "simulate",
]

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_Z95 = NormalDist().inv_cdf(0.975)
EXACT_REFERENCE_CAP = 20


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class TrialStream:
    """Deterministic uniform stream of one trial."""

    __slots__ = ("key", "counter")

    def __init__(self, seed: int, index: int):
        self.key = mix64(seed + (index + 1) * GAMMA)
        self.counter = 0

    def uniform(self) -> float:
        self.counter += 1
        return (mix64(self.key + self.counter * GAMMA) >> 11) * (1.0 / 9007199254740992.0)


@dataclass(frozen=True)
class SimConfig:
    trials: int
    seed: int
    n: int
    kind: StrategyKind

    def __post_init__(self) -> None:
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError(f"trials must be a positive integer, got {self.trials!r}")
        if not (0 <= self.seed <= MASK64):
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"copy count must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "kind", StrategyKind.parse(self.kind))


@dataclass(frozen=True)
class SimReport:
    strategy: str
    n: int
    trials: int
    seed: int
    errors_observed: int
    error_estimate: float
    std_error: float
    ci95: tuple[float, float]
    exact_reference: float | None

    def within(self, sigmas: float = 4.0) -> bool | None:
        """Whether the estimate lies within ``sigmas`` standard errors of the exact value."""
        if self.exact_reference is None:
            return None
        return abs(self.error_estimate - self.exact_reference) <= sigmas * self.std_error


def wilson_interval(errors: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    p = errors / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def sample_trial(
    e: Ensemble, kind: StrategyKind | str, n: int, stream: TrialStream, policy=None
) -> tuple[int, int, OutcomeHistory]:
    """Run one experiment: draw the truth, measure ``n`` copies, guess."""
    kind = StrategyKind.parse(kind)
    if policy is None:
        policy = make_policy(kind, e, n)
    truth = 0 if stream.uniform() < e.q0 else 1
    state = policy.start()
    bits = []
    for _ in range(n):
        m = MeasurementAngle(policy.angle(state))
        a = 0 if stream.uniform() < outcome_prob(e, m, 0, truth) else 1
        bits.append(a)
        state = policy.advance(state, a)
    guess = _decide_counts(kind, e, sum(bits), n, bits[-1])
    return truth, guess, OutcomeHistory(tuple(bits))


def _count_errors(e: Ensemble, cfg: SimConfig, start: int, stop: int) -> int:
    policy = make_policy(cfg.kind, e, cfg.n)
    errors = 0
    for i in range(start, stop):
        truth, guess, _ = sample_trial(e, cfg.kind, cfg.n, TrialStream(cfg.seed, i), policy)
        errors += truth != guess
    return errors


def simulate(cfg: SimConfig, e: Ensemble, workers: int = 1) -> SimReport:
    """Run ``cfg.trials`` trials and summarise the error rate.

    With ``workers > 1`` the trial range is split across processes; the
    integer error count, and therefore the report, is the same either way.
    """
    if workers > 1 and cfg.trials > workers:
        bounds = [cfg.trials * k // workers for k in range(workers + 1)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(
                _count_errors,
                [e] * workers,
                [cfg] * workers,
                bounds[:-1],
                bounds[1:],
            )
            errors = sum(parts)
    else:
        errors = _count_errors(e, cfg, 0, cfg.trials)

    p = errors / cfg.trials
    exact = None
    if cfg.n <= min(EXACT_REFERENCE_CAP, MAX_EXACT_N):
        exact = exact_error(e, cfg.kind, cfg.n).error
    return SimReport(
        strategy=cfg.kind.value,
        n=cfg.n,
        trials=cfg.trials,
        seed=cfg.seed,
        errors_observed=errors,
        error_estimate=p,
        std_error=math.sqrt(p * (1.0 - p) / cfg.trials),
        ci95=wilson_interval(errors, cfg.trials),
        exact_reference=exact,
    )
