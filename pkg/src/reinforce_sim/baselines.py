"""Regression baselines for the recurrence-trend experiments.

No closed-form rate exists for these hitting probabilities, so the
acceptance checks are regression-style: a one-time pilot run with the
disclosed seed below produced the recorded fractions, and reruns must
stay above pilot minus three binomial standard errors.
"""
from __future__ import annotations

PILOT_SEED = 2026
PILOT_TRIALS = 1000

# fraction of 1000 direct two-particle trials (a=1, l0=0, r0=2) whose
# first meeting occurred within the event budget
DIRECT_TAU1_PILOT: dict[tuple[float, int], float] = {
    (0.0, 1_000): 0.963,
    (0.0, 10_000): 0.995,
    (0.0, 100_000): 0.999,
    (0.5, 1_000): 0.965,
    (0.5, 10_000): 0.990,
    (0.5, 100_000): 0.998,
}

# fraction of 1000 two-chain difference trials (both environments
# Beta(0.5, 1.5), reflecting origins) returning to zero within budget
DIFFERENCE_RECURRENCE_PILOT: dict[int, float] = {
    100: 0.934,
    1_000: 0.994,
    10_000: 0.998,
}


def regression_threshold(pilot_fraction: float, trials: int = PILOT_TRIALS) -> float:
    """Pilot value minus three binomial standard errors."""
    se = (pilot_fraction * (1.0 - pilot_fraction) / trials) ** 0.5
    return pilot_fraction - 3.0 * se
