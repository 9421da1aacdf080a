"""Birth-death chains in random environment: transience/return-time
criteria in closed form, plus simulators for single chains and for the
two-chain difference recurrence experiment.

Sign conventions: transience to the right is governed by
E[log(p/(1-p))] > 0, while the difference-recurrence hypothesis uses
mu = E[log((1-p)/p)] > 0.  Results carry both orientations explicitly.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

from .distributions import BetaParams, RngStream, digamma, sample_beta


class Classification(Enum):
    TRANSIENT_RIGHT = "transient_right"
    TRANSIENT_LEFT = "transient_left"
    RECURRENT = "recurrent"


_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class CriterionResult:
    """Closed-form transience / return-time criteria for an iid Beta environment.

    ``mean_inverse_odds`` is E[(1-p)/p]; ``None`` marks an infinite
    expectation (alpha <= 1).  ``finite_mean_return`` holds exactly when
    alpha > 1 + beta.
    """

    params: BetaParams
    log_odds_mean: float  # E[log(p/(1-p))]; positive => drift to the right
    mu: float  # E[log((1-p)/p)], the opposite orientation
    mean_inverse_odds: float | None
    classification: Classification
    finite_mean_return: bool

    def to_dict(self) -> dict:
        return {
            "alpha": self.params.alpha,
            "beta": self.params.beta,
            "degenerate": self.params.point_mass_at_zero,
            "log_odds_mean": self.log_odds_mean,
            "mu": self.mu,
            "mean_inverse_odds": self.mean_inverse_odds,
            "classification": self.classification.value,
            "finite_mean_return": self.finite_mean_return,
        }


def criterion(p: BetaParams) -> CriterionResult:
    """Evaluate the transience and expected-return-time criteria.

    E[log(p/(1-p))] = digamma(alpha) - digamma(beta);
    E[(1-p)/p] = beta/(alpha-1) for alpha > 1, infinite otherwise.
    """
    if p.point_mass_at_zero:
        return CriterionResult(
            params=p,
            log_odds_mean=float("-inf"),
            mu=float("inf"),
            mean_inverse_odds=None,
            classification=Classification.TRANSIENT_LEFT,
            finite_mean_return=False,
        )
    m = digamma(p.alpha) - digamma(p.beta)
    inv = p.beta / (p.alpha - 1.0) if p.alpha > 1.0 else None
    if m > _ZERO_TOL:
        cls = Classification.TRANSIENT_RIGHT
    elif m < -_ZERO_TOL:
        cls = Classification.TRANSIENT_LEFT
    else:
        cls = Classification.RECURRENT
    return CriterionResult(
        params=p,
        log_odds_mean=m,
        mu=-m,
        mean_inverse_odds=inv,
        classification=cls,
        finite_mean_return=inv is not None and inv < 1.0,
    )


class BDEnvironment:
    """Per-site right-jump probabilities: iid Beta draws plus overrides.

    Sites are sampled lazily and memoized; ``overrides`` pins exact
    values (e.g. reflecting boundaries with p = 1).
    """

    def __init__(
        self,
        sampler: BetaParams | None = None,
        rng: RngStream | None = None,
        overrides: dict[int, float] | None = None,
        constant: float | None = None,
    ):
        if sampler is not None and rng is None:
            raise ValueError("an iid-sampled environment needs an RngStream")
        if sampler is None and constant is None:
            raise ValueError("provide a sampler or a constant probability")
        if constant is not None and not 0.0 <= constant <= 1.0:
            raise ValueError("constant probability must lie in [0, 1]")
        self.sampler = sampler
        self.constant = constant
        self._rng = rng
        self.overrides = dict(overrides or {})
        for v, pv in self.overrides.items():
            if not 0.0 <= pv <= 1.0:
                raise ValueError(f"override p({v})={pv} outside [0, 1]")
        self._sites: dict[int, float] = {}

    def p(self, v: int) -> float:
        if v in self.overrides:
            return self.overrides[v]
        if self.constant is not None:
            return self.constant
        pv = self._sites.get(v)
        if pv is None:
            pv = float(sample_beta(self._rng, self.sampler))
            self._sites[v] = pv
        return pv


@dataclass
class BDTrajectorySummary:
    start: int
    final_position: int
    events_executed: int
    returns_to_start: int
    first_return_event: int | None


def simulate_bd(
    env: BDEnvironment, start: int, max_events: int, rng: RngStream
) -> BDTrajectorySummary:
    """Embedded-chain run of a birth-death walk in the given environment."""
    pos = start
    returns = 0
    first_return = None
    for e in range(1, max_events + 1):
        pos = pos + 1 if rng.uniform() < env.p(pos) else pos - 1
        if pos == start:
            returns += 1
            if first_return is None:
                first_return = e
    return BDTrajectorySummary(start, pos, max_events, returns, first_return)


@dataclass
class RecurrenceCurve:
    """Fraction of trials whose two-chain difference returned to zero by
    each event budget, with binomial standard errors."""

    budgets: list[int]
    hit_fractions: list[float]
    stderrs: list[float]
    trials: int
    regime_ok: bool

    def rows(self):
        return [
            {"budget": b, "hit_fraction": f, "stderr": s}
            for b, f, s in zip(self.budgets, self.hit_fractions, self.stderrs)
        ]


def _regime_ok(p: BetaParams) -> bool:
    if p.point_mass_at_zero:
        return False
    return criterion(p).mu > 0


def difference_recurrence(
    p1: BetaParams,
    p2: BetaParams,
    budgets: list[int],
    trials: int,
    rng: RngStream,
) -> RecurrenceCurve:
    """Monte Carlo return-probability curve for the difference of two
    conditionally independent half-line chains.

    Chain one lives on the nonnegative sites with forward probabilities
    p1(i) (p1(0) = 1); chain two mirrors it on the nonpositive sites with
    p2.  Per trial, the first event at which both chains are back at 0
    simultaneously is recorded; the curve reports the fraction of trials
    with a return by each budget.
    """
    budgets = sorted(budgets)
    if not budgets or budgets[0] <= 0:
        raise ValueError("budgets must be positive")
    if trials <= 0:
        raise ValueError("trials must be positive")
    regime_ok = _regime_ok(p1) and _regime_ok(p2)
    if not regime_ok:
        warnings.warn(
            "environment parameters violate the mu > 0 hypothesis; the "
            "return probability has no guarantee in this regime",
            stacklevel=2,
        )
    max_budget = budgets[-1]
    first_returns = []
    for trial in range(trials):
        trial_rng = RngStream(rng.seed, rng.stream_id + 1 + trial)
        env1 = BDEnvironment(sampler=p1, rng=trial_rng, overrides={0: 1.0})
        env2 = BDEnvironment(sampler=p2, rng=trial_rng, overrides={0: 1.0})
        zr = 0  # distance of chain one from the origin (nonnegative)
        zl = 0  # distance of chain two from the origin (nonnegative)
        first = None
        for e in range(1, max_budget + 1):
            if trial_rng.uniform() < 0.5:
                zr = zr + 1 if trial_rng.uniform() < env1.p(zr) else zr - 1
            else:
                zl = zl + 1 if trial_rng.uniform() < env2.p(zl) else zl - 1
            if zr == 0 and zl == 0:
                first = e
                break
        first_returns.append(first)
    fractions, errs = [], []
    for b in budgets:
        hits = sum(1 for f in first_returns if f is not None and f <= b)
        frac = hits / trials
        fractions.append(frac)
        errs.append((frac * (1 - frac) / trials) ** 0.5)
    return RecurrenceCurve(budgets, fractions, errs, trials, regime_ok)
