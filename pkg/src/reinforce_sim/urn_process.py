"""Two-particle dynamics driven by per-site chameleon urns, plus an exact
small-horizon enumerator certifying agreement with the weight dynamics.

The urn representation is valid strictly before the first meeting time;
stepping a coincident pair is an error by design.  Enumeration keeps
probabilities as exact fractions (floats are binary rationals, so any
float a and delta enumerate exactly).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from fractions import Fraction

from .direct import ModelParams
from .distributions import RngStream
from .urn import MagicUrn, NegativeMassError, Side, magic_draw

MAX_ENUM_HORIZON = 8


class DecoupledError(RuntimeError):
    """The urn representation was used at or beyond the first meeting time."""


class SmallAPolicyError(ValueError):
    """Urn representation requested for a < 1 without the override flag."""


def initial_masses(params: ModelParams, v: int):
    """Initial (red, blue) urn masses at site v, chameleon marble excluded.

    The masses mirror the edge weights seen by the first particle to
    arrive: sites left of l0 are first reached by the left particle after
    it has traversed [v, v+1] once, and symmetrically on the right.
    """
    a, d = params.a, params.delta
    if v < params.l0:
        return a - 1, 1 + a + d
    if v == params.l0:
        return a - 1, a + d
    if v < params.r0:
        return a, a + d
    if v == params.r0:
        return a, a - 1 + d
    return a + 1, a - 1 + d


def check_small_a_policy(params: ModelParams) -> None:
    if params.a < 1 and not params.allow_small_a:
        raise SmallAPolicyError(
            f"urn representation requires a >= 1 (got a={params.a}); "
            "pass allow_small_a to override, at the risk of negative masses"
        )


class UrnField:
    """Sparse site -> urn table, materialized lazily from the initial rows."""

    def __init__(self, params: ModelParams):
        check_small_a_policy(params)
        self.params = params
        self._urns: dict[int, MagicUrn] = {}

    def urn_at(self, v: int) -> MagicUrn:
        urn = self._urns.get(v)
        if urn is None:
            if self.params.l0 == self.params.r0:
                raise DecoupledError("particles start coincident; the urn field is unused")
            red, blue = initial_masses(self.params, v)
            urn = MagicUrn(red, blue)
            self._urns[v] = urn
        return urn

    def set_urn(self, v: int, urn: MagicUrn) -> None:
        self._urns[v] = urn


def init_urn_field(params: ModelParams) -> UrnField:
    return UrnField(params)


def jump_probabilities(urn: MagicUrn, present: Side):
    """(left, right) jump probabilities for the particle present at the urn.

    Equal to the closed forms (R+1)/(R+B+1), B/(R+B+1) for the left
    particle and R/(R+B+1), (B+1)/(R+B+1) for the right one.
    """
    total = urn.total
    left = urn.red_mass + (1 if present is Side.LEFT else 0)
    return left / total, (total - left) / total


def urn_process_step(
    field: UrnField, l: int, r: int, rng: RngStream
) -> tuple[int, int, tuple]:
    """One jump of the urn-driven pair: uniform mover, urn-drawn direction.

    Returns (l', r', (mover, from, to, outcome)).
    """
    if l >= r:
        raise DecoupledError(
            f"urn process stepped with l={l} >= r={r}; the representation "
            "is only defined strictly before the first meeting"
        )
    mover = Side.LEFT if rng.uniform() < 0.5 else Side.RIGHT
    v = l if mover is Side.LEFT else r
    urn = field.urn_at(v)
    try:
        outcome, direction, new_urn = magic_draw(urn, mover, rng)
    except NegativeMassError as exc:
        raise NegativeMassError(f"site {v} (a={field.params.a}): {exc}") from exc
    field.set_urn(v, new_urn)
    to = v - 1 if direction is Side.LEFT else v + 1
    if mover is Side.LEFT:
        return to, r, (mover, v, to, outcome)
    return l, to, (mover, v, to, outcome)


def run_urn_process(params: ModelParams, rng: RngStream, max_events: int | None = None):
    """Run the urn-driven pair until they meet or the budget runs out.

    Returns (tau1 event index or None, events executed, final (l, r)).
    """
    budget = params.max_events if max_events is None else max_events
    l, r = params.l0, params.r0
    if l == r:
        return 0, 0, (l, r)
    field = init_urn_field(params)
    for e in range(1, budget + 1):
        l, r, _ = urn_process_step(field, l, r, rng)
        if l == r:
            return e, e, (l, r)
    return None, budget, (l, r)


@dataclass
class ExactDistribution:
    """Exact probabilities of truncated (mover, direction) trajectories.

    Keys are tuples of (mover, direction) pairs with 0=left, 1=right in
    both slots; branches are truncated once the particles meet.
    """

    horizon: int
    params: ModelParams
    probs: dict[tuple, Fraction]

    def total_mass(self) -> Fraction:
        return sum(self.probs.values(), Fraction(0))

    def to_json(self) -> str:
        rows = [
            {"traj": [[m, d] for m, d in traj], "prob_num": str(p.numerator), "prob_den": str(p.denominator)}
            for traj, p in sorted(self.probs.items())
        ]
        return json.dumps(rows)


def _enum_guard(horizon: int) -> None:
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    if horizon > MAX_ENUM_HORIZON:
        raise ValueError(
            f"horizon {horizon} too large for exact enumeration "
            f"(~{4 ** horizon} leaves); maximum is {MAX_ENUM_HORIZON}"
        )


def _enum_direct(params: ModelParams, horizon: int) -> dict[tuple, Fraction]:
    a = Fraction(params.a)
    delta = Fraction(params.delta)
    half = Fraction(1, 2)
    acc: dict[tuple, Fraction] = {}

    def recurse(weights: dict, l: int, r: int, depth: int, prob: Fraction, traj: tuple):
        if l == r or depth == horizon:
            acc[traj] = acc.get(traj, Fraction(0)) + prob
            return
        for mover in (0, 1):
            v = l if mover == 0 else r
            wl = weights.get(v - 1, a)
            wr = weights.get(v, a)
            p_right = (wr + delta) / (wl + wr + delta)
            for direction, p_dir in ((0, 1 - p_right), (1, p_right)):
                if p_dir == 0:
                    continue
                w2 = dict(weights)
                if direction == 1:
                    w2[v] = wr + 1
                    nl, nr = (v + 1, r) if mover == 0 else (l, v + 1)
                else:
                    w2[v - 1] = wl + 1
                    nl, nr = (v - 1, r) if mover == 0 else (l, v - 1)
                recurse(w2, nl, nr, depth + 1, prob * half * p_dir, traj + ((mover, direction),))

    recurse({}, params.l0, params.r0, 0, Fraction(1), ())
    return acc


def _enum_urn(params: ModelParams, horizon: int) -> dict[tuple, Fraction]:
    check_small_a_policy(params)
    a = Fraction(params.a)
    delta = Fraction(params.delta)
    half = Fraction(1, 2)
    acc: dict[tuple, Fraction] = {}

    def fresh_urn(v: int) -> MagicUrn:
        if v < params.l0:
            red, blue = a - 1, 1 + a + delta
        elif v == params.l0:
            red, blue = a - 1, a + delta
        elif v < params.r0:
            red, blue = a, a + delta
        elif v == params.r0:
            red, blue = a, a - 1 + delta
        else:
            red, blue = a + 1, a - 1 + delta
        return MagicUrn(red, blue, Fraction(0), Fraction(0))

    def recurse(urns: dict, l: int, r: int, depth: int, prob: Fraction, traj: tuple):
        if l == r or depth == horizon:
            acc[traj] = acc.get(traj, Fraction(0)) + prob
            return
        for mover_idx, present in ((0, Side.LEFT), (1, Side.RIGHT)):
            v = l if mover_idx == 0 else r
            urn = urns.get(v)
            if urn is None:
                urn = fresh_urn(v)
            total = urn.total
            # pool the categories by jump direction: the future law only
            # depends on the pooled red/blue masses, so the two new
            # marbles can always be booked as family marbles
            left_mass = urn.red_mass + (1 if present is Side.LEFT else 0)
            for d_idx, mass in ((0, left_mass), (1, total - left_mass)):
                if mass < 0:
                    raise NegativeMassError(
                        f"effective mass {mass} negative at site {v} (a={params.a})"
                    )
                if mass == 0:
                    continue
                to = v - 1 if d_idx == 0 else v + 1
                u2 = dict(urns)
                if d_idx == 0:
                    u2[v] = replace(urn, fam_red=urn.fam_red + 2)
                else:
                    u2[v] = replace(urn, fam_blue=urn.fam_blue + 2)
                nl, nr = (to, r) if mover_idx == 0 else (l, to)
                recurse(
                    u2, nl, nr, depth + 1,
                    prob * half * Fraction(mass) / Fraction(total),
                    traj + ((mover_idx, d_idx),),
                )

    recurse({}, params.l0, params.r0, 0, Fraction(1), ())
    return acc


def enumerate_exact(model: str, params: ModelParams, horizon: int) -> ExactDistribution:
    """Exhaustive trajectory distribution of the chosen model.

    ``model`` is "direct" (weight dynamics) or "urn" (chameleon urns).
    Branches are absorbed at the first meeting; total mass is exactly 1.
    """
    _enum_guard(horizon)
    if model == "direct":
        probs = _enum_direct(params, horizon)
    elif model == "urn":
        probs = _enum_urn(params, horizon)
    else:
        raise ValueError(f"unknown model {model!r}; expected 'direct' or 'urn'")
    return ExactDistribution(horizon=horizon, params=params, probs=probs)


def tv_distance(d1: ExactDistribution, d2: ExactDistribution) -> float:
    """Total variation distance between two exact trajectory distributions."""
    if d1.horizon != d2.horizon:
        raise ValueError(f"horizon mismatch: {d1.horizon} != {d2.horizon}")
    if d1.params != d2.params:
        raise ValueError("parameter mismatch between distributions")
    keys = set(d1.probs) | set(d2.probs)
    tv = sum(
        (abs(d1.probs.get(k, Fraction(0)) - d2.probs.get(k, Fraction(0))) for k in keys),
        Fraction(0),
    ) / 2
    return float(tv)
