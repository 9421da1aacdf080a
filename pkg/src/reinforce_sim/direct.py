"""Ground-truth weight dynamics: n-particle linearly reinforced walks on Z.

Each particle carries an independent rate-1 exponential clock, so the
embedded jump chain picks the next mover uniformly among the particles.
Continuous timestamps are optional decoration sampled as Exp(n) holding
times; every distributional statement here is about the jump chain.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .distributions import RngStream


@dataclass(frozen=True)
class ModelParams:
    """Model parameters: initial weight a, drift delta, start sites, budgets."""

    a: float
    delta: float
    l0: int
    r0: int
    max_events: int = 0
    seed: int = 0
    allow_small_a: bool = False

    def __post_init__(self) -> None:
        if not np.isfinite(self.a) or self.a <= 0:
            raise ValueError(f"a must be positive, got {self.a!r}")
        if not np.isfinite(self.delta) or self.delta < 0:
            raise ValueError(f"delta must be nonnegative, got {self.delta!r}")
        if self.l0 > self.r0:
            raise ValueError(f"l0 must not exceed r0, got {self.l0} > {self.r0}")
        if self.max_events < 0:
            raise ValueError("max_events must be nonnegative")

    @property
    def outside_recurrence_regime(self) -> bool:
        """Drift values >= 1 fall outside the proven recurrence regime."""
        return self.delta >= 1.0


class WeightMap:
    """Sparse edge weights, keyed by the left endpoint of edge [v, v+1].

    Untouched edges have weight ``a``; each traversal adds exactly 1.
    """

    __slots__ = ("a", "_w")

    def __init__(self, a, weights=None):
        self.a = a
        self._w = dict(weights) if weights else {}

    def weight(self, v: int):
        return self._w.get(v, self.a)

    def reinforce(self, v: int) -> None:
        self._w[v] = self._w.get(v, self.a) + 1

    def total_added(self):
        return sum(w - self.a for w in self._w.values())

    def items(self):
        return self._w.items()

    def copy(self) -> "WeightMap":
        return WeightMap(self.a, self._w)


def right_jump_probability(weights: WeightMap, v: int, delta):
    """P(jump v -> v+1) = (W[v,v+1] + delta) / (W[v-1,v] + W[v,v+1] + delta)."""
    wl = weights.weight(v - 1)
    wr = weights.weight(v)
    return (wr + delta) / (wl + wr + delta)


@dataclass
class TrajectoryRecord:
    """Event log of one run plus the meeting times of the tracked particles.

    ``events`` holds (event index, time or None, particle id, from, to);
    ``meeting_times`` holds event indices at which all particles coincide
    (0 is recorded when they start coincident).
    """

    params: ModelParams
    n_particles: int
    events: list = field(default_factory=list)
    meeting_times: list = field(default_factory=list)
    final_positions: list = field(default_factory=list)
    events_executed: int = 0

    def to_jsonl(self) -> str:
        lines = []
        for e, t, p, frm, to in self.events:
            lines.append(json.dumps({"e": e, "t": t, "p": p, "from": frm, "to": to}))
        return "\n".join(lines) + ("\n" if lines else "")

    def meetings_json(self) -> str:
        return json.dumps(self.meeting_times)


def direct_step(
    weights: WeightMap, positions: list[int], params: ModelParams, rng: RngStream
) -> tuple[int, int, int]:
    """Execute one jump: uniform mover, weight-proportional direction.

    Mutates ``weights`` and ``positions``; returns (particle, from, to).
    """
    n = len(positions)
    i = int(rng.uniform() * n)
    if i == n:  # uniform() can return values arbitrarily close to 1
        i = n - 1
    v = positions[i]
    if rng.uniform() < right_jump_probability(weights, v, params.delta):
        to = v + 1
        weights.reinforce(v)
    else:
        to = v - 1
        weights.reinforce(v - 1)
    positions[i] = to
    return i, v, to


def _default_positions(params: ModelParams, n_particles: int) -> list[int]:
    if n_particles == 1:
        return [params.l0]
    if n_particles == 2:
        return [params.l0, params.r0]
    raise ValueError("for n_particles > 2, pass explicit start positions")


def run_direct(
    params: ModelParams,
    n_particles: int,
    rng: RngStream,
    positions: list[int] | None = None,
    record_events: bool = True,
    timestamps: bool = False,
    stop_after_meetings: int | None = None,
) -> TrajectoryRecord:
    """Run up to ``params.max_events`` jumps and record meetings.

    ``stop_after_meetings=k`` ends the run once the k-th meeting is seen,
    which keeps hitting-time experiments cheap.
    """
    if n_particles < 1:
        raise ValueError("need at least one particle")
    if positions is None:
        positions = _default_positions(params, n_particles)
    else:
        positions = list(positions)
    if len(positions) != n_particles:
        raise ValueError("positions length must equal n_particles")

    record = TrajectoryRecord(params=params, n_particles=n_particles)
    weights = WeightMap(params.a)
    t = 0.0

    if n_particles > 1 and len(set(positions)) == 1:
        record.meeting_times.append(0)
        if stop_after_meetings is not None and len(record.meeting_times) >= stop_after_meetings:
            record.final_positions = positions
            return record

    for e in range(1, params.max_events + 1):
        if timestamps:
            t += rng.exponential(1.0 / n_particles)
        i, frm, to = direct_step(weights, positions, params, rng)
        if record_events:
            record.events.append((e, t if timestamps else None, i, frm, to))
        record.events_executed = e
        if n_particles > 1 and min(positions) == max(positions):
            record.meeting_times.append(e)
            if stop_after_meetings is not None and len(record.meeting_times) >= stop_after_meetings:
                break
    record.final_positions = positions
    return record


@dataclass
class MeetingSummary:
    """Per-k meeting frequencies over a batch of runs with shared parameters."""

    n_trials: int
    frequencies: list[float]  # frequencies[k-1] = fraction of trials with >= k meetings
    stderrs: list[float]
    mean_gaps: list[float]  # mean event gap between meeting k-1 and k (0 -> start)

    def rows(self):
        return [
            {"k": k + 1, "frequency": f, "stderr": s, "mean_gap": g}
            for k, (f, s, g) in enumerate(zip(self.frequencies, self.stderrs, self.mean_gaps))
        ]


def meeting_statistics(records: list[TrajectoryRecord]) -> MeetingSummary:
    """Summarize meeting counts; rejects runs with mismatched parameters."""
    if not records:
        raise ValueError("no records given")
    ref = (records[0].params, records[0].n_particles)
    for rec in records:
        if (rec.params, rec.n_particles) != ref:
            raise ValueError("meeting_statistics requires records with identical parameters")
    n = len(records)
    max_k = max((len(r.meeting_times) for r in records), default=0)
    freqs, errs, gaps = [], [], []
    for k in range(1, max_k + 1):
        hits = sum(1 for r in records if len(r.meeting_times) >= k)
        f = hits / n
        freqs.append(f)
        errs.append((f * (1 - f) / n) ** 0.5)
        gap_vals = [
            r.meeting_times[k - 1] - (r.meeting_times[k - 2] if k > 1 else 0)
            for r in records
            if len(r.meeting_times) >= k
        ]
        gaps.append(sum(gap_vals) / len(gap_vals) if gap_vals else 0.0)
    return MeetingSummary(n_trials=n, frequencies=freqs, stderrs=errs, mean_gaps=gaps)
