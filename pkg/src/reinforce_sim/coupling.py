"""Four-process coupled construction: two urn-driven particles sandwiched
between two random walks in (dependent) random environments.

Per site, the environment pair (limiting pure-red fraction, limiting
pure-blue fraction) comes from a single Dirichlet draw on the simplex.
The outer walkers move by those fractions when free; when an outer
walker sits on its inner partner they share one departure clock and the
inner urn drawing decides both moves.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from scipy import stats

from .direct import ModelParams
from .distributions import DirichletParams, RngStream, sample_dirichlet
from .urn import DrawOutcome, MagicUrn, Side, magic_draw
from .urn_process import UrnField, check_small_a_policy, init_urn_field, initial_masses


class SandwichViolationError(RuntimeError):
    """The pathwise ordering lP <= l <= r <= rP failed (must never happen)."""


@dataclass(frozen=True)
class SiteEnvironment:
    """Limiting pure-red and pure-blue fractions at one site.

    Both come from one simplex draw, so q_r + p_l <= 1; the complements
    give the left walker's left rate and the right walker's right rate.
    """

    q_r_polya: float
    p_l_polya: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.q_r_polya <= 1.0 and 0.0 <= self.p_l_polya <= 1.0):
            raise ValueError(f"fractions must lie in [0,1]: {self}")
        if self.q_r_polya + self.p_l_polya > 1.0 + 1e-12:
            raise ValueError(f"fractions must sum to at most 1: {self}")

    @property
    def q_l_polya(self) -> float:
        return 1.0 - self.p_l_polya

    @property
    def p_r_polya(self) -> float:
        return 1.0 - self.q_r_polya


def site_dirichlet_params(params: ModelParams, v: int) -> DirichletParams:
    """Dirichlet(R0/2, 1/2, B0/2) parameters for the urn at site v.

    Nonpositive initial masses become point-mass markers, matching the
    degenerate environment table rows.
    """
    red, blue = initial_masses(params, v)
    return DirichletParams(
        red / 2.0 if red > 0 else None,
        0.5,
        blue / 2.0 if blue > 0 else None,
    )


def sample_site_environment(params: ModelParams, v: int, rng: RngStream) -> SiteEnvironment:
    """One environment draw for site v from the site's Dirichlet law."""
    check_small_a_policy(params)
    p = site_dirichlet_params(params, v)
    if p.alpha_red is not None and p.alpha_blue is not None:
        q_r, _, p_l = sample_dirichlet(rng, p)
        return SiteEnvironment(q_r, p_l)
    if p.alpha_red is None and p.alpha_blue is None:
        return SiteEnvironment(0.0, 0.0)
    if p.alpha_red is None:
        # red fraction frozen at 0; (family, blue) aggregate to Beta(blue, family)
        g_fam = rng.gen.gamma(p.alpha_family)
        g_blue = rng.gen.gamma(p.alpha_blue)
        return SiteEnvironment(0.0, g_blue / (g_fam + g_blue))
    g_fam = rng.gen.gamma(p.alpha_family)
    g_red = rng.gen.gamma(p.alpha_red)
    return SiteEnvironment(g_red / (g_fam + g_red), 0.0)


class Environment:
    """Lazily sampled, memoized site -> SiteEnvironment table."""

    def __init__(self, params: ModelParams, rng: RngStream):
        check_small_a_policy(params)
        self.params = params
        self._rng = rng
        self._sites: dict[int, SiteEnvironment] = {}

    def at(self, v: int) -> SiteEnvironment:
        env = self._sites.get(v)
        if env is None:
            env = sample_site_environment(self.params, v, self._rng)
            self._sites[v] = env
        return env

    def sites(self):
        return dict(self._sites)


@dataclass
class CoupledState:
    """Positions of the four coupled processes plus their drivers."""

    lP: int
    l: int
    r: int
    rP: int
    field: UrnField | None
    env: Environment

    def check_sandwich(self) -> None:
        if not (self.lP <= self.l <= self.r <= self.rP):
            raise SandwichViolationError(
                f"ordering violated: lP={self.lP}, l={self.l}, r={self.r}, rP={self.rP}"
            )


def init_coupled_state(params: ModelParams, env: Environment | None = None,
                       env_rng: RngStream | None = None) -> CoupledState:
    if env is None:
        if env_rng is None:
            raise ValueError("provide either an Environment or an env_rng to sample one")
        env = Environment(params, env_rng)
    return CoupledState(
        lP=params.l0, l=params.l0, r=params.r0, rP=params.r0,
        field=init_urn_field(params) if params.l0 < params.r0 else None,
        env=env,
    )


_BLUEISH = (DrawOutcome.PURE_BLUE, DrawOutcome.FAM_BLUE)


def coupled_step(state: CoupledState, params: ModelParams, rng: RngStream) -> tuple:
    """One event of the coupled quadruple; returns an event record.

    Clock groups: the l pair (shared clock when coincident), the r pair,
    and each free outer walker.  The mover group is uniform among the
    active groups.  Returns (group, moved-positions snapshot).
    """
    if state.l >= state.r:
        raise SandwichViolationError(
            f"coupled_step called at or past the meeting time (l={state.l}, r={state.r})"
        )
    l_coincident = state.lP == state.l
    r_coincident = state.rP == state.r
    groups = ["l_group", "r_group"]
    if not l_coincident:
        groups.append("lP")
    if not r_coincident:
        groups.append("rP")
    g = groups[int(rng.uniform() * len(groups)) % len(groups)]

    if g == "l_group":
        v = state.l
        urn = state.field.urn_at(v)
        outcome, direction, new_urn = magic_draw(urn, Side.LEFT, rng)
        state.field.set_urn(v, new_urn)
        if direction is Side.LEFT:
            state.l = v - 1
            if l_coincident:
                state.lP = v - 1  # red or chameleon marble: both jump left
        else:
            state.l = v + 1
            if l_coincident:
                # outer walker follows right only on a pure blue marble
                state.lP = v + 1 if outcome is DrawOutcome.PURE_BLUE else v - 1
    elif g == "r_group":
        v = state.r
        urn = state.field.urn_at(v)
        outcome, direction, new_urn = magic_draw(urn, Side.RIGHT, rng)
        state.field.set_urn(v, new_urn)
        if direction is Side.RIGHT:
            state.r = v + 1
            if r_coincident:
                state.rP = v + 1  # blue or chameleon marble: both jump right
        else:
            state.r = v - 1
            if r_coincident:
                state.rP = v - 1 if outcome is DrawOutcome.PURE_RED else v + 1
    elif g == "lP":
        v = state.lP
        state.lP = v + 1 if rng.uniform() < state.env.at(v).p_l_polya else v - 1
    else:
        v = state.rP
        state.rP = v + 1 if rng.uniform() < state.env.at(v).p_r_polya else v - 1

    state.check_sandwich()
    return g, (state.lP, state.l, state.r, state.rP)


@dataclass
class CouplingRunResult:
    """Summary of one coupled run."""

    violations: int
    tau1_event: int | None
    max_gap: int  # maximum of rP - lP over the run
    events_executed: int
    seed: int
    stream_id: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "violations": self.violations,
                "tau1_event": self.tau1_event,
                "max_rP_minus_lP": self.max_gap,
                "events": self.events_executed,
                "seed": self.seed,
                "stream_id": self.stream_id,
            }
        )


def run_coupling(
    params: ModelParams,
    max_events: int,
    rng: RngStream,
    env: Environment | None = None,
    env_rng: RngStream | None = None,
) -> CouplingRunResult:
    """Run the coupled quadruple until the inner pair meets or the budget ends.

    The environment may be shared across runs (fixed-environment
    experiments) or sampled from ``env_rng``; by default it is sampled
    from the dynamics stream.
    """
    if env is None:
        env = Environment(params, env_rng if env_rng is not None else rng)
    if params.l0 == params.r0:
        return CouplingRunResult(0, 0, 0, 0, rng.seed, rng.stream_id)
    state = init_coupled_state(params, env=env)
    max_gap = state.rP - state.lP
    violations = 0
    tau1 = None
    e = 0
    try:
        for e in range(1, max_events + 1):
            coupled_step(state, params, rng)
            gap = state.rP - state.lP
            if gap > max_gap:
                max_gap = gap
            if state.l == state.r:
                tau1 = e
                break
    except SandwichViolationError:
        violations = 1
    return CouplingRunResult(violations, tau1, max_gap, e, rng.seed, rng.stream_id)


@dataclass
class SiteCheck:
    site: int
    walker: str
    visits: int
    right_jumps: int
    expected_right: float
    p_value: float


@dataclass
class MarginalCheckReport:
    """Chi-square (binomial) comparison of free-walker jump frequencies
    against the fixed environment, Bonferroni-corrected across sites."""

    trials: int
    significance: float
    checks: list[SiteCheck]
    excluded_sites: int
    passed: bool

    def to_json(self) -> str:
        return json.dumps(
            {
                "trials": self.trials,
                "significance": self.significance,
                "excluded_sites": self.excluded_sites,
                "passed": self.passed,
                "checks": [vars(c) for c in self.checks],
            }
        )


def marginal_check(
    params: ModelParams,
    trials: int,
    max_events: int,
    rng: RngStream,
    env_rng: RngStream,
    significance: float = 0.01,
    min_visits: int = 20,
) -> MarginalCheckReport:
    """Verify the free outer walkers follow their per-site jump laws.

    One environment draw is shared across all trials; only free
    (non-coincident) steps are tallied, since coincident steps are
    resolved by the urn drawing rather than the limiting fractions.
    """
    env = Environment(params, env_rng)
    counts: dict[tuple[str, int], list[int]] = {}

    for trial in range(trials):
        trial_rng = RngStream(rng.seed, rng.stream_id + 1 + trial)
        if params.l0 == params.r0:
            break
        state = init_coupled_state(params, env=env)
        for _ in range(max_events):
            if state.l >= state.r:
                break
            before = (state.lP, state.l, state.r, state.rP)
            g, after = coupled_step(state, params, trial_rng)
            if g == "lP":
                key = ("lP", before[0])
                c = counts.setdefault(key, [0, 0])
                c[0] += 1
                c[1] += int(after[0] == before[0] + 1)
            elif g == "rP":
                key = ("rP", before[3])
                c = counts.setdefault(key, [0, 0])
                c[0] += 1
                c[1] += int(after[3] == before[3] + 1)

    checks = []
    excluded = 0
    tested = [(k, v) for k, v in counts.items() if v[0] >= min_visits]
    excluded = len(counts) - len(tested)
    alpha = significance / max(len(tested), 1)
    passed = True
    for (walker, site), (visits, rights) in sorted(tested):
        se = env.at(site)
        p_right = se.p_l_polya if walker == "lP" else se.p_r_polya
        if p_right in (0.0, 1.0):
            # degenerate rows: the frequency must be exact
            ok = rights == int(round(p_right * visits))
            pval = 1.0 if ok else 0.0
        else:
            pval = float(stats.binomtest(rights, visits, p_right).pvalue)
        checks.append(SiteCheck(site, walker, visits, rights, p_right, pval))
        if pval < alpha:
            passed = False
    return MarginalCheckReport(
        trials=trials,
        significance=significance,
        checks=checks,
        excluded_sites=excluded,
        passed=passed,
    )
