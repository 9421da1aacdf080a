"""Urn-driven pair dynamics and the exact enumeration certificate."""
import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reinforce_sim.direct import ModelParams
from reinforce_sim.distributions import make_stream
from reinforce_sim.urn import MagicUrn, NegativeMassError, Side
from reinforce_sim.urn_process import (
    MAX_ENUM_HORIZON,
    DecoupledError,
    ExactDistribution,
    SmallAPolicyError,
    enumerate_exact,
    init_urn_field,
    initial_masses,
    jump_probabilities,
    run_urn_process,
    tv_distance,
    urn_process_step,
)


def params_for(a=1.0, delta=0.0, l0=0, r0=2, **kw):
    return ModelParams(a=a, delta=delta, l0=l0, r0=r0, **kw)


class TestInitialMasses:
    def test_five_site_classes_unit_weights(self):
        p = params_for(a=1.0, delta=0.0, l0=0, r0=2)
        assert initial_masses(p, -1) == (0.0, 2.0)
        assert initial_masses(p, 0) == (0.0, 1.0)
        assert initial_masses(p, 1) == (1.0, 1.0)
        assert initial_masses(p, 2) == (1.0, 0.0)
        assert initial_masses(p, 3) == (2.0, 0.0)

    def test_five_site_classes_with_drift(self):
        p = params_for(a=2.0, delta=0.5, l0=-1, r0=3)
        assert initial_masses(p, -2) == (1.0, 3.5)
        assert initial_masses(p, -1) == (1.0, 2.5)
        assert initial_masses(p, 0) == (2.0, 2.5)
        assert initial_masses(p, 3) == (2.0, 1.5)
        assert initial_masses(p, 4) == (3.0, 1.5)

    def test_interior_masses_mirror_fresh_edge_weights(self):
        # interior site: both adjacent edges untraversed, so red = a and
        # blue = a + delta
        p = params_for(a=1.25, delta=0.75, l0=-3, r0=5)
        assert initial_masses(p, 0) == (1.25, 2.0)


class TestSmallAPolicy:
    def test_small_a_rejected_by_default(self):
        with pytest.raises(SmallAPolicyError):
            init_urn_field(params_for(a=0.5))

    def test_small_a_allowed_with_flag(self):
        field = init_urn_field(params_for(a=0.5, allow_small_a=True))
        assert field.urn_at(0).pure_red == -0.5

    def test_small_a_hard_error_on_negative_effective_mass(self):
        # right particle on a fresh a<1 site of the left class
        p = params_for(a=0.5, l0=0, r0=1, allow_small_a=True)
        field = init_urn_field(p)
        field.set_urn(-1, MagicUrn(*initial_masses(p, -1)))
        rng = make_stream(71, 0)
        with pytest.raises(NegativeMassError):
            for _ in range(200):
                urn_process_step(field, -2, -1, rng)


class TestUrnField:
    def test_lazy_materialization(self):
        field = init_urn_field(params_for())
        urn = field.urn_at(1)
        assert (urn.pure_red, urn.pure_blue) == (1.0, 1.0)
        assert field.urn_at(1) is urn

    def test_coincident_start_is_decoupled(self):
        field = init_urn_field(params_for(l0=1, r0=1))
        with pytest.raises(DecoupledError):
            field.urn_at(1)


class TestJumpProbabilities:
    def test_closed_forms_on_random_urns(self):
        rng = make_stream(72, 0)
        for _ in range(50):
            urn = MagicUrn(
                pure_red=rng.uniform() * 5,
                pure_blue=rng.uniform() * 5,
                fam_red=rng.uniform() * 5,
                fam_blue=rng.uniform() * 5,
            )
            r = urn.red_mass
            b = urn.blue_mass
            pl, pr = jump_probabilities(urn, Side.LEFT)
            assert pl == pytest.approx((r + 1) / (r + b + 1))
            assert pr == pytest.approx(b / (r + b + 1))
            ql, qr = jump_probabilities(urn, Side.RIGHT)
            assert ql == pytest.approx(r / (r + b + 1))
            assert qr == pytest.approx((b + 1) / (r + b + 1))
            assert pl + pr == pytest.approx(1.0)

    def test_fresh_start_sites_are_balanced(self):
        # a=1, delta=0: both particles start with symmetric jumps
        p = params_for()
        left_urn = MagicUrn(*initial_masses(p, 0))
        assert jump_probabilities(left_urn, Side.LEFT) == (0.5, 0.5)
        right_urn = MagicUrn(*initial_masses(p, 2))
        assert jump_probabilities(right_urn, Side.RIGHT) == (0.5, 0.5)


class TestUrnProcessStep:
    def test_moves_exactly_one_particle(self):
        field = init_urn_field(params_for(r0=4))
        rng = make_stream(73, 0)
        l, r, (mover, frm, to, outcome) = urn_process_step(field, 0, 4, rng)
        assert abs(to - frm) == 1
        if mover is Side.LEFT:
            assert (l, r) == (to, 4) and frm == 0
        else:
            assert (l, r) == (0, to) and frm == 4

    def test_meeting_or_crossing_is_an_error(self):
        field = init_urn_field(params_for())
        rng = make_stream(74, 0)
        with pytest.raises(DecoupledError):
            urn_process_step(field, 1, 1, rng)
        with pytest.raises(DecoupledError):
            urn_process_step(field, 2, 1, rng)

    def test_run_stops_at_first_meeting(self):
        p = params_for(max_events=100_000)
        tau, executed, (l, r) = run_urn_process(p, make_stream(75, 0))
        assert tau == executed
        assert l == r

    def test_coincident_start_returns_zero(self):
        p = params_for(l0=2, r0=2, max_events=100)
        assert run_urn_process(p, make_stream(76, 0)) == (0, 0, (2, 2))

    def test_budget_exhaustion_returns_none(self):
        p = params_for(max_events=1)
        tau, executed, (l, r) = run_urn_process(p, make_stream(77, 0))
        assert tau is None
        assert executed == 1
        assert r - l in (1, 3)


class TestEnumeration:
    def test_horizon_zero_is_unit_mass_on_empty_trajectory(self):
        d = enumerate_exact("direct", params_for(), 0)
        assert d.probs == {(): Fraction(1)}

    def test_single_event_probabilities(self):
        # a=1, delta=0: either particle moves with probability 1/2, then
        # jumps each way with probability 1/2
        d = enumerate_exact("direct", params_for(), 1)
        assert all(p == Fraction(1, 4) for p in d.probs.values())
        assert len(d.probs) == 4

    def test_total_mass_is_exactly_one(self):
        for model in ("direct", "urn"):
            d = enumerate_exact(model, params_for(a=1.5, delta=0.25), 4)
            assert d.total_mass() == 1

    def test_short_branches_end_at_meetings(self):
        d = enumerate_exact("direct", params_for(r0=2), 4)
        for traj in d.probs:
            if len(traj) == 4:
                continue
            l, r = 0, 2
            for mover, direction in traj:
                step = 1 if direction == 1 else -1
                if mover == 0:
                    l += step
                else:
                    r += step
            assert l == r  # truncated only by absorption

    @pytest.mark.parametrize("a", [1.0, 2.0])
    @pytest.mark.parametrize("delta", [0.0, 0.5])
    @pytest.mark.parametrize("l0,r0", [(0, 1), (0, 2), (0, 3)])
    def test_urn_matches_direct_exactly(self, a, delta, l0, r0):
        p = params_for(a=a, delta=delta, l0=l0, r0=r0)
        for h in range(1, 5):
            tv = tv_distance(enumerate_exact("direct", p, h), enumerate_exact("urn", p, h))
            assert tv == 0.0

    def test_urn_matches_direct_for_small_a(self):
        p = params_for(a=0.5, delta=0.5, l0=0, r0=2, allow_small_a=True)
        tv = tv_distance(enumerate_exact("direct", p, 4), enumerate_exact("urn", p, 4))
        assert tv == 0.0

    def test_simulation_frequencies_match_enumeration(self):
        # one-event empirical check tying the sampler to the enumerator
        p = params_for(a=2.0, delta=0.5)
        d = enumerate_exact("urn", p, 1)
        rng = make_stream(78, 0)
        n = 40_000
        counts = {}
        for _ in range(n):
            field = init_urn_field(p)
            _, _, (mover, frm, to, _) = urn_process_step(field, 0, 2, rng)
            key = ((0 if mover is Side.LEFT else 1, 1 if to > frm else 0),)
            counts[key] = counts.get(key, 0) + 1
        for traj, prob in d.probs.items():
            f = counts.get(traj, 0) / n
            pf = float(prob)
            assert abs(f - pf) < 4 * (pf * (1 - pf) / n) ** 0.5

    def test_horizon_guard(self):
        with pytest.raises(ValueError, match="leaves"):
            enumerate_exact("direct", params_for(), MAX_ENUM_HORIZON + 1)
        with pytest.raises(ValueError):
            enumerate_exact("direct", params_for(), -1)

    def test_unknown_model_rejected(self):
        with pytest.raises(ValueError):
            enumerate_exact("other", params_for(), 1)

    def test_small_a_policy_applies_to_urn_enumeration(self):
        with pytest.raises(SmallAPolicyError):
            enumerate_exact("urn", params_for(a=0.5), 2)

    def test_json_export_round_trips(self):
        d = enumerate_exact("direct", params_for(), 2)
        rows = json.loads(d.to_json())
        total = sum(Fraction(int(r["prob_num"]), int(r["prob_den"])) for r in rows)
        assert total == 1

    @settings(max_examples=20, deadline=None)
    @given(
        a=st.sampled_from([1.0, 1.5, 2.0, 3.0]),
        delta=st.sampled_from([0.0, 0.25, 0.5, 1.5]),
        gap=st.integers(min_value=1, max_value=3),
        horizon=st.integers(min_value=0, max_value=3),
    )
    def test_equivalence_property(self, a, delta, gap, horizon):
        p = params_for(a=a, delta=delta, l0=0, r0=gap)
        d1 = enumerate_exact("direct", p, horizon)
        d2 = enumerate_exact("urn", p, horizon)
        assert tv_distance(d1, d2) == 0.0
        assert d1.total_mass() == 1


class TestWeightAgreement:
    """Along every enumerated branch the urn's effective edge weights must
    equal the reinforced edge weights of the weight dynamics."""

    def co_walk(self, p: ModelParams, horizon: int):
        a = Fraction(p.a)
        delta = Fraction(p.delta)

        def fresh(v):
            red, blue = initial_masses(p, v)
            return MagicUrn(Fraction(red), Fraction(blue), Fraction(0), Fraction(0))

        def rec(urns, weights, l, r, depth):
            if l == r or depth == 0:
                return
            for mover_idx, present in ((0, Side.LEFT), (1, Side.RIGHT)):
                v = l if mover_idx == 0 else r
                urn = urns.get(v) or fresh(v)
                wl = weights.get(v - 1, a)
                wr = weights.get(v, a) + delta
                eff_l, eff_r = (
                    jump_probabilities(urn, present)[0] * urn.total,
                    jump_probabilities(urn, present)[1] * urn.total,
                )
                assert eff_l == wl
                assert eff_r == wr
                for d_idx in (0, 1):
                    mass = eff_l if d_idx == 0 else eff_r
                    if mass <= 0:
                        continue
                    u2 = dict(urns)
                    w2 = dict(weights)
                    if d_idx == 0:
                        u2[v] = MagicUrn(urn.pure_red, urn.pure_blue,
                                         urn.fam_red + 2, urn.fam_blue)
                        w2[v - 1] = wl + 1
                        nl, nr = (v - 1, r) if mover_idx == 0 else (l, v - 1)
                    else:
                        u2[v] = MagicUrn(urn.pure_red, urn.pure_blue,
                                         urn.fam_red, urn.fam_blue + 2)
                        w2[v] = weights.get(v, a) + 1
                        nl, nr = (v + 1, r) if mover_idx == 0 else (l, v + 1)
                    rec(u2, w2, nl, nr, depth - 1)

        rec({}, {}, p.l0, p.r0, horizon)

    @pytest.mark.parametrize("a,delta", [(1.0, 0.0), (2.0, 0.5)])
    def test_effective_weights_track_reinforcement(self, a, delta):
        self.co_walk(params_for(a=a, delta=delta, l0=0, r0=2), 4)


class TestTvDistance:
    def test_zero_against_itself(self):
        d = enumerate_exact("direct", params_for(), 3)
        assert tv_distance(d, d) == 0.0

    def test_disjoint_supports_give_one(self):
        p = params_for()
        d1 = ExactDistribution(1, p, {((0, 0),): Fraction(1)})
        d2 = ExactDistribution(1, p, {((1, 1),): Fraction(1)})
        assert tv_distance(d1, d2) == 1.0

    def test_mismatched_inputs_rejected(self):
        p = params_for()
        d1 = enumerate_exact("direct", p, 2)
        d2 = enumerate_exact("direct", p, 3)
        with pytest.raises(ValueError):
            tv_distance(d1, d2)
        d3 = enumerate_exact("direct", params_for(a=2.0), 2)
        with pytest.raises(ValueError):
            tv_distance(d1, d3)
