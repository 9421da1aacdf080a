"""Classic Polya urns and the chameleon-marble urn with its family split.

Masses are real numbers, not integer counts: the walk's edge weights
include non-integer initial values, and the urn masses mirror them.
The chameleon ("magic") marble has unit mass and no stored color; its
color is evaluated at draw time from the identity of the particle
present at the site (red for the left particle, blue for the right).
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .distributions import BetaParams, DirichletParams, RngStream


class Side(Enum):
    LEFT = "left"
    RIGHT = "right"


class Color(Enum):
    RED = "red"
    BLUE = "blue"


class DrawOutcome(Enum):
    PURE_RED = "pure_red"
    PURE_BLUE = "pure_blue"
    FAM_RED = "fam_red"
    FAM_BLUE = "fam_blue"
    MAGIC = "magic"


class NegativeMassError(ValueError):
    """An effective red or blue mass went negative (only possible for a < 1)."""


@dataclass(frozen=True)
class PolyaUrn:
    """Two-color urn: draw proportionally to mass, add ``d`` of the drawn color."""

    red: float
    blue: float
    d: float = 1.0

    def __post_init__(self) -> None:
        if self.red < 0 or self.blue < 0:
            raise ValueError(f"urn masses must be nonnegative, got {self.red}, {self.blue}")
        if self.d <= 0:
            raise ValueError(f"reinforcement must be positive, got {self.d}")

    @property
    def total(self) -> float:
        return self.red + self.blue

    def red_probability(self):
        if self.total <= 0:
            raise ValueError("cannot draw from an urn with zero total mass")
        return self.red / self.total


def polya_draw(urn: PolyaUrn, rng: RngStream) -> tuple[Color, PolyaUrn]:
    """One drawing: pick a color proportionally to mass, reinforce it by d."""
    p_red = urn.red_probability()
    if rng.uniform() < p_red:
        return Color.RED, replace(urn, red=urn.red + urn.d)
    return Color.BLUE, replace(urn, blue=urn.blue + urn.d)


def polya_limit_law(urn: PolyaUrn) -> BetaParams:
    """Limit law of the red fraction: Beta(R0/D, B0/D)."""
    return BetaParams(urn.red / urn.d, urn.blue / urn.d)


@dataclass(frozen=True)
class MagicUrn:
    """Urn holding pure red/blue marbles, family red/blue marbles, and
    the unit-mass chameleon marble (implicit).

    Family marbles keep a fixed color once added; only the chameleon
    marble changes color with the particle present.  ``pure_red`` may be
    negative at initialization when a < 1; every draw checks that the
    effective masses stay nonnegative.
    """

    pure_red: float
    pure_blue: float
    fam_red: float = 0.0
    fam_blue: float = 0.0

    def __post_init__(self) -> None:
        if self.fam_red < 0 or self.fam_blue < 0:
            raise ValueError("family masses must be nonnegative")

    @property
    def red_mass(self):
        """Red marbles excluding the chameleon marble."""
        return self.pure_red + self.fam_red

    @property
    def blue_mass(self):
        return self.pure_blue + self.fam_blue

    @property
    def family_mass(self):
        """Family marbles plus the chameleon marble itself."""
        return self.fam_red + self.fam_blue + 1

    @property
    def total(self):
        """Total drawn-from mass, chameleon marble included."""
        return self.pure_red + self.pure_blue + self.fam_red + self.fam_blue + 1


_RED_OUTCOMES = (DrawOutcome.PURE_RED, DrawOutcome.FAM_RED)
_BLUE_OUTCOMES = (DrawOutcome.PURE_BLUE, DrawOutcome.FAM_BLUE)


def outcome_masses(urn: MagicUrn) -> dict[DrawOutcome, float]:
    return {
        DrawOutcome.PURE_RED: urn.pure_red,
        DrawOutcome.PURE_BLUE: urn.pure_blue,
        DrawOutcome.FAM_RED: urn.fam_red,
        DrawOutcome.FAM_BLUE: urn.fam_blue,
        DrawOutcome.MAGIC: 1,
    }


def _check_effective_masses(urn: MagicUrn, present: Side) -> None:
    eff_red = urn.red_mass + (1 if present is Side.LEFT else 0)
    eff_blue = urn.blue_mass + (1 if present is Side.RIGHT else 0)
    if eff_red < 0 or eff_blue < 0:
        raise NegativeMassError(
            f"effective masses went negative (red={eff_red}, blue={eff_blue}) "
            f"with {present.value} particle present; urn={urn}"
        )


def outcome_direction(outcome: DrawOutcome, present: Side) -> Side:
    """Jump direction implied by the drawn marble's color."""
    if outcome in _RED_OUTCOMES:
        return Side.LEFT
    if outcome in _BLUE_OUTCOMES:
        return Side.RIGHT
    return present  # chameleon marble: red iff the left particle is present


def apply_outcome(urn: MagicUrn, outcome: DrawOutcome, present: Side) -> MagicUrn:
    """Add two marbles of the drawn marble's color and family status."""
    if outcome is DrawOutcome.PURE_RED:
        return replace(urn, pure_red=urn.pure_red + 2)
    if outcome is DrawOutcome.PURE_BLUE:
        return replace(urn, pure_blue=urn.pure_blue + 2)
    if outcome is DrawOutcome.FAM_RED:
        return replace(urn, fam_red=urn.fam_red + 2)
    if outcome is DrawOutcome.FAM_BLUE:
        return replace(urn, fam_blue=urn.fam_blue + 2)
    # chameleon drawn: the two new marbles join the family with its current color
    if present is Side.LEFT:
        return replace(urn, fam_red=urn.fam_red + 2)
    return replace(urn, fam_blue=urn.fam_blue + 2)


def magic_draw(
    urn: MagicUrn, present: Side, rng: RngStream
) -> tuple[DrawOutcome, Side, MagicUrn]:
    """One drawing with the given particle present.

    Selects among the five categories proportionally to mass (the
    chameleon marble counts 1), reinforces the drawn category by 2, and
    reports the implied jump direction.
    """
    _check_effective_masses(urn, present)
    total = urn.total
    if total <= 0:
        raise NegativeMassError(f"urn total mass {total} is not positive; urn={urn}")
    left_is_present = present is Side.LEFT
    eff_red = urn.red_mass + (1 if left_is_present else 0)
    u = rng.uniform() * total
    # direction pool first (pooled masses are valid even when a pure mass
    # is negative for a < 1), then the category within the pool
    if u < eff_red:
        if left_is_present:
            cats = ((DrawOutcome.PURE_RED, urn.pure_red), (DrawOutcome.FAM_RED, urn.fam_red),
                    (DrawOutcome.MAGIC, 1))
        else:
            cats = ((DrawOutcome.PURE_RED, urn.pure_red), (DrawOutcome.FAM_RED, urn.fam_red))
    else:
        u -= eff_red
        if left_is_present:
            cats = ((DrawOutcome.PURE_BLUE, urn.pure_blue), (DrawOutcome.FAM_BLUE, urn.fam_blue))
        else:
            cats = ((DrawOutcome.PURE_BLUE, urn.pure_blue), (DrawOutcome.FAM_BLUE, urn.fam_blue),
                    (DrawOutcome.MAGIC, 1))
    if any(m < 0 for _, m in cats):
        # the three-color split is ill-defined here; reattribute the draw
        # among the nonnegative categories (direction dynamics only depend
        # on the pooled masses, so this leaves the walk law untouched)
        cats = tuple((o, m) for o, m in cats if m > 0)
        u = rng.uniform() * sum(m for _, m in cats)
    outcome = cats[-1][0]
    acc = 0
    for cand, mass in cats[:-1]:
        acc += mass
        if u < acc:
            outcome = cand
            break
    direction = outcome_direction(outcome, present)
    return outcome, direction, apply_outcome(urn, outcome, present)


def effective_edge_weights(urn: MagicUrn, present: Side):
    """Edge weights ([v-1,v], [v,v+1]) implied by the urn contents.

    The chameleon marble contributes to the red side when the left
    particle is present and to the blue side otherwise.
    """
    if present is Side.LEFT:
        return urn.red_mass + 1, urn.blue_mass
    return urn.red_mass, urn.blue_mass + 1


def magic_limit_params(urn: MagicUrn) -> DirichletParams:
    """Limit law of the (pure red, family, pure blue) fractions.

    Nonpositive initial pure masses map to point-mass markers for the
    corresponding component.
    """
    a_red = urn.pure_red / 2.0 if urn.pure_red > 0 else None
    a_blue = urn.pure_blue / 2.0 if urn.pure_blue > 0 else None
    return DirichletParams(a_red, 0.5, a_blue)


def polya_fraction_samples(
    urn: PolyaUrn, n_draws: int, n_runs: int, rng: RngStream
) -> np.ndarray:
    """Red fraction after ``n_draws`` drawings, for ``n_runs`` independent urns.

    Vectorized across runs; one uniform per (draw, run).
    """
    red = np.full(n_runs, float(urn.red))
    d = float(urn.d)
    total = float(urn.total)  # deterministic: every drawing adds exactly d
    for _ in range(n_draws):
        red += d * (rng.gen.random(n_runs) * total < red)
        total += d
    return red / total


def three_color_fraction_samples(
    urn: MagicUrn, n_draws: int, n_runs: int, rng: RngStream
) -> np.ndarray:
    """(pure red, family, pure blue) fractions after ``n_draws`` drawings.

    Only the three-category masses matter for this law: family draws add
    two family marbles regardless of their color, and the chameleon
    marble always contributes unit mass to the family category.
    Returns an (n_runs, 3) array.
    """
    if urn.pure_red < 0 or urn.pure_blue < 0:
        raise ValueError("three-color sampling requires nonnegative pure masses")
    m_red = np.full(n_runs, float(urn.pure_red))
    m_fam = np.full(n_runs, float(urn.family_mass))
    m_blue = np.full(n_runs, float(urn.pure_blue))
    total = float(urn.total)  # deterministic: every drawing adds exactly 2
    for _ in range(n_draws):
        u = rng.gen.random(n_runs) * total
        pick_red = u < m_red
        pick_fam = ~pick_red & (u < m_red + m_fam)
        m_red += 2.0 * pick_red
        m_fam += 2.0 * pick_fam
        m_blue += 2.0 * (~(pick_red | pick_fam))
        total += 2.0
    return np.column_stack((m_red, m_fam, m_blue)) / total
