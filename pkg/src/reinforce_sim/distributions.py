"""Seeded random streams and the beta / Dirichlet / digamma substrate.

All randomness in the package flows through :class:`RngStream`, a
counter-based Philox generator keyed by ``(seed, stream_id)``.  The same
pair reproduces the same draw sequence on any platform; distinct stream
ids give statistically independent streams (numpy's SeedSequence
spawning guarantee).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

_MASK64 = (1 << 64) - 1
_BUFFER_BLOCK = 8192


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested accuracy."""


@dataclass
class RngStream:
    """Deterministic random stream keyed by (seed, stream_id).

    Backed by numpy's Philox4x64 bit generator seeded through
    ``SeedSequence([seed, stream_id])``.  Uniform draws are buffered in
    blocks for speed; consumption order is still fully deterministic.
    """

    seed: int
    stream_id: int
    gen: np.random.Generator = field(init=False, repr=False)
    _buf: np.ndarray = field(init=False, repr=False)
    _pos: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        ss = np.random.SeedSequence([self.seed & _MASK64, self.stream_id & _MASK64])
        self.gen = np.random.Generator(np.random.Philox(ss))
        self._buf = np.empty(0)
        self._pos = 0

    def uniform(self) -> float:
        """Next uniform draw on [0, 1)."""
        if self._pos >= self._buf.shape[0]:
            self._buf = self.gen.random(_BUFFER_BLOCK)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def uniforms(self, n: int) -> np.ndarray:
        return self.gen.random(n)

    def gamma(self, shape: float, size=None):
        return self.gen.gamma(shape, size=size)

    def exponential(self, scale: float = 1.0) -> float:
        return float(self.gen.exponential(scale))


def make_stream(seed: int, stream_id: int = 0) -> RngStream:
    """Create a deterministic stream for the given (seed, stream_id) pair."""
    return RngStream(int(seed), int(stream_id))


@dataclass(frozen=True)
class BetaParams:
    """Beta shape parameters, or an explicit point mass at zero.

    The degenerate marker represents environment table rows whose
    limiting fraction is exactly zero; it is never encoded as clamped
    small shapes.
    """

    alpha: float
    beta: float
    point_mass_at_zero: bool = False

    def __post_init__(self) -> None:
        if self.point_mass_at_zero:
            return
        for name, v in (("alpha", self.alpha), ("beta", self.beta)):
            if not np.isfinite(v) or v <= 0:
                raise ValueError(f"BetaParams.{name} must be finite and > 0, got {v!r}")

    @classmethod
    def degenerate_zero(cls) -> "BetaParams":
        return cls(0.0, 0.0, point_mass_at_zero=True)

    def mean(self) -> float:
        if self.point_mass_at_zero:
            return 0.0
        return self.alpha / (self.alpha + self.beta)


@dataclass(frozen=True)
class DirichletParams:
    """Three-component Dirichlet parameters (red, family, blue).

    ``None`` for the red or blue component marks that fraction as a
    point mass at exactly zero (the remaining two components then form
    a two-parameter aggregate).
    """

    alpha_red: float | None
    alpha_family: float
    alpha_blue: float | None

    def __post_init__(self) -> None:
        for name, v in (
            ("alpha_red", self.alpha_red),
            ("alpha_family", self.alpha_family),
            ("alpha_blue", self.alpha_blue),
        ):
            if name != "alpha_family" and v is None:
                continue
            if not np.isfinite(v) or v <= 0:
                raise ValueError(f"DirichletParams.{name} must be finite and > 0, got {v!r}")

    @property
    def degenerate(self) -> bool:
        return self.alpha_red is None or self.alpha_blue is None


def sample_beta(rng: RngStream, p: BetaParams, size=None):
    """Draw from Beta(alpha, beta) via two gamma variates.

    The two-gamma route stays valid for shape parameters below 1.
    Point-mass-marked parameters return exactly 0.
    """
    if p.point_mass_at_zero:
        return np.zeros(size) if size is not None else 0.0
    x = rng.gen.gamma(p.alpha, size=size)
    y = rng.gen.gamma(p.beta, size=size)
    if size is None:
        while x + y == 0.0:  # extreme-shape underflow guard
            x = rng.gen.gamma(p.alpha)
            y = rng.gen.gamma(p.beta)
        return x / (x + y)
    return x / (x + y)


def sample_dirichlet(rng: RngStream, p: DirichletParams) -> tuple[float, float, float]:
    """One draw on the 2-simplex; components sum to 1 exactly.

    Degenerate-marked parameters are rejected here; callers that need
    point-mass components handle them explicitly.
    """
    if p.degenerate:
        raise ValueError("sample_dirichlet requires all three components > 0")
    g1 = rng.gen.gamma(p.alpha_red)
    g2 = rng.gen.gamma(p.alpha_family)
    g3 = rng.gen.gamma(p.alpha_blue)
    s = g1 + g2 + g3
    x = g1 / s
    z = g3 / s
    # renormalize so x + y + z == 1.0 exactly: the last component absorbs
    # the rounding of the first two, and fl(t + fl(1 - t)) == 1 for t in [0, 1]
    y = 1.0 - x - z
    if y < 0.0:
        y = 0.0
    z = 1.0 - (x + y)
    if z < 0.0:
        z = 0.0
        y = 1.0 - x
    return x, y, z


def digamma(x: float) -> float:
    """Digamma function psi(x) for x > 0."""
    if not np.isfinite(x) or x <= 0:
        raise ValueError(f"digamma requires x > 0, got {x!r}")
    return float(special.digamma(x))


def integrate_log_odds(p: BetaParams, abs_tol: float = 1e-8) -> float:
    """E[log(p/(1-p))] for p ~ Beta(alpha, beta), by adaptive quadrature.

    Integrates in the substituted variable s with x/(1-x) = exp(2s),
    which removes the endpoint singularities of the raw integrand.  The
    result must agree with digamma(alpha) - digamma(beta).
    """
    if p.point_mass_at_zero:
        raise ValueError("integrate_log_odds requires non-degenerate parameters")
    a1, a2 = p.alpha, p.beta
    n = a1 + a2
    c = 2.0 ** (3.0 - n) * np.exp(-special.betaln(a1, a2))

    def integrand(s: float) -> float:
        # s * sinh((a1-a2) s) * cosh(s)^-n, evaluated in log space to
        # avoid overflow of the two factors for large s
        log_cosh = abs(s) + np.log1p(np.exp(-2.0 * abs(s))) - np.log(2.0)
        t = (a1 - a2) * s
        return c * s * 0.5 * (np.exp(t - n * log_cosh) - np.exp(-t - n * log_cosh))

    value, err = integrate.quad(
        integrand, 0.0, np.inf, epsabs=abs_tol * 1e-4, epsrel=1e-11, limit=400
    )
    if err > abs_tol:
        raise QuadratureError(
            f"log-odds quadrature for Beta({a1}, {a2}) reported error {err:.3e} > {abs_tol:.1e}"
        )
    return value
