"""Closed-form constants of the discrete d'Alembertian in dimension d.

All quantities are exact (see :mod:`causetkit.exact`): the volume constant
c_d, the operator normalizations alpha_d and beta_d, their ratio through an
independent formula, the layer coefficients C_i, and the action prefactor
zeta_d.  Layer coefficients reduce to plain rationals in every dimension
because the half-integer Gamma factors appearing for odd d always cancel
pairwise; evaluating them through exact Gamma ratios avoids the catastrophic
cancellation the alternating sums would suffer in floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .exact import ExactScalar, gamma_exact, Rational

RICCI_PREFACTOR = Fraction(-1, 2)


def _check_dimension(d: int) -> None:
    if not isinstance(d, int) or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d!r}")


def sphere_volume(k: int) -> ExactScalar:
    """Volume S_k of the unit k-sphere: 2 pi^((k+1)/2) / Gamma((k+1)/2)."""
    if k < 0:
        raise ValueError("sphere index must be >= 0")
    return ExactScalar.from_rational(2) * ExactScalar.pi_pow(Fraction(k + 1, 2)) \
        / gamma_exact(Fraction(k + 1, 2))


def volume_constant(d: int) -> ExactScalar:
    """c_d = S_{d-2} / (d (d-1) 2^(d/2-1)); the Alexandrov-interval volume
    in lightcone coordinates is c_d (uv)^(d/2)."""
    _check_dimension(d)
    two_pow = ExactScalar.rational_root(2, Fraction(d, 2) - 1)
    return sphere_volume(d - 2) / (d * (d - 1)) / two_pow


def layer_count(d: int) -> int:
    """Minimal number of layers n_d for the curvature cancellation."""
    _check_dimension(d)
    return d // 2 + 2


def beta(d: int) -> ExactScalar:
    _check_dimension(d)
    c_pow = volume_constant(d) ** Fraction(2, d)
    if d % 2 == 0:
        num = gamma_exact(Fraction(d, 2) + 2) * gamma_exact(Fraction(d, 2) + 1) * 2
        den = gamma_exact(Fraction(2, d)) * gamma_exact(d)
        return num / den * c_pow
    den = ExactScalar.from_rational(2 ** (d - 1)) * gamma_exact(Fraction(2, d) + 1)
    return ExactScalar.from_rational(d + 1) / den * c_pow


def alpha(d: int) -> ExactScalar:
    _check_dimension(d)
    c_pow = volume_constant(d) ** Fraction(2, d)
    kind = 2 if d % 2 == 0 else 1
    return -(ExactScalar.from_rational(kind) * c_pow / gamma_exact(Fraction(d + 2, d)))


def alpha_over_beta(d: int) -> ExactScalar:
    """Independent closed form of alpha_d / beta_d; rational in every d."""
    _check_dimension(d)
    if d % 2 == 0:
        num = gamma_exact(d)
        den = gamma_exact(Fraction(d, 2) + 2) * gamma_exact(Fraction(d, 2))
        return -(num / den)
    return ExactScalar.from_rational(Fraction(-(2 ** (d - 1)), d + 1))


def layer_coefficient(d: int, i: int) -> Fraction:
    """C_i as the finite binomial sum of Gamma ratios; 0 for i > n_d."""
    _check_dimension(d)
    if i < 1:
        raise ValueError("layer index must be >= 1")
    half = Fraction(d, 2)
    if d % 2 == 0:
        top_shift, den_base = Fraction(2), half + 2
    else:
        top_shift, den_base = Fraction(3, 2), Fraction(d + 3, 2)
    total = ExactScalar.from_rational(0)
    for k in range(i):
        term = gamma_exact(half * (k + 1) + top_shift) \
            / (gamma_exact(den_base) * gamma_exact(1 + half * k))
        total = total + term * Fraction((-1) ** k * comb(i - 1, k))
    return total.as_fraction()


def zeta(d: int, l_over_lp: Rational = 1) -> ExactScalar:
    """Action prefactor zeta_d = -alpha_d (l/l_p)^(d-2)."""
    ratio = Fraction(l_over_lp)
    if ratio <= 0:
        raise ValueError("l/l_p must be positive")
    return -alpha(d) * ratio ** (d - 2)


@dataclass(frozen=True)
class CoefficientSet:
    """Every constant needed to apply the discrete operator and the action."""

    dimension: int
    c_d: ExactScalar
    alpha: ExactScalar
    beta: ExactScalar
    layer_count: int
    layer_coefficients: tuple[Fraction, ...]
    zeta: ExactScalar
    l_over_lp: Fraction
    ricci_prefactor: Fraction = RICCI_PREFACTOR

    def __post_init__(self):
        n = layer_count(self.dimension)
        assert self.layer_count == n
        assert len(self.layer_coefficients) == n
        assert self.layer_coefficients[0] == 1
        assert self.alpha.sign < 0 and self.beta.sign > 0

    @property
    def beta_over_alpha(self) -> Fraction:
        return 1 / (self.alpha / self.beta).as_fraction()

    def layer_coefficient(self, i: int) -> Fraction:
        if 1 <= i <= self.layer_count:
            return self.layer_coefficients[i - 1]
        return Fraction(0)

    def as_dict(self, digits: int = 30) -> dict:
        def both(x: ExactScalar) -> dict:
            return {"exact": x.exact_str(), "approx": x.decimal(digits)}

        return {
            "dim": self.dimension,
            "c_d": both(self.c_d),
            "alpha": both(self.alpha),
            "beta": both(self.beta),
            "n_d": self.layer_count,
            "C": [str(c) for c in self.layer_coefficients],
            "zeta": both(self.zeta),
            "l_over_lp": str(self.l_over_lp),
            "a_d": str(RICCI_PREFACTOR),
        }


def coefficient_set(d: int, l_over_lp: Rational = 1) -> CoefficientSet:
    """Bundle all constants for dimension d; validates the set invariants."""
    _check_dimension(d)
    n = layer_count(d)
    cs = CoefficientSet(
        dimension=d,
        c_d=volume_constant(d),
        alpha=alpha(d),
        beta=beta(d),
        layer_count=n,
        layer_coefficients=tuple(layer_coefficient(d, i) for i in range(1, n + 1)),
        zeta=zeta(d, l_over_lp),
        l_over_lp=Fraction(l_over_lp),
    )
    # ratio of the closed forms must reproduce the independent ratio formula
    assert cs.alpha / cs.beta == alpha_over_beta(d)
    return cs
