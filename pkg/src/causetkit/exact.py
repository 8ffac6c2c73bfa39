"""Exact scalars: rationals times a small set of named irrational factors.

Every dimension-dependent constant in this package is a rational number
multiplied by factors of the form p^(a/b) for a prime p, pi^(a/b), and
integer powers of Gamma(x) at a rational argument 0 < x < 1 that does not
reduce further.  Keeping these symbolic makes ratio identities testable as
exact equalities instead of float comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

import mpmath as mp

Rational = Union[int, Fraction]


class InexactPowerError(ValueError):
    """Raised when a requested power cannot be represented exactly."""


def _factorize(n: int) -> dict[int, int]:
    """Prime factorization by trial division (inputs here are small)."""
    if n <= 0:
        raise ValueError("can only factor positive integers")
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


@dataclass(frozen=True)
class ExactScalar:
    """A rational number times prime roots, a power of pi, and Gamma factors.

    The canonical form keeps prime exponents in (0, 1) (integer parts are
    folded into ``coeff``), so two scalars are equal iff their fields match.
    """

    coeff: Fraction
    primes: tuple[tuple[int, Fraction], ...] = ()
    pi_power: Fraction = Fraction(0)
    gammas: tuple[tuple[Fraction, int], ...] = ()

    # -- constructors --------------------------------------------------

    @staticmethod
    def make(coeff: Rational,
             primes: Mapping[int, Fraction] | None = None,
             pi_power: Rational = 0,
             gammas: Mapping[Fraction, int] | None = None) -> "ExactScalar":
        coeff = Fraction(coeff)
        if coeff == 0:
            return ExactScalar(Fraction(0))
        prime_map: dict[int, Fraction] = {}
        for p, e in (primes or {}).items():
            e = Fraction(e)
            if e == 0:
                continue
            whole, frac = divmod(e, 1)
            coeff *= Fraction(p) ** int(whole)
            if frac:
                prime_map[p] = prime_map.get(p, Fraction(0)) + frac
        gamma_map = {Fraction(a): int(k) for a, k in (gammas or {}).items() if k}
        for a in gamma_map:
            if not 0 < a < 1:
                raise ValueError("gamma factors must have reduced argument in (0,1)")
        return ExactScalar(
            coeff,
            tuple(sorted(prime_map.items())),
            Fraction(pi_power),
            tuple(sorted(gamma_map.items())),
        )

    @staticmethod
    def from_rational(q: Rational) -> "ExactScalar":
        return ExactScalar.make(Fraction(q))

    @staticmethod
    def pi_pow(e: Rational) -> "ExactScalar":
        return ExactScalar.make(1, pi_power=Fraction(e))

    @staticmethod
    def rational_root(base: Rational, exponent: Rational) -> "ExactScalar":
        """base**exponent for a positive rational base."""
        return ExactScalar.from_rational(base) ** Fraction(exponent)

    # -- algebra ---------------------------------------------------------

    def __mul__(self, other: "ExactScalar | Rational") -> "ExactScalar":
        other = _coerce(other)
        if self.coeff == 0 or other.coeff == 0:
            return ExactScalar(Fraction(0))
        primes = dict(self.primes)
        for p, e in other.primes:
            primes[p] = primes.get(p, Fraction(0)) + e
        gammas = dict(self.gammas)
        for a, k in other.gammas:
            gammas[a] = gammas.get(a, 0) + k
        return ExactScalar.make(self.coeff * other.coeff, primes,
                                self.pi_power + other.pi_power, gammas)

    __rmul__ = __mul__

    def __truediv__(self, other: "ExactScalar | Rational") -> "ExactScalar":
        other = _coerce(other)
        if other.coeff == 0:
            raise ZeroDivisionError("division by exact zero")
        inv = ExactScalar.make(
            1 / other.coeff,
            {p: -e for p, e in other.primes},
            -other.pi_power,
            {a: -k for a, k in other.gammas},
        )
        return self * inv

    def __rtruediv__(self, other: Rational) -> "ExactScalar":
        return _coerce(other) / self

    def __neg__(self) -> "ExactScalar":
        return ExactScalar(-self.coeff, self.primes, self.pi_power, self.gammas)

    def __add__(self, other: "ExactScalar | Rational") -> "ExactScalar":
        other = _coerce(other)
        if self.coeff == 0:
            return other
        if other.coeff == 0:
            return self
        if (self.primes, self.pi_power, self.gammas) != (
                other.primes, other.pi_power, other.gammas):
            raise ValueError("cannot add scalars with different irrational parts")
        s = self.coeff + other.coeff
        if s == 0:
            return ExactScalar(Fraction(0))
        return ExactScalar(s, self.primes, self.pi_power, self.gammas)

    def __sub__(self, other: "ExactScalar | Rational") -> "ExactScalar":
        return self + (-_coerce(other))

    def __pow__(self, exponent: Rational) -> "ExactScalar":
        e = Fraction(exponent)
        if e == 0:
            return ExactScalar.from_rational(1)
        if e.denominator == 1 and e > 0:
            out = ExactScalar.from_rational(1)
            base = self
            n = e.numerator
            while n:
                if n & 1:
                    out = out * base
                base = base * base
                n >>= 1
            return out
        if e.denominator == 1 and e < 0:
            return ExactScalar.from_rational(1) / (self ** (-e))
        # fractional power: positive value required, gamma powers must stay integral
        if self.coeff <= 0:
            raise InexactPowerError("fractional power of a non-positive scalar")
        primes: dict[int, Fraction] = {}
        for p, k in _factorize(self.coeff.numerator).items():
            primes[p] = primes.get(p, Fraction(0)) + k * e
        for p, k in _factorize(self.coeff.denominator).items():
            primes[p] = primes.get(p, Fraction(0)) - k * e
        for p, x in self.primes:
            primes[p] = primes.get(p, Fraction(0)) + x * e
        gammas: dict[Fraction, int] = {}
        for a, k in self.gammas:
            ke = k * e
            if ke.denominator != 1:
                raise InexactPowerError("fractional power of a Gamma factor")
            gammas[a] = int(ke)
        return ExactScalar.make(1, primes, self.pi_power * e, gammas)

    # -- predicates and conversions ---------------------------------------

    @property
    def is_rational(self) -> bool:
        return not self.primes and self.pi_power == 0 and not self.gammas

    def as_fraction(self) -> Fraction:
        if not self.is_rational:
            raise ValueError(f"{self} is not rational")
        return self.coeff

    @property
    def sign(self) -> int:
        """Exact sign; every irrational factor here is positive."""
        return (self.coeff > 0) - (self.coeff < 0)

    def to_mpf(self, dps: int = 30) -> mp.mpf:
        with mp.workdps(dps + 10):
            v = mp.mpf(self.coeff.numerator) / self.coeff.denominator
            for p, e in self.primes:
                v *= mp.power(p, mp.mpf(e.numerator) / e.denominator)
            if self.pi_power:
                v *= mp.power(mp.pi, mp.mpf(self.pi_power.numerator) / self.pi_power.denominator)
            for a, k in self.gammas:
                v *= mp.gamma(mp.mpf(a.numerator) / a.denominator) ** k
            return +v

    def __float__(self) -> float:
        return float(self.to_mpf(25))

    def decimal(self, digits: int = 30) -> str:
        """Decimal rendering at the requested number of significant digits."""
        with mp.workdps(digits + 10):
            return mp.nstr(self.to_mpf(digits + 10), digits, strip_zeros=False)

    def exact_str(self) -> str:
        if self.coeff == 0:
            return "0"
        parts = [str(self.coeff)]
        for p, e in self.primes:
            parts.append(f"{p}^({e})")
        if self.pi_power:
            parts.append("pi" if self.pi_power == 1 else f"pi^({self.pi_power})")
        for a, k in self.gammas:
            parts.append(f"Gamma({a})" if k == 1 else f"Gamma({a})^{k}")
        return " * ".join(parts)

    def __str__(self) -> str:
        return self.exact_str()


def _coerce(x: "ExactScalar | Rational") -> ExactScalar:
    if isinstance(x, ExactScalar):
        return x
    return ExactScalar.from_rational(x)


ONE = ExactScalar.from_rational(1)
ZERO = ExactScalar.from_rational(0)


def gamma_exact(q: Rational) -> ExactScalar:
    """Gamma(q) for rational q > 0, reduced by Gamma(x+1) = x*Gamma(x).

    Integer arguments reduce to factorials, half-integers to rational
    multiples of sqrt(pi); anything else keeps a symbolic Gamma(x) factor
    with 0 < x < 1.
    """
    q = Fraction(q)
    if q <= 0:
        raise ValueError("gamma_exact requires a positive argument")
    factor = Fraction(1)
    while q > 1:
        q -= 1
        factor *= q
    out = ExactScalar.from_rational(factor)
    if q == 1:
        return out
    if q == Fraction(1, 2):
        return out * ExactScalar.pi_pow(Fraction(1, 2))
    return out * ExactScalar.make(1, gammas={q: 1})


def gamma_ratio(num: Iterable[Rational], den: Iterable[Rational]) -> ExactScalar:
    """Product of Gamma over ``num`` divided by product of Gamma over ``den``."""
    out = ONE
    for q in num:
        out = out * gamma_exact(q)
    for q in den:
        out = out / gamma_exact(q)
    return out
