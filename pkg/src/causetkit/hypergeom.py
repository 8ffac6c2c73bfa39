"""Generalized hypergeometric machinery at negative argument.

Three evaluation routes live here:

* ``eval_pfq`` sums the defining series with a rigorous stopping rule,
  either in exact rationals (no rounding at all) or in big decimals with
  tracked roundoff, raising the working precision to survive the e^z-scale
  cancellation of alternating series.
* ``reduce_closed_form`` rewrites the special parameter layout produced by
  the layer operator (upper/lower lists matching in integer offsets) into
  e^(-z) times a polynomial plus lower-incomplete-gamma terms.  This is an
  exact rearrangement of the series, cheap at any z, and is what makes
  ladder points like z = 1e14 affordable.
* The generating-function route builds the exact polynomial that the layer
  operator produces when applied to a decaying exponential.

The limit verifiers check the two asymptotic identities used to remove the
cutoff, reporting convergence ladders.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from typing import Iterable, Sequence

import mpmath as mp

from .coefficients import layer_count

#: z at or below which the exact-rational backend is the default.
EXACT_Z_THRESHOLD = Fraction(50)

DEFAULT_MAX_TERMS = 10 ** 6


class PoleError(ValueError):
    """A lower parameter is zero or a negative integer."""


class PrecisionError(ArithmeticError):
    """Requested precision unreachable within the term cap."""


class NotReducibleError(ValueError):
    """Parameter lists do not pair up into integer offsets."""


def _as_fractions(xs: Iterable) -> tuple[Fraction, ...]:
    return tuple(Fraction(x) for x in xs)


@dataclass(frozen=True)
class HypergeometricSpec:
    """Upper/lower parameter lists of a pFq series, exact rationals."""

    upper: tuple[Fraction, ...]
    lower: tuple[Fraction, ...]

    def __init__(self, upper: Iterable, lower: Iterable):
        object.__setattr__(self, "upper", _as_fractions(upper))
        object.__setattr__(self, "lower", _as_fractions(lower))
        for b in self.lower:
            if b <= 0 and b.denominator == 1:
                raise PoleError(f"lower parameter {b} is a non-positive integer")

    def cancelled(self) -> "HypergeometricSpec":
        """Remove parameters common to both lists (multiset intersection)."""
        up, lo = list(self.upper), list(self.lower)
        for u in list(up):
            if u in lo:
                up.remove(u)
                lo.remove(u)
        return HypergeometricSpec(up, lo)

    def shifted(self, step: int = 1) -> "HypergeometricSpec":
        """All parameters shifted by ``step`` (the derivative rule)."""
        return HypergeometricSpec(
            [a + step for a in self.upper], [b + step for b in self.lower])

    def parameter_ratio(self) -> Fraction:
        """prod(upper)/prod(lower): the scale factor of the derivative rule."""
        r = Fraction(1)
        for a in self.upper:
            r *= a
        for b in self.lower:
            r /= b
        return r


@dataclass(frozen=True)
class SeriesValue:
    """A series sum with a rigorous tail bound and the terms consumed."""

    value: mp.mpf
    tail_bound: mp.mpf
    terms: int


def _future_ratio_bound(spec: HypergeometricSpec, z: Fraction, n: int) -> Fraction:
    """Upper bound on |t_{m+1}/t_m| valid for every m >= n.

    Sorted pairing: each factor (a+m)/(b+m) is monotone toward 1, so its
    value now (or 1) bounds it forever after.
    """
    up = sorted(spec.upper)
    lo = sorted(spec.lower)
    bound = Fraction(z, n + 1)
    k = min(len(up), len(lo))
    for a, b in zip(up[:k], lo[:k]):
        f = Fraction(a + n, b + n)
        if f > 1:
            bound *= f
    for b in lo[k:]:
        bound /= (b + n)
    for a in up[k:]:
        f = Fraction(a + n, n + 1)
        bound *= max(f, Fraction(1))
    return bound


def eval_pfq(spec: HypergeometricSpec, z, precision: int = 30,
             mode: str = "auto", max_terms: int = DEFAULT_MAX_TERMS,
             _threshold: Fraction | None = None) -> SeriesValue:
    """Sum pFq(upper; lower; -z) for z >= 0.

    Stops once |t_n| < 10^(-precision) * max(1, |S_n|) and the bound on all
    future term ratios is below 1/2, so the tail is under 2|t_n|.  ``mode``
    is "exact" (all-rational, no rounding), "decimal" (tracked big floats),
    or "auto" (exact up to z = 50).
    """
    z = Fraction(z)
    if z < 0:
        raise ValueError("evaluations are at -z with z >= 0")
    if precision < 10:
        raise ValueError("precision must be at least 10 digits")
    if mode == "auto":
        mode = "exact" if z <= EXACT_Z_THRESHOLD else "decimal"
    if mode == "exact":
        return _eval_pfq_exact(spec, z, precision, max_terms, _threshold)
    if mode == "decimal":
        return _eval_pfq_decimal(spec, z, precision, max_terms, _threshold)
    raise ValueError(f"unknown mode {mode!r}")


def _eval_pfq_exact(spec, z, precision, max_terms, threshold):
    thr = threshold if threshold is not None else Fraction(1, 10 ** precision)
    t = Fraction(1)
    s = Fraction(1)
    n = 0
    if z == 0:
        return SeriesValue(mp.mpf(1), mp.mpf(0), 1)
    while True:
        if n >= max_terms:
            raise PrecisionError(f"no convergence within {max_terms} terms")
        ratio = Fraction(-z, n + 1)
        for a in spec.upper:
            ratio *= (a + n)
        for b in spec.lower:
            ratio /= (b + n)
        t *= ratio
        s += t
        n += 1
        if abs(t) < thr * max(Fraction(1), abs(s)):
            rb = _future_ratio_bound(spec, z, n)
            if rb < Fraction(1, 2):
                tail = abs(t) * rb / (1 - rb)
                break
    with mp.workdps(precision + 15):
        val = mp.mpf(s.numerator) / s.denominator
        tb = mp.mpf(tail.numerator) / tail.denominator if tail else mp.mpf(0)
        return SeriesValue(val, tb, n + 1)


def _eval_pfq_decimal(spec, z, precision, max_terms, threshold):
    zf = float(z)
    guard = int(0.4343 * zf) + 30 + 5 * len(spec.upper)
    wp = precision + guard
    for _attempt in range(4):
        try:
            return _decimal_pass(spec, z, precision, max_terms, threshold, wp)
        except _NeedMorePrecision as need:
            wp = need.wp
    raise PrecisionError("working precision did not stabilize")


class _NeedMorePrecision(Exception):
    def __init__(self, wp):
        self.wp = wp


def _decimal_pass(spec, z, precision, max_terms, threshold, wp):
    with mp.workdps(wp):
        thr = mp.mpf(10) ** (-precision) if threshold is None else \
            mp.mpf(threshold.numerator) / threshold.denominator
        mz = -mp.mpf(z.numerator) / z.denominator
        t = mp.mpf(1)
        s = mp.mpf(1)
        max_t = mp.mpf(1)
        n = 0
        while True:
            if n >= max_terms:
                raise PrecisionError(f"no convergence within {max_terms} terms")
            num, den = 1, n + 1
            for a in spec.upper:
                num *= (a.numerator + n * a.denominator)
                den *= a.denominator
            for b in spec.lower:
                den *= (b.numerator + n * b.denominator)
                num *= b.denominator
            t = t * num / den * mz
            s += t
            n += 1
            at = abs(t)
            if at > max_t:
                max_t = at
            if at < thr * max(mp.mpf(1), abs(s)):
                rb = _future_ratio_bound(spec, z, n)
                if rb < Fraction(1, 2):
                    rbf = mp.mpf(rb.numerator) / rb.denominator
                    tail = at * rbf / (1 - rbf)
                    break
        # roundoff slack: every term carries relative error ~10^-wp
        slack = (n + 4) * max_t * mp.mpf(10) ** (2 - wp)
        if slack > thr * max(mp.mpf(1), abs(s)) / 4:
            lost = int(mp.log10(max_t / max(abs(s), mp.mpf(1)))) if max_t > 0 else 0
            raise _NeedMorePrecision(wp + max(lost, 0) + 40)
        return SeriesValue(+s, +(tail + slack), n + 1)


# ---------------------------------------------------------------------------
# closed-form reduction for operator-layout parameter lists
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClosedForm:
    """F(-z) = scale * (e^(-z) * sum_m efold[m] (-z)^m
                        + sum (rho, y): rho * z^(-y) * lower_gamma(y, z))."""

    scale: Fraction
    efold: tuple[Fraction, ...]
    gamma_terms: tuple[tuple[Fraction, Fraction], ...]

    def limit_exponents(self) -> tuple[tuple[Fraction, Fraction], ...]:
        """(exponent, coefficient-of-Gamma(y)) pairs of the power-law part."""
        return tuple((-y, self.scale * rho) for rho, y in self.gamma_terms)


def reduce_closed_form(spec: HypergeometricSpec) -> ClosedForm:
    """Exact rearrangement valid when upper and lower parameters pair up
    with integer offsets after cancelling coincidences.

    Each pair (b+1 above b) contributes a polynomial factor (b+n)/b to the
    series coefficient; each pair (y below y+1) contributes y/(y+n), whose
    summed series is an incomplete gamma.  Repeated poles are refused (the
    caller falls back to direct summation).
    """
    red = spec.cancelled()
    groups: dict[Fraction, tuple[list, list]] = {}
    for x in red.upper:
        fr = Fraction(x.numerator % x.denominator, x.denominator)
        groups.setdefault(fr, ([], []))[0].append(x)
    for x in red.lower:
        fr = Fraction(x.numerator % x.denominator, x.denominator)
        groups.setdefault(fr, ([], []))[1].append(x)
    roots: list[Fraction] = []
    poles: list[Fraction] = []
    for fr, (us, ls) in groups.items():
        if len(us) != len(ls):
            raise NotReducibleError(
                f"unpaired parameters with fractional part {fr}")
        for u, l in zip(sorted(us), sorted(ls)):
            step = int(u - l)
            if step > 0:
                roots.extend(l + j for j in range(step))
            else:
                poles.extend(u + j for j in range(-step))
    for r in list(roots):
        if r in poles:
            roots.remove(r)
            poles.remove(r)
    if len(poles) != len(set(poles)):
        raise NotReducibleError("repeated pole (double incomplete-gamma order)")
    if any(y <= 0 for y in poles):
        raise NotReducibleError("non-positive pole")
    scale = Fraction(1)
    for y in poles:
        scale *= y
    for b in roots:
        scale /= b
    rho = []
    for s_idx, ys in enumerate(poles):
        num = Fraction(1)
        for b in roots:
            num *= (b - ys)
        den = Fraction(1)
        for t_idx, yt in enumerate(poles):
            if t_idx != s_idx:
                den *= (yt - ys)
        rho.append(num / den)
    deg_q = len(roots) - len(poles)
    qhat: list[Fraction] = []
    if deg_q >= 0:
        # Q(n) = N(n)/D(n) - sum rho/(n+y); convert to falling-factorial
        # coefficients via forward differences at n = 0..deg_q
        pts = []
        for n in range(deg_q + 1):
            val = Fraction(1)
            for b in roots:
                val *= (n + b)
            for y in poles:
                val /= (n + y)
            for rs, ys in zip(rho, poles):
                val -= rs / (n + ys)
            pts.append(val)
        fact = 1
        for m in range(deg_q + 1):
            qhat.append(pts[0] / fact)
            pts = [pts[i + 1] - pts[i] for i in range(len(pts) - 1)]
            fact *= (m + 1)
    return ClosedForm(scale, tuple(qhat), tuple(zip(rho, poles)))


def eval_closed_form(cf: ClosedForm, z, dps: int = 30) -> mp.mpf:
    """Evaluate a reduced series at z >= 0 with dps working digits."""
    with mp.workdps(dps + 10):
        zz = mp.mpf(z) if not isinstance(z, Fraction) else \
            mp.mpf(z.numerator) / z.denominator
        total = mp.mpf(0)
        if cf.efold:
            emz = mp.e ** (-zz)
            if emz != 0:
                poly = mp.mpf(0)
                for m, q in enumerate(reversed(cf.efold)):
                    poly = poly * (-zz) + mp.mpf(q.numerator) / q.denominator
                total += poly * emz
        for rho, y in cf.gamma_terms:
            yf = mp.mpf(y.numerator) / y.denominator
            # upper tail ~ z^(y-1) e^-z: invisible once z exceeds the digit budget
            if zz > (dps + 20) * mp.log(10) + 6 * abs(yf):
                g = mp.gamma(yf)
            else:
                g = mp.gammainc(yf, 0, zz)
            total += mp.mpf(rho.numerator) / rho.denominator * zz ** (-yf) * g
        return +(total * mp.mpf(cf.scale.numerator) / cf.scale.denominator)


def eval_series(spec: HypergeometricSpec, z, dps: int = 30) -> mp.mpf:
    """pFq(-z) via the closed form when reducible, else direct summation."""
    try:
        return eval_closed_form(reduce_closed_form(spec), z, dps)
    except NotReducibleError:
        return eval_pfq(spec, z, precision=dps, mode="auto").value


# ---------------------------------------------------------------------------
# the layer operator and its generating polynomial
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolynomialExact:
    """Dense polynomial with exact rational coefficients."""

    coefficients: tuple[Fraction, ...]
    variable: str = "z"

    @staticmethod
    def make(coeffs: Sequence, variable: str = "z") -> "PolynomialExact":
        cs = [Fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        return PolynomialExact(tuple(cs), variable)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def coefficient(self, k: int) -> Fraction:
        if 0 <= k < len(self.coefficients):
            return self.coefficients[k]
        return Fraction(0)

    def derivative_at_zero(self, order: int) -> Fraction:
        return self.coefficient(order) * factorial(order)

    def __call__(self, x) -> Fraction:
        x = Fraction(x)
        acc = Fraction(0)
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc


def operator_factor_count(d: int) -> int:
    """Number of (H + 2i) factors: d/2+1 for even d, (d+1)/2 for odd."""
    return d // 2 + 1


def od_operator_polynomial(d: int) -> PolynomialExact:
    """The layer-summing operator as an exact polynomial in H:
    product of (H + 2i), i = 1..m, over 2^m m!."""
    if d < 2:
        raise ValueError("dimension must be >= 2")
    m = operator_factor_count(d)
    coeffs = [Fraction(1)]
    for i in range(1, m + 1):
        nxt = [Fraction(0)] * (len(coeffs) + 1)
        for k, c in enumerate(coeffs):
            nxt[k] += c * 2 * i
            nxt[k + 1] += c
        coeffs = nxt
    norm = Fraction(2 ** m * factorial(m))
    return PolynomialExact.make([c / norm for c in coeffs], variable="H")


def od_series_spec(d: int) -> HypergeometricSpec:
    """Parameter lists of the series the operator turns e^(-w) into."""
    m = operator_factor_count(d)
    two_d = Fraction(2, d)
    return HypergeometricSpec(
        [two_d * i + 1 for i in range(1, m + 1)],
        [two_d * i for i in range(1, m + 1)])


class TruncationError(ValueError):
    """Truncation order too small to certify the polynomial degree."""


def _od_exponential_coeffs(d: int, order: int) -> list[Fraction]:
    """Coefficients of e^w * (operator applied to e^(-w)) up to ``order``.

    H multiplies the n-th series term by d*n, so the operator acts termwise
    through its polynomial; multiplying back by e^w must truncate at degree
    n_d - 1, which is asserted exactly.
    """
    op = od_operator_polynomial(d)
    series = [Fraction((-1) ** n, factorial(n)) * op(d * n) for n in range(order + 1)]
    out = []
    for j in range(order + 1):
        c = Fraction(0)
        for n in range(j + 1):
            c += series[n] / factorial(j - n)
        out.append(c)
    return out


def apply_od_to_exponential(d: int, truncation_order: int | None = None) -> PolynomialExact:
    """Exact polynomial part of (operator applied to e^(-w)) / e^(-w)."""
    n_d = layer_count(d)
    if truncation_order is None:
        truncation_order = n_d + 3
    if truncation_order < n_d:
        raise TruncationError(
            f"need truncation order >= {n_d} to certify the degree")
    coeffs = _od_exponential_coeffs(d, truncation_order)
    for j in range(n_d, truncation_order + 1):
        if coeffs[j] != 0:
            raise AssertionError(f"degree-{j} coefficient {coeffs[j]} != 0")
    poly = PolynomialExact.make(coeffs[:n_d], variable="w")
    assert poly.degree == n_d - 1
    return poly


def generating_polynomial(d: int) -> PolynomialExact:
    """G_d(z): the exact polynomial whose (i-1)-th derivative at 0 is C_i."""
    return PolynomialExact.make(
        apply_od_to_exponential(d).coefficients, variable="z")


# ---------------------------------------------------------------------------
# limit-identity verification ladders
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LimitLadderRow:
    z: Fraction
    value: mp.mpf
    target: mp.mpf
    abs_error: mp.mpf


@dataclass(frozen=True)
class LimitReport:
    identity: str
    parameters: dict
    rows: tuple[LimitLadderRow, ...]
    monotone: bool = field(default=False)

    @property
    def final_abs_error(self) -> mp.mpf:
        return self.rows[-1].abs_error

    @property
    def final_relative_error(self) -> mp.mpf:
        tgt = self.rows[-1].target
        if tgt == 0:
            return self.rows[-1].abs_error
        return self.rows[-1].abs_error / abs(tgt)

    def as_dict(self) -> dict:
        return {
            "identity": self.identity,
            "parameters": self.parameters,
            "monotone_past_first": self.monotone,
            "rows": [
                {"z": str(r.z), "value": mp.nstr(r.value, 17),
                 "target": mp.nstr(r.target, 17),
                 "abs_error": mp.nstr(r.abs_error, 8)}
                for r in self.rows
            ],
        }


def _monotone_past_first(errors) -> bool:
    return all(errors[i + 1] < errors[i] for i in range(1, len(errors) - 1)) \
        and (len(errors) < 2 or errors[-1] < errors[1] or errors[-1] == 0)


def verify_limit_flat(a_params: Sequence, z_ladder: Sequence,
                      precision: int = 40) -> LimitReport:
    """Ladder check of: e^z pFq(a; a-1; -z) * prod(a_j - 1) / (-z)^q -> 1."""
    a = _as_fractions(a_params)
    if not a:
        raise ValueError("need at least one parameter")
    if any(aj == 1 for aj in a):
        raise ValueError("parameters equal to 1 are degenerate here")
    spec = HypergeometricSpec(a, [aj - 1 for aj in a])
    q = len(a)
    prod = Fraction(1)
    for aj in a:
        prod *= (aj - 1)
    rows = []
    for z in _as_fractions(z_ladder):
        if z <= 0:
            raise ValueError("ladder points must be positive")
        zf = float(z)
        # resolving the O(1/z) deviation of the ratio needs the e^z blowup
        # plus a few orders below the deviation itself
        prec = precision + int(0.4343 * zf) + (q + 2) * len(f"{int(zf)}") + 10
        sv = eval_pfq(spec, z, precision=prec,
                      mode="decimal" if z > EXACT_Z_THRESHOLD else "exact")
        with mp.workdps(prec + 10):
            zz = mp.mpf(z.numerator) / z.denominator
            ratio = mp.e ** zz * sv.value * mp.mpf(prod.numerator) / prod.denominator \
                / (-zz) ** q
            rows.append(LimitLadderRow(z, +ratio, mp.mpf(1), +abs(ratio - 1)))
    errs = [r.abs_error for r in rows]
    return LimitReport("limit0", {"a": [str(x) for x in a]}, tuple(rows),
                       _monotone_past_first(errs))


def verify_limit_gamma(a0, a_params: Sequence, z_ladder: Sequence,
                       precision: int = 40) -> LimitReport:
    """Ladder check of: z^(a0) pFq(a0, a; a0+1, a-1; -z)
    -> Gamma(a0+1) prod (a_j - a0 - 1)/(a_j - 1)."""
    a0 = Fraction(a0)
    a = _as_fractions(a_params)
    if a0 <= 0:
        raise ValueError("a0 must be positive")
    if any(aj == 1 for aj in a):
        raise ValueError("parameters equal to 1 are degenerate here")
    spec = HypergeometricSpec([a0, *a], [a0 + 1, *[aj - 1 for aj in a]])
    prod = Fraction(1)
    for aj in a:
        prod *= Fraction(aj - a0 - 1, aj - 1)
    rows = []
    for z in _as_fractions(z_ladder):
        if z <= 0:
            raise ValueError("ladder points must be positive")
        zf = float(z)
        prec = precision + int(0.4343 * zf) + 20
        sv = eval_pfq(spec, z, precision=prec,
                      mode="decimal" if z > EXACT_Z_THRESHOLD else "exact")
        with mp.workdps(prec + 10):
            zz = mp.mpf(z.numerator) / z.denominator
            a0f = mp.mpf(a0.numerator) / a0.denominator
            value = zz ** a0f * sv.value
            target = mp.gamma(a0f + 1) * mp.mpf(prod.numerator) / prod.denominator
            rows.append(LimitLadderRow(z, +value, +target, +abs(value - target)))
    errs = [r.abs_error for r in rows]
    return LimitReport("limit", {"a0": str(a0), "a": [str(x) for x in a]},
                       tuple(rows), _monotone_past_first(errs))
