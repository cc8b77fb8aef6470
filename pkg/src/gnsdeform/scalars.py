"""Exact scalar arithmetic in fields of formal Newton-Puiseux series.

A scalar is a finite, sorted list of terms ``coeff * lam**exponent`` with
Gaussian-rational coefficients and rational exponents, plus an explicit
truncation order: exponents at or above ``trunc`` are unknown.  Exact
(untruncated) values carry ``trunc = None`` (infinity).  Laurent series are
the special case of integer exponents; the truncation order is the machine
realization of the metric completion, so precision loss is always visible
in the data and never silent.

The real subfield is ordered: a nonzero real series is positive exactly
when its lowest-order coefficient is positive, which makes ``lam`` a
positive infinitesimal.  The valuation ``o(a)`` (lowest exponent of a
nonzero term, +infinity for zero) represents the non-archimedean absolute
value ``2**(-o(a))`` by its exponent; absolute values are compared by
comparing valuations in reverse, never as floating-point numbers.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Tuple, Union


class IndeterminateError(ArithmeticError):
    """The exact answer is hidden behind a finite truncation order."""


class ScalarDomainError(ValueError):
    """The input lies outside the operation's exact domain."""


def _fr(x: Union[int, str, Fraction]) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    raise TypeError(f"not an exact rational: {x!r}")


class CRational:
    """A Gaussian rational ``re + i*im`` with exact Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", _fr(re))
        object.__setattr__(self, "im", _fr(im))

    def __setattr__(self, name, value):
        raise AttributeError("CRational is immutable")

    @staticmethod
    def of(value) -> "CRational":
        if isinstance(value, CRational):
            return value
        if isinstance(value, (int, Fraction)):
            return CRational(value)
        if isinstance(value, tuple) and len(value) == 2:
            return CRational(value[0], value[1])
        raise TypeError(f"cannot coerce {value!r} to CRational")

    @property
    def is_zero(self) -> bool:
        return not self.re and not self.im

    @property
    def is_real(self) -> bool:
        return not self.im

    def conj(self) -> "CRational":
        return CRational(self.re, -self.im)

    def abs_sq(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def inverse(self) -> "CRational":
        d = self.abs_sq()
        if not d:
            raise ZeroDivisionError("inverse of zero")
        return CRational(self.re / d, -self.im / d)

    def __add__(self, other):
        other = CRational.of(other)
        return CRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = CRational.of(other)
        return CRational(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return CRational.of(other) - self

    def __neg__(self):
        return CRational(-self.re, -self.im)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return CRational(self.re * other, self.im * other)
        other = CRational.of(other)
        if not other.im:
            return CRational(self.re * other.re, self.im * other.re)
        return CRational(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * CRational.of(other).inverse()

    def __eq__(self, other):
        try:
            other = CRational.of(other)
        except TypeError:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return not self.is_zero

    def __repr__(self):
        return f"CRational({self.re!r}, {self.im!r})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}*i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}*i"


CZERO = CRational(0)
CONE = CRational(1)
CI = CRational(0, 1)

Trunc = Optional[Fraction]  # None means "no truncation" (infinity)


def _min_trunc(a: Trunc, b: Trunc) -> Trunc:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _add_trunc(order: Optional[Fraction], t: Trunc) -> Trunc:
    # order + t with either side possibly infinite
    if order is None or t is None:
        return None
    return order + t


class FormalScalar:
    """A truncatable formal series in ``lam`` over the Gaussian rationals.

    Instances are immutable and canonical: exponents strictly increasing,
    no zero coefficients stored, every stored exponent below ``trunc``.
    """

    __slots__ = ("terms", "trunc")

    def __init__(self, terms: Tuple[Tuple[Fraction, CRational], ...], trunc: Trunc):
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "trunc", trunc)

    def __setattr__(self, name, value):
        raise AttributeError("FormalScalar is immutable")

    # -- construction ---------------------------------------------------

    @staticmethod
    def _build(acc: dict, trunc: Trunc) -> "FormalScalar":
        items = []
        for e in sorted(acc):
            if trunc is not None and e >= trunc:
                continue
            c = acc[e]
            if not c.is_zero:
                items.append((e, c))
        return FormalScalar(tuple(items), trunc)

    # -- predicates ------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        """Exactly zero: no terms and no truncation hiding anything."""
        return not self.terms and self.trunc is None

    @property
    def is_exact(self) -> bool:
        return self.trunc is None

    @property
    def is_real(self) -> bool:
        """All known coefficients have vanishing imaginary part."""
        return all(c.is_real for _, c in self.terms)

    # -- valuation and order ----------------------------------------------

    def valuation(self) -> Optional[Fraction]:
        """Lowest exponent with nonzero coefficient; None for exact zero.

        Raises IndeterminateError when every known coefficient vanishes
        but the series is truncated, so the true order is unknown.
        """
        if self.terms:
            return self.terms[0][0]
        if self.trunc is None:
            return None
        raise IndeterminateError(
            f"valuation indeterminate: no known terms below trunc {self.trunc}"
        )

    def abs_value(self) -> Optional[Fraction]:
        """Exponent o(a) representing the absolute value 2**(-o(a))."""
        return self.valuation()

    def _min_order(self) -> Optional[Fraction]:
        # pessimistic lower bound on the order, for truncation propagation
        if self.terms:
            return self.terms[0][0]
        return self.trunc  # None for exact zero

    def leading(self) -> Tuple[Fraction, CRational]:
        if not self.terms:
            raise IndeterminateError("no leading term")
        return self.terms[0]

    def coefficient(self, exponent) -> CRational:
        e = _fr(exponent)
        if self.trunc is not None and e >= self.trunc:
            raise IndeterminateError(f"coefficient at {e} is beyond trunc {self.trunc}")
        for q, c in self.terms:
            if q == e:
                return c
        return CZERO

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        other = as_scalar(other)
        if not other.terms and other.trunc is None:
            return self
        if not self.terms and self.trunc is None:
            return other
        trunc = _min_trunc(self.trunc, other.trunc)
        acc: dict = {}
        for e, c in self.terms:
            acc[e] = acc.get(e, CZERO) + c
        for e, c in other.terms:
            acc[e] = acc.get(e, CZERO) + c
        return FormalScalar._build(acc, trunc)

    __radd__ = __add__

    def __neg__(self):
        return FormalScalar(tuple((e, -c) for e, c in self.terms), self.trunc)

    def __sub__(self, other):
        return self + (-as_scalar(other))

    def __rsub__(self, other):
        return as_scalar(other) - self

    def _scale_num(self, c) -> "FormalScalar":
        """Multiply by an exact number (int, Fraction or CRational)."""
        c = CRational.of(c)
        if c.is_zero:
            return ZERO
        if c == CONE:
            return self
        return FormalScalar(tuple((e, cc * c) for e, cc in self.terms), self.trunc)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, CRational)):
            return self._scale_num(other)
        other = as_scalar(other)
        # single exact monomial factors just shift and scale
        if other.trunc is None and len(other.terms) == 1:
            e0, c0 = other.terms[0]
            t = None if self.trunc is None else self.trunc + e0
            return FormalScalar(
                tuple((e + e0, c * c0) for e, c in self.terms), t
            )
        if self.trunc is None and len(self.terms) == 1:
            return other * self
        trunc = _min_trunc(
            _add_trunc(self._min_order(), other.trunc),
            _add_trunc(other._min_order(), self.trunc),
        )
        acc: dict = {}
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                e = e1 + e2
                acc[e] = acc.get(e, CZERO) + c1 * c2
        return FormalScalar._build(acc, trunc)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ScalarDomainError("only nonnegative integer powers")
        out = ONE
        for _ in range(k):
            out = out * self
        return out

    def truncate(self, order) -> "FormalScalar":
        """Forget all terms at or above ``order`` (tightening trunc)."""
        order = _fr(order)
        t = _min_trunc(self.trunc, order)
        return FormalScalar._build(dict(self.terms), t)

    def conj(self) -> "FormalScalar":
        """Coefficient-wise complex conjugation (lam is real)."""
        return FormalScalar(tuple((e, c.conj()) for e, c in self.terms), self.trunc)

    # -- ordering ----------------------------------------------------------

    def compare(self, other) -> int:
        """Total order of the real subfield: sign of the leading coefficient
        of the difference. Returns -1, 0 or +1."""
        other = as_scalar(other)
        if not (self.is_real and other.is_real):
            raise ScalarDomainError("comparison requires real series")
        d = self - other
        if not d.terms:
            if d.trunc is None:
                return 0
            raise IndeterminateError(
                "comparison indeterminate under truncation"
            )
        lead = d.terms[0][1].re
        return 1 if lead > 0 else -1

    def __lt__(self, other):
        return self.compare(other) < 0

    def __le__(self, other):
        return self.compare(other) <= 0

    def __gt__(self, other):
        return self.compare(other) > 0

    def __ge__(self, other):
        return self.compare(other) >= 0

    # -- inversion, square roots -------------------------------------------

    def inverse(self, target) -> "FormalScalar":
        """Multiplicative inverse with ``a * a.inverse(t) = 1 + O(lam**(t - o(a)))``.

        ``target`` caps how far the (generally infinite) inverse series is
        developed; the result trunc is set so no better precision is claimed.
        """
        target = _fr(target)
        if not self.terms:
            if self.trunc is None:
                raise ZeroDivisionError("inverse of zero series")
            raise IndeterminateError("inverse of a series with no known terms")
        if self.trunc is not None and target > self.trunc:
            raise IndeterminateError(
                f"target {target} beyond reachable precision {self.trunc}"
            )
        e, c = self.terms[0]
        s = FormalScalar(((-e, c.inverse()),), None)
        limit = target - e
        while True:
            r = ONE - self * s
            if r.is_zero:
                if self.trunc is None:
                    return s  # exact finite inverse
                break
            if not r.terms:
                break  # all cancelled below r.trunc >= limit
            q, rc = r.terms[0]
            if q >= limit:
                break
            s = s + FormalScalar(((q - e, rc * c.inverse()),), None)
        return s.truncate(target - 2 * e)

    def sqrt(self, target) -> "FormalScalar":
        """Square root of a positive real series, to ``result**2 = a + O(lam**target)``.

        The leading coefficient must be the square of a rational; other
        positive leading coefficients would force an algebraic extension of
        the Gaussian rationals and are rejected.
        """
        target = _fr(target)
        if self.compare(ZERO) <= 0:
            raise ScalarDomainError("square root requires a positive series")
        if self.trunc is not None and target > self.trunc:
            raise IndeterminateError(
                f"target {target} beyond reachable precision {self.trunc}"
            )
        e, c = self.terms[0]
        root = _fraction_sqrt(c.re)
        if root is None:
            raise ScalarDomainError(
                f"leading coefficient {c.re} is not the square of a rational"
            )
        half = e / 2
        s = FormalScalar(((half, CRational(root)),), None)
        inv2lead = CRational(Fraction(1, 2) / root)
        while True:
            r = self - s * s
            if r.is_zero:
                if self.trunc is None:
                    return s
                break
            if not r.terms:
                break
            q, rc = r.terms[0]
            if q >= target:
                break
            s = s + FormalScalar(((q - half, rc * inv2lead),), None)
        return s.truncate(target - half)

    # -- evaluation ----------------------------------------------------------

    def evaluate(self, hbar) -> Tuple[CRational, bool]:
        """Substitute ``lam = hbar`` exactly.

        Returns ``(value, exact)``; ``exact`` is False for a truncated series
        (the value is then the partial sum of the known terms).  Fractional
        exponents require the corresponding rational root of ``hbar`` to
        exist, otherwise ScalarDomainError is raised.
        """
        h = _fr(hbar)
        if h <= 0:
            raise ScalarDomainError("hbar must be positive")
        total = CZERO
        for e, c in self.terms:
            root = _rational_root(h, e.denominator)
            if root is None:
                raise ScalarDomainError(
                    f"hbar**(1/{e.denominator}) is irrational for hbar={h}"
                )
            total = total + c * (root ** e.numerator)
        return total, self.trunc is None

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "terms": [
                {"exp": str(e), "re": str(c.re), "im": str(c.im)}
                for e, c in self.terms
            ],
            "trunc": "inf" if self.trunc is None else str(self.trunc),
        }

    @staticmethod
    def from_json(data: dict) -> "FormalScalar":
        trunc = None if data.get("trunc", "inf") == "inf" else Fraction(data["trunc"])
        pairs = [
            (Fraction(t["exp"]), CRational(Fraction(t["re"]), Fraction(t.get("im", "0"))))
            for t in data.get("terms", [])
        ]
        return make_series(pairs, trunc)

    # -- misc ---------------------------------------------------------------

    def __eq__(self, other):
        try:
            other = as_scalar(other)
        except TypeError:
            return NotImplemented
        return self.terms == other.terms and self.trunc == other.trunc

    def __hash__(self):
        return hash((self.terms, self.trunc))

    def __bool__(self):
        return bool(self.terms) or self.trunc is not None

    def __repr__(self):
        return f"FormalScalar({self})"

    def __str__(self):
        if not self.terms and self.trunc is None:
            return "0"
        parts = []
        for e, c in self.terms:
            if e == 0:
                parts.append(f"({c})")
            elif e == 1:
                parts.append(f"({c})*lam")
            else:
                parts.append(f"({c})*lam^({e})")
        if self.trunc is not None:
            parts.append(f"O(lam^({self.trunc}))")
        return " + ".join(parts) if parts else "0"


# -- module-level constructors and constants ------------------------------------


def make_series(
    pairs: Iterable[Tuple[object, object]], trunc: Union[Trunc, int, str] = None
) -> FormalScalar:
    """Build a canonical series from (exponent, coefficient) pairs.

    Input may be unsorted, contain zeros and duplicate exponents; duplicates
    are merged, zeros dropped, and terms at or above ``trunc`` discarded.
    ``trunc=None`` means the series is exact.
    """
    t = None if trunc is None else _fr(trunc)
    acc: dict = {}
    for e, c in pairs:
        e = _fr(e)
        c = CRational.of(c)
        acc[e] = acc.get(e, CZERO) + c
    return FormalScalar._build(acc, t)


ZERO = FormalScalar((), None)
ONE = FormalScalar(((Fraction(0), CONE),), None)
I_UNIT = FormalScalar(((Fraction(0), CI),), None)


def const(c) -> FormalScalar:
    """Embed a Gaussian rational as a constant series."""
    c = CRational.of(c)
    if c.is_zero:
        return ZERO
    return FormalScalar(((Fraction(0), c),), None)


def lam(power=1) -> FormalScalar:
    """The formal parameter ``lam**power`` (rational powers allowed)."""
    return FormalScalar(((_fr(power), CONE),), None)


def as_scalar(x) -> FormalScalar:
    if isinstance(x, FormalScalar):
        return x
    if isinstance(x, (int, Fraction, CRational)):
        return const(CRational.of(x))
    raise TypeError(f"cannot coerce {x!r} to FormalScalar")


def distance_valuation(a: FormalScalar, b: FormalScalar) -> Optional[Fraction]:
    """Exponent of the ultrametric distance 2**(-o(a-b)); None for equal."""
    return (as_scalar(a) - as_scalar(b)).valuation()


def agree_below(a: FormalScalar, b: FormalScalar, order) -> bool:
    """True when a and b have identical coefficients below ``order``."""
    order = _fr(order)
    d = as_scalar(a) - as_scalar(b)
    if d.trunc is not None and d.trunc < order:
        raise IndeterminateError(
            f"cannot compare below {order}: difference only known below {d.trunc}"
        )
    return all(e >= order for e, _ in d.terms)


# -- exact roots of rationals -----------------------------------------------------


def _int_nth_root(x: int, n: int) -> Optional[int]:
    if x < 0:
        return None
    if x in (0, 1) or n == 1:
        return x
    try:
        r = round(x ** (1.0 / n))
    except OverflowError:
        r = 1
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**n == x:
            return cand
    # fall back to exact integer search around the float guess
    lo, hi = 0, max(2, r + 2)
    while hi**n < x:
        hi *= 2
    while lo < hi:
        mid = (lo + hi) // 2
        if mid**n < x:
            lo = mid + 1
        else:
            hi = mid
    return lo if lo**n == x else None


def _rational_root(x: Fraction, n: int) -> Optional[Fraction]:
    """The exact n-th root of a nonnegative rational, or None if irrational."""
    if n == 1:
        return x
    num = _int_nth_root(x.numerator, n)
    den = _int_nth_root(x.denominator, n)
    if num is None or den is None:
        return None
    return Fraction(num, den)


def _fraction_sqrt(x: Fraction) -> Optional[Fraction]:
    if x < 0:
        return None
    return _rational_root(x, 2)


def int_nth_root_floor(x: int, n: int) -> int:
    """Floor of the n-th root of a nonnegative integer, exactly."""
    if x < 0:
        raise ScalarDomainError("negative radicand")
    if x in (0, 1) or n == 1:
        return x
    hi = 1
    while hi**n <= x:
        hi *= 2
    lo = hi // 2
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if mid**n <= x:
            lo = mid
        else:
            hi = mid - 1
    return lo
