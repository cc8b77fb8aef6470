"""Polynomial observables on flat phase space, with exact Gaussian moments.

A polynomial lives in a frame: ``weyl`` coordinates (q^1..q^n, p_1..p_n) or
``wick`` coordinates (z^1..z^n, zb^1..zb^n).  Coefficients are formal
scalars, exponent vectors have length 2n with the first n slots for the
position-like block and the last n for the momentum-like block.

The Gaussian-enveloped polynomials ``poly * exp(-wq*|q|^2 - wp*|p|^2)``
serve as the exactly integrable test-function class: they are closed under
derivatives and pointwise products, every integral is an exact rational
multiple of a half-integer power of pi, and all integration-by-parts
boundary terms vanish.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Dict, Iterable, Optional, Sequence, Tuple

from .scalars import (
    CRational,
    CZERO,
    FormalScalar,
    ScalarDomainError,
    ZERO,
    _fr,
    _fraction_sqrt,
    as_scalar,
)

Exps = Tuple[int, ...]


class FrameError(ValueError):
    """Frame mismatch or malformed coordinate data."""


class DivergentIntegralError(ArithmeticError):
    """A Gaussian integral has a polynomial direction without envelope."""


class Frame:
    """Coordinate frame: kind 'weyl' or 'wick' with n degrees of freedom."""

    __slots__ = ("kind", "n")

    def __init__(self, kind: str, n: int):
        if kind not in ("weyl", "wick"):
            raise FrameError(f"unknown frame kind {kind!r}")
        if n < 1:
            raise FrameError("frame needs n >= 1")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "n", n)

    def __setattr__(self, name, value):
        raise AttributeError("Frame is immutable")

    @property
    def dim(self) -> int:
        return 2 * self.n

    def var_name(self, i: int) -> str:
        first, second = ("q", "p") if self.kind == "weyl" else ("z", "zb")
        if 0 <= i < self.n:
            return f"{first}{i + 1}"
        if self.n <= i < 2 * self.n:
            return f"{second}{i - self.n + 1}"
        raise FrameError(f"variable index {i} out of range")

    def __eq__(self, other):
        return (
            isinstance(other, Frame) and self.kind == other.kind and self.n == other.n
        )

    def __hash__(self):
        return hash((self.kind, self.n))

    def __repr__(self):
        return f"Frame({self.kind!r}, {self.n})"


def weyl_frame(n: int) -> Frame:
    return Frame("weyl", n)


def wick_frame(n: int) -> Frame:
    return Frame("wick", n)


class Poly:
    """Sparse multivariate polynomial with FormalScalar coefficients."""

    __slots__ = ("frame", "terms")

    def __init__(self, frame: Frame, terms: Dict[Exps, FormalScalar]):
        clean = {}
        for exps, coeff in terms.items():
            if len(exps) != frame.dim:
                raise FrameError(f"exponent vector {exps} does not fit {frame!r}")
            if not coeff.is_zero:
                clean[tuple(exps)] = coeff
        object.__setattr__(self, "frame", frame)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("Poly is immutable")

    # -- constructors -----------------------------------------------------

    @staticmethod
    def zero(frame: Frame) -> "Poly":
        return Poly(frame, {})

    @staticmethod
    def constant(frame: Frame, c) -> "Poly":
        return Poly(frame, {(0,) * frame.dim: as_scalar(c)})

    @staticmethod
    def variable(frame: Frame, i: int) -> "Poly":
        exps = [0] * frame.dim
        exps[i] = 1
        return Poly(frame, {tuple(exps): as_scalar(1)})

    @staticmethod
    def monomial(frame: Frame, exps: Sequence[int], coeff=1) -> "Poly":
        return Poly(frame, {tuple(exps): as_scalar(coeff)})

    # -- structure ---------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def degree_in(self, i: int) -> int:
        return max((e[i] for e in self.terms), default=0)

    def block_degree(self, first_block: bool) -> int:
        """Max total degree in the first (q/z) or second (p/zb) slot block."""
        n = self.frame.n
        sl = slice(0, n) if first_block else slice(n, 2 * n)
        return max((sum(e[sl]) for e in self.terms), default=0)

    def coefficient(self, exps: Sequence[int]) -> FormalScalar:
        return self.terms.get(tuple(exps), ZERO)

    def lambda_valuation(self) -> Optional[Fraction]:
        """Smallest lam-order bound over all coefficients; None for zero.

        Truncated coefficients with no known terms contribute their
        truncation order (a pessimistic lower bound).
        """
        vals = [c._min_order() for c in self.terms.values()]
        vals = [v for v in vals if v is not None]
        return min(vals) if vals else None

    def lambda_truncate(self, order) -> "Poly":
        return Poly(
            self.frame, {e: c.truncate(order) for e, c in self.terms.items()}
        )

    # -- algebra -------------------------------------------------------------

    def _check(self, other: "Poly"):
        if self.frame != other.frame:
            raise FrameError(f"frame mismatch: {self.frame!r} vs {other.frame!r}")

    def __add__(self, other: "Poly") -> "Poly":
        self._check(other)
        acc = dict(self.terms)
        for e, c in other.terms.items():
            acc[e] = acc.get(e, ZERO) + c
        return Poly(self.frame, acc)

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __neg__(self) -> "Poly":
        return Poly(self.frame, {e: -c for e, c in self.terms.items()})

    def scale(self, c) -> "Poly":
        if isinstance(c, (int, Fraction, CRational)):
            return Poly(
                self.frame, {e: v._scale_num(c) for e, v in self.terms.items()}
            )
        c = as_scalar(c)
        return Poly(self.frame, {e: c * v for e, v in self.terms.items()})

    def __mul__(self, other):
        """Pointwise product (poly * poly) or coefficient scaling."""
        if isinstance(other, Poly):
            self._check(other)
            acc: Dict[Exps, FormalScalar] = {}
            for e1, c1 in self.terms.items():
                for e2, c2 in other.terms.items():
                    e = tuple(a + b for a, b in zip(e1, e2))
                    acc[e] = acc.get(e, ZERO) + c1 * c2
            return Poly(self.frame, acc)
        if isinstance(other, EnvelopePoly):
            return NotImplemented  # handled by EnvelopePoly.__rmul__
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def conj(self) -> "Poly":
        """Complex conjugation.

        In a weyl frame the coordinates are real and only coefficients are
        conjugated; in a wick frame the two coordinate blocks are swapped
        as well (z <-> zb).
        """
        n = self.frame.n
        acc: Dict[Exps, FormalScalar] = {}
        for e, c in self.terms.items():
            key = e if self.frame.kind == "weyl" else e[n:] + e[:n]
            acc[key] = acc.get(key, ZERO) + c.conj()
        return Poly(self.frame, acc)

    def deriv(self, i: int) -> "Poly":
        """Formal partial derivative with respect to variable i."""
        if not 0 <= i < self.frame.dim:
            raise FrameError(f"variable index {i} out of range")
        acc: Dict[Exps, FormalScalar] = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                continue
            key = e[:i] + (e[i] - 1,) + e[i + 1 :]
            acc[key] = acc.get(key, ZERO) + c._scale_num(e[i])
        return Poly(self.frame, acc)

    def eval_point(self, point: Sequence) -> FormalScalar:
        """Evaluate at a point with Gaussian-rational coordinates."""
        if len(point) != self.frame.dim:
            raise FrameError("point dimension mismatch")
        pt = [CRational.of(x) for x in point]
        total = ZERO
        for e, c in self.terms.items():
            factor = CRational(1)
            for x, k in zip(pt, e):
                for _ in range(k):
                    factor = factor * x
            total = total + c * factor
        return total

    # -- serialization ----------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "frame": self.frame.kind,
            "n": self.frame.n,
            "terms": [
                {"exps": list(e), "coeff": c.to_json()}
                for e, c in sorted(self.terms.items())
            ],
        }

    @staticmethod
    def from_json(data: dict) -> "Poly":
        frame = Frame(data["frame"], data["n"])
        return Poly(
            frame,
            {
                tuple(t["exps"]): FormalScalar.from_json(t["coeff"])
                for t in data.get("terms", [])
            },
        )

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self.frame == other.frame and self.terms == other.terms

    def __hash__(self):
        return hash((self.frame, tuple(sorted(self.terms.items()))))

    def __repr__(self):
        return f"Poly({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in sorted(self.terms.items()):
            mono = "*".join(
                f"{self.frame.var_name(i)}^{k}" if k > 1 else self.frame.var_name(i)
                for i, k in enumerate(e)
                if k
            )
            if mono:
                parts.append(f"({c})*{mono}")
            else:
                parts.append(f"({c})")
        return " + ".join(parts)


def poisson(f: Poly, g: Poly) -> Poly:
    """Poisson bracket sum_k (df/dq^k dg/dp_k - df/dp_k dg/dq^k)."""
    if f.frame != g.frame:
        raise FrameError("frame mismatch")
    if f.frame.kind != "weyl":
        raise FrameError("Poisson bracket requires a weyl frame")
    n = f.frame.n
    out = Poly.zero(f.frame)
    for k in range(n):
        out = out + f.deriv(k) * g.deriv(n + k) - f.deriv(n + k) * g.deriv(k)
    return out


class EnvelopePoly:
    """A weyl-frame polynomial times ``exp(-wq*|q|^2 - wp*|p|^2)``.

    Width 0 in a block means no envelope there.  Closed under derivatives
    (the chain-rule factors are polynomial) and under pointwise products
    (widths add).
    """

    __slots__ = ("poly", "width_q", "width_p")

    def __init__(self, poly: Poly, width_q=0, width_p=0):
        if poly.frame.kind != "weyl":
            raise FrameError("envelopes require a weyl frame")
        wq, wp = _fr(width_q), _fr(width_p)
        if wq < 0 or wp < 0:
            raise ScalarDomainError("envelope widths must be nonnegative")
        object.__setattr__(self, "poly", poly)
        object.__setattr__(self, "width_q", wq)
        object.__setattr__(self, "width_p", wp)

    def __setattr__(self, name, value):
        raise AttributeError("EnvelopePoly is immutable")

    @property
    def frame(self) -> Frame:
        return self.poly.frame

    @property
    def is_zero(self) -> bool:
        return self.poly.is_zero

    def _check_widths(self, other: "EnvelopePoly"):
        if (self.width_q, self.width_p) != (other.width_q, other.width_p):
            raise ScalarDomainError(
                "envelope widths differ; addition is only defined per width class"
            )

    def __add__(self, other: "EnvelopePoly") -> "EnvelopePoly":
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        self._check_widths(other)
        return EnvelopePoly(self.poly + other.poly, self.width_q, self.width_p)

    def __sub__(self, other: "EnvelopePoly") -> "EnvelopePoly":
        return self + (-other)

    def __neg__(self) -> "EnvelopePoly":
        return EnvelopePoly(-self.poly, self.width_q, self.width_p)

    def scale(self, c) -> "EnvelopePoly":
        return EnvelopePoly(self.poly.scale(c), self.width_q, self.width_p)

    def __mul__(self, other):
        if isinstance(other, EnvelopePoly):
            return EnvelopePoly(
                self.poly * other.poly,
                self.width_q + other.width_q,
                self.width_p + other.width_p,
            )
        if isinstance(other, Poly):
            return EnvelopePoly(self.poly * other, self.width_q, self.width_p)
        return self.scale(other)

    def __rmul__(self, other):
        if isinstance(other, Poly):
            return EnvelopePoly(other * self.poly, self.width_q, self.width_p)
        return self.scale(other)

    def conj(self) -> "EnvelopePoly":
        return EnvelopePoly(self.poly.conj(), self.width_q, self.width_p)

    def deriv(self, i: int) -> "EnvelopePoly":
        """Derivative including the Gaussian chain-rule term."""
        n = self.frame.n
        width = self.width_q if i < n else self.width_p
        core = self.poly.deriv(i)
        if width:
            core = core - (2 * width) * (Poly.variable(self.frame, i) * self.poly)
        return EnvelopePoly(core, self.width_q, self.width_p)

    def lambda_valuation(self) -> Optional[Fraction]:
        return self.poly.lambda_valuation()

    def lambda_truncate(self, order) -> "EnvelopePoly":
        return EnvelopePoly(self.poly.lambda_truncate(order), self.width_q, self.width_p)

    def substitute_p(self, p0: Sequence) -> "EnvelopePoly":
        """Fix the momentum block to exact values; requires no p-envelope
        unless the substituted point is the origin."""
        n = self.frame.n
        vals = [CRational.of(x) for x in p0]
        if len(vals) != n:
            raise FrameError("momentum vector must have length n")
        if self.width_p and any(v for v in vals):
            raise ScalarDomainError(
                "substitution at nonzero momentum under a p-envelope "
                "leaves the exact value class"
            )
        acc: Dict[Exps, FormalScalar] = {}
        for e, c in self.poly.terms.items():
            factor = CRational(1)
            for k in range(n):
                for _ in range(e[n + k]):
                    factor = factor * vals[k]
            if factor.is_zero:
                continue
            key = e[:n] + (0,) * n
            acc[key] = acc.get(key, ZERO) + c * factor
        return EnvelopePoly(Poly(self.frame, acc), self.width_q, 0)

    def to_json(self) -> dict:
        return {
            "poly": self.poly.to_json(),
            "width_q": str(self.width_q),
            "width_p": str(self.width_p),
        }

    @staticmethod
    def from_json(data: dict) -> "EnvelopePoly":
        return EnvelopePoly(
            Poly.from_json(data["poly"]),
            Fraction(data.get("width_q", "0")),
            Fraction(data.get("width_p", "0")),
        )

    def __eq__(self, other):
        if not isinstance(other, EnvelopePoly):
            return NotImplemented
        if self.is_zero and other.is_zero:
            return True
        return (
            self.poly == other.poly
            and self.width_q == other.width_q
            and self.width_p == other.width_p
        )

    def __repr__(self):
        return (
            f"EnvelopePoly({self.poly}, width_q={self.width_q}, "
            f"width_p={self.width_p})"
        )


# -- exact Gaussian moments ---------------------------------------------------


class PiScalar:
    """An exact value ``coeff * pi**(pi_half_power/2)``."""

    __slots__ = ("coeff", "pi_half_power")

    def __init__(self, coeff, pi_half_power: int = 0):
        c = CRational.of(coeff)
        object.__setattr__(self, "coeff", c)
        object.__setattr__(self, "pi_half_power", 0 if c.is_zero else pi_half_power)

    def __setattr__(self, name, value):
        raise AttributeError("PiScalar is immutable")

    @property
    def is_zero(self) -> bool:
        return self.coeff.is_zero

    def __add__(self, other: "PiScalar") -> "PiScalar":
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        if self.pi_half_power != other.pi_half_power:
            raise ScalarDomainError(
                "cannot add values with different powers of pi"
            )
        return PiScalar(self.coeff + other.coeff, self.pi_half_power)

    def __neg__(self):
        return PiScalar(-self.coeff, self.pi_half_power)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, PiScalar):
            return PiScalar(
                self.coeff * other.coeff, self.pi_half_power + other.pi_half_power
            )
        return PiScalar(self.coeff * CRational.of(other), self.pi_half_power)

    __rmul__ = __mul__

    def conj(self):
        return PiScalar(self.coeff.conj(), self.pi_half_power)

    def __eq__(self, other):
        if not isinstance(other, PiScalar):
            return NotImplemented
        return (
            self.coeff == other.coeff and self.pi_half_power == other.pi_half_power
        )

    def __hash__(self):
        return hash((self.coeff, self.pi_half_power))

    def __repr__(self):
        return f"PiScalar({self.coeff}, pi_half_power={self.pi_half_power})"

    def __str__(self):
        if self.pi_half_power == 0:
            return str(self.coeff)
        return f"({self.coeff})*pi^({Fraction(self.pi_half_power, 2)})"


class PiSeries:
    """A formal scalar times a fixed half-integer power of pi.

    Every Gaussian integral over a fixed variable set produces the same
    power of pi in all its monomial moments, so series-valued integrals
    stay in this class.
    """

    __slots__ = ("series", "pi_half_power")

    def __init__(self, series: FormalScalar, pi_half_power: int = 0):
        series = as_scalar(series)
        object.__setattr__(self, "series", series)
        object.__setattr__(
            self, "pi_half_power", 0 if series.is_zero else pi_half_power
        )

    def __setattr__(self, name, value):
        raise AttributeError("PiSeries is immutable")

    @property
    def is_zero(self) -> bool:
        return self.series.is_zero

    @property
    def is_real(self) -> bool:
        return self.series.is_real

    def __add__(self, other: "PiSeries") -> "PiSeries":
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        if self.pi_half_power != other.pi_half_power:
            raise ScalarDomainError("cannot add values with different powers of pi")
        return PiSeries(self.series + other.series, self.pi_half_power)

    def __neg__(self):
        return PiSeries(-self.series, self.pi_half_power)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, PiSeries):
            return PiSeries(
                self.series * other.series,
                self.pi_half_power + other.pi_half_power,
            )
        return PiSeries(self.series * other, self.pi_half_power)

    __rmul__ = __mul__

    def conj(self):
        return PiSeries(self.series.conj(), self.pi_half_power)

    def truncate(self, order):
        return PiSeries(self.series.truncate(order), self.pi_half_power)

    def compare(self, other: "PiSeries") -> int:
        """Order comparison; pi**(h/2) is a fixed positive unit."""
        return (self - other).series.compare(ZERO)

    def __eq__(self, other):
        if not isinstance(other, PiSeries):
            return NotImplemented
        return (
            self.series == other.series
            and self.pi_half_power == other.pi_half_power
        )

    def __repr__(self):
        return f"PiSeries({self.series}, pi_half_power={self.pi_half_power})"

    def __str__(self):
        if self.pi_half_power == 0:
            return str(self.series)
        return f"({self.series})*pi^({Fraction(self.pi_half_power, 2)})"


def _double_factorial_odd(k: int) -> int:
    # (2k-1)!! with the empty product equal to 1
    out = 1
    for j in range(1, 2 * k, 2):
        out *= j
    return out


def gaussian_moment_1d(power: int, width: Fraction) -> PiScalar:
    """Exact value of the integral of ``x**power * exp(-width*x^2)`` over R.

    Odd powers vanish; even powers give (2k-1)!!/(2w)^k * sqrt(pi/w), which
    stays in the rational-times-sqrt(pi) class exactly when the width is a
    square of a rational.
    """
    if width <= 0:
        raise DivergentIntegralError("moment needs a positive width")
    if power % 2 == 1:
        return PiScalar(0)
    k = power // 2
    root = _fraction_sqrt(width)
    if root is None:
        raise ScalarDomainError(
            f"sqrt(pi/{width}) escapes the rational-pi class: "
            "width must be a square of a rational"
        )
    value = Fraction(_double_factorial_odd(k), 1) / (2 * width) ** k / root
    return PiScalar(value, 1)


def gaussian_integral(e: EnvelopePoly) -> PiSeries:
    """Integrate an enveloped polynomial over every enveloped block.

    Blocks with width 0 must appear with degree 0 in every monomial (they
    are spectators contributing a factor 1); otherwise the integral
    diverges.  The result is an exact lam-series times pi^(h/2) with h the
    number of integrated variables.
    """
    n = e.frame.n
    pi_power = (n if e.width_q else 0) + (n if e.width_p else 0)
    total = ZERO
    for exps, coeff in e.poly.terms.items():
        factor = Fraction(1)
        dead = False
        for i, k in enumerate(exps):
            width = e.width_q if i < n else e.width_p
            if not width:
                if k:
                    raise DivergentIntegralError(
                        f"variable {e.frame.var_name(i)} has degree {k} "
                        "but no envelope"
                    )
                continue
            moment = gaussian_moment_1d(k, width)
            if moment.is_zero:
                dead = True
                break
            factor *= moment.coeff.re
        if not dead:
            total = total + coeff * factor
    # constants integrate too: a zero polynomial still has the right power
    return PiSeries(total, pi_power)
