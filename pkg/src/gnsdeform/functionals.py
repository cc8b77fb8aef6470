"""Positive linear functionals on the observable algebras.

Four kinds are provided:

* ``delta``      evaluation at a phase-space point (a state for the Wick
                 products, not positive for Weyl-Moyal);
* ``omega_p0``   integration over configuration space at a fixed momentum,
                 on momentum-polynomial observables with a q-envelope;
* ``omega_rho``  smearing against a manifestly nonnegative density
                 conj(g)*g times a Gaussian envelope (positive for any star
                 product);
* ``trace``      integration over all of phase space.

Values of the integral kinds are lam-series times a fixed half-integer
power of pi; positivity and Cauchy-Schwarz checks classify them through
the ordering of the scalar field.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

from .observables import (
    EnvelopePoly,
    Frame,
    FrameError,
    PiSeries,
    Poly,
    gaussian_integral,
)
from .scalars import (
    CRational,
    FormalScalar,
    IndeterminateError,
    ScalarDomainError,
    ZERO,
    as_scalar,
    ONE,
)
from .star import star, star_envelope

Observable = Union[Poly, EnvelopePoly]
Value = Union[FormalScalar, PiSeries]

FUNCTIONAL_KINDS = ("delta", "omega_p0", "omega_rho", "trace")


class Functional:
    """A linear functional, optionally scaled by a formal prefactor.

    The prefactor is a formal scalar times a half-integer power of pi, so a
    smearing functional can be normalized by its exact Gaussian mass.
    """

    __slots__ = ("kind", "frame", "point", "p0", "rho_factor", "scale", "pi_half_scale")

    def __init__(
        self,
        kind: str,
        frame: Frame,
        point: Optional[Sequence] = None,
        p0: Optional[Sequence] = None,
        rho_factor: Optional[EnvelopePoly] = None,
        scale: FormalScalar = ONE,
        pi_half_scale: int = 0,
    ):
        if kind not in FUNCTIONAL_KINDS:
            raise ScalarDomainError(f"unknown functional kind {kind!r}")
        if kind == "delta":
            if point is None or len(point) != frame.dim:
                raise FrameError("delta functional needs a 2n-point")
            point = tuple(CRational.of(x) for x in point)
        if kind == "omega_p0":
            if frame.kind != "weyl":
                raise FrameError("omega_p0 lives on a weyl frame")
            if p0 is None or len(p0) != frame.n:
                raise FrameError("omega_p0 needs a momentum vector of length n")
            p0 = tuple(CRational.of(x) for x in p0)
        if kind == "omega_rho":
            if rho_factor is None or rho_factor.frame != frame:
                raise FrameError("omega_rho needs a density factor on the frame")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "frame", frame)
        object.__setattr__(self, "point", point)
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "rho_factor", rho_factor)
        object.__setattr__(self, "scale", as_scalar(scale))
        object.__setattr__(self, "pi_half_scale", pi_half_scale)

    def __setattr__(self, name, value):
        raise AttributeError("Functional is immutable")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def delta(frame: Frame, point: Sequence) -> "Functional":
        return Functional("delta", frame, point=point)

    @staticmethod
    def omega_p0(frame: Frame, p0: Sequence) -> "Functional":
        return Functional("omega_p0", frame, p0=p0)

    @staticmethod
    def omega_rho(frame: Frame, factor: EnvelopePoly) -> "Functional":
        """Density rho = conj(factor)*factor: manifestly nonnegative."""
        return Functional("omega_rho", frame, rho_factor=factor)

    @staticmethod
    def trace(frame: Frame) -> "Functional":
        return Functional("trace", frame)

    def rescaled(self, scale, pi_half: int = 0) -> "Functional":
        return Functional(
            self.kind,
            self.frame,
            point=self.point,
            p0=self.p0,
            rho_factor=self.rho_factor,
            scale=self.scale * as_scalar(scale),
            pi_half_scale=self.pi_half_scale + pi_half,
        )

    def normalized(self, order=None) -> "Functional":
        """Divide by the exact value on the unit element (Gaussian mass)."""
        unit = (
            Poly.constant(self.frame, 1)
            if self.kind == "delta"
            else EnvelopePoly(Poly.constant(self.frame, 1), 0, 0)
        )
        mass = apply_functional(self, unit)
        series, power = _as_series(mass)
        target = order if order is not None else (series.valuation() or 0) + 1
        return self.rescaled(series.inverse(target), -power)

    # -- application --------------------------------------------------------

    def __call__(self, f: Observable) -> Value:
        return apply_functional(self, f)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "frame": self.frame.kind, "n": self.frame.n}
        if self.kind == "delta":
            out["point"] = [[str(x.re), str(x.im)] for x in self.point]
        if self.kind == "omega_p0":
            out["p0"] = [[str(x.re), str(x.im)] for x in self.p0]
        if self.kind == "omega_rho":
            out["rho_factor"] = self.rho_factor.to_json()
        if self.scale != ONE:
            out["scale"] = self.scale.to_json()
        if self.pi_half_scale:
            out["pi_half_scale"] = self.pi_half_scale
        return out

    @staticmethod
    def from_json(data: dict) -> "Functional":
        frame = Frame(data["frame"], data["n"])
        kw = {}
        if "point" in data:
            kw["point"] = [CRational(Fraction(a), Fraction(b)) for a, b in data["point"]]
        if "p0" in data:
            kw["p0"] = [CRational(Fraction(a), Fraction(b)) for a, b in data["p0"]]
        if "rho_factor" in data:
            kw["rho_factor"] = EnvelopePoly.from_json(data["rho_factor"])
        if "scale" in data:
            kw["scale"] = FormalScalar.from_json(data["scale"])
        if "pi_half_scale" in data:
            kw["pi_half_scale"] = int(data["pi_half_scale"])
        return Functional(data["kind"], frame, **kw)


def apply_functional(omega: Functional, f: Observable) -> Value:
    """Apply the functional; exact per lam-coefficient.

    Delta takes polynomials (or envelopes whose Gaussian factor is 1 at the
    point); the integral kinds take enveloped polynomials and return a
    lam-series times pi^(h/2).
    """
    if f.frame != omega.frame:
        raise FrameError("frame mismatch between functional and observable")
    prefactor = PiSeries(omega.scale, omega.pi_half_scale)
    if omega.kind == "delta":
        if isinstance(f, EnvelopePoly):
            n = omega.frame.n
            qpart = omega.point[:n]
            ppart = omega.point[n:]
            if (f.width_q and any(qpart)) or (f.width_p and any(ppart)):
                raise ScalarDomainError(
                    "delta of an envelope away from its center is not rational"
                )
            f = f.poly
        value = f.eval_point(omega.point)
        if omega.pi_half_scale:
            return prefactor * PiSeries(value, 0)
        return omega.scale * value
    if omega.kind == "omega_p0":
        if not isinstance(f, EnvelopePoly):
            raise ScalarDomainError("omega_p0 needs an enveloped observable")
        fixed = f.substitute_p(omega.p0)
        return gaussian_integral(fixed) * prefactor
    if omega.kind == "omega_rho":
        if not isinstance(f, EnvelopePoly):
            f = EnvelopePoly(f, 0, 0)
        rho = omega.rho_factor.conj() * omega.rho_factor
        return gaussian_integral(f * rho) * prefactor
    # trace
    if not isinstance(f, EnvelopePoly):
        raise ScalarDomainError("the trace integral needs an enveloped observable")
    return gaussian_integral(f) * prefactor


# -- positivity -----------------------------------------------------------------


@dataclass(frozen=True)
class PositivityResult:
    sign: str  # "positive" | "zero" | "negative"
    exponent: Optional[Fraction]  # leading lam-exponent for nonzero values
    coefficient: Optional[CRational]  # leading coefficient
    pi_half_power: int
    value: Value

    @property
    def nonnegative(self) -> bool:
        return self.sign in ("positive", "zero")


def _as_series(v: Value) -> Tuple[FormalScalar, int]:
    if isinstance(v, PiSeries):
        return v.series, v.pi_half_power
    return v, 0


def classify_value(v: Value) -> PositivityResult:
    """Classify by the field ordering; pi^(h/2) is a positive unit."""
    series, power = _as_series(v)
    if not series.is_real:
        raise ScalarDomainError("positivity classification needs a real value")
    if not series.terms:
        if series.trunc is None:
            return PositivityResult("zero", None, None, power, v)
        raise IndeterminateError(
            f"sign indeterminate: value known only below lam^{series.trunc}"
        )
    e, c = series.leading()
    return PositivityResult(
        "positive" if c.re > 0 else "negative", e, c, power, v
    )


def _star_conj_pair(
    omega: Functional, f: Observable, g: Observable, kind: str, order
) -> Value:
    """omega(conj(f) * g) with the product chosen by kind and input type."""
    if isinstance(f, EnvelopePoly) or isinstance(g, EnvelopePoly):
        if kind != "weyl":
            raise ScalarDomainError("enveloped observables use the weyl product")
        if order is None:
            raise ScalarDomainError("enveloped star products need an order")
        fe = f if isinstance(f, EnvelopePoly) else EnvelopePoly(f, 0, 0)
        ge = g if isinstance(g, EnvelopePoly) else EnvelopePoly(g, 0, 0)
        return apply_functional(omega, star_envelope(fe.conj(), ge, order))
    prod = star(kind, f.conj(), g)
    if order is not None:
        prod = prod.lambda_truncate(order)
    return apply_functional(omega, prod)


def positivity_check(
    omega: Functional, f: Observable, kind: str, order=None
) -> PositivityResult:
    """Classify omega(conj(f) * f) in the ordered scalar field."""
    return classify_value(_star_conj_pair(omega, f, f, kind, order))


@dataclass(frozen=True)
class CauchySchwarzReport:
    holds: bool
    exact: bool           # False when certified only through a truncation
    symmetric: bool
    cross: Value          # omega(conj(f) * g)
    cross_abs_sq: Value   # |omega(conj(f) * g)|^2
    bound: Value          # omega(conj(f) * f) * omega(conj(g) * g)


def cauchy_schwarz_check(
    omega: Functional, f: Observable, g: Observable, kind: str, order=None
) -> CauchySchwarzReport:
    """Verify |omega(conj(f)*g)|^2 <= omega(conj(f)*f) * omega(conj(g)*g)
    in the field ordering, plus the Hermitian symmetry of the pairing."""
    cross = _star_conj_pair(omega, f, g, kind, order)
    mirror = _star_conj_pair(omega, g, f, kind, order)
    cs, cp = _as_series(cross)
    ms, mp = _as_series(mirror)
    symmetric = not (cs - ms.conj()).terms and (
        cp == mp or cs.is_zero or ms.is_zero
    )
    lhs = cross * cross.conj()
    ff = _star_conj_pair(omega, f, f, kind, order)
    gg = _star_conj_pair(omega, g, g, kind, order)
    rhs = ff * gg
    ls, lp = _as_series(lhs)
    rs, rp = _as_series(rhs)
    if not (ls.is_zero or rs.is_zero or lp == rp):
        raise ScalarDomainError("mismatched pi powers in Cauchy-Schwarz bound")
    diff = rs - ls
    if not diff.terms:
        # no violation visible; exact equality when nothing is truncated
        holds, exact = True, diff.trunc is None
    else:
        holds, exact = diff.terms[0][1].re > 0, True
    return CauchySchwarzReport(holds, exact, symmetric, cross, lhs, rhs)


# -- state validation ----------------------------------------------------------


@dataclass(frozen=True)
class StateReport:
    is_state: bool
    unit_value: Optional[Value]
    min_support: Optional[Fraction]
    reasons: Tuple[str, ...]
    classical_failures: Tuple[int, ...]


def state_validate(
    omega: Functional, samples: Sequence[Observable], order=None
) -> StateReport:
    """Check the state conditions for a lam-graded functional.

    Verifies omega(1) = 1, that the grading has no negative support below
    order zero, and that the order-zero part is classically positive
    (against the pointwise product) on the given sample observables.
    """
    reasons: List[str] = []
    # unit normalization
    unit: Observable
    if omega.kind == "delta":
        unit = Poly.constant(omega.frame, 1)
    elif omega.kind == "omega_rho":
        unit = EnvelopePoly(Poly.constant(omega.frame, 1), 0, 0)
    else:
        reasons.append("unit element is outside the functional's domain")
        return StateReport(False, None, None, tuple(reasons), ())
    unit_value = apply_functional(omega, unit)
    us, upow = _as_series(unit_value)
    if upow != 0 or (us - ONE).terms:
        reasons.append(f"omega(1) = {unit_value} differs from 1")
    # support of the lam-grading: the prefactor's valuation plus 0
    try:
        support = omega.scale.valuation()
    except IndeterminateError:
        support = None
        reasons.append("grading support indeterminate under truncation")
    if support is not None and support < 0:
        reasons.append(f"negative lam-support {support}")
    # classical positivity of the order-zero part, pointwise product
    failures = []
    for idx, f in enumerate(samples):
        val = apply_functional(omega, _pointwise_conj_square(f))
        vs, _ = _as_series(val)
        vs0 = vs.coefficient(0) if (vs.trunc is None or vs.trunc > 0) else None
        if vs0 is None:
            failures.append(idx)
        elif vs0.re < 0 or vs0.im:
            failures.append(idx)
    if failures:
        reasons.append("classical part fails positivity on samples")
    ok = not reasons
    return StateReport(ok, unit_value, support, tuple(reasons), tuple(failures))


def _pointwise_conj_square(f: Observable) -> Observable:
    return f.conj() * f
