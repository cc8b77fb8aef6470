"""Formal time evolution generated by a Hamiltonian observable.

Time is a formal Taylor variable with an explicit order cap: the evolution
of an observable is the jet of t-coefficients produced by iterating
(1/(i*lam)) [ . , H], each coefficient an exact polynomial.  Every star
commutator of polynomials is divisible by lam; the division is asserted at
runtime and a failure is a hard error, not a truncation.

When the Hamiltonian lies in the Gel'fand ideal of the chosen functional,
the curve of quotient vectors psi(t) = [f_{-t}] solves the evolution
equation i*lam d/dt psi = pi(H) psi in the representation space; the
residual checker verifies this identity exactly, order by order in t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

from .gns import (
    WickVector,
    as_envelope,
    weyl_ideal_member,
    weyl_project,
    weyl_represent,
    wick_apply,
    wick_ideal_member,
    wick_project,
)
from .observables import EnvelopePoly, FrameError, Poly, poisson
from .scalars import (
    CRational,
    FormalScalar,
    ScalarDomainError,
    ZERO,
    as_scalar,
    const,
    lam,
)
from .star import star

WICK_KINDS = ("wick", "wn")


class DivisibilityError(ArithmeticError):
    """A commutator failed to be divisible by lam (implementation bug)."""


class TimeSeriesPoly:
    """Jet of a time-dependent observable: map t-power -> polynomial."""

    __slots__ = ("coeffs", "t_order")

    def __init__(self, coeffs: Dict[int, Poly], t_order: int):
        clean = {m: f for m, f in coeffs.items() if not f.is_zero}
        if any(m > t_order or m < 0 for m in clean):
            raise ScalarDomainError("t-power beyond the jet order")
        object.__setattr__(self, "coeffs", clean)
        object.__setattr__(self, "t_order", t_order)

    def __setattr__(self, name, value):
        raise AttributeError("TimeSeriesPoly is immutable")

    def coefficient(self, m: int) -> Optional[Poly]:
        return self.coeffs.get(m)

    def time_reversed(self) -> "TimeSeriesPoly":
        """Substitute t -> -t."""
        return TimeSeriesPoly(
            {m: (-f if m % 2 else f) for m, f in self.coeffs.items()},
            self.t_order,
        )

    def to_json(self) -> list:
        return [[m, f.to_json()] for m, f in sorted(self.coeffs.items())]

    @staticmethod
    def from_json(data: list, t_order: Optional[int] = None) -> "TimeSeriesPoly":
        coeffs = {int(m): Poly.from_json(f) for m, f in data}
        if t_order is None:
            t_order = max(coeffs, default=0)
        return TimeSeriesPoly(coeffs, t_order)

    def __eq__(self, other):
        if not isinstance(other, TimeSeriesPoly):
            return NotImplemented
        return self.coeffs == other.coeffs and self.t_order == other.t_order


def divide_by_i_lam(f: Poly) -> Poly:
    """Exact division by i*lam; every coefficient must have valuation >= 1."""
    val = f.lambda_valuation()
    if val is not None and val < 1:
        raise DivisibilityError(
            f"commutator has lam-valuation {val} < 1; cannot divide by i*lam"
        )
    minus_i_invlam = lam(-1) * const(CRational(0, -1))  # 1/(i lam)
    return f.scale(minus_i_invlam)


def heisenberg_evolve(f: Poly, hamiltonian: Poly, kind: str, t_order: int) -> TimeSeriesPoly:
    """Jet of the evolution of f: the t^m coefficient is
    ((1/(i*lam)) ad(H))^m f / m!, an exact polynomial."""
    if f.frame != hamiltonian.frame:
        raise FrameError("frame mismatch")
    coeffs: Dict[int, Poly] = {0: f}
    current = f
    for m in range(1, t_order + 1):
        bracket = star(kind, current, hamiltonian) - star(kind, hamiltonian, current)
        current = divide_by_i_lam(bracket).scale(Fraction(1, m))
        if current.is_zero:
            break
        coeffs[m] = current
    return TimeSeriesPoly(coeffs, t_order)


def hamiltonian_hat_order(
    g: Poly, hamiltonian: Poly, kind: str = "weyl"
) -> Tuple[Poly, Tuple[Optional[Fraction], Optional[Fraction]]]:
    """The order-raising remainder (1/(i*lam))[g, H] - {g, H_0}.

    H_0 is the classical (lam-order-zero) part of H; the tail must have
    positive order.  Returns the remainder together with the valuations
    (o(g), o(remainder)); the strict increase is asserted.  Only the
    Weyl-Moyal kind carries the classical bracket here.
    """
    if kind != "weyl":
        raise ScalarDomainError(
            "the classical bracket is defined for the weyl kind only"
        )
    if g.frame != hamiltonian.frame:
        raise FrameError("frame mismatch")
    h0_terms = {}
    tail_val: Optional[Fraction] = None
    for e, c in hamiltonian.terms.items():
        zero_part = c.coefficient(0)
        if not zero_part.is_zero:
            h0_terms[e] = as_scalar(zero_part)
        rest = c - as_scalar(zero_part)
        if not rest.is_zero:
            v = rest.valuation()
            tail_val = v if tail_val is None else min(tail_val, v)
    if tail_val is not None and tail_val <= 0:
        raise ScalarDomainError(
            f"the Hamiltonian tail has nonpositive order {tail_val}"
        )
    h0 = Poly(hamiltonian.frame, h0_terms)
    bracket = divide_by_i_lam(
        star(kind, g, hamiltonian) - star(kind, hamiltonian, g)
    )
    remainder = bracket - poisson(g, h0)
    og = g.lambda_valuation()
    orem = remainder.lambda_valuation()
    if og is not None and orem is not None and not orem > og:
        raise ArithmeticError(
            f"order did not increase: o(g)={og}, o(remainder)={orem}"
        )
    return remainder, (og, orem)


@dataclass(frozen=True)
class Trajectory:
    """Quotient-space curve psi(t) as t-Taylor data."""

    kind: str
    vectors: Tuple[Tuple[int, Union[WickVector, EnvelopePoly]], ...]
    t_order: int

    def vector(self, m: int):
        for mm, v in self.vectors:
            if mm == m:
                return v
        return None

    def to_json(self) -> list:
        return [
            [m, v.to_json()] for m, v in self.vectors
        ]


def _ideal_member(kind: str, hamiltonian: Poly) -> bool:
    if kind in WICK_KINDS:
        return wick_ideal_member(hamiltonian)
    return weyl_ideal_member(hamiltonian)


def _project(kind: str, f: Poly):
    if kind in WICK_KINDS:
        return wick_project(f)
    return weyl_project(f)


def schrodinger_evolve(
    f: Poly, hamiltonian: Poly, kind: str, t_order: int
) -> Trajectory:
    """Curve of quotient vectors psi(t) = [f_{-t}] for a Hamiltonian inside
    the Gel'fand ideal; outside the ideal the evolution equation has no
    formal solution and a contract error is raised."""
    if not _ideal_member(kind, hamiltonian):
        raise ScalarDomainError(
            "the Hamiltonian is not in the Gel'fand ideal; the quotient "
            "evolution is not defined"
        )
    jet = heisenberg_evolve(f, hamiltonian, kind, t_order).time_reversed()
    vectors = []
    for m in range(t_order + 1):
        fm = jet.coefficient(m)
        if fm is None:
            continue
        vm = _project(kind, fm)
        if not vm.is_zero:
            vectors.append((m, vm))
    return Trajectory(kind, tuple(vectors), t_order)


@dataclass(frozen=True)
class ResidualReport:
    zero: bool
    first_failure: Optional[int]
    max_checked_order: int


def schrodinger_residual(
    trajectory: Trajectory, hamiltonian: Poly, t_order: Optional[int] = None
) -> ResidualReport:
    """Check i*lam d/dt psi(t) = pi(H) psi(t) exactly through t-order-1.

    The t^m coefficient of the left side is i*lam*(m+1)*psi_{m+1}; the
    right side applies the represented Hamiltonian to psi_m.
    """
    kind = trajectory.kind
    top = trajectory.t_order if t_order is None else t_order
    i_lam = lam() * const(CRational(0, 1))
    for m in range(top):
        psi_m = trajectory.vector(m)
        psi_next = trajectory.vector(m + 1)
        if kind in WICK_KINDS:
            n = hamiltonian.frame.n
            rhs = (
                wick_apply(hamiltonian, psi_m)
                if psi_m is not None
                else WickVector.zero(n)
            )
            lhs = (
                psi_next.scale(i_lam * (m + 1))
                if psi_next is not None
                else WickVector.zero(n)
            )
            if not (lhs - rhs).is_zero:
                return ResidualReport(False, m, top - 1)
        else:
            rhs_e = (
                weyl_represent(hamiltonian, psi_m)
                if psi_m is not None
                else as_envelope(Poly.zero(hamiltonian.frame))
            )
            lhs_e = (
                psi_next.scale(i_lam * (m + 1))
                if psi_next is not None
                else as_envelope(Poly.zero(hamiltonian.frame))
            )
            if not (lhs_e - rhs_e).is_zero:
                return ResidualReport(False, m, top - 1)
    return ResidualReport(True, None, top - 1)


def classical_flow_jet(f: Poly, h0: Poly, t_order: int) -> TimeSeriesPoly:
    """Independent classical oracle: iterate the Poisson bracket
    f^{(m+1)} = {f^{(m)}, H_0}, jet coefficients f^{(m)}/m!."""
    coeffs: Dict[int, Poly] = {0: f}
    current = f
    for m in range(1, t_order + 1):
        current = poisson(current, h0).scale(Fraction(1, m))
        if current.is_zero:
            break
        coeffs[m] = current
    return TimeSeriesPoly(coeffs, t_order)
