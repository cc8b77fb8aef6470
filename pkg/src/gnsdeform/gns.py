"""GNS representations for the two worked settings.

Wick side (delta functional at the origin, on C^n polynomials or on the
flat formal Wick algebra): the Gel'fand ideal consists of the polynomials
whose monomials all carry an annihilation factor, the quotient is spanned
by monomials yb^K, the Hermitian product has the orthogonal Gram diagonal
(2*lam)^{|K|} K!, and observables act by normal-ordered operators.

Weyl side (configuration-space integration at momentum zero): the ideal is
generated on the left by the momentum coordinates; the head/tail split is
computed with the operators S, I and T^k, the quotient element is a wave
function on configuration space, and polynomials act as differential
operators in the symmetrized (Weyl) ordering.

Exact linear algebra over the scalar field (fraction-free elimination with
minimum-valuation pivoting) supports invertibility tests and the spectrum
of degree-graded operators on the capped quotient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

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
    ONE,
    as_scalar,
    const,
    lam,
)
from .star import delta_op, s_op, star_momentum_right

MultiIndex = Tuple[int, ...]

WICK_KINDS = ("wick", "wn")


def _multi_factorial(K: MultiIndex) -> int:
    out = 1
    for k in K:
        out *= math.factorial(k)
    return out


def multi_indices(n: int, max_total: int) -> List[MultiIndex]:
    """All multiindices over n slots with total degree <= max_total,
    ordered by total degree then lexicographically."""
    out: List[MultiIndex] = []
    for total in range(max_total + 1):
        level: List[MultiIndex] = []

        def fill(prefix: Tuple[int, ...], left: int):
            if len(prefix) == n - 1:
                level.append(prefix + (left,))
                return
            for k in range(left + 1):
                fill(prefix + (k,), left - k)

        fill((), total)
        out.extend(sorted(level))
    return out


# -- Wick quotient vectors ------------------------------------------------------


class WickVector:
    """Element of the Wick GNS quotient: sum over K of (1/K!) a_K yb^K.

    The stored coefficients are the Taylor data a_K; the vector for the
    plain monomial yb^K therefore stores a_K = K!.
    """

    __slots__ = ("n", "coeffs")

    def __init__(self, n: int, coeffs: Dict[MultiIndex, FormalScalar]):
        clean = {}
        for K, a in coeffs.items():
            if len(K) != n:
                raise FrameError("multiindex length mismatch")
            if not a.is_zero:
                clean[tuple(K)] = a
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "coeffs", clean)

    def __setattr__(self, name, value):
        raise AttributeError("WickVector is immutable")

    @staticmethod
    def zero(n: int) -> "WickVector":
        return WickVector(n, {})

    @staticmethod
    def basis(n: int, K: MultiIndex) -> "WickVector":
        """The monomial vector yb^K (Taylor coefficient K!)."""
        return WickVector(n, {tuple(K): const(_multi_factorial(K))})

    @staticmethod
    def vacuum(n: int) -> "WickVector":
        return WickVector.basis(n, (0,) * n)

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def degree(self) -> int:
        return max((sum(K) for K in self.coeffs), default=0)

    def __add__(self, other: "WickVector") -> "WickVector":
        if self.n != other.n:
            raise FrameError("vector size mismatch")
        acc = dict(self.coeffs)
        for K, a in other.coeffs.items():
            acc[K] = acc.get(K, ZERO) + a
        return WickVector(self.n, acc)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return WickVector(self.n, {K: -a for K, a in self.coeffs.items()})

    def scale(self, c) -> "WickVector":
        c = as_scalar(c)
        return WickVector(self.n, {K: c * a for K, a in self.coeffs.items()})

    def __eq__(self, other):
        if not isinstance(other, WickVector):
            return NotImplemented
        return self.n == other.n and self.coeffs == other.coeffs

    def __repr__(self):
        if not self.coeffs:
            return "WickVector(0)"
        parts = [f"{K}: {a}" for K, a in sorted(self.coeffs.items())]
        return "WickVector({" + ", ".join(parts) + "})"

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "terms": [
                {"K": list(K), "coeff": a.to_json()}
                for K, a in sorted(self.coeffs.items())
            ],
        }

    @staticmethod
    def from_json(data: dict) -> "WickVector":
        return WickVector(
            data["n"],
            {
                tuple(t["K"]): FormalScalar.from_json(t["coeff"])
                for t in data.get("terms", [])
            },
        )


def gram_diagonal(K: MultiIndex) -> FormalScalar:
    """Exact Gram entry <yb^K, yb^K> = (2*lam)^{|K|} K!."""
    r = sum(K)
    return lam(r) * const(Fraction(2**r * _multi_factorial(K)))


def wick_inner(u: WickVector, v: WickVector) -> FormalScalar:
    """Hermitian product sum_K (2*lam)^{|K|}/K! conj(a_K) b_K."""
    if u.n != v.n:
        raise FrameError("vector size mismatch")
    total = ZERO
    for K, a in u.coeffs.items():
        b = v.coeffs.get(K)
        if b is None:
            continue
        r = sum(K)
        weight = lam(r) * const(Fraction(2**r, _multi_factorial(K)))
        total = total + weight * a.conj() * b
    return total


def wick_ideal_member(f: Poly) -> bool:
    """Membership in the Gel'fand ideal of the delta functional at 0:
    every monomial must carry at least one annihilation (z) factor."""
    if f.frame.kind != "wick":
        raise FrameError("requires a wick frame")
    n = f.frame.n
    return all(any(e[:n]) for e in f.terms)


def wick_project(f: Poly) -> WickVector:
    """Quotient map: the yb-Taylor data a_K = d^K f / dzb^K at the origin."""
    if f.frame.kind != "wick":
        raise FrameError("requires a wick frame")
    n = f.frame.n
    acc: Dict[MultiIndex, FormalScalar] = {}
    for e, c in f.terms.items():
        if any(e[:n]):
            continue  # carries a z factor: in the ideal
        K = e[n:]
        acc[K] = acc.get(K, ZERO) + c * _multi_factorial(K)
    return WickVector(n, acc)


def wick_apply(f: Poly, u: WickVector) -> WickVector:
    """Exact action of the normal-ordered operator of f on a vector.

    A monomial c z^A zb^B acts on yb^K by
    c (2*lam)^{|A|} K!/(K-A)! yb^{K-A+B}  (zero unless K >= A).
    """
    if f.frame.kind != "wick":
        raise FrameError("requires a wick frame")
    n = f.frame.n
    if n != u.n:
        raise FrameError("vector size mismatch")
    acc: Dict[MultiIndex, FormalScalar] = {}
    for e, c in f.terms.items():
        A, B = e[:n], e[n:]
        a_tot = sum(A)
        weight = lam(a_tot) * const(2**a_tot) if a_tot else ONE
        for K, aK in u.coeffs.items():
            if any(k < a for k, a in zip(K, A)):
                continue
            KmA = tuple(k - a for k, a in zip(K, A))
            L = tuple(m + b for m, b in zip(KmA, B))
            # stored Taylor data: a_L += c (2 lam)^|A| L!/(K-A)! a_K
            factor = Fraction(_multi_factorial(L), _multi_factorial(KmA))
            term = c * weight * aK
            acc[L] = acc.get(L, ZERO) + term._scale_num(factor)
    return WickVector(n, acc)


# -- Wick operators as matrices ------------------------------------------------


class WickOperator:
    """Matrix of a normal-ordered operator on the degree-capped basis yb^K.

    Rows and columns follow ``multi_indices(n, degree_cap)``.  When the
    operator maps a basis vector beyond the cap the lost components are
    recorded in the overflow flag instead of being silently dropped.
    """

    __slots__ = ("n", "degree_cap", "basis", "entries", "overflow")

    def __init__(
        self,
        n: int,
        degree_cap: int,
        entries: List[List[FormalScalar]],
        overflow: bool = False,
    ):
        basis = multi_indices(n, degree_cap)
        dim = len(basis)
        if len(entries) != dim or any(len(row) != dim for row in entries):
            raise FrameError("matrix dimensions do not match the capped basis")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "degree_cap", degree_cap)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "overflow", overflow)

    def __setattr__(self, name, value):
        raise AttributeError("WickOperator is immutable")

    @property
    def dim(self) -> int:
        return len(self.basis)

    def entry(self, L: MultiIndex, K: MultiIndex) -> FormalScalar:
        idx = {B: i for i, B in enumerate(self.basis)}
        return self.entries[idx[tuple(L)]][idx[tuple(K)]]

    def apply(self, vec: WickVector) -> WickVector:
        index = {B: i for i, B in enumerate(self.basis)}
        cols: Dict[int, FormalScalar] = {}
        for K, aK in vec.coeffs.items():
            if K not in index:
                raise FrameError("vector exceeds the operator's degree cap")
            # convert Taylor data to basis coordinates: coord = a_K / K!
            cols[index[K]] = aK._scale_num(Fraction(1, _multi_factorial(K)))
        acc: Dict[MultiIndex, FormalScalar] = {}
        for i, L in enumerate(self.basis):
            total = ZERO
            for j, cj in cols.items():
                total = total + self.entries[i][j] * cj
            if not total.is_zero:
                acc[L] = total._scale_num(_multi_factorial(L))
        return WickVector(self.n, acc)

    def __mul__(self, other: "WickOperator") -> "WickOperator":
        if (self.n, self.degree_cap) != (other.n, other.degree_cap):
            raise FrameError("operator shape mismatch")
        dim = self.dim
        rows = []
        for i in range(dim):
            row = []
            for j in range(dim):
                total = ZERO
                for k in range(dim):
                    a = self.entries[i][k]
                    b = other.entries[k][j]
                    if a.is_zero or b.is_zero:
                        continue
                    total = total + a * b
                row.append(total)
            rows.append(row)
        return WickOperator(
            self.n, self.degree_cap, rows, self.overflow or other.overflow
        )

    def __eq__(self, other):
        if not isinstance(other, WickOperator):
            return NotImplemented
        return (
            self.n == other.n
            and self.degree_cap == other.degree_cap
            and self.entries == other.entries
        )

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "degree_cap": self.degree_cap,
            "basis": [list(K) for K in self.basis],
            "entries": [[c.to_json() for c in row] for row in self.entries],
            "overflow": self.overflow,
        }

    @staticmethod
    def from_json(data: dict) -> "WickOperator":
        return WickOperator(
            data["n"],
            data["degree_cap"],
            [[FormalScalar.from_json(c) for c in row] for row in data["entries"]],
            data.get("overflow", False),
        )


def wick_represent(f: Poly, degree_cap: int) -> WickOperator:
    """Matrix of the normal-ordered action on the basis yb^K, |K| <= cap."""
    if f.frame.kind != "wick":
        raise FrameError("requires a wick frame")
    n = f.frame.n
    basis = multi_indices(n, degree_cap)
    index = {K: i for i, K in enumerate(basis)}
    dim = len(basis)
    rows = [[ZERO] * dim for _ in range(dim)]
    overflow = False
    for j, K in enumerate(basis):
        image = wick_apply(f, WickVector.basis(n, K))
        for L, aL in image.coeffs.items():
            i = index.get(L)
            coord = aL._scale_num(Fraction(1, _multi_factorial(L)))
            if i is None:
                overflow = True
                continue
            rows[i][j] = rows[i][j] + coord
    return WickOperator(n, degree_cap, rows, overflow)


def raise_amount(f: Poly) -> int:
    """Largest degree increase the normal-ordered action of f can cause."""
    n = f.frame.n
    return max((sum(e[n:]) - sum(e[:n]) for e in f.terms), default=0)


# -- GNS sanity checks (both kinds) ----------------------------------------------


def cyclic_check(kind: str, f: Poly) -> bool:
    """omega(f) equals <vacuum, pi(f) vacuum> for the delta-state kinds."""
    if kind not in WICK_KINDS:
        raise ScalarDomainError(
            "cyclicity needs the unit in the functional's domain; the "
            "configuration-space functional has no vacuum class"
        )
    if f.frame.kind != "wick":
        raise FrameError("requires a wick frame")
    n = f.frame.n
    vac = WickVector.vacuum(n)
    lhs = f.eval_point([0] * (2 * n))
    rhs = wick_inner(vac, wick_apply(f, vac))
    return lhs == rhs


def adjoint_check(kind: str, f: Poly, u, v) -> bool:
    """<u, pi(f) v> = <pi(conj f) u, v> exactly."""
    if kind in WICK_KINDS:
        lhs = wick_inner(u, wick_apply(f, v))
        rhs = wick_inner(wick_apply(f.conj(), u), v)
        return lhs == rhs
    lhs_w = weyl_inner(u, weyl_represent(f, v))
    rhs_w = weyl_inner(weyl_represent(f.conj(), u), v)
    return lhs_w == rhs_w


def norm_sq(vec, kind: str):
    """Squared norm in the kind's Hermitian product (no square roots)."""
    if kind in WICK_KINDS:
        return wick_inner(vec, vec)
    return weyl_inner(vec, vec)


def parallelogram_check(u, v, kind: str) -> bool:
    """|u+v|^2 + |u-v|^2 = 2|u|^2 + 2|v|^2, exactly."""
    lhs = norm_sq(u + v, kind) + norm_sq(u - v, kind)
    rhs = norm_sq(u, kind) * 2 + norm_sq(v, kind) * 2
    return lhs == rhs


# -- weighted Bessel / Parseval ----------------------------------------------------


def bessel_partial_sum(
    phi: WickVector, index_set: Sequence[MultiIndex]
) -> FormalScalar:
    """sum over K in F of |<yb^K, phi>|^2 / g_K (the weighted Bessel sum)."""
    total = ZERO
    for K in index_set:
        K = tuple(K)
        b = WickVector.basis(phi.n, K)
        c = wick_inner(b, phi)
        total = total + c.conj() * c * gram_diagonal(K).inverse(
            _bessel_inverse_target(c, K)
        )
    return total


def _bessel_inverse_target(c: FormalScalar, K: MultiIndex) -> Fraction:
    # the Gram entry is a monomial, so its inverse is exact; any target works
    return Fraction(sum(K) + 1)


def bessel_check(phi: WickVector, index_set: Sequence[MultiIndex]) -> bool:
    """Weighted Bessel inequality: partial sum <= <phi, phi>."""
    partial = bessel_partial_sum(phi, index_set)
    diff = wick_inner(phi, phi) - partial
    if not diff.terms:
        return diff.trunc is None
    return diff.terms[0][1].re > 0


def parseval_check(phi: WickVector) -> bool:
    """Weighted Parseval equality over the full (finite) support."""
    partial = bessel_partial_sum(phi, sorted(phi.coeffs))
    return partial == wick_inner(phi, phi)


def best_approximation_check(
    phi: WickVector, index_set: Sequence[MultiIndex], coeffs: Dict[MultiIndex, FormalScalar]
) -> bool:
    """The weighted Fourier coefficients minimize the distance to the span
    of the chosen basis vectors."""
    best = WickVector.zero(phi.n)
    trial = WickVector.zero(phi.n)
    for K in index_set:
        K = tuple(K)
        b = WickVector.basis(phi.n, K)
        fourier = wick_inner(b, phi) * gram_diagonal(K).inverse(
            _bessel_inverse_target(ONE, K)
        )
        best = best + b.scale(fourier)
        trial = trial + b.scale(coeffs.get(K, ZERO))
    d_best = norm_sq(phi - best, "wick")
    d_trial = norm_sq(phi - trial, "wick")
    diff = d_trial - d_best
    if not diff.terms:
        return diff.trunc is None
    return diff.terms[0][1].re > 0


# -- exact linear algebra ----------------------------------------------------------


def solve_linear(
    matrix: List[List[FormalScalar]], rhs: List[FormalScalar], order
) -> Optional[List[FormalScalar]]:
    """Solve A x = b over the scalar field, to the requested lam-order.

    Forward elimination is fraction-free (exact over finite series) with
    minimum-valuation pivoting; divisions happen only in back substitution
    through truncated inverses, so rational systems stay exact.  Returns
    None when the matrix is singular.
    """
    order = Fraction(order) if not isinstance(order, Fraction) else order
    dim = len(matrix)
    if any(len(row) != dim for row in matrix) or len(rhs) != dim:
        raise FrameError("solve_linear needs a square system")
    a = [list(row) for row in matrix]
    b = list(rhs)
    for col in range(dim):
        pivot_row = None
        pivot_val = None
        for r in range(col, dim):
            entry = a[r][col]
            if entry.is_zero:
                continue
            if not entry.terms:
                raise IndeterminateError(
                    "pivot choice indeterminate under truncation"
                )
            v = entry.valuation()
            if pivot_val is None or v < pivot_val:
                pivot_row, pivot_val = r, v
        if pivot_row is None:
            return None
        a[col], a[pivot_row] = a[pivot_row], a[col]
        b[col], b[pivot_row] = b[pivot_row], b[col]
        piv = a[col][col]
        for r in range(col + 1, dim):
            factor = a[r][col]
            if factor.is_zero:
                continue
            a[r] = [piv * a[r][j] - factor * a[col][j] for j in range(dim)]
            b[r] = piv * b[r] - factor * b[col]
    # back substitution with truncated inverses
    x: List[FormalScalar] = [ZERO] * dim
    for i in range(dim - 1, -1, -1):
        total = b[i]
        for j in range(i + 1, dim):
            total = total - a[i][j] * x[j]
        piv = a[i][i]
        pv = piv.valuation()
        inv = piv.inverse(pv + order + abs(pv) + 1)
        x[i] = inv * total  # exact whenever the pivot inverse is exact
    return x


def is_invertible(matrix: List[List[FormalScalar]]) -> bool:
    """Exact singularity test by fraction-free elimination."""
    dim = len(matrix)
    a = [list(row) for row in matrix]
    for col in range(dim):
        pivot_row = None
        for r in range(col, dim):
            entry = a[r][col]
            if entry.is_zero:
                continue
            if not entry.terms:
                raise IndeterminateError("pivot indeterminate under truncation")
            pivot_row = r
            break
        if pivot_row is None:
            return False
        a[col], a[pivot_row] = a[pivot_row], a[col]
        piv = a[col][col]
        for r in range(col + 1, dim):
            factor = a[r][col]
            if factor.is_zero:
                continue
            a[r] = [piv * a[r][j] - factor * a[col][j] for j in range(dim)]
    return True


def gns_spectrum_graded(op: WickOperator) -> List[FormalScalar]:
    """Eigenvalues of a degree-graded operator on the capped quotient.

    Candidates are the diagonal entries; a candidate mu belongs to the
    spectrum when (op - mu) fails to be invertible.  The operator must be
    block-triangular with respect to the degree filtration.
    """
    basis = op.basis
    dim = op.dim
    degrees = [sum(K) for K in basis]
    upper = all(
        op.entries[i][j].is_zero
        for i in range(dim)
        for j in range(dim)
        if degrees[i] > degrees[j]
    )
    lower = all(
        op.entries[i][j].is_zero
        for i in range(dim)
        for j in range(dim)
        if degrees[i] < degrees[j]
    )
    if not (upper or lower):
        raise ScalarDomainError("operator does not grade the degree filtration")
    spectrum: List[FormalScalar] = []
    tested: List[FormalScalar] = []
    for d in range(dim):
        mu = op.entries[d][d]
        if any(mu == s for s in tested):
            continue
        tested.append(mu)
        shifted = [
            [op.entries[i][j] - mu if i == j else op.entries[i][j] for j in range(dim)]
            for i in range(dim)
        ]
        if not is_invertible(shifted):
            spectrum.append(mu)
    return spectrum


# -- Weyl side: S/I/T decomposition, wave functions, Schroedinger picture ---------


def op_I(f: EnvelopePoly) -> EnvelopePoly:
    """Scale each momentum monomial of total p-degree m >= 1 by 1/m and
    drop the momentum-independent part."""
    if f.width_p:
        raise ScalarDomainError("requires a momentum-polynomial observable")
    n = f.frame.n
    acc: Dict[Tuple[int, ...], FormalScalar] = {}
    for e, c in f.poly.terms.items():
        m = sum(e[n:])
        if m == 0:
            continue
        acc[e] = c._scale_num(Fraction(1, m))
    return EnvelopePoly(Poly(f.frame, acc), f.width_q, 0)


def _geometric_resolvent(f: EnvelopePoly) -> EnvelopePoly:
    """(1 + (i*lam/2) Delta I)^{-1} f as a terminating geometric series;
    Delta I strictly lowers the momentum degree."""
    total = f
    current = f
    sign_coeff = lam(1) * const(CRational(0, Fraction(-1, 2)))
    power = ONE
    while True:
        nxt = delta_op(op_I(current))
        if nxt.is_zero:
            return total
        power = power * sign_coeff
        current = nxt
        total = total + current.scale(power)


def op_T(f: EnvelopePoly, k: int) -> EnvelopePoly:
    """The tail-extraction operator d/dp_k . I . (1 + (i lam/2) Delta I)^{-1}."""
    if f.width_p:
        raise ScalarDomainError("requires a momentum-polynomial observable")
    n = f.frame.n
    if not 0 <= k < n:
        raise FrameError("momentum index out of range")
    resolved = _geometric_resolvent(f)
    return EnvelopePoly(
        op_I(resolved).poly.deriv(n + k), f.width_q, 0
    )


def _restrict_p0(f: EnvelopePoly) -> EnvelopePoly:
    return f.substitute_p([0] * f.frame.n)


def as_envelope(f: Union[Poly, EnvelopePoly]) -> EnvelopePoly:
    return f if isinstance(f, EnvelopePoly) else EnvelopePoly(f, 0, 0)


def weyl_decompose(
    f: Union[Poly, EnvelopePoly]
) -> Tuple[EnvelopePoly, List[EnvelopePoly]]:
    """Split f = head + sum_k tail_k * p_k (star product on the right).

    The head is the momentum-independent pullback of S(f) at p = 0; the
    reassembly is exact because the star product against a linear momentum
    factor terminates.
    """
    e = as_envelope(f)
    if e.width_p:
        raise ScalarDomainError("decomposition needs a momentum-polynomial input")
    head = _restrict_p0(s_op(e))
    tails = [op_T(e, k) for k in range(e.frame.n)]
    return head, tails


def weyl_reassemble(head: EnvelopePoly, tails: Sequence[EnvelopePoly]) -> EnvelopePoly:
    out = head
    for k, t in enumerate(tails):
        out = out + star_momentum_right(t, k)
    return out


def weyl_ideal_member(f: Union[Poly, EnvelopePoly]) -> bool:
    """Membership in the left ideal generated by the momenta: zero head."""
    head, _ = weyl_decompose(f)
    return head.is_zero


def weyl_project(f: Union[Poly, EnvelopePoly]) -> EnvelopePoly:
    """Quotient map onto wave functions: restrict S(f) to momentum zero."""
    e = as_envelope(f)
    if e.width_p:
        raise ScalarDomainError("projection needs a momentum-polynomial input")
    return _restrict_p0(s_op(e))


def weyl_inner(psi: EnvelopePoly, phi: EnvelopePoly) -> PiSeries:
    """Configuration-space Hermitian product int conj(psi) phi d^n q."""
    return gaussian_integral(psi.conj() * phi)


def weyl_represent(f: Poly, psi: EnvelopePoly) -> EnvelopePoly:
    """Action of a polynomial observable on a wave function:

    rho(f) psi = sum_a (1/a!) (lam/i)^{|a|} (d_p^a S f)|_{p=0} d_q^a psi,

    a finite sum for momentum-polynomial f; q^k acts by multiplication and
    p_k by (lam/i) d/dq^k.
    """
    if f.frame.kind != "weyl":
        raise FrameError("requires a weyl frame")
    if isinstance(f, EnvelopePoly):
        raise ScalarDomainError("the represented observable must be a polynomial")
    n = f.frame.n
    sf = s_op(f)
    out = EnvelopePoly(Poly.zero(f.frame), psi.width_q, psi.width_p)
    pdeg = [sf.degree_in(n + k) for k in range(n)]
    for alpha in _alphas_bounded(pdeg):
        deriv = sf
        for k, a in enumerate(alpha):
            for _ in range(a):
                deriv = deriv.deriv(n + k)
        if deriv.is_zero:
            continue
        coeff_poly = EnvelopePoly(deriv, 0, 0).substitute_p([0] * n).poly
        if coeff_poly.is_zero:
            continue
        dpsi = psi
        for k, a in enumerate(alpha):
            for _ in range(a):
                dpsi = dpsi.deriv(k)
        r = sum(alpha)
        scalar = lam(r) * const(
            _MINUS_I_CYCLE[r % 4] * Fraction(1, _multi_factorial(alpha))
        )
        out = out + (dpsi * coeff_poly).scale(scalar)
    return out


_MINUS_I_CYCLE = (CRational(1), CRational(0, -1), CRational(-1), CRational(0, 1))


def _alphas_bounded(bounds: Sequence[int]):
    if not bounds:
        yield ()
        return
    for head in range(bounds[0] + 1):
        for rest in _alphas_bounded(bounds[1:]):
            yield (head,) + rest
