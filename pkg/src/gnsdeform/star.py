"""Star products: Wick on C^n, Weyl-Moyal on R^2n, and the flat formal
Wick product, together with the operators Delta, S and S^{-1}.

On polynomials every bidifferential series terminates, so the products are
exact.  On the Gaussian-enveloped class the Weyl-Moyal series does not
terminate and is accumulated up to an explicit lam-order.

Conventions, spelled out once:

* wick / wn:   f * g = sum_M (2*lam)^{|M|} / M! * (d^M f / dz^M) (d^M g / dzb^M)
  with M running over multiindices (for wn read y, yb for z, zb).
* weyl:        f * g = sum_r (i*lam/2)^r Lambda_r(f, g) where the r-th
  antisymmetric bidifferential term pairs q-derivatives on one factor with
  p-derivatives on the other,

      Lambda_r(f, g) = sum_{|a|+|b|=r} (-1)^{|b|} / (a! b!)
                       (d_q^a d_p^b f) (d_p^a d_q^b g),

  which is the sum over the r-fold index tuples of the 2n nonzero entries
  of the antisymmetric tensor (pairing q^k with p_k at +1 and p_k with q^k
  at -1), grouped by multiplicity.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Optional, Tuple, Union

from .observables import EnvelopePoly, Frame, FrameError, Poly
from .scalars import (
    CRational,
    FormalScalar,
    ScalarDomainError,
    _fr,
    const,
    lam,
)

STAR_KINDS = ("wick", "weyl", "wn")

FieldElem = Union[Poly, EnvelopePoly]
Gamma = Tuple[int, ...]

_I_CYCLE = (CRational(1), CRational(0, 1), CRational(-1), CRational(0, -1))


def _require_kind_frame(kind: str, frame: Frame):
    if kind not in STAR_KINDS:
        raise ScalarDomainError(f"unknown star product kind {kind!r}")
    needed = "weyl" if kind == "weyl" else "wick"
    if frame.kind != needed:
        raise FrameError(f"star kind {kind!r} requires a {needed} frame")


@lru_cache(maxsize=None)
def _il2_power(r: int) -> FormalScalar:
    # (i*lam/2)^r
    return lam(r) * const(_I_CYCLE[r % 4] * Fraction(1, 2**r))


@lru_cache(maxsize=None)
def _wick_coeff(order: int, mfact: int) -> FormalScalar:
    # (2*lam)^order / mfact
    return lam(order) * const(Fraction(2**order, mfact))


@lru_cache(maxsize=None)
def _weyl_coeff(r: int, sign: int, denom: int) -> FormalScalar:
    return _il2_power(r) * const(Fraction(sign, denom))


def _wick_star(f: Poly, g: Poly) -> Poly:
    n = f.frame.n
    out = Poly.zero(f.frame)

    def rec(df: Poly, dg: Poly, slot: int, order: int, mfact: int):
        nonlocal out
        if df.is_zero or dg.is_zero:
            return
        if slot == n:
            out = out + (df * dg).scale(_wick_coeff(order, mfact))
            return
        m = 0
        while True:
            rec(df, dg, slot + 1, order + m, mfact * math.factorial(m))
            df = df.deriv(slot)
            dg = dg.deriv(n + slot)
            if df.is_zero or dg.is_zero:
                return
            m += 1

    rec(f, g, 0, 0, 1)
    return out


def _all_derivs(x: FieldElem, total_max: int) -> Dict[Gamma, FieldElem]:
    """All nonvanishing derivatives d^gamma x with |gamma| <= total_max.

    Each gamma is produced once, extending exponents only at slots up to
    the first nonzero one, and zero branches are pruned.
    """
    dim = x.frame.dim
    root: Gamma = (0,) * dim
    table: Dict[Gamma, FieldElem] = {root: x}
    current = {root: x}
    for _ in range(total_max):
        nxt: Dict[Gamma, FieldElem] = {}
        for gamma, val in current.items():
            first = next((i for i, e in enumerate(gamma) if e), dim - 1)
            for i in range(first + 1):
                d = val.deriv(i)
                if d.is_zero:
                    continue
                child = gamma[:i] + (gamma[i] + 1,) + gamma[i + 1 :]
                nxt[child] = d
        if not nxt:
            break
        table.update(nxt)
        current = nxt
    return table


def _gamma_weight(gamma: Gamma) -> Tuple[int, int]:
    """(order r, a!*b!) for a derivative pattern gamma = (a, b)."""
    r = sum(gamma)
    denom = 1
    for e in gamma:
        denom *= math.factorial(e)
    return r, denom


def _weyl_sum(f: FieldElem, g: FieldElem, rmax: int, zero: FieldElem) -> FieldElem:
    n = f.frame.n
    dfs = _all_derivs(f, rmax)
    dgs = _all_derivs(g, rmax)
    out = zero
    for gamma, df in dfs.items():
        swapped = gamma[n:] + gamma[:n]
        dg = dgs.get(swapped)
        if dg is None:
            continue
        r, denom = _gamma_weight(gamma)
        sign = -1 if sum(gamma[n:]) % 2 else 1
        out = out + (df * dg).scale(_weyl_coeff(r, sign, denom))
    return out


def antisym_bidiff(f: FieldElem, g: FieldElem, r: int) -> FieldElem:
    """The r-th antisymmetric bidifferential term Lambda_r(f, g)
    (normalization such that f*g = sum_r (i*lam/2)^r Lambda_r(f, g))."""
    if f.frame != g.frame:
        raise FrameError("frame mismatch")
    if f.frame.kind != "weyl":
        raise FrameError("requires a weyl frame")
    n = f.frame.n
    dfs = _all_derivs(f, r)
    dgs = _all_derivs(g, r)
    if isinstance(f, EnvelopePoly):
        out: FieldElem = EnvelopePoly(
            Poly.zero(f.frame), f.width_q + g.width_q, f.width_p + g.width_p
        )
    else:
        out = Poly.zero(f.frame)
    for gamma, df in dfs.items():
        if sum(gamma) != r:
            continue
        swapped = gamma[n:] + gamma[:n]
        dg = dgs.get(swapped)
        if dg is None:
            continue
        _, denom = _gamma_weight(gamma)
        sign = -1 if sum(gamma[n:]) % 2 else 1
        out = out + (df * dg).scale(Fraction(sign, denom))
    return out


def star(kind: str, f: Poly, g: Poly) -> Poly:
    """Exact star product of two polynomials; the series terminates."""
    if f.frame != g.frame:
        raise FrameError("frame mismatch")
    _require_kind_frame(kind, f.frame)
    if kind in ("wick", "wn"):
        return _wick_star(f, g)
    rmax = min(f.total_degree(), g.total_degree())
    return _weyl_sum(f, g, rmax, Poly.zero(f.frame))


def star_envelope(f: EnvelopePoly, g: EnvelopePoly, order) -> EnvelopePoly:
    """Weyl-Moyal product on the enveloped class, truncated at lam-order.

    All bidifferential terms whose lam-prefactor lies below ``order`` are
    accumulated; envelope widths add; every coefficient of the result is
    truncated at ``order``.
    """
    order = _fr(order)
    if f.frame != g.frame:
        raise FrameError("frame mismatch")
    if f.frame.kind != "weyl":
        raise FrameError("enveloped star product requires a weyl frame")
    zero = EnvelopePoly(
        Poly.zero(f.frame), f.width_q + g.width_q, f.width_p + g.width_p
    )
    if f.is_zero or g.is_zero:
        return zero
    shift = f.lambda_valuation() + g.lambda_valuation()
    rmax = -1
    while Fraction(rmax + 1) + shift < order:
        rmax += 1
    if rmax < 0:
        return zero.lambda_truncate(order)
    return _weyl_sum(f, g, rmax, zero).lambda_truncate(order)


def commutator(kind: str, f: Poly, g: Poly) -> Poly:
    """Star commutator f*g - g*f."""
    return star(kind, f, g) - star(kind, g, f)


def delta_op(x: FieldElem) -> FieldElem:
    """The operator sum_k d^2/dq^k dp_k (weyl frame)."""
    if x.frame.kind != "weyl":
        raise FrameError("Delta requires a weyl frame")
    n = x.frame.n
    out = None
    for k in range(n):
        piece = x.deriv(k).deriv(n + k)
        out = piece if out is None else out + piece
    return out


def _exp_delta(x: FieldElem, prefactor: CRational) -> FieldElem:
    # sum_m prefactor^m lam^m Delta^m x / m!; terminates since Delta
    # strictly lowers the momentum degree of a p-polynomial
    if isinstance(x, EnvelopePoly) and x.width_p:
        raise ScalarDomainError(
            "exp(Delta) does not terminate under a momentum envelope"
        )
    out = x
    current = x
    m = 1
    power = CRational(1)
    while True:
        current = delta_op(current)
        if current.is_zero:
            return out
        power = power * prefactor
        coeff = lam(m) * const(power * Fraction(1, math.factorial(m)))
        out = out + current.scale(coeff)
        m += 1


def s_op(x: FieldElem) -> FieldElem:
    """S = exp(-i*lam/2 * Delta), exact on momentum-polynomial inputs."""
    return _exp_delta(x, CRational(0, Fraction(-1, 2)))


def s_inv_op(x: FieldElem) -> FieldElem:
    """S^{-1} = exp(+i*lam/2 * Delta)."""
    return _exp_delta(x, CRational(0, Fraction(1, 2)))


def star_momentum_right(f: FieldElem, k: int) -> FieldElem:
    """Exact Weyl-Moyal product f * p_k; terminates because p_k is linear:
    f * p_k = f·p_k + (i*lam/2) df/dq^k."""
    if f.frame.kind != "weyl":
        raise FrameError("requires a weyl frame")
    n = f.frame.n
    if not 0 <= k < n:
        raise FrameError("momentum index out of range")
    pk = Poly.variable(f.frame, n + k)
    half_i_lam = lam(1) * const(CRational(0, Fraction(1, 2)))
    return f * pk + f.deriv(k).scale(half_i_lam)


def star_momentum_left(f: FieldElem, k: int) -> FieldElem:
    """Exact Weyl-Moyal product p_k * f = p_k·f - (i*lam/2) df/dq^k."""
    if f.frame.kind != "weyl":
        raise FrameError("requires a weyl frame")
    n = f.frame.n
    if not 0 <= k < n:
        raise FrameError("momentum index out of range")
    pk = Poly.variable(f.frame, n + k)
    half_i_lam = lam(1) * const(CRational(0, Fraction(1, 2)))
    return f * pk - f.deriv(k).scale(half_i_lam)
