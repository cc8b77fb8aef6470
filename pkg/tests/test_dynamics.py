"""Formal time evolution: jets, order raising, quotient-space dynamics."""

import random
from fractions import Fraction as F

import pytest

from gnsdeform.dynamics import (
    DivisibilityError,
    TimeSeriesPoly,
    classical_flow_jet,
    divide_by_i_lam,
    hamiltonian_hat_order,
    heisenberg_evolve,
    schrodinger_evolve,
    schrodinger_residual,
)
from gnsdeform.gns import WickVector
from gnsdeform.observables import Poly, weyl_frame, wick_frame
from gnsdeform.scalars import CRational, ScalarDomainError, ZERO, const, lam
from gnsdeform.star import star

W1 = weyl_frame(1)
Z1 = wick_frame(1)
q = Poly.variable(W1, 0)
p = Poly.variable(W1, 1)
z = Poly.variable(Z1, 0)
zb = Poly.variable(Z1, 1)

OSC_W = (q * q + p * p).scale(F(1, 2))
OSC_Z = (z * zb).scale(F(1, 2))


def rand_poly(rng, frame, max_deg=2, nterms=2, real=False):
    terms = {}
    for _ in range(nterms):
        exps = tuple(rng.randint(0, max_deg) for _ in range(frame.dim))
        im = 0 if real else rng.randint(-2, 2)
        coeff = const(CRational(F(rng.randint(-3, 3)), F(im)))
        terms[exps] = terms.get(exps, ZERO) + coeff
    return Poly(frame, terms)


def lam0_part(f: Poly) -> Poly:
    terms = {}
    for e, c in f.terms.items():
        c0 = c.coefficient(0)
        if not c0.is_zero:
            terms[e] = const(c0)
    return Poly(f.frame, terms)


def test_central_hamiltonian_freezes():
    jet = heisenberg_evolve(q, Poly.constant(W1, 1), "weyl", 5)
    assert jet.coeffs == {0: q}


def test_weyl_oscillator_rotation():
    jet = heisenberg_evolve(q, OSC_W, "weyl", 4)
    assert jet.coefficient(0) == q
    assert jet.coefficient(1) == p
    assert jet.coefficient(2) == q.scale(F(-1, 2))
    assert jet.coefficient(3) == p.scale(F(-1, 6))
    assert jet.coefficient(4) == q.scale(F(1, 24))
    oracle = classical_flow_jet(q, OSC_W, 4)
    assert jet == oracle  # quadratic flow has no quantum corrections


def test_wick_oscillator_lowering_phase():
    jet = heisenberg_evolve(z, OSC_Z, "wick", 4)
    phase = CRational(1)
    fact = 1
    for m in range(5):
        expect = z.scale(const(phase) * F(1, fact))
        assert jet.coefficient(m) == (expect if not expect.is_zero else None) or (
            jet.coefficient(m) == expect
        )
        phase = phase * CRational(0, -1)  # each step multiplies by -i
        fact *= m + 1
    # explicitly: coefficients (-i)^m z / m!
    assert jet.coefficient(1) == z.scale(const(CRational(0, -1)))
    assert jet.coefficient(2) == z.scale(const(CRational(F(-1, 2))))


def test_divisibility_guard():
    with pytest.raises(DivisibilityError):
        divide_by_i_lam(q)


def test_hat_order_quadratic_hamiltonian():
    rng = random.Random(71)
    for _ in range(10):
        g = rand_poly(rng, W1, max_deg=3)
        if g.is_zero:
            continue
        rem, (og, orem) = hamiltonian_hat_order(g, OSC_W)
        assert rem.is_zero
        assert orem is None


def test_hat_order_cubic_example():
    rem, orders = hamiltonian_hat_order(p, q * q * q)
    assert rem.is_zero  # third derivatives of p vanish
    # but a quadratic observable sees the lam^2 correction
    rem2, (og, orem) = hamiltonian_hat_order(p * p, q * q * q)
    assert not rem2.is_zero
    assert og == 0 and orem >= 2


def test_hat_order_zero_input():
    rem, orders = hamiltonian_hat_order(Poly.zero(W1), OSC_W)
    assert rem.is_zero
    assert orders == (None, None)


def test_hat_order_rejects_nonpositive_tail():
    bad = q.scale(lam(-1)) + p
    with pytest.raises(ScalarDomainError):
        hamiltonian_hat_order(p, bad)


def test_schrodinger_vacuum_stationary():
    traj = schrodinger_evolve(Poly.constant(Z1, 1), OSC_Z, "wick", 5)
    assert traj.vector(0) == WickVector.vacuum(1)
    assert all(m == 0 for m, _ in traj.vectors)
    rep = schrodinger_residual(traj, OSC_Z)
    assert rep.zero


def test_schrodinger_creation_phase():
    m_order = 5
    traj = schrodinger_evolve(zb, OSC_Z, "wick", m_order)
    phase = CRational(1)
    fact = 1
    for m in range(m_order + 1):
        expect = WickVector(1, {(1,): const(phase * F(1, fact))})
        assert traj.vector(m) == expect
        phase = phase * CRational(0, -1)  # e^{-i t}: each order adds -i
        fact *= m + 1
    rep = schrodinger_residual(traj, OSC_Z)
    assert rep.zero and rep.max_checked_order == m_order - 1


def test_schrodinger_rejects_hamiltonian_outside_ideal():
    with pytest.raises(ScalarDomainError):
        schrodinger_evolve(q, q, "weyl", 3)


def test_residual_detects_perturbation():
    traj = schrodinger_evolve(zb, OSC_Z, "wick", 4)
    broken = list(traj.vectors)
    m, v = broken[2]
    broken[2] = (m, v.scale(const(2)))
    from gnsdeform.dynamics import Trajectory

    bad = Trajectory(traj.kind, tuple(broken), traj.t_order)
    rep = schrodinger_residual(bad, OSC_Z)
    assert not rep.zero
    assert rep.first_failure is not None


def test_evolution_is_star_automorphism():
    rng = random.Random(72)
    t_order = 4
    for kind, frame, ham in (("weyl", W1, OSC_W), ("wick", Z1, OSC_Z)):
        for _ in range(10):
            f = rand_poly(rng, frame)
            g = rand_poly(rng, frame)
            jet_f = heisenberg_evolve(f, ham, kind, t_order)
            jet_g = heisenberg_evolve(g, ham, kind, t_order)
            jet_fg = heisenberg_evolve(star(kind, f, g), ham, kind, t_order)
            for m in range(t_order + 1):
                expect = Poly.zero(frame)
                for a in range(m + 1):
                    fa = jet_f.coefficient(a)
                    gb = jet_g.coefficient(m - a)
                    if fa is None or gb is None:
                        continue
                    expect = expect + star(kind, fa, gb)
                got = jet_fg.coefficient(m)
                assert (got or Poly.zero(frame)) == expect


def test_reality_preserved():
    rng = random.Random(73)
    for _ in range(10):
        f = rand_poly(rng, W1, real=True)
        ham = rand_poly(rng, W1, real=True)
        jet = heisenberg_evolve(f, ham, "weyl", 4)
        jet_conj = heisenberg_evolve(f.conj(), ham, "weyl", 4)
        for m in range(5):
            a = jet.coefficient(m)
            b = jet_conj.coefficient(m)
            if a is None and b is None:
                continue
            assert a is not None and b is not None
            assert a.conj() == b


def test_classical_part_matches_flow_oracle():
    rng = random.Random(74)
    quadratics = [
        OSC_W,
        (q * q).scale(F(1, 2)) + q * p,
        (p * p).scale(F(3, 2)) + q,
    ]
    cubics = [q * q * q, q * q * p, (p * p * p).scale(F(1, 3)) + q * q]
    for ham in quadratics + cubics:
        for _ in range(3):
            f = rand_poly(rng, W1, max_deg=2, real=True)
            jet = heisenberg_evolve(f, ham, "weyl", 5)
            oracle = classical_flow_jet(f, ham, 5)
            for m in range(6):
                got = jet.coefficient(m)
                want = oracle.coefficient(m)
                got0 = lam0_part(got) if got is not None else Poly.zero(W1)
                want0 = want if want is not None else Poly.zero(W1)
                assert got0 == want0


def test_trajectory_json():
    traj = schrodinger_evolve(zb, OSC_Z, "wick", 3)
    data = traj.to_json()
    assert data[0][0] == 0
    assert data[0][1]["n"] == 1


def test_time_series_json_round_trip():
    jet = heisenberg_evolve(q, OSC_W, "weyl", 3)
    back = TimeSeriesPoly.from_json(jet.to_json(), 3)
    assert back == jet
