import json
import random
from fractions import Fraction as F

import pytest

from vertexcalc.branch import RegionError
from vertexcalc.delta import Point, side_coefficient
from vertexcalc.dual import (PRODUCT_SLOTS, InsufficientTruncation, TruncatedFunctional, check_tau_equality,
                             compatibility_check, conformal_vector, correlator_functional, element_weight,
                             lprime0_apply, tau1_apply, tau2_apply, tuples_upto, vacuum_vector, vertex_series,
                             zero_functional)
from vertexcalc.heisenberg import (DualVector, FockVector, Intertwiner, VirasoroAction, partitions_of,
                                   product_correlator, standard_pair)

P = (F(1, 2), F(1, 3), 1)


def _random_functional(momenta, level, seed):
    rng = random.Random(seed)
    return TruncatedFunctional(momenta, level, {tr: complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
                                                for tr in tuples_upto(level)})


def _same(a, b, tol=1e-10):
    assert a.cells.keys() == b.cells.keys()
    for c in a.cells:
        for tr in tuples_upto(a.out_level):
            assert a.coeff(c)(tr) == pytest.approx(b.coeff(c)(tr), abs=tol)


def test_element_weight():
    assert element_weight(conformal_vector()) == 2
    assert element_weight(vacuum_vector()) == 0
    with pytest.raises(ValueError):
        element_weight(FockVector(0, {(1,): 1, (2,): 1}))
    with pytest.raises(ValueError):
        element_weight(FockVector(1))


def test_functional_json_round_trip():
    lam = _random_functional(P, 2, 0)
    back = TruncatedFunctional.from_json(json.loads(json.dumps(lam.to_json())))
    assert back.momenta == lam.momenta
    for tr, c in lam.items():
        assert back(tr) == c
    with pytest.raises(InsufficientTruncation, match="insufficient truncation"):
        lam(((1, 1, 1), (), ()))


def test_vacuum_reduces_to_delta_sums():
    lam = _random_functional(P, 2, 1)
    cells = [(0, -1, -1), (-1, 0, -2), (-2, -1, 0)]
    out = tau1_apply(vacuum_vector(), lam, 1, 0.9, cells, out_level=2, terms=400)
    pt = Point(1, 0.9)
    for c in cells:
        dsum = sum(side_coefficient(s.shape, *c, pt, terms=400) for s in PRODUCT_SLOTS)
        for tr in tuples_upto(2):
            assert out.coeff(c)(tr) == pytest.approx(dsum * lam(tr), abs=1e-12)


def test_vacuum_equality_is_exact():
    rep = check_tau_equality(vacuum_vector(), _random_functional(P, 1, 2), 1, 0.9, out_level=1)
    assert rep.passed and rep.max_deviation < 1e-9


def test_zero_functional_gives_zero():
    lam = zero_functional(P, 6)
    for act, pt in ((tau1_apply, (1, 0.9)), (tau2_apply, (0.1, 0.9))):
        s = act(conformal_vector(), lam, *pt, [(-2, -1, -1), (0, -2, 0)])
        assert all(f.max_abs() == 0 for f in s.cells.values())
    assert lprime0_apply(lam, 1, 0.9).max_abs() == 0


def test_linearity():
    a, b = 0.7 - 0.2j, -1.3
    lam, mu = _random_functional(P, 4, 3), _random_functional(P, 4, 4)
    cells = [(-3, -1, -1), (-2, -2, 0), (0, -1, -2)]
    for act, pt in ((tau1_apply, (1, 0.9)), (tau2_apply, (0.1, 0.9))):
        lhs = act(conformal_vector(), a * lam + b * mu, *pt, cells, out_level=0, terms=300)
        one = act(conformal_vector(), lam, *pt, cells, out_level=0, terms=300)
        two = act(conformal_vector(), mu, *pt, cells, out_level=0, terms=300)
        for c in cells:
            assert lhs.coeff(c)(((), (), ())) == pytest.approx(
                a * one.coeff(c)(((), (), ())) + b * two.coeff(c)(((), (), ())), abs=1e-10)
        # in v, at fixed weight 2
        u = FockVector(0, {(2,): 1})
        mix = act(conformal_vector() + 3 * u, lam, *pt, cells, out_level=0, terms=300)
        alone = act(u, lam, *pt, cells, out_level=0, terms=300)
        for c in cells:
            assert mix.coeff(c)(((), (), ())) == pytest.approx(
                one.coeff(c)(((), (), ())) + 3 * alone.coeff(c)(((), (), ())), abs=1e-10)


def test_slot_shapes_against_identity_sides():
    pt = Point(1, 0.9)
    for c in [(0, 0, 0), (-1, 1, -2), (2, -1, 0), (-3, 2, 1)]:
        d = [side_coefficient(sl.shape, *c, pt, terms=400) for sl in PRODUCT_SLOTS]
        assert d[0] == pytest.approx(side_coefficient("first/product", *c, pt, terms=400), abs=1e-12)
        # x1 enters negated, one power of the bare prefactor included
        second = side_coefficient("second/product", *c, pt, terms=400)
        assert d[1] == pytest.approx((-1) ** (c[1] + 1) * second, abs=1e-12)
        assert d[2] == pytest.approx(side_coefficient("third/product", *c, pt, terms=400), abs=1e-12)


def _oracle(v, momenta, wprime, z1, z2, r, L):
    """x0^r coefficient of <Y_W4'(v, x0) w', Y1 Y2 w3> on lowest-weight w1, w2, w3.

    The opposite insertion acts on w' through the module vertex operator of
    the target module, then pairs with product-correlator components.
    """
    p4 = sum(momenta)
    Y4 = Intertwiner(0, p4)
    Y1, Y2, _, _ = standard_pair(*momenta)
    ws = [FockVector.vacuum(p) for p in momenta]
    out = 0j
    for e_v, u in VirasoroAction.opposite_insertion(v):
        for up, cu in u.coeffs.items():
            for lvl in range(0, 8):
                for m in partitions_of(lvl):
                    c = Y4.coefficients(up, m, sum(wprime)).get(tuple(wprime), 0)
                    e = sum(wprime) - sum(up) - lvl
                    if c == 0 or e_v - e != r:
                        continue
                    val = product_correlator(Y1, Y2, DualVector.basis(p4, m), *ws, z1, z2, L, check=False)[0]
                    out += complex(cu * c) * val
    return out


@pytest.mark.parametrize("wprime", [(), (1,)])
def test_first_action_matches_brute_force_insertion(wprime):
    z1, z2, L = 1, 0.3, 22
    lam = correlator_functional(P, DualVector.basis(sum(P), wprime), z1, z2, 8, "product", L)
    rs = [-2, -1, 0]
    got = vertex_series(conformal_vector(), lam, z1, z2, rs, out_level=0)
    for r in rs:
        want = _oracle(conformal_vector(), P, wprime, z1, z2, r, L)
        assert got[r](((), (), ())) == pytest.approx(want, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("wprime", [(), (1,), (2,)])
def test_weight_operator_eigenvalue(wprime):
    p = (1, 1, 0)
    lam = correlator_functional(p, DualVector.basis(2, wprime), 1, 0.9, 8, "iterate", 16)
    got = lprime0_apply(lam, 1, 0.9, out_level=1)
    wt = 2 + sum(wprime)
    for tr in tuples_upto(1):
        assert got(tr) == pytest.approx(wt * lam(tr), rel=1e-10, abs=1e-10)


def test_weight_operator_is_linear():
    lam, mu = _random_functional(P, 4, 5), _random_functional(P, 4, 6)
    lhs = lprime0_apply(2 * lam + (-1j) * mu, 1, 0.9)
    rhs = 2 * lprime0_apply(lam, 1, 0.9) + (-1j) * lprime0_apply(mu, 1, 0.9)
    assert lhs(((), (), ())) == pytest.approx(rhs(((), (), ())), abs=1e-10)


def test_equality_for_conformal_vector():
    lam = correlator_functional(P, DualVector.basis(sum(P)), 1, 0.9, 8, "product", 12)
    rep = check_tau_equality(conformal_vector(), lam, 1, 0.9, tol=1e-6, out_level=1)
    assert rep.passed, rep.max_deviation
    assert json.loads(json.dumps(rep.to_json()))["passed"]


def test_equality_rejects_region():
    with pytest.raises(RegionError):
        check_tau_equality(conformal_vector(), zero_functional(P, 4), 2, 1)
    with pytest.raises(RegionError):
        compatibility_check(zero_functional(P, 4), 2, 1)


def test_insufficient_truncation():
    lam = _random_functional(P, 1, 7)
    with pytest.raises(InsufficientTruncation):
        tau1_apply(conformal_vector(), lam, 1, 0.9, [(0, -1, -1)], out_level=1)


def test_compatibility_for_correlator_functional():
    lam = correlator_functional((1, 1, 0), DualVector.basis(2), 1, 0.9, 6, "iterate", 16)
    rep = compatibility_check(lam, 1, 0.9)
    assert rep.passed, rep.to_json()
    row = rep.truncation[0]
    assert row.lowest_nonzero - row.lowest_supported >= 2


def test_compatibility_flags_unbounded_pattern():
    # constant on every tuple: the x0 support runs down to the cutoff
    momenta = (1, 1, 0)
    lam = TruncatedFunctional(momenta, 6, {tr: 1 for tr in tuples_upto(6)})
    rep = compatibility_check(lam, 1, 0.9)
    assert not rep.passed
    assert not rep.truncation[0].passed


def test_compatibility_zero_functional():
    rep = compatibility_check(zero_functional((1, 1, 0), 6), 1, 0.9)
    assert rep.passed and rep.truncation[0].lowest_nonzero is None
