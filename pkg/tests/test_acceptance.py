"""Acceptance gate: one check per criterion, each printing a single PASS/FAIL line.

Run directly (``python tests/test_acceptance.py``) or through pytest, where
the lines are written to the terminal even when output is captured.
"""

import math
import time
from fractions import Fraction as F
from itertools import product

import numpy as np
import pytest

from vertexcalc.branch import power, principal
from vertexcalc.delta import IDENTITIES, verify_identity
from vertexcalc.dual import (check_tau_equality, conformal_vector, correlator_functional, tuples_upto,
                             vacuum_vector, TruncatedFunctional)
from vertexcalc.expansion import exponent_support, fit_product_expansion, leading_extract, res_z
from vertexcalc.heisenberg import (DualVector, FockVector, Intertwiner, associativity_check, basis_tuples,
                                   intertwiner_matrix_coeff, iterate_correlator, omega, partitions_upto,
                                   product_correlator, standard_pair)

ASSOC_MOMENTA = [(1, 1, 0), (F(1, 2), F(1, 2), 1)]


def criterion_1():
    """Delta identities on [-3, 3]^3 at (1, 0.9), 400 terms, abs error <= 1e-8, <= 10 s."""
    grid = list(product(range(-3, 4), repeat=3))
    start = time.perf_counter()
    reps = [verify_identity(tag, 1, 0.9, grid, terms=400, tol=1e-8) for tag in IDENTITIES]
    secs = time.perf_counter() - start
    ok = all(r.verified for r in reps) and secs <= 10
    errs = ", ".join(f"{r.tag}={r.max_abs_err:.2e}" for r in reps)
    return ok, f"max abs err {errs}; {secs:.1f} s"


def criterion_2():
    """Plant-and-recover over 100 random series: exponents exact, coefficients <= 1e-6, residue matches."""
    rng = np.random.default_rng(20240)
    worst, failures = 0.0, 0
    for _ in range(100):
        n = int(rng.integers(1, 7))
        gaps = rng.choice([0.25, 0.5, 0.75, 1.0], size=n - 1)
        ms = np.concatenate([[rng.choice([-2.0, -1.5, -1.0, -0.5])], gaps]).cumsum()
        coeffs = rng.uniform(0.1, 10, n) * np.exp(1j * rng.uniform(-math.pi, math.pi, n))
        planted = list(zip(ms.tolist(), coeffs.tolist()))
        got = leading_extract(lambda z: sum(a * power(z, m) for m, a in planted), ms.tolist())
        want_res = next((a for m, a in planted if m == -1), 0)
        exact = got.exponents == ms.tolist()
        err = max(abs(a - b) for (_, a), b in zip(planted, got.coefficients)) if exact else math.inf
        worst = max(worst, err)
        if not (exact and err <= 1e-6 and abs(res_z(got) - want_res) <= 1e-6):
            failures += 1
    return failures == 0, f"{failures} of 100 failed; worst coefficient error {worst:.2e}"


def criterion_3():
    """Omega round trip reproduces matrix coefficients to <= 1e-10 at L = 10."""
    moms = [F(0), F(1, 2), F(1)]
    x = principal(0.8 + 0.3j)
    worst = 0.0
    for pa, pb in product(moms, repeat=2):
        Y = Intertwiner(pa, pb)
        back = omega(omega(Y, -1), 0)
        wp = DualVector(FockVector(Y.target, {m: 1 for m in partitions_upto(3)}))
        for nu, lam in product(partitions_upto(2), repeat=2):
            w1, w2 = FockVector(pa, {nu: 1}), FockVector(pb, {lam: 1})
            a = intertwiner_matrix_coeff(Y, wp, w1, w2, x, 10)[0]
            b = intertwiner_matrix_coeff(back, wp, w1, w2, x, 10)[0]
            worst = max(worst, abs(a - b))
    return worst <= 1e-10, f"max abs deviation {worst:.2e}"


def criterion_4():
    """Associativity, all tuples up to level 2 at (1, 0.9), L = 12: rel deviation <= 1e-6, <= 60 s."""
    start = time.perf_counter()
    reps = [associativity_check(*p, 1, 0.9, L=12, tol=1e-6, max_level=2) for p in ASSOC_MOMENTA]
    secs = time.perf_counter() - start
    ok = all(r.passed for r in reps) and secs <= 60
    devs = ", ".join(f"{tuple(str(x) for x in r.momenta)}={r.max_rel_dev:.3g}" for r in reps)
    bad = sum(1 for r in reps for row in r.rows if row.side == "product" and not row.converged)
    return ok, f"max rel deviation {devs}; {bad} tuples over tol; {secs:.1f} s"


def criterion_5():
    """Fit of the (1,1,0) correlator: one term, s = 1 within 1e-9, r + s = Delta exactly."""
    p = (1, 1, 0)
    Y1, Y2, Y3, Y4 = standard_pair(*p)
    wp = DualVector.basis(2)
    ws = [FockVector.vacuum(x) for x in p]

    def corr(z1, z2):
        z0 = principal(z1.value() - z2.value())
        return iterate_correlator(Y4, Y3, wp, *ws, z0, z2, 12, check=False)[0]

    fit = fit_product_expansion(corr, 1.0, [0.0])
    ok = (len(fit.terms) == 1 and abs(fit.terms[0].s - 1) <= 1e-9
          and all(t.r + t.s == fit.delta for t in fit.terms))
    desc = "; ".join(f"r={t.r}, s={t.s}" for t in fit.terms)
    return ok, f"{len(fit.terms)} term(s): {desc}; residual {fit.residual:.1e}"


def criterion_6():
    """Tau equality: vacuum reduces to the delta identities; omega on a level-8 functional <= 1e-6."""
    rng = np.random.default_rng(6)
    lam = TruncatedFunctional((1, 1, 0), 1, {tr: complex(*rng.uniform(-1, 1, 2)) for tr in tuples_upto(1)})
    vac = check_tau_equality(vacuum_vector(), lam, 1, 0.9, tol=1e-8, out_level=1, terms=400)
    prod_lam = correlator_functional((1, 1, 0), DualVector.basis(2), 1, 0.9, 8, "product", 12)
    om = check_tau_equality(conformal_vector(), prod_lam, 1, 0.9, tol=1e-6, out_level=1)
    return vac.passed and om.passed, (f"vacuum max deviation {vac.max_deviation:.2e}; "
                                      f"omega max deviation {om.max_deviation:.2e}")


def criterion_7():
    """Exponent classes mod 1 of every tested intertwiner number at most 2, L <= 16."""
    # the exponent depends on the three levels only; every level up to 16 is enumerated,
    # a superset of the exponents with nonzero coefficients
    moms = [F(0), F(1, 2), F(1), F(1, 3)]
    sizes = []
    for pa, pb in product(moms, repeat=2):
        for Y in (Intertwiner(pa, pb), omega(Intertwiner(pa, pb), -1)):
            exps = [Y.exponent((a,) if a else (), (b,) if b else (), (c,) if c else ())
                    for a, b, c in product(range(17), repeat=3)]
            sizes.append(len(exponent_support(exps)))
    return max(sizes) <= 2, f"{len(sizes)} intertwiners; largest support {max(sizes)}"


def _increments(f):
    v = [f(L) for L in (8, 10, 12, 14)]
    return [abs(b - a) for a, b in zip(v, v[1:])]


def criterion_8():
    """Level-cutoff contract on criterion 4's data: increments shrink by >= 2 at L = 8, 10, 12."""
    z0 = principal(0.1)
    total, bad = 0, {"product": 0, "iterate": 0}
    for p in ASSOC_MOMENTA:
        Y1, Y2, Y3, Y4 = standard_pair(*p)
        for _, wp, w1, w2, w3 in basis_tuples(*p, 2):
            sides = {
                "product": lambda L: product_correlator(Y1, Y2, wp, w1, w2, w3, 1, 0.9, L, check=False)[0],
                "iterate": lambda L: iterate_correlator(Y4, Y3, wp, w1, w2, w3, z0, 0.9, L, check=False)[0],
            }
            for side, f in sides.items():
                total += 1
                inc = _increments(f)
                # increments at rounding level count as converged
                floor = 1e-13 * max(1.0, abs(f(14)))
                if not all(b <= a / 2 or b <= floor for a, b in zip(inc, inc[1:])):
                    bad[side] += 1
    ok = sum(bad.values()) == 0
    return ok, f"{total} series; non-contracting product {bad['product']}, iterate {bad['iterate']}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8]


def _line(i, fn, ok, detail):
    head = fn.__doc__.strip().splitlines()[0]
    return f"criterion {i}: {'PASS' if ok else 'FAIL'} | {head} | {detail}"


@pytest.mark.parametrize("index", range(1, 9))
def test_criterion(index, capsys):
    fn = CRITERIA[index - 1]
    ok, detail = fn()
    with capsys.disabled():
        print("\n" + _line(index, fn, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    for i, fn in enumerate(CRITERIA, 1):
        print(_line(i, fn, *fn()), flush=True)
