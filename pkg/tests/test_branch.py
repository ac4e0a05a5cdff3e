import cmath
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from vertexcalc.branch import LogPoint, in_double_region, power, principal, rotate, substitute
from vertexcalc.formal_series import CoeffSeries


def test_principal_logs():
    assert principal(1).ell == 0
    assert principal(-1).ell == pytest.approx(complex(0, math.pi))
    assert principal(2).ell == pytest.approx(math.log(2))
    assert 0 <= principal(-1j).log_im < 2 * math.pi
    with pytest.raises(ValueError, match="zero has no logarithm"):
        principal(0)


def test_power_examples():
    assert power(principal(1), 0.5) == pytest.approx(1)
    assert power(rotate(principal(1), 1), 0.5) == pytest.approx(1j)
    assert power(principal(2), 3) == 8
    assert power(rotate(principal(1), 2), 0.5) == pytest.approx(-1)


def test_rotation_round_trip_and_provenance():
    p = principal(0.3 + 0.4j)
    q = rotate(p, 3)
    assert q.provenance == "rotated(3)" and p.provenance == "principal"
    assert rotate(q, -3) == p
    assert q.modulus == pytest.approx(p.modulus)
    assert q.value() == pytest.approx(-p.value())


def test_region_examples():
    assert in_double_region(1, 0.9)
    assert not in_double_region(2, 1)
    assert not in_double_region(1, 1)
    # a half-turn on z2 leaves |z2| unchanged
    assert in_double_region(principal(1), rotate(principal(0.9), 2))


def test_substitute_examples():
    assert substitute(CoeffSeries.unit(["x"]), {"x": principal(5)})[0] == 1
    n = 20
    geo = CoeffSeries(["x"], {"x": (0, n)}, {(l,): 1 for l in range(n + 1)})
    value, diag = substitute(geo, {"x": principal(0.5)})
    assert value == pytest.approx(2 - 2.0 ** -n, abs=1e-14)
    assert diag.last_block_delta == pytest.approx(2.0 ** -n)
    half = CoeffSeries(["x"], {"x": (0.5, 0.5)}, {(0.5,): 1})
    assert substitute(half, {"x": rotate(principal(1), 1)})[0] == pytest.approx(1j)
    with pytest.raises(KeyError):
        substitute(geo, {"x": principal(0.5)}, order={"x": n + 1})
    with pytest.raises(ValueError):
        substitute(geo, {})


def test_json_round_trip():
    p = rotate(principal(-2 + 1j), -5)
    q = LogPoint.from_json(p.to_json())
    assert q == p and q.value() == pytest.approx(p.value())


nonzero = st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False, allow_infinity=False)
reals = st.floats(-4, 4, allow_nan=False)


@given(nonzero, reals, reals)
def test_power_is_additive_in_exponent(z, m, n):
    p = principal(z)
    assert power(p, m + n) == pytest.approx(power(p, m) * power(p, n), rel=1e-12)


@given(nonzero, st.integers(-6, 6), st.fractions(-3, 3, max_denominator=8))
def test_rotation_multiplies_by_phase(z, k, n):
    p = principal(z)
    want = cmath.exp(1j * math.pi * k * float(n)) * power(p, n)
    assert power(rotate(p, k), n) == pytest.approx(want, rel=1e-12, abs=1e-300)


@given(nonzero, nonzero, st.integers(-4, 4))
def test_region_ignores_rotations(a, b, k):
    assert in_double_region(rotate(principal(a), k), rotate(principal(b), k)) == in_double_region(a, b)
