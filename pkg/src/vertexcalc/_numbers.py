"""Small exact-number helpers shared by the series and branch code."""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational, Real

EXPONENT_TOL = 1e-12
ZERO_PRUNE = 1e-15

Exponent = Fraction | float


def as_exponent(x) -> Exponent:
    """Return `x` as a Fraction when it is (numerically) rational, else a float.

    Floats within 1e-12 of a fraction with denominator <= 10**6 are snapped,
    so 0.5 and Fraction(1, 2) become the same dictionary key.
    """
    if isinstance(x, bool):
        raise TypeError("exponent cannot be bool")
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, complex):
        if x.imag != 0:
            raise ValueError("complex exponents are not supported")
        x = x.real
    if not isinstance(x, Real):
        x = float(x)
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"exponent must be finite, got {x!r}")
    q = Fraction(x).limit_denominator(10**6)
    if abs(float(q) - x) <= EXPONENT_TOL:
        return q
    return x


def binomial(m, k: int):
    """Generalized binomial coefficient m(m-1)...(m-k+1)/k!.

    Exact (int or Fraction) for rational `m`, float or complex otherwise.
    """
    if k < 0:
        return 0
    if isinstance(m, int) or (isinstance(m, Fraction) and m.denominator == 1):
        m = int(m)
        if m >= 0:
            return math.comb(m, k)
        return (-1) ** k * math.comb(k - m - 1, k)
    if isinstance(m, Fraction):
        out = Fraction(1)
        for i in range(k):
            out *= (m - i) / (i + 1)
        return out
    out = 1.0
    for i in range(k):
        out *= (m - i) / (i + 1)
    return out


def falling(a, s: int):
    """Falling factorial a(a-1)...(a-s+1)."""
    out = 1
    for i in range(s):
        out *= a - i
    return out


def half_turn_phase(n, k: int) -> complex:
    """e^{i pi k n}, reducing k*n mod 2 exactly when n is rational."""
    if k == 0:
        return 1.0 + 0j
    n = as_exponent(n)
    if isinstance(n, Fraction):
        t = (n * k) % 2
        if t == 0:
            return 1.0 + 0j
        if t == 1:
            return -1.0 + 0j
        if t == Fraction(1, 2):
            return 1j
        if t == Fraction(3, 2):
            return -1j
        ang = math.pi * float(t)
    else:
        ang = math.pi * math.fmod(n * k, 2.0)
    return complex(math.cos(ang), math.sin(ang))
