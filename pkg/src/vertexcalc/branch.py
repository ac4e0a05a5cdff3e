"""Multivalued powers through stored logarithms.

A :class:`LogPoint` is a nonzero complex number together with a chosen
logarithm. Powers are always ``x**n = exp(n * log x)``; other branches are
reached only through :func:`rotate`, which adds whole half-turns ``i*pi*k``
tracked as an exact integer.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Mapping

from ._numbers import as_exponent, half_turn_phase


class RegionError(ValueError):
    """Raised when points lie outside the convergence region of an expansion."""


class UntrackedExponentError(KeyError):
    """Raised when an exponent outside a series window is requested."""

    def __str__(self):
        return "untracked exponent" + (f": {self.args[0]}" if self.args else "")


@dataclass(frozen=True)
class LogPoint:
    """exp(log_re + i*(log_im + pi*half_turns)).

    ``log_im`` is the argument chosen at construction (in [0, 2pi) for
    :func:`principal`); ``half_turns`` counts explicit rotations.
    """

    log_re: float
    log_im: float
    half_turns: int = 0
    # exact value of the unrotated point when built from a complex number;
    # kept so that integer powers and differences do not go through exp(log z)
    base_value: complex | None = field(default=None, compare=False, repr=False)

    @property
    def ell(self) -> complex:
        return complex(self.log_re, self.log_im + math.pi * self.half_turns)

    @property
    def provenance(self) -> str:
        return "principal" if self.half_turns == 0 else f"rotated({self.half_turns})"

    @property
    def modulus(self) -> float:
        if self.base_value is not None:
            return abs(self.base_value)
        return math.exp(self.log_re)

    def value(self) -> complex:
        """The represented complex number."""
        if self.base_value is not None:
            return self.base_value * (-1) ** (self.half_turns % 2)
        return cmath.exp(complex(self.log_re, self.log_im)) * (-1) ** (self.half_turns % 2)

    def __pow__(self, n) -> complex:
        return power(self, n)

    def to_json(self) -> dict:
        return {"log_re": self.log_re, "log_im": self.log_im, "half_turns": self.half_turns}

    @classmethod
    def from_json(cls, d: Mapping) -> "LogPoint":
        k = int(d.get("half_turns", 0))
        base = cmath.exp(complex(d["log_re"], d["log_im"]))
        return cls(float(d["log_re"]), float(d["log_im"]), k, base)


def principal(z) -> LogPoint:
    """The logarithm of `z` with argument in [0, 2*pi)."""
    if isinstance(z, LogPoint):
        return LogPoint(z.log_re, z.log_im, 0, z.base_value)
    z = complex(z)
    if z == 0:
        raise ValueError("zero has no logarithm")
    arg = math.atan2(z.imag, z.real)
    if arg < 0:
        arg += 2 * math.pi
    if arg >= 2 * math.pi:
        arg = 0.0
    return LogPoint(math.log(abs(z)), arg, 0, z)


def rotate(p: LogPoint, k: int) -> LogPoint:
    """Add ``i*pi*k`` to the logarithm (k half-turns)."""
    return LogPoint(p.log_re, p.log_im, p.half_turns + int(k), p.base_value)


def power(p: LogPoint, n) -> complex:
    """exp(n * log p) on the stored branch."""
    given = n
    n = as_exponent(n)
    if isinstance(n, int) or (hasattr(n, "denominator") and n.denominator == 1):
        if p.base_value is not None:
            return complex(p.base_value ** int(n)) * (-1) ** ((p.half_turns * int(n)) % 2)
    # snapping is for matching exponents; evaluate floats as given
    nf = float(given) if isinstance(given, float) else float(n)
    base = cmath.exp(nf * complex(p.log_re, p.log_im))
    return base * half_turn_phase(n, p.half_turns)


def as_logpoint(z) -> LogPoint:
    return z if isinstance(z, LogPoint) else principal(z)


def in_double_region(z1, z2) -> bool:
    """True iff |z1| > |z2| > |z1 - z2| > 0 (moduli of the represented values)."""
    a, b = as_logpoint(z1).value(), as_logpoint(z2).value()
    return abs(a) > abs(b) > abs(a - b) > 0



@dataclass
class SubstitutionDiagnostics:
    blocks: int
    last_block_delta: float
    terms: int


def substitute(series, assignment: Mapping[str, LogPoint], order: Mapping[str, float] | None = None):
    """Evaluate a coefficient series at points given by LogPoints.

    Terms are summed in blocks of equal total exponent, in increasing order.
    `order` caps the summation exponent per variable; a cap beyond the window
    raises :class:`UntrackedExponentError`. Returns ``(value, diagnostics)``
    where ``diagnostics.last_block_delta`` is the modulus of the final
    block's contribution (a tail estimate).
    """
    missing = [v for v in series.vars if v not in assignment]
    if missing:
        raise ValueError(f"unassigned variables: {missing}")
    order = dict(order or {})
    for v, cap in order.items():
        lo, hi = series.window[v]
        if cap > hi:
            raise UntrackedExponentError(f"{v}^{cap} beyond window [{lo}, {hi}]")
    points = {v: as_logpoint(assignment[v]) for v in series.vars}
    blocks: dict = {}
    n = 0
    for exps, c in series.terms.items():
        if any(e > order.get(v, math.inf) for v, e in zip(series.vars, exps)):
            continue
        val = c
        for v, e in zip(series.vars, exps):
            if e != 0:
                val *= power(points[v], e)
        key = sum(exps)
        blocks[key] = blocks.get(key, 0) + val
        n += 1
    total = 0j
    last = 0.0
    for key in sorted(blocks):
        total += blocks[key]
        last = abs(blocks[key])
    return total, SubstitutionDiagnostics(len(blocks), last, n)
