"""Truncated multivariable formal series with real exponents.

Every :class:`CoeffSeries` carries a window, a closed exponent interval per
variable. Coefficients inside the window are exact (up to float rounding);
outside it nothing is known. Each end of a window is flagged *hard* when the
underlying series is known to have no terms beyond it, which lets
:func:`mul` decide which product coefficients are still exact.
"""

from __future__ import annotations

import math
from operator import add
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from ._numbers import ZERO_PRUNE, as_exponent, binomial
from .branch import LogPoint, UntrackedExponentError, as_logpoint, power


def _key(x):
    # ints hash and compare equal to the Fractions they stand for
    if type(x) is int:
        return x
    e = as_exponent(x)
    if isinstance(e, float):
        return round(e, 12)
    return int(e) if e.denominator == 1 else e


def _num(e):
    if isinstance(e, Fraction) and e.denominator == 1:
        return int(e)
    return float(e)


def binomial_coeff(m, l: int):
    """m(m-1)...(m-l+1)/l!, exact for rational m."""
    if l < 0:
        raise ValueError("l must be nonnegative")
    return binomial(as_exponent(m) if not isinstance(m, complex) else m, l)


@dataclass(frozen=True)
class ExpansionConvention:
    """Which summand of a binomial is expanded in nonnegative powers."""

    dominant: str | None
    subordinate: str | None

    def __post_init__(self):
        if self.dominant == self.subordinate:
            raise ValueError("dominant and subordinate terms must differ")


class CoeffSeries:
    """Immutable truncated series ``sum c_e * prod v**e_v``."""

    __slots__ = ("_vars", "_window", "_hard", "_terms")

    def __init__(self, vars: Iterable[str], window: Mapping[str, tuple], terms: Mapping | None = None,
                 hard: Mapping[str, tuple[bool, bool]] | None = None):
        vars = tuple(vars)
        if len(set(vars)) != len(vars):
            raise ValueError("repeated variable")
        win = {}
        for v in vars:
            lo, hi = window[v]
            lo, hi = _key(lo), _key(hi)
            if lo > hi:
                raise ValueError(f"empty window for {v}")
            win[v] = (lo, hi)
        hard = dict(hard or {})
        self._vars = vars
        self._window = win
        self._hard = {v: tuple(hard.get(v, (True, True))) for v in vars}
        out = {}
        bounds = [win[v] for v in vars]
        for e, c in (terms or {}).items():
            if isinstance(e, Mapping):
                e = tuple(e.get(v, 0) for v in vars)
            e = tuple(_key(x) for x in e)
            if len(e) != len(vars):
                raise ValueError("exponent tuple length does not match alphabet")
            if not all(lo - 1e-12 <= x <= hi + 1e-12 for (lo, hi), x in zip(bounds, e)):
                continue
            out[e] = out.get(e, 0) + complex(c)
        self._terms = {e: c for e, c in out.items() if abs(c) >= ZERO_PRUNE}

    vars = property(lambda self: self._vars)
    window = property(lambda self: dict(self._window))
    hard = property(lambda self: dict(self._hard))
    terms = property(lambda self: dict(self._terms))

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if not isinstance(other, CoeffSeries):
            return NotImplemented
        return (self._vars == other._vars and self._window == other._window
                and self._terms == other._terms)

    def __repr__(self):
        return f"CoeffSeries(vars={self._vars}, window={self._window}, nterms={len(self._terms)})"

    def _tuple(self, e) -> tuple:
        if isinstance(e, Mapping):
            extra = set(e) - set(self._vars)
            if extra:
                raise ValueError(f"unknown variables {sorted(extra)}")
            return tuple(_key(e.get(v, 0)) for v in self._vars)
        if len(self._vars) == 1 and not isinstance(e, (tuple, list)):
            e = (e,)
        return tuple(_key(x) for x in e)

    def coeff(self, e) -> complex:
        """Coefficient at exponent `e` (a mapping or a tuple in alphabet order)."""
        t = self._tuple(e)
        for v, x in zip(self._vars, t):
            lo, hi = self._window[v]
            if not lo - 1e-12 <= x <= hi + 1e-12:
                raise UntrackedExponentError(f"{v}^{_num(x)} outside [{_num(lo)}, {_num(hi)}]")
        return self._terms.get(t, 0j)

    def res(self, var: str) -> "CoeffSeries":
        """Coefficient of ``var**-1``, with `var` removed from the alphabet."""
        i = self._vars.index(var)
        lo, hi = self._window[var]
        if not lo <= -1 <= hi:
            raise UntrackedExponentError(f"{var}^-1 outside [{_num(lo)}, {_num(hi)}]")
        keep = self._vars[:i] + self._vars[i + 1:]
        terms = {e[:i] + e[i + 1:]: c for e, c in self._terms.items() if e[i] == -1}
        return CoeffSeries(keep, {v: self._window[v] for v in keep}, terms,
                           {v: self._hard[v] for v in keep})

    def scale(self, c) -> "CoeffSeries":
        return CoeffSeries(self._vars, self._window, {e: c * x for e, x in self._terms.items()}, self._hard)

    def __add__(self, other: "CoeffSeries") -> "CoeffSeries":
        if self._vars != other._vars:
            raise ValueError("alphabet mismatch")
        win, hard = {}, {}
        for v in self._vars:
            (a, b), (c, d) = self._window[v], other._window[v]
            win[v] = (max(a, c), min(b, d))
            hard[v] = (self._hard[v][0] and other._hard[v][0] and a == c,
                       self._hard[v][1] and other._hard[v][1] and b == d)
        terms = dict(self._terms)
        for e, c in other._terms.items():
            terms[e] = terms.get(e, 0) + c
        return CoeffSeries(self._vars, win, terms, hard)

    def to_json(self) -> dict:
        return {
            "vars": list(self._vars),
            "window": {v: [_num(lo), _num(hi)] for v, (lo, hi) in self._window.items()},
            "terms": [
                {"exp": {v: _num(x) for v, x in zip(self._vars, e)}, "re": c.real, "im": c.imag}
                for e, c in sorted(self._terms.items())
            ],
            "hard": {v: list(h) for v, h in self._hard.items()},
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "CoeffSeries":
        vars = d["vars"]
        terms = {}
        for t in d["terms"]:
            e = tuple(t["exp"].get(v, 0) for v in vars)
            terms[e] = complex(t["re"], t.get("im", 0.0))
        hard = {v: tuple(h) for v, h in d.get("hard", {}).items()}
        return cls(vars, {v: tuple(w) for v, w in d["window"].items()}, terms, hard)

    @classmethod
    def unit(cls, vars: Iterable[str]) -> "CoeffSeries":
        vars = tuple(vars)
        return cls(vars, {v: (0, 0) for v in vars}, {(0,) * len(vars): 1})

    @classmethod
    def monomial(cls, vars: Iterable[str], exps: Mapping[str, object], c=1) -> "CoeffSeries":
        vars = tuple(vars)
        e = tuple(_key(exps.get(v, 0)) for v in vars)
        return cls(vars, {v: (x, x) for v, x in zip(vars, e)}, {e: c})


def iota_expand(a, u: str | None, b, v: str | None, r, conv: ExpansionConvention,
                window: Mapping[str, tuple], vars: Iterable[str] | None = None) -> CoeffSeries:
    """Expand ``(a*u + b*v)**r`` in nonnegative powers of the subordinate term.

    `u` and `v` are variable names or ``None`` for a plain number. Numeric
    factors may be complex or :class:`LogPoint`; non-integer powers of the
    dominant factor are taken on its stored branch (principal for plain
    complex input). The result is clipped to `window`.
    """
    if conv.subordinate == u and conv.dominant == v:
        a, u, b, v = b, v, a, u
    elif not (conv.subordinate == v and conv.dominant == u):
        raise ValueError("convention does not match the binomial's terms")
    r = as_exponent(r)
    vars = tuple(vars) if vars is not None else tuple(x for x in (u, v) if x is not None)
    win = {x: tuple(window[x]) if x in window else (0, 0) for x in vars}
    a_lp = as_logpoint(a)
    b_val = b.value() if isinstance(b, LogPoint) else complex(b)

    finite = isinstance(r, Fraction) and r.denominator == 1 and r >= 0
    l_max = int(r) if finite else math.inf
    if v is not None:
        l_max = min(l_max, math.floor(win[v][1] + 1e-12))
    if u is not None:
        l_max = min(l_max, math.floor(r - win[u][0] + 1e-12))
    if l_max == math.inf:
        raise ValueError("expansion of two numeric terms needs a finite exponent")
    l_min = 0
    if v is not None:
        l_min = max(0, math.ceil(win[v][0] - 1e-12))
    if u is not None:
        l_min = max(l_min, math.ceil(r - win[u][1] - 1e-12))

    terms = {}
    for l in range(l_min, int(l_max) + 1):
        c = complex(binomial(r, l)) * power(a_lp, r - l) * b_val ** l
        e = {}
        if u is not None:
            e[u] = r - l
        if v is not None:
            e[v] = e.get(v, 0) + l
        terms[tuple(e.get(x, 0) for x in vars)] = c

    hard = {}
    for x in vars:
        lo, hi = win[x]
        if x == v:
            hard[x] = (lo <= 0, finite and hi >= r)
        elif x == u:
            hard[x] = (finite and lo <= 0, hi >= r)
        else:
            hard[x] = (True, True)
    return CoeffSeries(vars, win, terms, hard)


def mul(s: CoeffSeries, t: CoeffSeries) -> CoeffSeries:
    """Product of two series; only exponents whose coefficients are exact are kept."""
    if s.vars != t.vars:
        raise ValueError("alphabet mismatch")
    ws, wt, hs, ht = s.window, t.window, s.hard, t.hard
    win, hard = {}, {}
    for v in s.vars:
        (lo1, hi1), (lo2, hi2) = ws[v], wt[v]
        lo, hi = lo1 + lo2, hi1 + hi2
        if not hs[v][0]:
            lo = max(lo, lo1 + hi2) if ht[v][1] else math.inf
        if not hs[v][1]:
            hi = min(hi, hi1 + lo2) if ht[v][0] else -math.inf
        if not ht[v][0]:
            lo = max(lo, lo2 + hi1) if hs[v][1] else math.inf
        if not ht[v][1]:
            hi = min(hi, hi2 + lo1) if hs[v][0] else -math.inf
        if lo > hi:
            raise ValueError(f"no exact coefficients survive in {v}")
        win[v] = (lo, hi)
        hard[v] = (hs[v][0] and ht[v][0] and lo == lo1 + lo2, hs[v][1] and ht[v][1] and hi == hi1 + hi2)
    out = {}
    for e1, c1 in s.terms.items():
        for e2, c2 in t.terms.items():
            e = tuple(map(_key, map(add, e1, e2)))
            out[e] = out.get(e, 0) + c1 * c2
    return CoeffSeries(s.vars, win, out, hard)
