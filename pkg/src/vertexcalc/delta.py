"""Products of two formal delta functions and their coefficient grids.

A factor ``c^{-1} delta((a + b)/c)`` stands for ``sum_n c^{-n-1} (a + b)^n`` with
``(a + b)^n`` expanded in nonnegative powers of ``b``. Each of ``a``, ``b``,
``c`` is a signed atom: a formal variable (``y = x0^{-1}``, ``x1``, ``x2``) or a
number (``z1``, ``z2``, ``z12 = z1 - z2``).

The coefficient of ``x0^r x1^s x2^t`` in a product of two factors is a sum
over four integers ``(n, k, m, l)`` constrained by three exponent equations,
so it is a one-parameter sum. :func:`side_coefficient` solves the equations
once per shape and sums the free index in extended precision.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product as iproduct

import numpy as np

from ._numbers import binomial
from .branch import LogPoint, RegionError, as_logpoint
from .formal_series import CoeffSeries, ExpansionConvention, iota_expand, mul

FORMAL = ("y", "x1", "x2")
NUMERIC = ("z1", "z2", "z12")
SERIES_VARS = ("x0", "x1", "x2", "z1", "z2", "z12")


@dataclass(frozen=True)
class Atom:
    name: str
    sign: int = 1

    def __post_init__(self):
        if self.name not in FORMAL + NUMERIC:
            raise ValueError(f"unknown atom {self.name!r}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def __neg__(self):
        return Atom(self.name, -self.sign)

    def __str__(self):
        return ("-" if self.sign < 0 else "") + self.name


def _atom(text: str) -> Atom:
    return Atom(text[1:], -1) if text.startswith("-") else Atom(text.lstrip("+"))


@dataclass(frozen=True)
class DeltaFactor:
    """``v^{-1} delta((dominant + subordinate)/scale)`` where ``scale = +-v``.

    The prefactor is always the bare variable, so a negated scale contributes
    an overall sign.
    """

    scale: Atom
    dominant: Atom
    subordinate: Atom

    @classmethod
    def parse(cls, scale: str, dominant: str, subordinate: str) -> "DeltaFactor":
        return cls(_atom(scale), _atom(dominant), _atom(subordinate))

    def __str__(self):
        sub = str(self.subordinate)
        num = f"{self.dominant}{'' if sub.startswith('-') else '+'}{sub}"
        return f"({self.scale})^-1 d(({num})/({self.scale}))"


@dataclass(frozen=True)
class DeltaProduct:
    tag: str
    factors: tuple[DeltaFactor, DeltaFactor]

    @classmethod
    def from_tag(cls, tag: str) -> "DeltaProduct":
        try:
            return SHAPES[tag]
        except KeyError:
            raise ValueError(f"malformed tag {tag!r}") from None

    def __str__(self):
        return " * ".join(map(str, self.factors))


def make_shape(tag, f1, f2):
    return DeltaProduct(tag, (DeltaFactor.parse(*f1), DeltaFactor.parse(*f2)))


# The two sides of each identity. "outer" is the pair of factors multiplying
# Y_t(v, x0); the others are named after the tensor slot whose insertion they
# carry in the dual actions. The product side converges for |z1| > |z2|, the
# iterate side for |z2| > |z1 - z2|.
SHAPES = {
    s.tag: s
    for s in (
        make_shape("outer/product", ("x1", "y", "-z1"), ("x2", "y", "-z2")),
        make_shape("outer/iterate", ("x2", "y", "-z2"), ("x1", "x2", "-z12")),
        make_shape("first/product", ("z1", "y", "-x1"), ("x2", "y", "-z2")),
        make_shape("first/iterate", ("z2", "y", "-x2"), ("z12", "x2", "-x1")),
        make_shape("third/product", ("-x1", "z1", "-y"), ("-x2", "z2", "-y")),
        make_shape("third/iterate", ("-x2", "z2", "-y"), ("x1", "x2", "-z12")),
        make_shape("second/product", ("x1", "z1", "-y"), ("z2", "y", "-x2")),
        make_shape("second/iterate", ("z2", "y", "-x2"), ("x1", "z12", "-x2")),
    )
}
IDENTITIES = ("outer", "first", "second", "third")

# exponent of each slot as a linear function of (n, k, m, l), plus a constant
_SLOTS = (
    ((-1, 0, 0, 0), -1),  # scale 1
    ((1, -1, 0, 0), 0),   # dominant 1
    ((0, 1, 0, 0), 0),    # subordinate 1
    ((0, 0, -1, 0), -1),  # scale 2
    ((0, 0, 1, -1), 0),   # dominant 2
    ((0, 0, 0, 1), 0),    # subordinate 2
)


@dataclass
class _Solved:
    """Exponent bookkeeping of a shape with the free index eliminated."""

    free: int
    others: tuple[int, ...]
    inv: np.ndarray           # integer inverse of the formal 3x3 block
    formal_rows: np.ndarray   # 3x4
    formal_const: np.ndarray  # 3
    numeric_rows: np.ndarray  # 3x4
    numeric_const: np.ndarray
    sign_rows: np.ndarray     # parity of negated atoms, 1x4
    sign_const: int
    finite: bool
    slope: np.ndarray         # d(numeric exponents)/d(free index)


@lru_cache(maxsize=None)
def _solve(shape: DeltaProduct) -> _Solved:
    atoms = [f.scale for f in shape.factors[:1]] + [shape.factors[0].dominant, shape.factors[0].subordinate]
    f2 = shape.factors[1]
    atoms += [f2.scale, f2.dominant, f2.subordinate]
    rows = {a: np.zeros(4, dtype=np.int64) for a in FORMAL + NUMERIC}
    const = {a: 0 for a in FORMAL + NUMERIC}
    sign_row = np.zeros(4, dtype=np.int64)
    sign_const = 0
    for atom, (coef, c0) in zip(atoms, _SLOTS):
        rows[atom.name] += np.array(coef)
        const[atom.name] += c0
        if atom.sign < 0:
            sign_row += np.array(coef)
            sign_const += c0
    sign_const += sum(f.scale.sign < 0 for f in shape.factors)
    F = np.array([rows[a] for a in FORMAL])
    Fc = np.array([const[a] for a in FORMAL])
    N = np.array([rows[a] for a in NUMERIC])
    Nc = np.array([const[a] for a in NUMERIC])
    for free in (1, 3, 0, 2):
        others = tuple(i for i in range(4) if i != free)
        block = F[:, others]
        det = round(np.linalg.det(block))
        if abs(det) != 1:
            continue
        inv = np.rint(np.linalg.inv(block)).astype(np.int64)
        du = np.zeros(4, dtype=np.int64)
        du[free] = 1
        du[list(others)] = -inv @ F[:, free]
        # a binomial lower index that decreases along the free index ends the sum
        finite = du[1] < 0 or du[3] < 0 or free in (0, 2)
        return _Solved(free, others, inv, F, Fc, N, Nc, sign_row, sign_const, bool(finite), N @ du)
    raise ValueError(f"cannot parametrize {shape.tag}")


@lru_cache(maxsize=1 << 20)
def _binom_ld(n: int, k: int) -> np.longdouble:
    return np.longdouble(str(binomial(n, k)))


class _Powers:
    """Integer powers of a complex number in extended precision, tabulated."""

    def __init__(self, z):
        self.z = np.clongdouble(z)
        self.lo, self.hi = 0, 0
        self.table = np.ones(1, dtype=np.clongdouble)

    def __call__(self, e: np.ndarray) -> np.ndarray:
        lo, hi = int(e.min()), int(e.max())
        if lo < self.lo or hi > self.hi:
            lo, hi = min(lo, self.lo, -8), max(hi, self.hi, 8)
            if self.z == 0:
                raise ZeroDivisionError("pole")
            pos = np.cumprod(np.full(hi, self.z, dtype=np.clongdouble))
            neg = np.cumprod(np.full(-lo, 1 / self.z, dtype=np.clongdouble))[::-1]
            self.table = np.concatenate([neg, np.ones(1, dtype=np.clongdouble), pos])
            self.lo, self.hi = lo, hi
        return self.table[e - self.lo]


@dataclass
class Point:
    """The numeric atoms for a pair (z1, z2), in extended precision."""

    z1: LogPoint
    z2: LogPoint
    powers: dict = field(default_factory=dict)

    def __post_init__(self):
        self.z1, self.z2 = as_logpoint(self.z1), as_logpoint(self.z2)
        v1 = np.clongdouble(self.z1.value())
        v2 = np.clongdouble(self.z2.value())
        self.values = {"z1": v1, "z2": v2, "z12": v1 - v2}
        self.powers = {k: _Powers(v) for k, v in self.values.items()}

    def ratio(self, slope) -> float:
        out = 1.0
        for name, d in zip(NUMERIC, slope):
            if d:
                out *= float(abs(self.values[name])) ** int(d)
        return out


def exponent_bounded_below(shape: DeltaProduct | str, var: str) -> bool:
    """True when every term of the shape has a nonnegative exponent of `var`.

    `var` is one of the formal atoms ``y``, ``x1``, ``x2``; this holds exactly
    when the variable only ever appears as a subordinate term.
    """
    if isinstance(shape, str):
        shape = DeltaProduct.from_tag(shape)
    sol = _solve(shape)
    i = FORMAL.index(var)
    row, c0 = sol.formal_rows[i], sol.formal_const[i]
    return c0 == 0 and row[0] == 0 and row[2] == 0 and row[1] >= 0 and row[3] >= 0


def side_converges(shape: DeltaProduct | str, z1, z2) -> bool:
    """Whether the coefficient sums of this side converge at (z1, z2)."""
    if isinstance(shape, str):
        shape = DeltaProduct.from_tag(shape)
    sol = _solve(shape)
    if sol.finite:
        return True
    pt = z1 if isinstance(z1, Point) else Point(z1, z2)
    if any(pt.values[n] == 0 for n, d in zip(NUMERIC, sol.slope) if d):
        return False
    return pt.ratio(sol.slope) < 1


def side_terms(shape: DeltaProduct, r: int, s: int, t: int, terms: int, point: Point):
    """Individual summands of the coefficient of x0^r x1^s x2^t, in summation order."""
    sol = _solve(shape)
    target = np.array([-r, s, t], dtype=np.int64)
    p = np.arange(terms, dtype=np.int64)
    u = np.zeros((4, terms), dtype=np.int64)
    u[sol.free] = p
    rhs = (target - sol.formal_const)[:, None] - sol.formal_rows[:, sol.free][:, None] * p
    u[list(sol.others)] = sol.inv @ rhs
    ok = (u[1] >= 0) & (u[3] >= 0)
    u = u[:, ok]
    if u.shape[1] == 0:
        return np.zeros(0, dtype=np.clongdouble)
    n, k, m, l = (row.tolist() for row in u)
    b = np.array([_binom_ld(a, c) * _binom_ld(d, e) for a, c, d, e in zip(n, k, m, l)], dtype=np.longdouble)
    val = b.astype(np.clongdouble)
    ex = sol.numeric_rows @ u + sol.numeric_const[:, None]
    for name, row in zip(NUMERIC, ex):
        if row.any():
            val = val * point.powers[name](row)
    parity = (sol.sign_rows @ u + sol.sign_const) % 2
    return np.where(parity == 1, -val, val)


def side_coefficient(shape: DeltaProduct | str, r: int, s: int, t: int, z1, z2=None, terms: int = 400) -> complex:
    """Partial sum (first `terms` values of the free index) of one coefficient."""
    if isinstance(shape, str):
        shape = DeltaProduct.from_tag(shape)
    point = z1 if isinstance(z1, Point) else Point(z1, z2)
    return complex(side_terms(shape, r, s, t, terms, point).sum())


# ---------------------------------------------------------------- closed forms

def _c(x):
    if isinstance(x, (int, float, complex)) and x == 0:
        return np.clongdouble(0)
    return np.clongdouble(as_logpoint(x).value())


def _check_region(cond: bool):
    if not cond:
        raise RegionError("wrong region for this expansion")


def coeff_series_product_region(r: int, s: int, t: int, z1, z2, terms: int = 400) -> complex:
    """Partial sum of the expansion valid for |z1| > |z2| (z1-derivatives taken termwise)."""
    a, b = _c(z1), _c(z2)
    _check_region(abs(a) > abs(b) > 0)
    if s < 0:
        return 0j
    out = np.clongdouble(0)
    for l in range(terms):
        e = r - t - 2 - l
        out += _binom_ld(-t - 1, l) * (-1) ** l * _binom_ld(e, s) * b ** l * a ** (e - s)
    return complex(out)


def coeff_series_iterate_region(r: int, s: int, t: int, z1, z2, terms: int = 400) -> complex:
    """Partial sum of the expansion valid for |z2| > |z1 - z2| > 0."""
    a, b = _c(z1), _c(z2)
    d = a - b
    _check_region(abs(b) > abs(d) > 0)
    if s < 0:
        return 0j
    out = np.clongdouble(0)
    for k in range(terms):
        c = _binom_ld(r - 1, k)
        if c == 0:
            break
        out += c * _binom_ld(k - t - 1, s) * b ** (r - 1 - k) * d ** (k - t - 1 - s)
    return complex(out)


def _closed_ld(tag: str, r: int, s: int, t: int, a, b):
    d = a - b
    if a == 0 or d == 0 or (b == 0 and tag != "first"):
        raise ZeroDivisionError("pole")
    out = np.clongdouble(0)
    if tag == "outer":
        N = r - s - t - 2
        for k in range(N + 1):
            out += _binom_ld(-s - 1, k) * _binom_ld(-t - 1, N - k) * (-a) ** k * (-b) ** (N - k)
    elif tag == "first":
        for j in range(s + 1):
            out += _binom_ld(-t - 1, j) * _binom_ld(r - 1, s - j) * d ** (-t - 1 - j) * a ** (r - 1 - s + j)
    elif tag == "third":
        K = -r
        for k in range(K + 1):
            out += _binom_ld(-s - 1, k) * _binom_ld(-t - 1, K - k) * a ** (-s - 1 - k) * b ** (-t - 1 - K + k)
        if (s + t + K) % 2:
            out = -out
    elif tag == "second":
        for j in range(t + 1):
            out += (-1) ** j * _binom_ld(r - 1, t - j) * _binom_ld(-s - 1, j) * b ** (r - 1 - t + j) * d ** (-s - 1 - j)
    else:
        raise ValueError(f"malformed tag {tag!r}")
    return out


def closed_form_coeff(r: int, s: int, t: int, z1, z2, tag: str = "first") -> complex:
    """The rational function both sides of an identity converge to, at one cell."""
    return complex(_closed_ld(tag, r, s, t, _c(z1), _c(z2)))


# ------------------------------------------------------------------ expansion

def expand_side(expr: DeltaProduct | str, window: dict, terms: int = 40) -> CoeffSeries:
    """Both delta factors expanded into one series in x0, x1, x2 and formal z's.

    `window` bounds the exponents of x0, x1, x2. Each factor is built by
    :func:`iota_expand` over the delta-sum indices that can reach the window
    with at most `terms` binomial terms, the two truncated factors are
    multiplied with :func:`mul`, and the result is restricted to `window`.
    Within the window every coefficient is a polynomial in z1, z2, z12; see
    :func:`cell_series` and :func:`evaluate_cell`.
    """
    shape = DeltaProduct.from_tag(expr) if isinstance(expr, str) else expr
    sol = _solve(shape)
    grid = [range(int(window[v][0]), int(window[v][1]) + 1) for v in ("x0", "x1", "x2")]
    cols = []
    for r, s, t in iproduct(*grid):
        target = np.array([-r, s, t])
        p = np.arange(terms)
        u = np.zeros((4, terms), dtype=np.int64)
        u[sol.free] = p
        rhs = (target - sol.formal_const)[:, None] - sol.formal_rows[:, sol.free][:, None] * p
        u[list(sol.others)] = sol.inv @ rhs
        cols.append(u[:, (u[1] >= 0) & (u[3] >= 0)])
    u = np.concatenate(cols, axis=1)
    if u.shape[1] == 0:
        raise ValueError("no terms reach this window")
    f1 = _factor_series(shape.factors[0], u[0], u[1])
    f2 = _factor_series(shape.factors[1], u[2], u[3])
    full = mul(f1, f2)
    win = {v: tuple(window[v]) for v in ("x0", "x1", "x2")}
    win.update({v: full.window[v] for v in NUMERIC})
    return CoeffSeries(SERIES_VARS, win, full.terms)


def _var(atom: Atom) -> str:
    return "x0" if atom.name == "y" else atom.name


def _factor_series(f: DeltaFactor, ns: np.ndarray, ks: np.ndarray) -> CoeffSeries:
    """Truncation of one factor to the delta indices `ns` and binomial indices `ks` used."""
    conv = ExpansionConvention(_var(f.dominant), _var(f.subordinate))
    dom = ns - ks
    terms: dict = {}
    for n in sorted(set(ns.tolist())):
        sel = ns == n
        w = {_var(f.dominant): (int(dom[sel].min()), int(dom[sel].max())),
             _var(f.subordinate): (int(ks[sel].min()), int(ks[sel].max()))}
        part = iota_expand(f.dominant.sign, _var(f.dominant), f.subordinate.sign, _var(f.subordinate),
                           n, conv, w, vars=SERIES_VARS)
        scale = f.scale.sign ** ((-n) % 2)
        for e, c in part.terms.items():
            e = list(e)
            # iota_expand works in the atom y itself; store x0 = y^{-1} exponents
            for atom in (f.dominant, f.subordinate):
                if atom.name == "y":
                    e[0] = -e[0]
            e[SERIES_VARS.index(_var(f.scale))] += -n - 1
            key = tuple(e)
            terms[key] = terms.get(key, 0) + scale * c
    lo = {v: min((e[i] for e in terms), default=0) for i, v in enumerate(SERIES_VARS)}
    hi = {v: max((e[i] for e in terms), default=0) for i, v in enumerate(SERIES_VARS)}
    return CoeffSeries(SERIES_VARS, {v: (lo[v], hi[v]) for v in SERIES_VARS}, terms)


def cell_series(series: CoeffSeries, r: int, s: int, t: int) -> CoeffSeries:
    """The z-polynomial multiplying x0^r x1^s x2^t."""
    series.coeff({"x0": r, "x1": s, "x2": t, **{z: series.window[z][0] for z in NUMERIC}})
    terms = {e[3:]: c for e, c in series.terms.items() if e[:3] == (r, s, t)}
    return CoeffSeries(NUMERIC, {z: series.window[z] for z in NUMERIC}, terms)


def evaluate_cell(series: CoeffSeries, r: int, s: int, t: int, z1, z2) -> complex:
    from .branch import substitute

    z1, z2 = as_logpoint(z1), as_logpoint(z2)
    zs = {"z1": z1, "z2": z2, "z12": z1.value() - z2.value()}
    value, _ = substitute(cell_series(series, r, s, t), zs)
    return value


# --------------------------------------------------------------------- report

@dataclass
class Cell:
    r: int
    s: int
    t: int
    side: str
    value: complex
    closed: complex
    abs_err: float
    terms: int
    converged: bool
    note: str = ""


@dataclass
class CoeffReport:
    tag: str
    z1: complex
    z2: complex
    terms: int
    tol: float
    cells: list[Cell]
    side_status: dict
    elapsed: float = 0.0

    @property
    def verified(self) -> bool:
        return all(v == "verified" for v in self.side_status.values())

    @property
    def max_abs_err(self) -> float:
        errs = [c.abs_err for c in self.cells if not math.isnan(c.abs_err)]
        return max(errs, default=float("nan"))

    def failures(self) -> list[Cell]:
        return [c for c in self.cells if not c.converged]

    def to_json(self) -> dict:
        return {
            "tag": self.tag,
            "z1": [self.z1.real, self.z1.imag],
            "z2": [self.z2.real, self.z2.imag],
            "terms": self.terms,
            "tol": self.tol,
            "verified": self.verified,
            "side_status": self.side_status,
            "max_abs_err": self.max_abs_err,
            "elapsed": self.elapsed,
            "cells": [_cell_json(c) for c in self.cells],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(CSV_COLUMNS)
        for c in self.cells:
            w.writerow([c.r, c.s, c.t, c.side, repr(c.value.real), repr(c.value.imag),
                        repr(c.closed.real), repr(c.closed.imag), repr(c.abs_err), c.terms, int(c.converged)])
        return buf.getvalue()


CSV_COLUMNS = ["r", "s", "t", "side", "value_re", "value_im", "closed_re", "closed_im", "abs_err", "terms", "converged"]


def _cell_json(c: Cell) -> dict:
    out = {"r": c.r, "s": c.s, "t": c.t, "side": c.side,
           "value_re": c.value.real, "value_im": c.value.imag,
           "closed_re": c.closed.real, "closed_im": c.closed.imag,
           "abs_err": c.abs_err, "terms": c.terms, "converged": c.converged}
    if c.note:
        out["note"] = c.note
    return out


def default_grid(radius: int = 3):
    rng = range(-radius, radius + 1)
    return list(iproduct(rng, rng, rng))


def verify_identity(tag: str, z1, z2, grid=None, terms: int = 400, tol: float = 1e-8) -> CoeffReport:
    """Compare both sides of an identity with the closed form on a grid of cells.

    Each side is summed only where its own expansion converges; a side whose
    region fails is reported as ``"region violated"``.
    """
    tag = str(tag)
    if tag not in IDENTITIES:
        raise ValueError(f"malformed tag {tag!r}")
    start = time.perf_counter()
    grid = default_grid() if grid is None else list(grid)
    point = Point(z1, z2)
    a, b = point.values["z1"], point.values["z2"]
    cells, status = [], {}
    for side in ("product", "iterate"):
        shape = SHAPES[f"{tag}/{side}"]
        ok_region = side_converges(shape, point, None)
        all_ok = True
        for r, s, t in grid:
            try:
                closed = _closed_ld(tag, r, s, t, a, b)
            except ZeroDivisionError:
                cells.append(Cell(r, s, t, side, complex("nan"), complex("nan"), math.nan, terms, False, "pole"))
                all_ok = False
                continue
            if not ok_region:
                cells.append(Cell(r, s, t, side, complex("nan"), complex(closed), math.nan, 0, False, "region violated"))
                continue
            summands = side_terms(shape, r, s, t, terms, point)
            value = summands.sum()
            err = float(abs(value - closed))
            conv = err <= tol
            all_ok &= conv
            cells.append(Cell(r, s, t, side, complex(value), complex(closed), err, len(summands), conv))
        status[side] = "region violated" if not ok_region else ("verified" if all_ok else "failed")
    return CoeffReport(tag, complex(point.z1.value()), complex(point.z2.value()), terms, tol, cells, status,
                       time.perf_counter() - start)
