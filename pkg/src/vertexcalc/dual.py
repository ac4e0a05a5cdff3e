"""Dual actions on truncated functionals on W1 (x) W2 (x) W3.

A functional is known on basis tuples of total level at most its cutoff.
The first action inserts ``Y_t(v, x0)`` multiplied by the product-region
delta factors; the second uses the iterate-region factors. Each action is
a sum of three terms, one per tensor slot: a two-factor delta product
times the functional with a module vertex operator applied in that slot.
Each coefficient of the result is a finite sum, because every delta factor
used here only contains nonnegative powers of the inserted variable.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct
from typing import Callable, Iterable, Mapping

from .branch import RegionError, UntrackedExponentError, as_logpoint, in_double_region
from .delta import DeltaProduct, Point, exponent_bounded_below, make_shape, side_coefficient
from .heisenberg import (DualVector, FockVector, Intertwiner, VirasoroAction, _mom, _tid,
                         iterate_correlator, partitions_of, product_correlator, standard_pair)

Triple = tuple  # three partitions


class InsufficientTruncation(ValueError):
    def __init__(self, detail: str = ""):
        super().__init__("insufficient truncation" + (f": {detail}" if detail else ""))


def conformal_vector() -> FockVector:
    """omega = a_{-1}^2 |0> / 2."""
    return FockVector(0, {(1, 1): Fraction(1, 2)})


def vacuum_vector() -> FockVector:
    return FockVector.vacuum(0)


def element_weight(v: FockVector) -> int:
    """Weight of a homogeneous vacuum-module vector."""
    if v.momentum != 0:
        raise ValueError("algebra elements live at momentum 0")
    levels = v.levels()
    if len(levels) != 1:
        raise ValueError("algebra element must be homogeneous")
    return levels[0]


def parse_tid(tid: str) -> Triple:
    parts = tid.split("|")
    if len(parts) != 3:
        raise ValueError(f"malformed tuple id {tid!r}")
    return tuple(() if p == "0" else tuple(int(x) for x in p.split(",")) for p in parts)


def tuples_upto(level: int) -> Iterable[Triple]:
    """Basis triples of total level <= level, in a fixed order."""
    for total in range(level + 1):
        for a in range(total + 1):
            for b in range(total - a + 1):
                c = total - a - b
                yield from iproduct(partitions_of(a), partitions_of(b), partitions_of(c))


def _level(tr: Triple) -> int:
    return sum(map(sum, tr))


class TruncatedFunctional:
    """A functional on W1 (x) W2 (x) W3 known on tuples of total level <= level.

    Values come from an explicit table, or from `source` evaluated lazily and
    cached. Tuples absent from both are zero.
    """

    def __init__(self, momenta, level: int, values: Mapping | None = None,
                 source: Callable[[Triple], complex] | None = None):
        if level < 0:
            raise ValueError("level must be nonnegative")
        self.momenta = tuple(_mom(p) for p in momenta)
        self.level = int(level)
        self._values = {tuple(map(tuple, k)): complex(v) for k, v in (values or {}).items()}
        for k in self._values:
            if _level(k) > self.level:
                raise ValueError("value given above the cutoff")
        self._source = source
        self._cache: dict = {}

    def __call__(self, tr: Triple) -> complex:
        if _level(tr) > self.level:
            raise InsufficientTruncation(f"tuple at level {_level(tr)} > {self.level}")
        if tr in self._values:
            return self._values[tr]
        if self._source is None:
            return 0j
        hit = self._cache.get(tr)
        if hit is None:
            hit = self._cache[tr] = complex(self._source(tr))
        return hit

    def tuples(self) -> Iterable[Triple]:
        return tuples_upto(self.level)

    def items(self):
        for tr in self.tuples():
            yield tr, self(tr)

    def materialize(self) -> "TruncatedFunctional":
        return TruncatedFunctional(self.momenta, self.level, {tr: c for tr, c in self.items() if c != 0})

    def max_abs(self) -> float:
        return max((abs(c) for _, c in self.items()), default=0.0)

    def _check(self, other):
        if self.momenta != other.momenta:
            raise ValueError("functionals on different modules")

    def __add__(self, other: "TruncatedFunctional") -> "TruncatedFunctional":
        self._check(other)
        level = min(self.level, other.level)
        return TruncatedFunctional(self.momenta, level, source=lambda tr: self(tr) + other(tr))

    def __sub__(self, other):
        return self + (-1) * other

    def __rmul__(self, c) -> "TruncatedFunctional":
        c = complex(c)
        return TruncatedFunctional(self.momenta, self.level, source=lambda tr: c * self(tr))

    def to_json(self) -> dict:
        return {
            "momenta": [str(p) for p in self.momenta],
            "level": self.level,
            "values": {_tid(*tr): [c.real, c.imag] for tr, c in self.items() if c != 0},
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "TruncatedFunctional":
        vals = {parse_tid(k): complex(*v) for k, v in d["values"].items()}
        return cls([Fraction(p) for p in d["momenta"]], d["level"], vals)


def zero_functional(momenta, level: int) -> TruncatedFunctional:
    return TruncatedFunctional(momenta, level)


def correlator_functional(momenta, wprime: DualVector, z1, z2, level: int, kind: str = "product",
                          L: int = 16) -> TruncatedFunctional:
    """w1 (x) w2 (x) w3 -> <w', Y1(w1, z1) Y2(w2, z2) w3>, or the iterate series.

    ``kind="iterate"`` evaluates the same function through
    ``<w', Y4(Y3(w1, z1 - z2) w2, z2) w3>``; `L` caps intermediate levels.
    """
    p1, p2, p3 = (_mom(p) for p in momenta)
    Y1, Y2, Y3, Y4 = standard_pair(p1, p2, p3)
    a, b = as_logpoint(z1), as_logpoint(z2)
    z0 = a.value() - b.value()

    def source(tr):
        w1, w2, w3 = (FockVector(p, {lam: 1}) for p, lam in zip((p1, p2, p3), tr))
        if kind == "product":
            return product_correlator(Y1, Y2, wprime, w1, w2, w3, a, b, L, check=False)[0]
        if kind == "iterate":
            return iterate_correlator(Y4, Y3, wprime, w1, w2, w3, z0, b, L, check=False)[0]
        raise ValueError(f"unknown correlator kind {kind!r}")

    return TruncatedFunctional((p1, p2, p3), level, source=source)


# ---------------------------------------------------------------- the two actions

@dataclass(frozen=True)
class Slot:
    position: int      # tensor slot receiving the vertex operator
    variable: str      # "x1", "x2", or "y" (insertion at x0^-1)
    shape: DeltaProduct


def _slot(pos, var, tag, f1, f2):
    shape = make_shape(tag, f1, f2)
    if not exponent_bounded_below(shape, var):
        raise AssertionError(f"{tag}: inserted variable not bounded below")
    return Slot(pos, var, shape)


PRODUCT_SLOTS = (
    _slot(0, "x1", "product.first", ("x2", "y", "-z2"), ("z1", "y", "-x1")),
    _slot(1, "x2", "product.second", ("-x1", "z1", "-y"), ("z2", "y", "-x2")),
    _slot(2, "y", "product.third", ("-x1", "z1", "-y"), ("-x2", "z2", "-y")),
)
ITERATE_SLOTS = (
    _slot(0, "x1", "iterate.first", ("z2", "y", "-x2"), ("z12", "x2", "-x1")),
    _slot(1, "x2", "iterate.second", ("z2", "y", "-x2"), ("-x1", "z12", "-x2")),
    _slot(2, "y", "iterate.third", ("-x2", "z2", "-y"), ("x1", "x2", "-z12")),
)
# the delta factors multiplying Y_t(v, x0) in the element the first action is applied to
OUTER_FACTORS = make_shape("product.outer", ("x1", "y", "-z1"), ("x2", "y", "-z2"))

Cell = tuple  # (r, s, t): exponents of x0, x1, x2


class FunctionalSeries:
    """Coefficients over (x0, x1, x2), each a truncated functional, on a finite set of cells."""

    vars = ("x0", "x1", "x2")

    def __init__(self, cells: Mapping[Cell, TruncatedFunctional], out_level: int):
        self.cells = dict(cells)
        self.out_level = out_level

    def coeff(self, cell: Cell) -> TruncatedFunctional:
        try:
            return self.cells[tuple(cell)]
        except KeyError:
            raise UntrackedExponentError(f"cell {tuple(cell)} not computed") from None

    @property
    def window(self) -> dict:
        out = {}
        for i, v in enumerate(self.vars):
            xs = [c[i] for c in self.cells]
            out[v] = (min(xs), max(xs)) if xs else (0, 0)
        return out

    def to_json(self) -> dict:
        return {"vars": list(self.vars), "out_level": self.out_level,
                "cells": [{"exp": dict(zip(self.vars, c)), "functional": f.to_json()}
                          for c, f in sorted(self.cells.items())]}


class _Engine:
    """Shared state for evaluating one action on one functional."""

    def __init__(self, slots, v: FockVector, lam: TruncatedFunctional, point: Point, terms: int):
        self.slots = slots
        self.lam = lam
        self.point = point
        self.terms = terms
        self.inserted = VirasoroAction.opposite_insertion(v)
        self.ops = [Intertwiner(0, p) for p in lam.momenta]
        self._delta: dict = {}

    def delta(self, shape, cell) -> complex:
        key = (shape.tag, cell)
        hit = self._delta.get(key)
        if hit is None:
            hit = self._delta[key] = side_coefficient(shape, *cell, self.point, terms=self.terms)
        return hit

    def value(self, cell: Cell, tr: Triple) -> complex:
        r, s, t = cell
        total = 0j
        for slot in self.slots:
            i = slot.position
            nu = tr[i]
            rest = _level(tr) - sum(nu)
            for e_v, u in self.inserted:
                for u_part, cu in u.coeffs.items():
                    wt_u = sum(u_part)
                    # the delta product needs a nonnegative power of the inserted variable
                    if slot.variable == "x1":
                        top = s + wt_u + sum(nu)
                    elif slot.variable == "x2":
                        top = t + wt_u + sum(nu)
                    else:
                        top = e_v - r + wt_u + sum(nu)
                    if top < 0:
                        continue
                    for mu, c in self.ops[i].coefficients(u_part, nu, top).items():
                        e = sum(mu) - wt_u - sum(nu)
                        if slot.variable == "x1":
                            dc = (r - e_v, s - e, t)
                        elif slot.variable == "x2":
                            dc = (r - e_v, s, t - e)
                        else:
                            dc = (r - e_v + e, s, t)
                        d = self.delta(slot.shape, dc)
                        if d == 0:
                            continue
                        if sum(mu) + rest > self.lam.level:
                            raise InsufficientTruncation(
                                f"cell {cell} needs level {sum(mu) + rest} > {self.lam.level}")
                        new = tr[:i] + (mu,) + tr[i + 1:]
                        total += complex(cu * c) * d * self.lam(new)
        return total

    def series(self, cells: Iterable[Cell], out_level: int) -> FunctionalSeries:
        out = {}
        for cell in cells:
            cell = tuple(int(x) for x in cell)
            vals = {tr: self.value(cell, tr) for tr in tuples_upto(out_level)}
            out[cell] = TruncatedFunctional(self.lam.momenta, out_level, vals)
        return FunctionalSeries(out, out_level)


def _check_element(v: FockVector):
    element_weight(v)


def default_cells(v: FockVector) -> list[Cell]:
    """x0 exponents around the insertion, x1 and x2 exponents in [-2, 0]."""
    w = element_weight(v)
    return [(r, s, t) for r in range(-2 * w - 2, 1) for s in range(-2, 1) for t in range(-2, 1)]


def tau1_apply(v: FockVector, lam: TruncatedFunctional, z1, z2, cells: Iterable[Cell] | None = None,
               out_level: int = 1, terms: int = 2000) -> FunctionalSeries:
    """Apply the product-region action to ``lam`` on the given (x0, x1, x2) cells.

    Returns functionals on tuples up to `out_level`. Delta sums that do not
    terminate are cut after `terms` values of their free index.
    """
    _check_element(v)
    cells = default_cells(v) if cells is None else cells
    return _Engine(PRODUCT_SLOTS, v, lam, Point(z1, z2), terms).series(cells, out_level)


def tau2_apply(v: FockVector, lam: TruncatedFunctional, z0, z2, cells: Iterable[Cell] | None = None,
               out_level: int = 1, terms: int = 2000) -> FunctionalSeries:
    """The iterate-region action, with ``z0`` playing z1 - z2 and ``z2`` the base point."""
    _check_element(v)
    cells = default_cells(v) if cells is None else cells
    a, b = as_logpoint(z0).value(), as_logpoint(z2).value()
    return _Engine(ITERATE_SLOTS, v, lam, Point(a + b, b), terms).series(cells, out_level)


@dataclass
class TauRow:
    cell: Cell
    tuple_id: str
    first: complex
    second: complex
    deviation: float
    passed: bool


@dataclass
class TauReport:
    z1: complex
    z2: complex
    tol: float
    out_level: int
    rows: list[TauRow]
    max_deviation: float
    passed: bool
    seconds: float
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"z1": [self.z1.real, self.z1.imag], "z2": [self.z2.real, self.z2.imag], "tol": self.tol,
                "out_level": self.out_level, "max_deviation": self.max_deviation, "passed": self.passed,
                "seconds": self.seconds, "notes": self.notes,
                "rows": [{"cell": list(r.cell), "tuple_id": r.tuple_id,
                          "first": [r.first.real, r.first.imag], "second": [r.second.real, r.second.imag],
                          "deviation": r.deviation, "pass": r.passed} for r in self.rows]}


def _dev(a: complex, b: complex) -> float:
    # absolute below unit magnitude, relative above
    return abs(a - b) / max(1.0, abs(a), abs(b))


def check_tau_equality(v: FockVector, lam: TruncatedFunctional, z1, z2, cells: Iterable[Cell] | None = None,
                       tol: float = 1e-6, out_level: int = 1, terms: int = 2000) -> TauReport:
    """Both actions on the same functional, compared cell by cell and tuple by tuple."""
    start = time.perf_counter()
    a, b = as_logpoint(z1), as_logpoint(z2)
    if not in_double_region(a, b):
        raise RegionError("points outside |z1| > |z2| > |z1 - z2| > 0")
    cells = list(default_cells(v) if cells is None else cells)
    first = tau1_apply(v, lam, a, b, cells, out_level, terms)
    second = tau2_apply(v, lam, a.value() - b.value(), b, cells, out_level, terms)
    rows, worst = [], 0.0
    for cell in first.cells:
        f, g = first.coeff(cell), second.coeff(cell)
        for tr in tuples_upto(out_level):
            x, y = f(tr), g(tr)
            d = _dev(x, y)
            worst = max(worst, d)
            rows.append(TauRow(cell, _tid(*tr), x, y, d, d <= tol))
    return TauReport(complex(a.value()), complex(b.value()), tol, out_level, rows, worst, worst <= tol,
                     time.perf_counter() - start)


def vertex_series(v: FockVector, lam: TruncatedFunctional, z1, z2, xs: Iterable[int], out_level: int = 0,
                  terms: int = 2000) -> dict[int, TruncatedFunctional]:
    """Coefficients of x0^r in the series ``Y'(v, x0) lam``, for r in `xs`.

    This is the residue in x1 and x2 of the first action, since each
    outer delta factor has residue one.
    """
    s = tau1_apply(v, lam, z1, z2, [(r, -1, -1) for r in xs], out_level, terms)
    return {c[0]: f for c, f in s.cells.items()}


def lprime0_apply(lam: TruncatedFunctional, z1, z2, out_level: int = 0, terms: int = 2000) -> TruncatedFunctional:
    """The weight operator on functionals: the x0^-2 coefficient of ``Y'(omega, x0) lam``."""
    return vertex_series(conformal_vector(), lam, z1, z2, [-2], out_level, terms)[-2]


# ---------------------------------------------------------------- compatibility

@dataclass
class TruncationRow:
    element: str
    lowest_supported: int
    lowest_nonzero: int | None
    margin: int
    passed: bool


@dataclass
class CompatibilityReport:
    z1: complex
    z2: complex
    tol: float
    cutoff: int
    truncation: list[TruncationRow]
    equality: list[TauRow]
    max_deviation: float
    passed: bool
    seconds: float

    def to_json(self) -> dict:
        return {
            "z1": [self.z1.real, self.z1.imag], "z2": [self.z2.real, self.z2.imag], "tol": self.tol,
            "cutoff": self.cutoff, "max_deviation": self.max_deviation, "passed": self.passed,
            "seconds": self.seconds,
            "lower_truncation": [r.__dict__ for r in self.truncation],
            "equality": [{"cell": list(r.cell), "tuple_id": r.tuple_id, "deviation": r.deviation,
                          "pass": r.passed} for r in self.equality],
        }


def _scan_down(v, lam, point_args, out_level, terms, r_top, depth):
    """x0-coefficients of Y'(v, x0) lam from r_top downward until the cutoff is reached.

    Elements whose insertions never outgrow the cutoff (the vacuum) stop after `depth` steps.
    """
    out = {}
    for r in range(r_top, r_top - depth - 1, -1):
        try:
            out.update(vertex_series(v, lam, *point_args, [r], out_level, terms))
        except InsufficientTruncation:
            break
    return out


def compatibility_check(lam: TruncatedFunctional, z1, z2, elements: Mapping[str, FockVector] | None = None,
                        cells: Iterable[Cell] | None = None, tol: float = 1e-6, out_level: int = 0,
                        margin: int = 2, terms: int = 2000) -> CompatibilityReport:
    """Lower truncation of ``Y'(v, x0) lam`` and its delta-multiplied form.

    (a) The x0-coefficients are scanned downward until the functional's cutoff
    stops the computation; the support must end at least `margin` exponents
    above that point. (b) The first action on the outer-delta element must
    equal the outer delta factors times ``Y'(v, x0) lam``.
    """
    start = time.perf_counter()
    a, b = as_logpoint(z1), as_logpoint(z2)
    if not in_double_region(a, b):
        raise RegionError("points outside |z1| > |z2| > |z1 - z2| > 0")
    elements = dict(elements or {"omega": conformal_vector()})
    cells = list(cells if cells is not None else
                 [(r, s, t) for r in range(-5, 1) for s in (-2, -1) for t in (-2, -1)])
    point = Point(a, b)
    outer: dict = {}
    trunc, eq_rows, worst = [], [], 0.0
    for name, v in elements.items():
        wt = element_weight(v)
        r_top = max(c[0] - c[1] - c[2] - 2 for c in cells) if cells else 2 * wt + 2
        depth = r_top + 2 * (lam.level + out_level + wt) + 2 * margin + 4
        series = _scan_down(v, lam, (a, b), out_level, terms, r_top, depth)
        lowest = min(series) if series else r_top + 1
        mags = {r: f.max_abs() for r, f in series.items()}
        scale = max([1.0] + list(mags.values()))
        nonzero = [r for r, m in mags.items() if m > tol * scale]
        low_nz = min(nonzero) if nonzero else None
        ok = low_nz is None or low_nz - lowest >= margin
        trunc.append(TruncationRow(name, lowest, low_nz, margin, ok))

        first = tau1_apply(v, lam, a, b, cells, out_level, terms)
        for cell in first.cells:
            r, s, t = cell
            f = first.coeff(cell)
            for tr in tuples_upto(out_level):
                rhs = 0j
                for rp, g in series.items():
                    if r - rp - s - t - 2 < 0:
                        continue
                    key = (r - rp, s, t)
                    if key not in outer:
                        outer[key] = side_coefficient(OUTER_FACTORS, *key, point)
                    d = outer[key]
                    if d:
                        rhs += d * g(tr)
                x = f(tr)
                dv = _dev(x, rhs)
                worst = max(worst, dv)
                eq_rows.append(TauRow(cell, _tid(*tr), x, rhs, dv, dv <= tol))
    passed = all(r.passed for r in trunc) and all(r.passed for r in eq_rows)
    return CompatibilityReport(complex(a.value()), complex(b.value()), tol, lam.level, trunc, eq_rows, worst,
                               passed, time.perf_counter() - start)
