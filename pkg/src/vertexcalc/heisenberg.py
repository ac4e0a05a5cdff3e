"""Rank-one free boson: Fock modules, intertwining operators, correlators.

Modes ``a_n`` satisfy ``[a_m, a_n] = m delta_{m+n,0}``; the module with
momentum ``p`` has basis ``a_{-lambda}|p>`` indexed by partitions, with
``a_0 = p`` and weight ``p^2/2 + |lambda|``.

The intertwining operator from momenta ``(pa, pb)`` to ``pa + pb`` is

    Y(|pa>, x) = E^-(x) E^+(x) e^{pa q} x^{pa a_0},

normalized so that the lowest-weight coefficient is ``x^{pa pb}``; values on
descendants follow from the commutator formula with the field ``a(x)``.
Between basis states every matrix coefficient is a single power of ``x``
fixed by the weights, so coefficients are stored with ``x = 1`` and the
power is restored at evaluation time.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product as iproduct
from typing import Iterable, Mapping

from ._numbers import as_exponent, half_turn_phase
from .branch import LogPoint, RegionError, as_logpoint, power, principal, rotate

Partition = tuple  # parts in weakly decreasing order


# ---------------------------------------------------------------- partitions

@lru_cache(maxsize=None)
def partitions_of(n: int, largest: int | None = None) -> tuple[Partition, ...]:
    if n == 0:
        return ((),)
    largest = n if largest is None else min(largest, n)
    out = []
    for k in range(largest, 0, -1):
        out.extend((k,) + rest for rest in partitions_of(n - k, k))
    return tuple(out)


@lru_cache(maxsize=None)
def partitions_upto(level: int) -> tuple[Partition, ...]:
    return tuple(lam for n in range(level + 1) for lam in partitions_of(n))


def add_part(lam: Partition, k: int) -> Partition:
    return tuple(sorted(lam + (k,), reverse=True))


def remove_part(lam: Partition, k: int) -> Partition:
    i = lam.index(k)
    return lam[:i] + lam[i + 1:]


def merge(a: Partition, b: Partition) -> Partition:
    return tuple(sorted(a + b, reverse=True))


# ---------------------------------------------------------------- states

def _mom(p):
    return as_exponent(p)


@dataclass(frozen=True)
class FockState:
    momentum: Fraction | float
    partition: Partition = ()

    def __post_init__(self):
        object.__setattr__(self, "momentum", _mom(self.momentum))
        part = tuple(sorted((int(k) for k in self.partition), reverse=True))
        if any(k <= 0 for k in part):
            raise ValueError("partition parts must be positive")
        object.__setattr__(self, "partition", part)

    @property
    def level(self) -> int:
        return sum(self.partition)

    @property
    def weight(self):
        return self.momentum ** 2 / 2 + self.level

    def vector(self, c=1) -> "FockVector":
        return FockVector(self.momentum, {self.partition: c})


def weight(s: FockState):
    """p^2/2 plus the level."""
    return s.weight


class FockVector:
    """Finite combination of basis states sharing one momentum."""

    __slots__ = ("momentum", "coeffs")

    def __init__(self, momentum, coeffs: Mapping[Partition, complex] | None = None):
        self.momentum = _mom(momentum)
        self.coeffs = {tuple(sorted(k, reverse=True)): v for k, v in (coeffs or {}).items() if v != 0}

    @classmethod
    def vacuum(cls, momentum=0) -> "FockVector":
        return cls(momentum, {(): 1})

    def __add__(self, other: "FockVector") -> "FockVector":
        if other.momentum != self.momentum:
            raise ValueError("cannot add vectors of different momenta")
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return FockVector(self.momentum, out)

    def __rmul__(self, c) -> "FockVector":
        return FockVector(self.momentum, {k: c * v for k, v in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-1) * other

    def __eq__(self, other):
        return isinstance(other, FockVector) and self.momentum == other.momentum and self.coeffs == other.coeffs

    def __repr__(self):
        return f"FockVector(p={self.momentum}, {self.coeffs})"

    def levels(self) -> list[int]:
        return sorted({sum(k) for k in self.coeffs})

    @property
    def max_level(self) -> int:
        return max((sum(k) for k in self.coeffs), default=0)

    def weight_of(self, lam: Partition):
        return self.momentum ** 2 / 2 + sum(lam)

    def is_zero(self) -> bool:
        return not self.coeffs


def grade_project(w: FockVector, n) -> FockVector:
    """The component of weight `n`."""
    n = as_exponent(n)
    return FockVector(w.momentum, {k: v for k, v in w.coeffs.items() if abs(w.weight_of(k) - n) <= 1e-12})


@dataclass
class DualVector:
    """Element of the contragredient module, written in the dual basis."""

    vector: FockVector

    @property
    def momentum(self):
        return self.vector.momentum

    def pair(self, w: FockVector | Mapping) -> complex:
        coeffs = w.coeffs if isinstance(w, FockVector) else w
        return sum(c * coeffs.get(k, 0) for k, c in self.vector.coeffs.items())

    @classmethod
    def basis(cls, momentum, partition: Partition = ()) -> "DualVector":
        return cls(FockVector(momentum, {tuple(partition): 1}))


# ---------------------------------------------------------------- modes

def mode(n: int, w: FockVector) -> FockVector:
    """a_n acting on a vector."""
    out: dict = defaultdict(int)
    if n == 0:
        return w.momentum * w
    for lam, c in w.coeffs.items():
        if n < 0:
            out[add_part(lam, -n)] += c
        else:
            mult = lam.count(n)
            if mult:
                out[remove_part(lam, n)] += n * mult * c
    return FockVector(w.momentum, out)


class VirasoroAction:
    """L(-1), L(0), L(1) and truncated exponentials on Fock vectors."""

    @staticmethod
    def L(n: int, w: FockVector) -> FockVector:
        if n not in (-1, 0, 1):
            raise ValueError("only L(-1), L(0), L(1) are provided")
        p = w.momentum
        out: dict = defaultdict(int)
        for lam, c in w.coeffs.items():
            if n == 0:
                out[lam] += (p * p / 2 + sum(lam)) * c
            elif n == -1:
                out[add_part(lam, 1)] += p * c
                for m in set(lam):
                    out[add_part(remove_part(lam, m), m + 1)] += m * lam.count(m) * c
            else:
                if 1 in lam:
                    out[remove_part(lam, 1)] += p * lam.count(1) * c
                for m in set(lam):
                    if m >= 2:
                        out[add_part(remove_part(lam, m), m - 1)] += m * lam.count(m) * c
        return FockVector(p, out)

    @classmethod
    def exp_L_minus1(cls, w: FockVector, x=1, order: int = 12) -> FockVector:
        """sum_{j <= order} x^j L(-1)^j / j! w."""
        out, term = w, w
        for j in range(1, order + 1):
            term = (x / j) * cls.L(-1, term)
            if term.is_zero():
                break
            out = out + term
        return out

    @classmethod
    def exp_L1(cls, w: FockVector, x=1, order: int = 12) -> FockVector:
        out, term = w, w
        for j in range(1, order + 1):
            term = (x / j) * cls.L(1, term)
            if term.is_zero():
                break
            out = out + term
        return out

    @classmethod
    def opposite_insertion(cls, v: FockVector) -> list[tuple[int, FockVector]]:
        """``(-x^{-2})^{L(0)} e^{-x^{-1} L(1)} v`` as a list of (x-exponent, vector).

        Requires integer weights, as for elements of the vacuum module.
        """
        out: dict = {}
        for lam, c in v.coeffs.items():
            h = v.weight_of(lam)
            if not (isinstance(h, Fraction) and h.denominator == 1):
                raise ValueError("opposite insertion needs integer weights")
            term = FockVector(v.momentum, {lam: c})
            j = 0
            while not term.is_zero():
                for mu, d in term.coeffs.items():
                    hm = int(v.weight_of(mu))
                    e = -2 * hm - j
                    sign = -1 if hm % 2 else 1
                    vec = out.setdefault(e, FockVector(v.momentum))
                    out[e] = vec + FockVector(v.momentum, {mu: sign * d})
                j += 1
                term = Fraction(-1, j) * cls.L(1, term)
        return sorted((e, w) for e, w in out.items() if not w.is_zero())

    @staticmethod
    def dual_L(n: int, wp: DualVector) -> DualVector:
        """L'(n) on the contragredient module: the transpose of L(-n)."""
        p = wp.momentum
        out: dict = defaultdict(int)
        for mu, c in wp.vector.coeffs.items():
            lvl = sum(mu) + n
            if lvl < 0:
                continue
            for nu in partitions_of(lvl):
                img = VirasoroAction.L(-n, FockVector(p, {nu: 1}))
                out[nu] += c * img.coeffs.get(mu, 0)
        return DualVector(FockVector(p, out))


# ---------------------------------------------------------------- intertwiners

def _binom(n: int, k: int) -> int:
    return math.comb(n, k)


@lru_cache(maxsize=None)
def _creation_exp(pa, level: int) -> dict:
    """Coefficients of E^-(1) = exp(pa sum_n a_{-n}/n) up to `level`."""
    if pa == 0:
        return {(): Fraction(1) if isinstance(pa, Fraction) else 1}
    out = {}
    for lam in partitions_upto(level):
        c = Fraction(1) if isinstance(pa, Fraction) else 1.0
        for n, m in Counter(lam).items():
            c *= (pa / n) ** m / math.factorial(m)
        out[lam] = c
    return out


@lru_cache(maxsize=None)
def _base_coeffs(pa, lam: Partition, lmax: int) -> tuple:
    """Y(|pa>, 1) a_{-lam}|pb>: E^- prod_i (a_{-lam_i} - pa), truncated at level lmax."""
    out: dict = defaultdict(int)
    counts = sorted(Counter(lam).items())
    for kept in iproduct(*[range(m + 1) for _, m in counts]):
        sigma = tuple(sorted((n for (n, _), k in zip(counts, kept) for _ in range(k)), reverse=True))
        size = sum(sigma)
        if size > lmax:
            continue
        c = 1
        for (n, m), k in zip(counts, kept):
            c *= _binom(m, k) * (-pa) ** (m - k)
        for rho, e in _creation_exp(pa, lmax - size).items():
            out[merge(rho, sigma)] += c * e
    return tuple((k, v) for k, v in out.items() if v != 0)


class Intertwiner:
    """Intertwining operator of momenta (pa, pb) -> pa + pb.

    `half_turns` rotates the formal variable: evaluation at x uses the
    logarithm of x plus ``i pi half_turns``.
    """

    def __init__(self, pa, pb, half_turns: int = 0):
        self.pa, self.pb = _mom(pa), _mom(pb)
        self.half_turns = int(half_turns)
        self._memo: dict = {}

    @property
    def target(self):
        return self.pa + self.pb

    def __repr__(self):
        return f"Intertwiner({self.pa}, {self.pb}, half_turns={self.half_turns})"

    def exponent(self, nu: Partition, lam: Partition, mu: Partition):
        return self.pa * self.pb + sum(mu) - sum(nu) - sum(lam)

    def coefficients(self, nu: Partition, lam: Partition, lmax: int) -> dict:
        """Output components of Y(a_{-nu}|pa>, 1) a_{-lam}|pb> up to level lmax."""
        key = (nu, lam, lmax)
        hit = self._memo.get(key)
        if hit is None:
            hit = self._memo[key] = self._compute(nu, lam, lmax)
        return hit

    def _compute(self, nu, lam, lmax) -> dict:
        if lmax < 0:
            return {}
        if not nu:
            return dict(_base_coeffs(self.pa, lam, lmax))
        k, rest = nu[0], nu[1:]
        out: dict = defaultdict(int)
        # modes of a(x) to the left of Y(w, x)
        for j in range(0, lmax - k + 1):
            c = _binom(k + j - 1, j)
            for mu, v in self.coefficients(rest, lam, lmax - k - j).items():
                out[add_part(mu, k + j)] += c * v
        # modes of a(x) to the right of Y(w, x)
        sign = 1 if k % 2 else -1
        for j in range(0, sum(lam) + 1):
            if j == 0:
                images = [(lam, self.pb)]
            else:
                mult = lam.count(j)
                images = [(remove_part(lam, j), j * mult)] if mult else []
            for lam2, f in images:
                c = sign * _binom(k + j - 1, j) * f
                for mu, v in self.coefficients(rest, lam2, lmax).items():
                    out[mu] += c * v
        return {m: v for m, v in out.items() if v != 0}


class SkewIntertwiner(Intertwiner):
    """``Omega(Y)(w2, x) w1 = e^{x L(-1)} Y(w1, e^{+-pi i} x) w2``.

    variant -1 uses ``e^{-pi i}``, variant 0 uses ``e^{pi i}``.
    """

    def __init__(self, base: Intertwiner, variant: int, half_turns: int = 0):
        if variant not in (-1, 0):
            raise ValueError("variant must be -1 or 0")
        super().__init__(base.pb, base.pa, half_turns)
        self.base = base
        self.variant = variant

    def __repr__(self):
        return f"SkewIntertwiner({self.base!r}, variant={self.variant})"

    def _compute(self, nu, lam, lmax) -> dict:
        turns = self.base.half_turns + (-1 if self.variant == -1 else 1)
        inner = self.base.coefficients(lam, nu, lmax)
        vec = {}
        for mu, c in inner.items():
            e = self.base.exponent(lam, nu, mu)
            vec[mu] = c * half_turn_phase(e, turns)
        w = FockVector(self.target, vec)
        w = VirasoroAction.exp_L_minus1(w, 1, order=lmax)
        return {m: v for m, v in w.coeffs.items() if sum(m) <= lmax and v != 0}


def omega(Y: Intertwiner, variant: int) -> SkewIntertwiner:
    return SkewIntertwiner(Y, variant)


def apply_intertwiner(Y: Intertwiner, w1: FockVector, w2: FockVector, x, lmax: int) -> dict:
    """Components (partition -> complex) of Y(w1, x) w2 up to level lmax."""
    x = rotate(as_logpoint(x), Y.half_turns)
    out: dict = defaultdict(complex)
    for nu, c1 in w1.coeffs.items():
        for lam, c2 in w2.coeffs.items():
            for mu, c in Y.coefficients(nu, lam, lmax).items():
                out[mu] += complex(c1 * c2 * c) * power(x, Y.exponent(nu, lam, mu))
    return dict(out)


def intertwiner_matrix_coeff(Y: Intertwiner, wprime: DualVector, w1: FockVector, w2: FockVector, x,
                             L: int | None = None) -> tuple[complex, bool]:
    """<w', Y(w1, x) w2>; the flag is False when momentum conservation forces zero."""
    if w1.momentum != Y.pa or w2.momentum != Y.pb:
        raise ValueError("vector momenta do not match the intertwiner")
    if wprime.momentum != Y.target:
        return 0j, False
    lmax = wprime.vector.max_level if L is None else min(L, wprime.vector.max_level)
    comps = apply_intertwiner(Y, w1, w2, x, lmax)
    return complex(wprime.pair(comps)), True


# ---------------------------------------------------------------- correlators

class ConvergenceError(ArithmeticError):
    pass


@dataclass
class ConvergenceReport:
    value: complex
    abs_sum: float
    tail: float
    blocks: list[complex]
    level: int

    def to_json(self) -> dict:
        return {"value": [self.value.real, self.value.imag], "abs_sum": self.abs_sum,
                "tail": self.tail, "level": self.level,
                "blocks": [[b.real, b.imag] for b in self.blocks]}


def _finish(blocks: list[complex], abs_sum: float, L: int, check: bool) -> tuple[complex, ConvergenceReport]:
    value = sum(blocks, 0j)
    tail = max((abs(b) for b in blocks[-2:]), default=0.0)
    head = max((abs(b) for b in blocks[: len(blocks) // 2 + 1]), default=0.0)
    if check and L >= 4 and tail > 0 and tail >= head:
        raise ConvergenceError(f"convergence not established at L={L}")
    return value, ConvergenceReport(value, abs_sum, tail, blocks, L)


def product_correlator(Y1: Intertwiner, Y2: Intertwiner, wprime: DualVector, w1: FockVector, w2: FockVector,
                       w3: FockVector, z1, z2, L: int = 12, check: bool = True):
    """sum_n <w', Y1(w1, z1) P_n Y2(w2, z2) w3> over intermediate levels n <= L."""
    z1, z2 = as_logpoint(z1), as_logpoint(z2)
    if not abs(z1.value()) > abs(z2.value()) > 0:
        raise RegionError("outside product region")
    if wprime.momentum != w1.momentum + w2.momentum + w3.momentum:
        return 0j, ConvergenceReport(0j, 0.0, 0.0, [], L)
    inner = apply_intertwiner(Y2, w2, w3, z2, L)
    lout = wprime.vector.max_level
    blocks = [0j] * (L + 1)
    abs_sum = 0.0
    for b, cb in inner.items():
        outer = apply_intertwiner(Y1, w1, FockVector(Y2.target, {b: 1}), z1, lout)
        term = cb * wprime.pair(outer)
        blocks[sum(b)] += term
        abs_sum += abs(term)
    return _finish(blocks, abs_sum, L, check)


def iterate_correlator(Y4: Intertwiner, Y3: Intertwiner, wprime: DualVector, w1: FockVector, w2: FockVector,
                       w3: FockVector, z0, z2, L: int = 12, check: bool = True):
    """sum_n <w', Y4(P_n Y3(w1, z0) w2, z2) w3> over intermediate levels n <= L."""
    z0, z2 = as_logpoint(z0), as_logpoint(z2)
    if not abs(z2.value()) > abs(z0.value()) > 0:
        raise RegionError("outside iterate region")
    if wprime.momentum != w1.momentum + w2.momentum + w3.momentum:
        return 0j, ConvergenceReport(0j, 0.0, 0.0, [], L)
    inner = apply_intertwiner(Y3, w1, w2, z0, L)
    lout = wprime.vector.max_level
    blocks = [0j] * (L + 1)
    abs_sum = 0.0
    for b, cb in inner.items():
        outer = apply_intertwiner(Y4, FockVector(Y3.target, {b: 1}), w3, z2, lout)
        term = cb * wprime.pair(outer)
        blocks[sum(b)] += term
        abs_sum += abs(term)
    return _finish(blocks, abs_sum, L, check)


def standard_pair(p1, p2, p3) -> tuple[Intertwiner, Intertwiner, Intertwiner, Intertwiner]:
    """(Y1, Y2, Y3, Y4) for the product Y1(w1) Y2(w2) w3 and iterate Y4(Y3(w1) w2) w3."""
    p1, p2, p3 = _mom(p1), _mom(p2), _mom(p3)
    return Intertwiner(p1, p2 + p3), Intertwiner(p2, p3), Intertwiner(p1, p2), Intertwiner(p1 + p2, p3)


def closed_lowest(p1, p2, p3, z1, z2) -> complex:
    """z1^{p1 p3} z2^{p2 p3} (z1 - z2)^{p1 p2} on principal branches."""
    z1, z2 = as_logpoint(z1), as_logpoint(z2)
    z12 = principal(z1.value() - z2.value())
    return power(z1, _mom(p1) * _mom(p3)) * power(z2, _mom(p2) * _mom(p3)) * power(z12, _mom(p1) * _mom(p2))


# ---------------------------------------------------------------- reports

HEIS_COLUMNS = ["p1", "p2", "p3", "tuple_id", "side", "r", "s", "t", "value_re", "value_im",
                "closed_re", "closed_im", "abs_err", "terms", "converged"]


@dataclass
class TupleRow:
    tuple_id: str
    side: str
    value: complex
    reference: complex
    abs_err: float
    rel_err: float
    terms: int
    converged: bool


@dataclass
class AssocReport:
    momenta: tuple
    z1: complex
    z2: complex
    level: int
    tol: float
    rows: list[TupleRow]
    max_rel_dev: float
    passed: bool
    elapsed: float = 0.0
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "momenta": [float(p) for p in self.momenta],
            "z1": [self.z1.real, self.z1.imag], "z2": [self.z2.real, self.z2.imag],
            "level": self.level, "tol": self.tol, "passed": self.passed,
            "max_rel_dev": self.max_rel_dev, "elapsed": self.elapsed, "notes": self.notes,
            "rows": [{"tuple_id": r.tuple_id, "side": r.side, "value": [r.value.real, r.value.imag],
                      "reference": [r.reference.real, r.reference.imag], "abs_err": r.abs_err,
                      "rel_err": r.rel_err, "converged": r.converged} for r in self.rows],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(HEIS_COLUMNS)
        p1, p2, p3 = (float(p) for p in self.momenta)
        for r in self.rows:
            w.writerow([p1, p2, p3, r.tuple_id, r.side, "", "", "", repr(r.value.real), repr(r.value.imag),
                        repr(r.reference.real), repr(r.reference.imag), repr(r.abs_err), r.terms, int(r.converged)])
        return buf.getvalue()


def _tid(*parts) -> str:
    return "|".join(",".join(map(str, p)) or "0" for p in parts)


def basis_tuples(p1, p2, p3, max_level: int = 2):
    """All (w', w1, w2, w3) basis tuples with every state at level <= max_level."""
    basis = partitions_upto(max_level)
    total = _mom(p1) + _mom(p2) + _mom(p3)
    for l4, l1, l2, l3 in iproduct(basis, repeat=4):
        yield (_tid(l4, l1, l2, l3), DualVector.basis(total, l4), FockVector(p1, {l1: 1}),
               FockVector(p2, {l2: 1}), FockVector(p3, {l3: 1}))


def _rel(a: complex, b: complex) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 1e-300 else 0.0


def associativity_check(p1, p2, p3, z1=1.0, z2=0.9, L: int = 12, tol: float = 1e-6, max_level: int = 2,
                        tuples=None, z0=None, check: bool = False) -> AssocReport:
    """Product at (z1, z2) against iterate at (z1 - z2, z2) on basis tuples."""
    from .branch import in_double_region

    start = time.perf_counter()
    z1, z2 = as_logpoint(z1), as_logpoint(z2)
    if not in_double_region(z1, z2):
        raise RegionError("points outside |z1| > |z2| > |z1 - z2| > 0")
    z0 = principal(z1.value() - z2.value()) if z0 is None else as_logpoint(z0)
    Y1, Y2, Y3, Y4 = standard_pair(p1, p2, p3)
    vals = []
    for tid, wp, w1, w2, w3 in (tuples if tuples is not None else basis_tuples(p1, p2, p3, max_level)):
        P, _ = product_correlator(Y1, Y2, wp, w1, w2, w3, z1, z2, L, check)
        I, _ = iterate_correlator(Y4, Y3, wp, w1, w2, w3, z0, z2, L, check)
        vals.append((tid, P, I))
    # tuples that vanish identically come out as rounding noise on both sides
    floor = 1e-12 * max([1.0] + [max(abs(P), abs(I)) for _, P, I in vals])
    rows, worst = [], 0.0
    for tid, P, I in vals:
        rel = abs(P - I) / max(abs(P), abs(I), floor)
        worst = max(worst, rel)
        rows.append(TupleRow(tid, "product", P, I, abs(P - I), rel, L, rel <= tol))
        rows.append(TupleRow(tid, "iterate", I, P, abs(P - I), rel, L, rel <= tol))
    return AssocReport((_mom(p1), _mom(p2), _mom(p3)), complex(z1.value()), complex(z2.value()), L, tol,
                       rows, worst, worst <= tol, time.perf_counter() - start)


@dataclass
class SkewChainReport:
    iterate: complex
    chain: complex
    product: complex | None
    rel_dev: float
    passed: bool
    phase_mismatch: bool = False

    def to_json(self) -> dict:
        c = lambda z: None if z is None else [z.real, z.imag]  # noqa: E731
        return {"iterate": c(self.iterate), "chain": c(self.chain), "product": c(self.product),
                "rel_dev": self.rel_dev, "passed": self.passed, "phase_mismatch": self.phase_mismatch}


def skew_chain_check(Y3: Intertwiner, Y4: Intertwiner, wprime: DualVector, w1: FockVector, w2: FockVector,
                     w3: FockVector, z1, z2, L: int = 12, tol: float = 1e-6, rotation: int = 1,
                     Y1: Intertwiner | None = None, Y2: Intertwiner | None = None) -> SkewChainReport:
    """Iterate at (z1 - z2, z2) against the chain through the skew-symmetric operator.

    The iterate ``<w', Y4(Y3(w1, z0) w2, z2) w3>`` is compared with
    ``sum_b <w', e^{z2 L(-1)} Omega_{-1}(Y4)(w3, e^{pi i} z2) b><b*, Y3(w1, z0) w2>``.
    `rotation` = -1 replaces ``e^{pi i}`` with ``e^{-pi i}``; the report then
    flags a phase mismatch whenever the result changes.
    """
    from .branch import in_double_region

    z1, z2 = as_logpoint(z1), as_logpoint(z2)
    if not in_double_region(z1, z2):
        raise RegionError("points outside |z1| > |z2| > |z1 - z2| > 0")
    z0 = principal(z1.value() - z2.value())
    I, _ = iterate_correlator(Y4, Y3, wprime, w1, w2, w3, z0, z2, L, check=False)
    skew = omega(Y4, -1)
    x = rotate(z2, rotation)
    lout = wprime.vector.max_level
    inner = apply_intertwiner(Y3, w1, w2, z0, L)
    chain = 0j
    for b, cb in inner.items():
        comps = apply_intertwiner(skew, w3, FockVector(Y3.target, {b: 1}), x, lout)
        vec = FockVector(skew.target, comps)
        shifted = VirasoroAction.exp_L_minus1(vec, complex(z2.value()), order=lout)
        chain += cb * wprime.pair(shifted)
    P = None
    if Y1 is not None and Y2 is not None:
        P, _ = product_correlator(Y1, Y2, wprime, w1, w2, w3, z1, z2, L, check=False)
    rel = _rel(I, chain)
    return SkewChainReport(I, chain, P, rel, rel <= tol, phase_mismatch=rel > tol)


# ---------------------------------------------------------------- config

@dataclass
class ModelConfig:
    momenta: tuple
    level: int = 12
    normalization: str = "unit-lowest-weight"

    def to_json(self) -> dict:
        return {"momenta": [float(p) for p in self.momenta], "level": self.level,
                "normalization": self.normalization}

    @classmethod
    def from_json(cls, d: Mapping | str) -> "ModelConfig":
        if isinstance(d, str):
            d = json.loads(d)
        if d.get("normalization", "unit-lowest-weight") != "unit-lowest-weight":
            raise ValueError("only the unit lowest-weight normalization is supported")
        return cls(tuple(_mom(p) for p in d["momenta"]), int(d.get("level", 12)),
                   d.get("normalization", "unit-lowest-weight"))
