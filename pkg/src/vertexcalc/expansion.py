"""Real-exponent expansions: recovering terms from samples, residues, fits.

Functions of a single complex variable are sampled on a geometric schedule
of radii ``r0 * rho**k`` at several angles, and their expansion
``sum_i a_i z**m_i`` over a supplied set of candidate exponents is recovered
term by term from the smallest exponent upward. Two-variable correlators are
fitted to ``sum_i z2**r_i (z1-z2)**s_i f_i((z1-z2)/z2)`` with ``r_i + s_i``
fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._numbers import EXPONENT_TOL, as_exponent
from .branch import LogPoint, power, principal, rotate


@dataclass(frozen=True)
class RealExpSeries:
    """Finite sum ``sum_i a_i z**m_i`` with strictly increasing exponents."""

    terms: tuple[tuple[float, complex], ...] = ()

    def __post_init__(self):
        ms = [m for m, _ in self.terms]
        if any(b - a <= EXPONENT_TOL for a, b in zip(ms, ms[1:])):
            raise ValueError("exponents must be strictly increasing")
        if any(a == 0 for _, a in self.terms):
            raise ValueError("coefficients must be nonzero")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, complex]]) -> "RealExpSeries":
        return cls(tuple(sorted((float(m), complex(a)) for m, a in pairs)))

    def __call__(self, z) -> complex:
        p = z if isinstance(z, LogPoint) else principal(z)
        return sum(a * power(p, m) for m, a in self.terms)

    def __len__(self):
        return len(self.terms)

    @property
    def exponents(self) -> list[float]:
        return [m for m, _ in self.terms]

    @property
    def coefficients(self) -> list[complex]:
        return [a for _, a in self.terms]


@dataclass
class Sampler:
    """A function of a LogPoint together with the annulus where it may be sampled."""

    func: Callable[[LogPoint], complex]
    inner: float = 0.0
    outer: float = math.inf

    def __post_init__(self):
        if self.inner < 0 or self.outer <= self.inner:
            raise ValueError("invalid sampling annulus")

    def __call__(self, z: LogPoint) -> complex:
        return self.func(z)


def radii_schedule(r0: float = 0.1, rho: float = 0.5, steps: int = 8) -> np.ndarray:
    return r0 * rho ** np.arange(steps)


DEFAULT_ANGLES = tuple(2 * math.pi * (j + 0.5) / 6 for j in range(6))


def leading_extract(f: Callable | Sampler, lattice: Iterable[float], tol: float = 1e-8,
                    radii: Sequence[float] | None = None, angles: Sequence[float] = DEFAULT_ANGLES,
                    half_turns: int = 0, sheets: int | None = None) -> RealExpSeries:
    """Recover the expansion of `f` over the candidate exponents `lattice`.

    The smallest candidate whose limit ``z**-m f(z)`` (as |z| -> 0) is nonzero
    is found first. The limit is estimated by a least-squares Richardson
    extrapolation that models the remainder with the gaps to the larger
    candidates. The term is subtracted and the search continues upward.

    Samples are also taken on further sheets (whole turns added to the
    logarithm), enough of them that candidates with different fractional
    parts separate in angle; `sheets` overrides the automatic count.

    Powers in the model are taken on the sampled sheet counted from the
    principal branch; `f` is called at points rotated by a further
    `half_turns`, so such a rotation shows up in the coefficients.
    """
    lattice = sorted({float(as_exponent(m)) for m in lattice})
    radii = radii_schedule() if radii is None else np.asarray(radii, dtype=float)
    if np.any(radii <= 0):
        raise ValueError("radii must be positive")
    if isinstance(f, Sampler) and (radii.min() < f.inner or radii.max() > f.outer):
        raise ValueError("radii schedule leaves the sampling annulus")
    if sheets is None:
        sheets = _sheets_needed(lattice)
    pts = [rotate(principal(r * complex(math.cos(th), math.sin(th))), 2 * j)
           for j in range(sheets) for r in radii for th in angles]
    vals = np.array([complex(f(rotate(p, half_turns))) for p in pts])
    scale = float(np.abs(vals).max(initial=0.0))
    if not lattice:
        if np.abs(vals).max(initial=0.0) > tol:
            raise ValueError("not expandable over lattice")
        return RealExpSeries()
    basis = np.array([[power(p, m) for m in lattice] for p in pts])
    remaining = vals.copy()
    found = []
    for i, m in enumerate(lattice):
        # z^-m * remainder = a + sum_g b_g z^g over the gaps g to larger
        # candidates; solved multiplied through by z^m so that every row
        # carries the same absolute rounding noise
        cols = basis[:, i:]
        norms = np.linalg.norm(cols, axis=0)
        coef, *_ = np.linalg.lstsq(cols / norms, remaining, rcond=None)
        a = coef[0] / norms[0]
        # a term must also be visible in the samples above rounding noise
        visible = abs(a) * np.abs(basis[:, i]).max() > 1e-10 * scale
        if abs(a) > tol and visible:
            found.append((m, complex(a)))
            remaining = remaining - a * basis[:, i]
    if np.abs(remaining).max() > 1e3 * tol * max(scale, 1.0):
        raise ValueError("not expandable over lattice")
    return RealExpSeries(tuple(found))


def _sheets_needed(lattice: list[float], cap: int = 16) -> int:
    fr = sorted({round(m % 1.0, 9) % 1.0 for m in lattice})
    if len(fr) < 2:
        return 1
    gaps = [b - a for a, b in zip(fr, fr[1:])] + [1 - fr[-1] + fr[0]]
    return min(cap, max(1, math.ceil(1 / min(gaps) - 1e-9)))


def res_z(s: RealExpSeries) -> complex:
    """Coefficient of z**-1, or 0 when there is no such term."""
    for m, a in s.terms:
        if abs(m + 1) <= EXPONENT_TOL:
            return a
    return 0j


def exponent_support(samples, tol: float = 1e-9, cap: int = 16) -> list[float]:
    """Distinct classes mod 1 among the exponents in `samples`.

    `samples` is an iterable of exponents or a mapping whose values are
    exponents. Returns representatives in [0, 1), sorted.
    """
    if hasattr(samples, "values"):
        samples = samples.values()
    classes: list[float] = []
    for e in samples:
        c = float(e) % 1.0
        if c > 1 - tol:
            c = 0.0
        if not any(min(abs(c - d), 1 - abs(c - d)) <= tol for d in classes):
            classes.append(c)
            if len(classes) > cap:
                raise ValueError("support not finite at this cutoff")
    return sorted(classes)


# ----------------------------------------------------------------- the fit

@dataclass
class FitTerm:
    r: float
    s: float
    taylor: list[complex]


@dataclass
class ExpansionFit:
    terms: list[FitTerm]
    delta: float
    residual: float
    condition: float = 0.0
    n_witness: int | None = None
    witness_ok: bool | None = None
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "r": [t.r for t in self.terms],
            "s": [t.s for t in self.terms],
            "taylor": [[[c.real, c.imag] for c in t.taylor] for t in self.terms],
            "residual": self.residual,
            "delta": self.delta,
            "n_witness": self.n_witness,
            "witness_ok": self.witness_ok,
            "condition": self.condition,
        }


class FitUnreliable(ValueError):
    pass


def _points(X) -> tuple[list[LogPoint], list[LogPoint], list[LogPoint]]:
    X = check_array(X, dtype=float)
    if X.shape[1] != 4:
        raise ValueError("expected columns Re z1, Im z1, Re z2, Im z2")
    z1 = X[:, 0] + 1j * X[:, 1]
    z2 = X[:, 2] + 1j * X[:, 3]
    return [principal(a) for a in z1], [principal(b) for b in z2], [principal(a - b) for a, b in zip(z1, z2)]


class ExpansionRegressor(BaseEstimator, RegressorMixin):
    """Least-squares fit of ``sum_i z2**r_i (z1-z2)**s_i f_i(u)``, ``u = (z1-z2)/z2``.

    ``s_i = delta - r_i`` and each ``f_i`` is a polynomial of degree `degree`.
    Candidates equal mod 1 describe the same family of columns, so one
    representative per class is used and the Taylor coefficients absorb
    integer shifts; after fitting, leading zero coefficients are shifted out.
    ``X`` has columns (Re z1, Im z1, Re z2, Im z2); ``y`` is complex.
    """

    def __init__(self, delta: float = 0.0, candidates: Sequence[float] = (0.0,), degree: int = 8,
                 cond_limit: float = 1e10, zero_tol: float = 1e-9):
        self.delta = delta
        self.candidates = candidates
        self.degree = degree
        self.cond_limit = cond_limit
        self.zero_tol = zero_tol

    def _classes(self) -> list[float]:
        reps: dict = {}
        for r in sorted(float(as_exponent(c)) for c in self.candidates):
            key = round(r % 1.0, 9) % 1.0
            # keep the largest r (smallest s) of each class; Taylor terms raise s
            reps[key] = r
        return sorted(reps.values())

    def _design(self, X, reps) -> np.ndarray:
        p1, p2, p12 = _points(X)
        cols = []
        for r in reps:
            s = self.delta - r
            for d in range(self.degree + 1):
                cols.append([power(b, r) * power(c, s) * (c.value() / b.value()) ** d
                             for b, c in zip(p2, p12)])
        return np.array(cols, dtype=complex).T

    def fit(self, X, y):
        y = np.asarray(y, dtype=complex).ravel()
        reps = self._classes()
        A = self._design(X, reps)
        if A.shape[0] != y.shape[0]:
            raise ValueError("X and y have inconsistent lengths")
        norms = np.linalg.norm(A, axis=0)
        norms[norms == 0] = 1.0
        As = A / norms
        sv = np.linalg.svd(As, compute_uv=False)
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
        self.condition_ = cond
        if cond > self.cond_limit:
            raise FitUnreliable("fit unreliable")
        ynorm = float(np.linalg.norm(y))
        if ynorm == 0:
            self.coef_ = np.zeros(A.shape[1], dtype=complex)
        else:
            c, *_ = np.linalg.lstsq(As, y, rcond=None)
            self.coef_ = c / norms
        self.classes_ = reps
        self.residual_ = float(np.linalg.norm(A @ self.coef_ - y) / ynorm) if ynorm else 0.0
        D = self.degree + 1
        scale = max(float(np.abs(self.coef_).max(initial=0.0)), 1e-300)
        terms = []
        for i, r in enumerate(reps):
            block = self.coef_[i * D:(i + 1) * D]
            nz = np.flatnonzero(np.abs(block) > self.zero_tol * scale)
            if ynorm == 0 or nz.size == 0:
                continue
            d0 = int(nz[0])
            terms.append(FitTerm(r - d0, self.delta - r + d0, [complex(c) for c in block[d0:]]))
        self.terms_ = terms
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return self._design(X, self.classes_) @ self.coef_


def default_probes(z2_modulus: float = 1.0, count: int = 48, seed: int = 0) -> np.ndarray:
    """Probe points with z2 on the negative real axis and z1 = z2 (1 + u).

    ``|u|`` lies in [0.05, 0.1] and ``arg u`` in (-0.475 pi, 0.475 pi), so the
    points sit in |z1| > |z2| > |z1 - z2| > 0 and away from the branch cut of
    the principal logarithm of z1 - z2.
    """
    rng = np.random.default_rng(seed)
    mod = rng.uniform(0.05, 0.1, count)
    ang = rng.uniform(-0.475 * math.pi, 0.475 * math.pi, count)
    u = mod * np.exp(1j * ang)
    z2 = -z2_modulus * np.ones(count)
    z1 = z2 * (1 + u)
    return np.column_stack([z1.real, z1.imag, z2.real, z2.imag])


def fit_product_expansion(correlator: Callable[[LogPoint, LogPoint], complex], delta: float,
                          candidates: Iterable[float], degree: int = 8, probes=None,
                          weights: tuple[float, float] | None = None, n_bound: int | None = None,
                          cond_limit: float = 1e10) -> ExpansionFit:
    """Fit a two-point correlator sampled at `probes` and report the expansion.

    `weights` = (wt w1, wt w2) enables the lower-bound witness: the fit
    reports the largest integer N with ``wt w1 + wt w2 + s_i > N`` for all
    terms, and checks a caller-supplied `n_bound` against the same inequality.
    """
    X = default_probes() if probes is None else np.asarray(probes, dtype=float)
    for row in X:
        z1, z2 = complex(row[0], row[1]), complex(row[2], row[3])
        if not abs(z2) > abs(z1 - z2) > 0:
            raise ValueError("probes must satisfy |z2| > |z1 - z2| > 0")
    y = np.array([complex(correlator(principal(complex(a, b)), principal(complex(c, d)))) for a, b, c, d in X])
    est = ExpansionRegressor(delta=delta, candidates=list(candidates), degree=degree, cond_limit=cond_limit)
    est.fit(X, y)
    fit = ExpansionFit(est.terms_, float(delta), est.residual_, est.condition_)
    if weights is not None and fit.terms:
        low = sum(weights) + min(t.s for t in fit.terms)
        fit.n_witness = math.ceil(low - 1e-12) - 1
        if n_bound is not None:
            fit.witness_ok = all(sum(weights) + t.s > n_bound for t in fit.terms)
    return fit
