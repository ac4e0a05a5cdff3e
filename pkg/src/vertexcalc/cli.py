"""Command-line entry point: ``vertexcalc {verify-delta,assoc,fit,tau}``.

Reports go to stdout as JSON (or to ``--out``); ``--csv`` writes a flat
table next to it. Exit status is 0 when every row passes, 1 when a check
fails or points fall outside the required region, 2 on bad usage.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .branch import LogPoint, RegionError, principal, rotate

_COMPLEX = re.compile(r"^\s*([^@]+?)\s*(?:@\s*([+-]?\d+))?\s*$")


def parse_complex(text: str) -> LogPoint:
    """``a+bi``, ``a``, ``bi``, or ``value@k`` (k extra half-turns on the logarithm)."""
    m = _COMPLEX.match(text)
    if not m:
        raise ValueError(f"cannot parse complex value {text!r}")
    body, turns = m.group(1).replace(" ", ""), m.group(2)
    body = body.replace("i", "j")
    body = re.sub(r"(^|[+-])j", r"\g<1>1j", body)
    try:
        z = complex(body)
    except ValueError:
        raise ValueError(f"cannot parse complex value {text!r}") from None
    p = principal(z)
    return rotate(p, int(turns)) if turns else p


def parse_momenta(text: str) -> tuple:
    try:
        ps = tuple(Fraction(x.strip()) for x in text.split(","))
    except ValueError:
        raise ValueError(f"cannot parse momenta {text!r}") from None
    if len(ps) != 3:
        raise ValueError("expected three momenta p1,p2,p3")
    return ps


def parse_partition(text: str) -> tuple:
    if not text.strip():
        return ()
    return tuple(sorted((int(x) for x in text.split(",")), reverse=True))


def thread_cap() -> int:
    raw = os.environ.get("VERTEXCALC_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = min(4, os.cpu_count() or 1)
    return max(1, n)


def _ordered_map(fn, items):
    # results come back in input order whatever the completion order
    items = list(items)
    workers = min(thread_cap(), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class RunConfig:
    command: str
    tol: float = 1e-8
    terms: int = 400
    level: int = 12
    z1: LogPoint | None = None
    z2: LogPoint | None = None
    out: str | None = None
    csv: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.level < 0:
            raise ValueError("level must be nonnegative")
        if self.terms < 1:
            raise ValueError("terms must be at least 1")


def _complex_json(p: LogPoint) -> dict:
    z = p.value()
    return {"re": z.real, "im": z.imag, "half_turns": p.half_turns}


def _emit(cfg: RunConfig, report: dict, csv_text: str | None = None) -> None:
    text = json.dumps(report, indent=2, default=str)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    if cfg.csv and csv_text is not None:
        with open(cfg.csv, "w", newline="") as fh:
            fh.write(csv_text)


# ---------------------------------------------------------------- commands

def cmd_verify_delta(cfg: RunConfig) -> int:
    from .delta import CSV_COLUMNS, IDENTITIES, default_grid, verify_identity

    ids = IDENTITIES if cfg.extra["id"] == "all" else (cfg.extra["id"],)
    grid = default_grid(cfg.extra["grid"])
    reports = _ordered_map(lambda tag: verify_identity(tag, cfg.z1, cfg.z2, grid, cfg.terms, cfg.tol), ids)
    passed = all(r.verified for r in reports)
    body = {"command": "verify-delta", "z1": _complex_json(cfg.z1), "z2": _complex_json(cfg.z2),
            "passed": passed, "reports": [r.to_json() for r in reports]}
    csv_text = None
    if cfg.csv:
        head = ",".join(["id"] + CSV_COLUMNS) + "\n"
        rows = []
        for r in reports:
            for line in r.to_csv().splitlines()[1:]:
                rows.append(f"{r.tag},{line}\n")
        csv_text = head + "".join(rows)
    _emit(cfg, body, csv_text)
    return 0 if passed else 1


def cmd_assoc(cfg: RunConfig) -> int:
    from .heisenberg import associativity_check

    p = cfg.extra["p"]
    max_level = min(cfg.extra["max_level"], cfg.level)
    try:
        rep = associativity_check(*p, z1=cfg.z1, z2=cfg.z2, L=cfg.level, tol=cfg.tol, max_level=max_level)
    except RegionError as exc:
        _emit(cfg, {"command": "assoc", "passed": False, "error": str(exc),
                    "z1": _complex_json(cfg.z1), "z2": _complex_json(cfg.z2)})
        return 1
    body = {"command": "assoc", "max_level": max_level, **rep.to_json()}
    _emit(cfg, body, rep.to_csv() if cfg.csv else None)
    return 0 if rep.passed else 1


def _planted_fit(cfg: RunConfig) -> int:
    from .expansion import RealExpSeries, leading_extract, res_z

    with open(cfg.extra["planted"]) as fh:
        d = json.load(fh)
    planted = RealExpSeries.from_pairs((m, complex(re_, im)) for m, re_, im in d["terms"])
    lattice = d.get("lattice", planted.exponents)
    got = leading_extract(planted, lattice, tol=cfg.tol)
    ok = (len(got) == len(planted)
          and all(abs(a - b) <= 1e-9 for a, b in zip(got.exponents, planted.exponents))
          and all(abs(a - b) <= 1e-6 for a, b in zip(got.coefficients, planted.coefficients)))
    body = {"command": "fit", "mode": "planted", "passed": ok,
            "exponents": got.exponents, "coefficients": [[c.real, c.imag] for c in got.coefficients],
            "res": [res_z(got).real, res_z(got).imag]}
    _emit(cfg, body)
    return 0 if ok else 1


def cmd_fit(cfg: RunConfig) -> int:
    from .expansion import FitUnreliable, fit_product_expansion
    from .heisenberg import DualVector, FockVector, iterate_correlator, standard_pair

    if cfg.extra.get("planted"):
        return _planted_fit(cfg)
    p1, p2, p3 = cfg.extra["p"]
    delta = p1 * p2 + p1 * p3 + p2 * p3
    Y1, Y2, Y3, Y4 = standard_pair(p1, p2, p3)
    wp = DualVector.basis(p1 + p2 + p3)
    w1, w2, w3 = FockVector.vacuum(p1), FockVector.vacuum(p2), FockVector.vacuum(p3)

    def correlator(z1, z2):
        # the probes sit where the iterate series converges fastest
        z0 = principal(z1.value() - z2.value())
        return iterate_correlator(Y4, Y3, wp, w1, w2, w3, z0, z2, cfg.level, check=False)[0]

    cands = cfg.extra["candidates"]
    if cands is None:
        # the iterate-side intertwiner only produces (z1 - z2)^s with s in p1 p2 + Z
        cands = [float(delta - p1 * p2)]
    try:
        fit = fit_product_expansion(correlator, float(delta), cands, degree=cfg.extra["degree"],
                                    weights=(float(p1 * p1 / 2), float(p2 * p2 / 2)))
    except FitUnreliable as exc:
        _emit(cfg, {"command": "fit", "passed": False, "error": str(exc),
                    "note": "design matrix condition number above the limit"})
        return 1
    ok = fit.residual <= cfg.tol and all(math.isclose(t.r + t.s, float(delta), abs_tol=1e-12) for t in fit.terms)
    body = {"command": "fit", "momenta": [str(x) for x in (p1, p2, p3)], "passed": ok, **fit.to_json()}
    _emit(cfg, body)
    return 0 if ok else 1


def cmd_tau(cfg: RunConfig) -> int:
    from .dual import (check_tau_equality, compatibility_check, conformal_vector, correlator_functional,
                       vacuum_vector)
    from .heisenberg import DualVector

    p = cfg.extra["p"]
    v = conformal_vector() if cfg.extra["v"] == "omega" else vacuum_vector()
    wp = DualVector.basis(sum(p), cfg.extra["wprime"])
    lam = correlator_functional(p, wp, cfg.z1, cfg.z2, cfg.level, cfg.extra["kind"], cfg.extra["inner"])
    try:
        eq = check_tau_equality(v, lam, cfg.z1, cfg.z2, tol=cfg.tol, out_level=cfg.extra["out_level"],
                                terms=cfg.terms)
        compat = compatibility_check(lam, cfg.z1, cfg.z2, {cfg.extra["v"]: v}, tol=cfg.tol, terms=cfg.terms)
    except RegionError as exc:
        _emit(cfg, {"command": "tau", "passed": False, "error": str(exc),
                    "z1": _complex_json(cfg.z1), "z2": _complex_json(cfg.z2)})
        return 1
    passed = eq.passed and compat.passed
    body = {"command": "tau", "v": cfg.extra["v"], "cutoff": cfg.level, "passed": passed,
            "equality": eq.to_json(), "compatibility": compat.to_json()}
    csv_text = None
    if cfg.csv:
        lines = ["r,s,t,tuple_id,first_re,first_im,second_re,second_im,deviation,pass"]
        for r in eq.rows:
            lines.append(",".join(map(str, [*r.cell, r.tuple_id, repr(r.first.real), repr(r.first.imag),
                                            repr(r.second.real), repr(r.second.imag), repr(r.deviation),
                                            int(r.passed)])))
        csv_text = "\n".join(lines) + "\n"
    _emit(cfg, body, csv_text)
    return 0 if passed else 1


COMMANDS = {"verify-delta": cmd_verify_delta, "assoc": cmd_assoc, "fit": cmd_fit, "tau": cmd_tau}


# ---------------------------------------------------------------- parsing

def _add_common(sp, tol, level=12, terms=400, points_required=False, z1="1", z2="0.9"):
    kw = {"required": True} if points_required else {"default": z1}
    sp.add_argument("--z1", type=str, **kw)
    kw = {"required": True} if points_required else {"default": z2}
    sp.add_argument("--z2", type=str, **kw)
    sp.add_argument("--tol", type=float, default=tol)
    sp.add_argument("--level", type=int, default=level)
    sp.add_argument("--terms", type=int, default=terms)
    sp.add_argument("--out", type=str, default=None, help="write the JSON report here instead of stdout")
    sp.add_argument("--csv", type=str, default=None, help="also write a CSV table")


def build_parser() -> argparse.ArgumentParser:
    from .delta import IDENTITIES

    ap = argparse.ArgumentParser(prog="vertexcalc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("verify-delta", help="check the delta-function identities cell by cell")
    sp.add_argument("--id", default="all", choices=list(IDENTITIES) + ["all"])
    sp.add_argument("--grid", type=int, default=3, help="cells (r, s, t) in [-grid, grid]^3")
    _add_common(sp, 1e-8, points_required=True)

    sp = sub.add_parser("assoc", help="product against iterate for the free boson")
    sp.add_argument("--p", default="1,1,0", help="momenta p1,p2,p3 (fractions allowed)")
    sp.add_argument("--max-level", type=int, default=2, help="largest level of each basis state")
    _add_common(sp, 1e-6)

    sp = sub.add_parser("fit", help="fit the iterate-region expansion of a correlator")
    sp.add_argument("--p", default="1,1,0")
    sp.add_argument("--candidates", default=None, help="comma-separated z2 exponents")
    sp.add_argument("--degree", type=int, default=8)
    sp.add_argument("--planted", default=None, help="JSON file with planted terms [[m, re, im], ...]")
    _add_common(sp, 1e-8)

    sp = sub.add_parser("tau", help="equality of the two dual actions and compatibility")
    sp.add_argument("--p", default="1,1,0")
    sp.add_argument("--v", choices=["vacuum", "omega"], default="omega")
    sp.add_argument("--wprime", default="", help="partition of the dual vector, e.g. 1,1")
    sp.add_argument("--kind", choices=["product", "iterate"], default="product")
    sp.add_argument("--inner", type=int, default=12, help="intermediate level cap of the correlator")
    sp.add_argument("--out-level", type=int, default=1)
    _add_common(sp, 1e-6, level=8, terms=2000)
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    extra = {k: v for k, v in vars(ns).items()
             if k not in {"command", "tol", "terms", "level", "z1", "z2", "out", "csv"}}
    if "p" in extra:
        extra["p"] = parse_momenta(extra["p"])
    if "wprime" in extra:
        extra["wprime"] = parse_partition(extra["wprime"])
    if extra.get("candidates") is not None:
        extra["candidates"] = [float(Fraction(x)) for x in extra["candidates"].split(",")]
    return RunConfig(ns.command, ns.tol, ns.terms, ns.level, parse_complex(ns.z1), parse_complex(ns.z2),
                     ns.out, ns.csv, extra)


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except ValueError as exc:
        ap.error(str(exc))
    return COMMANDS[cfg.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
