"""Command-line front end.

Exit codes: 0 when every check passes, 1 when checks ran and failed, 2 on
input or usage errors (the error class name is printed to stderr).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import geometry, pde, symmetry
from .errors import DegenerateMetric, HeavenlyError, ResidualImaginaryPart
from .expsum import ExpSumPotential, FrameId, conjugate_point
from .families import (
    HCMA_FAMILIES,
    FamilyId,
    HcmaDilatParams,
    HcmaTransParams,
    HeavenParams,
    exponent_table,
    validate,
)

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Malformed document, config or flag value."""


@dataclasses.dataclass
class RunConfig:
    seed: int = 0
    points: int = 20
    tol_residual: float = pde.DEFAULT_TOL
    tol_ricci: float = 1e-4
    tol_det: float = symmetry.KILLING_TOL
    tol_imag: float = geometry.IMAG_TOL
    fd_step: float = geometry.DEFAULT_FD_STEP
    box: float = 1.0
    workers: int = 1

    def check(self):
        for name in ("tol_residual", "tol_ricci", "tol_det", "tol_imag", "fd_step"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        if not (math.isfinite(self.box) and self.box > 0):
            raise InputError("box must be finite and positive")
        if self.points < 1 or self.workers < 1:
            raise InputError("points and workers must be at least 1")
        return self

    def to_dict(self):
        return dataclasses.asdict(self)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _coerce(name, value):
    kind = {"int": int, "float": float}[_FIELD_TYPES[name]]
    try:
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad value for {name}: {value!r}") from exc


def load_config(args, environ=None):
    """Defaults, then the config file, then ``HEAVENLY_*`` variables, then flags."""
    environ = os.environ if environ is None else environ
    values = {}
    if getattr(args, "config", None):
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config: {exc}") from exc
        if not isinstance(raw, dict):
            raise InputError("config must be a JSON object")
        for key, val in raw.items():
            key = key.replace("-", "_")
            if key not in _FIELD_TYPES:
                raise InputError(f"unknown config key {key!r}")
            values[key] = _coerce(key, val)
    for name in _FIELD_TYPES:
        env = environ.get(f"HEAVENLY_{name.upper()}")
        if env is not None:
            values[name] = _coerce(name, env)
    for name in _FIELD_TYPES:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = _coerce(name, flag)
    return RunConfig(**values).check()


# solution documents


def parse_complex(text):
    text = str(text).strip().replace(" ", "").replace("i", "j")
    try:
        return complex(text)
    except ValueError as exc:
        raise InputError(f"not a complex number: {text!r}") from exc


_PI = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)?)\*?pi(?:/(\d+\.?\d*))?$")


def parse_real(text):
    """Float, or a multiple of pi such as ``pi/2`` or ``3*pi/4``."""
    text = str(text).strip().replace(" ", "")
    m = _PI.match(text)
    if m:
        coef = m.group(1)
        coef = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
        return coef * math.pi / float(m.group(2) or 1)
    try:
        return float(text)
    except ValueError as exc:
        raise InputError(f"not a real number: {text!r}") from exc


def parse_list(text, kind=float):
    if text is None:
        return []
    conv = {complex: parse_complex, float: parse_real}.get(kind, kind)
    try:
        return [conv(t) for t in str(text).split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(f"bad list {text!r}") from exc


def _pair(z):
    z = complex(z)
    return [z.real, z.imag]


def _unpair(p):
    if not (isinstance(p, (list, tuple)) and len(p) == 2):
        raise InputError(f"complex values are stored as [re, im], got {p!r}")
    return complex(float(p[0]), float(p[1]))


def params_to_json(params):
    if isinstance(params, HcmaDilatParams):
        return {"a": _pair(params.a), "b": _pair(params.b), "mu": list(params.mu), "c": list(params.c)}
    if isinstance(params, HcmaTransParams):
        return {"nu": _pair(params.nu), "alpha": [_pair(a) for a in params.alpha], "c": list(params.c)}
    return {
        "beta": [_pair(b) for b in params.beta],
        "gamma": [_pair(g) for g in params.gamma],
        "c": [_pair(c) for c in params.c],
    }


def params_from_json(family, raw):
    try:
        if family is FamilyId.HCMA_DILAT:
            return HcmaDilatParams(_unpair(raw["a"]), _unpair(raw["b"]), raw["mu"], raw["c"])
        if family is FamilyId.HCMA_TRANS:
            return HcmaTransParams(_unpair(raw["nu"]), [_unpair(a) for a in raw["alpha"]], raw["c"])
        return HeavenParams(
            [_unpair(b) for b in raw["beta"]], [_unpair(g) for g in raw["gamma"]], [_unpair(c) for c in raw["c"]]
        )
    except (KeyError, TypeError) as exc:
        raise InputError(f"incomplete parameters for {family.value}: {exc}") from exc


@dataclasses.dataclass
class SolutionDocument:
    family: FamilyId
    params: object
    amplitudes: np.ndarray
    exponents: np.ndarray
    notes: str = ""
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def build(cls, family, params, notes=""):
        amps, exps = exponent_table(family, params)
        return cls(FamilyId(family), params, amps, exps, notes)

    def potential(self):
        return ExpSumPotential.from_arrays(self.family.frame, self.amplitudes, self.exponents)

    def rederivation_error(self):
        """Max difference between stored exponents and those re-derived from the parameters."""
        _, exps = exponent_table(self.family, self.params)
        if exps.shape != self.exponents.shape:
            return math.inf
        return float(np.max(np.abs(exps - self.exponents), initial=0.0))

    def to_json(self):
        return {
            "schema_version": self.schema_version,
            "family": self.family.value,
            "params": params_to_json(self.params),
            "amplitudes": [_pair(c) for c in self.amplitudes],
            "exponents": [[_pair(e) for e in row] for row in self.exponents],
            "notes": self.notes,
        }

    def dumps(self):
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, raw):
        if not isinstance(raw, dict):
            raise InputError("document must be a JSON object")
        if raw.get("schema_version") != SCHEMA_VERSION:
            raise InputError(f"unsupported schema_version {raw.get('schema_version')!r}")
        try:
            family = FamilyId(raw["family"])
            params = params_from_json(family, raw["params"])
            amps = np.array([_unpair(c) for c in raw["amplitudes"]], dtype=complex)
            exps = np.array([[_unpair(e) for e in row] for row in raw["exponents"]], dtype=complex)
        except (KeyError, ValueError, TypeError) as exc:
            raise InputError(f"malformed document: {exc}") from exc
        exps = exps.reshape(-1, 4) if exps.size else np.zeros((0, 4), dtype=complex)
        if len(amps) != len(exps):
            raise InputError("amplitudes and exponents differ in length")
        return cls(family, params, amps, exps, str(raw.get("notes", "")))

    @classmethod
    def load(cls, path):
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read document {path}: {exc}") from exc
        return cls.from_json(raw)


# shared helpers


def _parallel_map(fn, items, workers):
    if workers <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _chunks(array, n):
    return [c for c in np.array_split(array, max(1, min(n, len(array)))) if len(c)]


def sample_points(family, n, rng, box):
    """Admissible frame points: the conjugate slice for HCMA families, real points otherwise."""
    if family in HCMA_FAMILIES:
        p = rng.uniform(-box, box, n) + 1j * rng.uniform(-box, box, n)
        z2 = rng.uniform(-box, box, n) + 1j * rng.uniform(-box, box, n)
        return conjugate_point(p, z2)
    return rng.uniform(-box, box, (n, 4)).astype(complex)


def _write_report(report, out):
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    return text


def _fmt(x):
    return f"{x:.3e}"


# commands


def cmd_build(args, config):
    family = FamilyId(args.family)
    if args.params_file:
        try:
            raw = json.loads(Path(args.params_file).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read parameters: {exc}") from exc
        params = params_from_json(family, raw)
    elif family is FamilyId.HCMA_DILAT:
        params = HcmaDilatParams(parse_complex(args.a or "1"), parse_complex(args.b or "0"),
                                 parse_list(args.mu), parse_list(args.c))
    elif family is FamilyId.HCMA_TRANS:
        params = HcmaTransParams(parse_complex(args.nu or "0"), parse_list(args.alpha, complex), parse_list(args.c))
    else:
        params = HeavenParams(parse_list(args.beta, complex), parse_list(args.gamma, complex),
                              parse_list(args.c, complex))
    doc = SolutionDocument.build(family, params, args.notes or "")
    out = args.out or f"{family.value}.json"
    Path(out).write_text(doc.dumps())
    print(f"{family.value}: {len(doc.exponents)} terms -> {out}")
    for c, e in zip(doc.amplitudes, doc.exponents):
        print(f"  C={c:.6g}  exponents=" + ", ".join(f"{v:.6g}" for v in e))
    return EXIT_OK


def cmd_verify(args, config):
    doc = SolutionDocument.load(args.document)
    pot = doc.potential()
    rng = np.random.default_rng(config.seed)
    pts = sample_points(doc.family, config.points, rng, config.box)

    def run(chunk):
        return pde.residual_suite(doc.family, pot, chunk, doc.params, config.tol_residual)

    parts = _parallel_map(run, _chunks(pts, config.workers), config.workers)
    norm = np.concatenate([p.normalized for p in parts], axis=1)
    merged = pde.ResidualReport(parts[0].rows, pts, np.concatenate([p.raw for p in parts], axis=1),
                                norm, config.tol_residual, parts[0].checked)
    constraints = validate(doc.family, pot, doc.params)
    redo = doc.rederivation_error()
    checks = {
        "residuals": merged.to_dict(),
        "constraints": constraints.to_dict(),
        "exponent_table": {"max_difference": redo, "passed": redo <= 1e-12},
    }
    passed = merged.passed and constraints.valid and redo <= 1e-12
    report = {"command": "verify", "family": doc.family.value, "config": config.to_dict(),
              "checks": checks, "passed": passed}
    _write_report(report, args.out)
    print(f"verify {doc.family.value}: {len(pot)} terms, {config.points} points")
    print(f"  max normalized residual {_fmt(merged.max_normalized)} (tol {config.tol_residual:g})")
    print(f"  constraint residual {_fmt(constraints.max_residual)}; exponent table diff {_fmt(redo)}")
    print(f"  {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_FAIL


def _metric_point(mf, x):
    entry = {"point": [float(v) for v in x]}
    jet = mf.potential.jet(mf.chart.to_frame(x), 2)
    entry["degeneracy"] = {k: _pair(v) for k, (v, _) in geometry.degeneracy(jet).items()}
    try:
        g, sig = geometry.realify(mf.builder(jet), mf.chart)
    except (DegenerateMetric, ResidualImaginaryPart) as exc:
        entry["skipped"] = f"{type(exc).__name__}: {exc}"
        return entry
    entry["metric"] = g.tolist()
    entry["signature"] = sig.to_dict()
    return entry


def cmd_metric(args, config):
    doc = SolutionDocument.load(args.document)
    mf = geometry.MetricField(doc.potential())
    rng = np.random.default_rng(config.seed)
    xs = rng.uniform(-config.box, config.box, (config.points, 4))
    entries = _parallel_map(lambda x: _metric_point(mf, x), list(xs), config.workers)
    good = [e for e in entries if "signature" in e]
    counts = {}
    for e in good:
        key = e["signature"]["class"]
        counts[key] = counts.get(key, 0) + 1
    report = {"command": "metric", "family": doc.family.value, "config": config.to_dict(),
              "points": entries, "signature_counts": counts, "passed": bool(good)}
    _write_report(report, args.out)
    print(f"metric {doc.family.value}: {len(good)}/{len(entries)} points nondegenerate")
    for k in sorted(counts):
        print(f"  {k}: {counts[k]}")
    for e in entries:
        if "skipped" in e:
            print(f"  skipped {e['point']}: {e['skipped']}")
    return EXIT_OK if good else EXIT_FAIL


def cmd_curvature(args, config):
    doc = SolutionDocument.load(args.document)
    pot = doc.potential()
    mf = geometry.MetricField(pot)
    rng = np.random.default_rng(config.seed)
    xs = geometry.well_conditioned_points(pot, config.points, rng, config.box)

    def run(x):
        try:
            c = geometry.curvature(mf, x, config.fd_step)
        except HeavenlyError as exc:
            return {"point": [float(v) for v in x], "error": f"{type(exc).__name__}: {exc}", "passed": False}
        d = c.to_dict()
        err_ratio = c.ricci_error / (1 + c.riemann_norm)
        d["passed"] = bool(c.ricci_ratio < config.tol_ricci and err_ratio < config.tol_ricci)
        return d

    entries = _parallel_map(run, list(xs), config.workers)
    passed = all(e["passed"] for e in entries)
    worst = max((e.get("ricci_ratio", math.inf) for e in entries), default=0.0)
    report = {"command": "curvature", "family": doc.family.value, "config": config.to_dict(),
              "points": entries, "max_ricci_ratio": worst, "passed": passed}
    _write_report(report, args.out)
    print(f"curvature {doc.family.value}: {len(entries)} points, max Ricci/(1+Riemann) {_fmt(worst)}"
          f" (tol {config.tol_ricci:g})")
    print(f"  {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_killing(args, config):
    doc = SolutionDocument.load(args.document)
    rep = symmetry.theorem_applicability(doc.family, doc.potential(), config.tol_det)
    report = {"command": "killing", "config": config.to_dict(), "result": rep.to_dict(), "passed": rep.verdict}
    _write_report(report, args.out)
    print(f"killing {doc.family.value}: {rep.n_terms} terms")
    print(f"no Killing vectors guaranteed: {'true' if rep.verdict else 'false'}")
    for r in rep.reasons:
        print(f"  {r}")
    return EXIT_OK if rep.verdict else EXIT_FAIL


def cmd_symmetry_table(args, config):
    rng = np.random.default_rng(config.seed)
    results = symmetry.verify_table(rng, points=config.points, corrected=args.corrected)
    ok = sum(r.passed for r in results)
    report = {"command": "symmetry-table", "config": config.to_dict(), "corrected": args.corrected,
              "cells": [r.to_dict() for r in results], "passed_cells": ok, "passed": ok == len(results)}
    _write_report(report, args.out)
    print(f"commutator table: {ok}/{len(results)} cells pass")
    for r in results:
        if not r.passed:
            print(f"  FAIL {r.cell}: max deviation {_fmt(r.max_deviation)}")
    return EXIT_OK if ok == len(results) else EXIT_FAIL


AXES = {
    FrameId.HCMA_LEGENDRE: ("re_p", "im_p", "re_z2", "im_z2"),
    FrameId.HEAVEN_LEGENDRE: ("t", "r", "x", "z"),
}


def _parse_ranges(text):
    out = []
    for part in text.split(","):
        try:
            lo, hi = (float(v) for v in part.split(":"))
        except ValueError as exc:
            raise InputError(f"bad range {part!r}, expected lo:hi") from exc
        out.append((lo, hi))
    if len(out) != 2:
        raise InputError("two ranges are needed, one per axis")
    return out


def cmd_export_grid(args, config):
    doc = SolutionDocument.load(args.document)
    pot = doc.potential()
    names = AXES[doc.family.frame.frame_id]
    axes = [a.strip() for a in args.axes.split(",")]
    if len(axes) != 2 or any(a not in names for a in axes) or axes[0] == axes[1]:
        raise InputError(f"axes must be two of {', '.join(names)}")
    fixed = np.zeros(4)
    for item in parse_list(args.fixed, str):
        key, _, val = item.partition("=")
        if key not in names:
            raise InputError(f"unknown coordinate {key!r}")
        fixed[names.index(key)] = float(val)
    (lo0, hi0), (lo1, hi1) = _parse_ranges(args.ranges)
    n = args.resolution
    if n < 1:
        raise InputError("resolution must be positive")
    i0, i1 = names.index(axes[0]), names.index(axes[1])
    xs = np.tile(fixed, (n * n, 1))
    g0, g1 = np.meshgrid(np.linspace(lo0, hi0, n), np.linspace(lo1, hi1, n), indexing="ij")
    xs[:, i0], xs[:, i1] = g0.ravel(), g1.ravel()

    mf = geometry.MetricField(pot)
    pts = mf.chart.to_frame(xs)
    values = pot.evaluate(pts)
    jets = pot.jet(pts, 2)
    quantities = geometry.degeneracy(jets)
    comps = [(a, b) for a in range(4) for b in range(a, 4)]
    header = list(names) + ["value_re", "value_im"] + [f"g{a}{b}" for a, b in comps]
    for q in quantities:
        header += [f"{q}_re", f"{q}_im"]

    def row(k):
        x = xs[k]
        try:
            g, _ = geometry.realify(mf.builder(pot.jet(pts[k], 2)), mf.chart)
            gv = [repr(float(g[a, b])) for a, b in comps]
        except (DegenerateMetric, ResidualImaginaryPart):
            gv = ["nan"] * len(comps)
        out = [repr(float(v)) for v in x] + [repr(float(values[k].real)), repr(float(values[k].imag))] + gv
        for v, _ in quantities.values():
            out += [repr(float(v[k].real)), repr(float(v[k].imag))]
        return out

    rows = _parallel_map(row, range(len(xs)), config.workers)
    out = args.out or "grid.csv"
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    print(f"export-grid {doc.family.value}: {len(rows)} rows -> {out}")
    return EXIT_OK


COMMANDS = {
    "build": cmd_build,
    "verify": cmd_verify,
    "metric": cmd_metric,
    "curvature": cmd_curvature,
    "killing": cmd_killing,
    "symmetry-table": cmd_symmetry_table,
    "export-grid": cmd_export_grid,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig fields")
    common.add_argument("--seed", type=int)
    common.add_argument("--points", type=int)
    common.add_argument("--tol-residual", dest="tol_residual", type=float)
    common.add_argument("--tol-ricci", dest="tol_ricci", type=float)
    common.add_argument("--fd-step", dest="fd_step", type=float)
    common.add_argument("--box", type=float)
    common.add_argument("--workers", type=int)
    common.add_argument("--out", help="output file (document, report or grid)")

    parser = argparse.ArgumentParser(prog="heavenly", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", parents=[common], help="build a solution document")
    b.add_argument("family", choices=[f.value for f in FamilyId])
    b.add_argument("--params-file", dest="params_file")
    for name in ("a", "b", "nu", "mu", "alpha", "beta", "gamma", "c"):
        b.add_argument(f"--{name}")
    b.add_argument("--notes")

    for name in ("verify", "metric", "curvature", "killing"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("document")

    t = sub.add_parser("symmetry-table", parents=[common])
    t.add_argument("--corrected", action="store_true", help="use the corrected X3/Y cells")

    g = sub.add_parser("export-grid", parents=[common])
    g.add_argument("document")
    g.add_argument("--axes", required=True, help="two coordinate names, e.g. re_p,im_p")
    g.add_argument("--ranges", default="-1:1,-1:1")
    g.add_argument("--resolution", type=int, default=64)
    g.add_argument("--fixed", help="values for the other coordinates, e.g. re_z2=0.1,im_z2=0")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args)
        return COMMANDS[args.command](args, config)
    except (InputError, HeavenlyError, ValueError, TypeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
