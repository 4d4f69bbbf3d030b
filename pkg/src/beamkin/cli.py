"""
Command-line front end: ``beamkin <command> SCENARIO [options]``.

Commands: ``moments``, ``correlate``, ``wander``, ``mc``, ``validate``.
Exit codes: 0 ok, 2 configuration error, 3 numerical error, 4 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from dataclasses import replace

import numpy as np

from . import fluctuations as fl
from . import kinetic_mc as kmc
from . import meanfield as mf
from . import validation
from . import wandering as wd
from .errors import ConfigError, NumericalError, RegimeError, RegimeWarning, SimulationError
from .scenario import env_threads, load_scenario, parse_vector

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VALIDATION = 4

MOMENTS_COLUMNS = (
    "time",
    "nu_t",
    "r2_mean",
    "q2_mean",
    "a2",
    "broadening_ratio",
    "paraxial_ratio",
    "saturation",
    "broadening",
    "paraxial",
)
CORRELATE_COLUMNS = (
    "time",
    "g2",
    "ra_x",
    "ra_y",
    "rb_x",
    "rb_y",
    "shot",
    "classical",
    "kernel_width_sq",
    "shot_kernel",
    "classical_over_mean_sq",
    "suppression_estimate",
    "suppression_exact",
)
WANDER_COLUMNS = ("time", "r2_cl", "r2_sh", "total", "crossover_time")


class Table:
    def __init__(self, columns, rows=None, meta=None):
        self.columns = list(columns)
        self.rows = rows or []
        self.meta = meta or {}

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_csv_cell(v) for v in row])
        return buf.getvalue()

    def to_json(self):
        doc = dict(self.meta)
        doc["columns"] = self.columns
        doc["rows"] = [[_json_cell(v) for v in row] for row in self.rows]
        # json uses repr for floats, the shortest string that round-trips bitwise
        return json.dumps(doc, indent=1) + "\n"

    def render(self, fmt):
        return self.to_json() if fmt == "json" else self.to_csv()


def _csv_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


def _json_cell(v):
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _sweep_columns(sc, columns):
    if sc.sweep is None or sc.sweep.variable in columns:
        return list(columns)
    return [sc.sweep.variable] + list(columns)


def _with_sweep(sc, value, row, columns):
    if sc.sweep is None or sc.sweep.variable in columns:
        return row
    return [value] + row


# -- commands ------------------------------------------------------------------


def cmd_moments(sc):
    table = Table(_sweep_columns(sc, MOMENTS_COLUMNS), meta={"command": "moments"})
    for value, s in sc.expand():
        m = mf.moments(s.beam, s.spectrum)
        rep = mf.regime_check(s.beam, s.spectrum)
        row = [
            s.beam.time,
            m.nu_t,
            m.r2_mean,
            m.q2_mean,
            m.a2,
            rep.broadening_ratio,
            rep.paraxial_ratio,
            rep.saturation,
            rep.broadening,
            rep.paraxial,
        ]
        table.rows.append(_with_sweep(s, value, row, MOMENTS_COLUMNS))
    return table


def cmd_correlate(sc, ra=None, rb=None, validate=False):
    ra = np.asarray(ra if ra is not None else sc.points[0], float)
    rb = np.asarray(rb if rb is not None else sc.points[1], float)
    cols = list(CORRELATE_COLUMNS) + (["oracle_classical", "oracle_rel_dev"] if validate else [])
    table = Table(_sweep_columns(sc, cols), meta={"command": "correlate"})
    worst = 0.0
    for value, s in sc.expand():
        diff = s.diffuser or fl.DiffuserParams(0.0)
        c = fl.correlation_with_diffuser(s.beam, s.spectrum, diff, ra, rb)
        row = [
            s.beam.time,
            diff.g2,
            ra[0],
            ra[1],
            rb[0],
            rb[1],
            c.shot,
            c.classical,
            c.kernel_width_sq,
            c.shot_kernel,
            c.classical / (c.shot * c.shot),
            fl.suppression_factor(s.beam, s.spectrum, diff),
            fl.exact_suppression(s.beam, s.spectrum, diff),
        ]
        if validate:
            ref, _ = fl.classical_quadrature(s.beam, s.spectrum, ra, rb, c.kernel_width_sq, s.quadrature)
            dev = abs(c.classical - ref) / abs(ref)
            worst = max(worst, dev)
            row += [ref, dev]
        table.rows.append(_with_sweep(s, value, row, cols))
    if validate:
        table.meta["max_rel_dev"] = worst
        table.meta["passed"] = worst <= 1e-4
    return table


def cmd_wander(sc, validate=False):
    cols = list(WANDER_COLUMNS) + (["quad_cl_rel_dev", "cl_bound", "quad_sh_rel_dev"] if validate else [])
    table = Table(_sweep_columns(sc, cols), meta={"command": "wander"})
    ok = True
    for value, s in sc.expand():
        rep = wd.wander_report(s.beam, s.spectrum)
        row = [rep.time, rep.r2_cl, rep.r2_sh, rep.total, rep.crossover_time]
        if validate:
            m = mf.moments(s.beam, s.spectrum)
            bound = 4.0 / (m.r2_mean * m.q2_mean)
            dcl = abs(wd.wander_quadrature(s.beam, s.spectrum, "classical") / rep.r2_cl - 1.0)
            dsh = abs(wd.wander_quadrature(s.beam, s.spectrum, "shot") / rep.r2_sh - 1.0)
            ok &= dcl <= bound * (1 + 1e-6) and dsh <= 1e-8
            row += [dcl, bound, dsh]
        table.rows.append(_with_sweep(s, value, row, cols))
    if validate:
        table.meta["passed"] = bool(ok)
    return table


def cmd_mc(sc, seed=None, threads=None):
    if sc.mc is None:
        raise ConfigError("the mc command needs an [mc] section", path="mc")
    cfg = sc.mc
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if threads is not None:
        cfg = replace(cfg, threads=threads)
    est = kmc.simulate_photons(sc.beam, sc.spectrum, cfg)
    lines = []
    for i, t in enumerate(est.times):
        q2, r2, rq = kmc.expected_moments(sc.beam, sc.spectrum, cfg, t)
        z = []
        for mean, se, ref in ((est.mean_q2[i], est.stderr_q2[i], q2), (est.mean_r2[i], est.stderr_r2[i], r2), (est.mean_rq[i], est.stderr_rq[i], rq)):
            z.append((mean - ref) / se if se > 0 else (0.0 if mean == ref else math.inf))
        lines.append(f"t={t:.6g}  z(q2)={z[0]:+.2f}  z(r2)={z[1]:+.2f}  z(rq)={z[2]:+.2f}")
    return est, lines


# -- plumbing ----------------------------------------------------------------------


def _resolve_out(path):
    if path is None or path == "-":
        return None
    base = os.environ.get("BEAMKIN_OUT_DIR")
    if base and not os.path.isabs(path):
        path = os.path.join(base, path)
    return path


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
        return
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _vector_arg(text):
    try:
        return parse_vector(text, "argument")
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser():
    p = argparse.ArgumentParser(prog="beamkin", description="Laser beam statistics in a turbulent atmosphere.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp_):
        sp_.add_argument("scenario", help="scenario file (INI or JSON)")
        sp_.add_argument("--out", help="output file (default: scenario [output] path, else stdout)")
        sp_.add_argument("--format", choices=("csv", "json"), help="output format")
        sp_.add_argument("--seed", type=int, help="random seed override")
        return sp_

    common(sub.add_parser("moments", help="saturated-regime moments and regime diagnostics"))
    c = common(sub.add_parser("correlate", help="photon-density correlation at a point pair"))
    c.add_argument("--ra", type=_vector_arg, help="first point 'x,y' in m")
    c.add_argument("--rb", type=_vector_arg, help="second point 'x,y' in m")
    c.add_argument("--validate", action="store_true", help="also run the quadrature oracle")
    w = common(sub.add_parser("wander", help="beam wander radii and crossover time"))
    w.add_argument("--validate", action="store_true", help="also run the quadrature oracles")
    m = common(sub.add_parser("mc", help="kinetic Monte-Carlo moments and histograms"))
    m.add_argument("--threads", type=int, help="worker threads (default: BEAMKIN_THREADS or 1)")
    v = common(sub.add_parser("validate", help="reduced-scale cross-tier checks"))
    v.add_argument("--mc-photons", type=int, default=20000)
    return p


def _run(args):
    sc = load_scenario(args.scenario)
    fmt = args.format or sc.output.format
    out = _resolve_out(args.out if args.out is not None else sc.output.path)
    if args.command == "moments":
        _emit(cmd_moments(sc).render(fmt), out)
        return EXIT_OK
    if args.command == "correlate":
        table = cmd_correlate(sc, args.ra, args.rb, args.validate)
        _emit(table.render(fmt), out)
        if args.validate:
            print(f"max relative deviation from quadrature oracle: {table.meta['max_rel_dev']:.3e}", file=sys.stderr)
            if not table.meta["passed"]:
                return EXIT_VALIDATION
        return EXIT_OK
    if args.command == "wander":
        table = cmd_wander(sc, args.validate)
        _emit(table.render(fmt), out)
        if args.validate and not table.meta["passed"]:
            return EXIT_VALIDATION
        return EXIT_OK
    if args.command == "mc":
        threads = args.threads
        if threads is not None and threads < 1:
            raise ConfigError("must be >= 1", path="--threads")
        est, lines = cmd_mc(sc, args.seed, threads)
        _emit(est.to_json() + "\n" if fmt == "json" else est.to_csv(), out)
        if out is not None and fmt == "csv":
            stem = out[:-4] if out.endswith(".csv") else out
            for i in range(len(est.histograms)):
                _emit(est.histogram_csv(i), f"{stem}.hist{i}.csv")
        for line in lines:
            print(line, file=sys.stderr)
        return EXIT_OK
    if args.command == "validate":
        seed = args.seed if args.seed is not None else (sc.mc.seed if sc.mc else 0)
        results, regime = validation.run_all(sc.beam, sc.spectrum, sc.quadrature, seed, args.mc_photons)
        passed = all(r.passed for r in results)
        doc = {"command": "validate", "passed": passed, "regime_warnings": regime, "checks": [r.as_dict() for r in results]}
        _emit(json.dumps(doc, indent=1) + "\n", out)
        for r in results:
            print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}  value={r.value:.4g}  threshold={r.threshold:.4g}", file=sys.stderr)
        return EXIT_OK if passed else EXIT_VALIDATION
    raise AssertionError(args.command)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        env_threads()
        with warnings.catch_warnings():
            warnings.simplefilter("always", RegimeWarning)
            warnings.formatwarning = lambda msg, cat, *a, **k: f"warning: {msg}\n"
            return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RegimeError as exc:
        print(f"regime error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, SimulationError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
