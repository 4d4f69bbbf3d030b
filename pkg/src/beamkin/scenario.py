"""
Scenario files: INI-style sections or the equivalent JSON document.

The grammar is documented in ``docs/scenario.md``. Every key is validated;
unknown sections or keys raise :class:`ConfigError` naming the field path.
"""

from __future__ import annotations

import configparser
import json
import math
import os
from dataclasses import dataclass, field, replace

from .errors import ConfigError
from .fluctuations import DiffuserParams
from .kinetic_mc import InitialMode, McConfig
from .meanfield import BeamParams
from .numerics import QuadratureSettings
from .spectrum import C_LIGHT, SpectrumKind, SpectrumModel

_LENGTH_UNITS = {"m": 1.0, "km": 1e3, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "nm": 1e-9}
_TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6}
SWEEP_VARIABLES = ("time", "g2", "amplitude", "r0")

_SCHEMA = {
    "beam": {"wavelength", "r0", "n_photons", "time", "distance"},
    "spectrum": {"kind", "amplitude", "collision_rate", "corr_length", "outer_scale", "inner_scale", "exponent", "samples"},
    "diffuser": {"g2"},
    "sweep": {"variable", "grid"},
    "mc": {
        "n_photons",
        "seed",
        "record_times",
        "initial_mode",
        "max_events_per_photon",
        "histogram_bins",
        "histogram_extent",
        "threads",
    },
    "quadrature": {
        "rel_tol",
        "rel_tol_4d",
        "max_nodes_1d",
        "hermite_order",
        "k_cutoff_factor",
        "panel_order",
        "angular_nodes",
    },
    "points": {"ra", "rb"},
    "output": {"format", "path"},
}
_REQUIRED = {"beam", "spectrum"}


@dataclass(frozen=True)
class Sweep:
    variable: str
    grid: tuple


@dataclass(frozen=True)
class OutputSpec:
    format: str = "csv"
    path: str | None = None


@dataclass(frozen=True)
class Scenario:
    beam: BeamParams
    spectrum: SpectrumModel
    diffuser: DiffuserParams | None = None
    sweep: Sweep | None = None
    mc: McConfig | None = None
    quadrature: QuadratureSettings = field(default_factory=QuadratureSettings)
    points: tuple = ((0.0, 0.0), (0.0, 0.0))
    output: OutputSpec = field(default_factory=OutputSpec)

    def points_for(self, value):
        """Scenario copy with the sweep variable set to ``value``."""
        if self.sweep is None:
            return self
        v = self.sweep.variable
        if v == "time":
            return replace(self, beam=replace(self.beam, time=value))
        if v == "r0":
            return replace(self, beam=replace(self.beam, r0=value))
        if v == "g2":
            return replace(self, diffuser=DiffuserParams(value))
        return replace(self, spectrum=self.spectrum.scaled(value / self.spectrum.amplitude))

    def expand(self):
        """``(sweep value or None, scenario)`` pairs in grid order."""
        if self.sweep is None:
            return [(None, self)]
        return [(v, self.points_for(v)) for v in self.sweep.grid]


# -- value parsing -----------------------------------------------------------


def parse_float(text, path):
    try:
        v = float(str(text).strip())
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}", path=path) from None
    if not math.isfinite(v):
        raise ConfigError(f"must be finite, got {text!r}", path=path)
    return v


def parse_int(text, path):
    v = parse_float(text, path)
    if v != int(v):
        raise ConfigError(f"expected an integer, got {text!r}", path=path)
    return int(v)


def parse_quantity(text, path, units):
    """Number with an optional unit suffix from ``units`` (SI if absent)."""
    if isinstance(text, (int, float)):
        return parse_float(text, path)
    parts = str(text).split()
    if len(parts) == 2:
        if parts[1] not in units:
            raise ConfigError(f"unknown unit {parts[1]!r}; allowed: {', '.join(units)}", path=path)
        return parse_float(parts[0], path) * units[parts[1]]
    if len(parts) != 1:
        raise ConfigError(f"expected '<number> [unit]', got {text!r}", path=path)
    return parse_float(parts[0], path)


def parse_list(text, path, item=parse_float):
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [s for s in str(text).replace("\n", ",").split(",") if s.strip()]
    if not items:
        raise ConfigError("must not be empty", path=path)
    return tuple(item(s, f"{path}[{i}]") for i, s in enumerate(items))


def parse_vector(text, path):
    v = parse_list(text, path)
    if len(v) != 2:
        raise ConfigError(f"expected two components, got {len(v)}", path=path)
    return v


def _parse_samples(text, path):
    if isinstance(text, (list, tuple)):
        pairs = [tuple(p) for p in text]
    else:
        pairs = []
        for i, chunk in enumerate(s for s in str(text).replace("\n", ",").split(",") if s.strip()):
            bits = chunk.split(":")
            if len(bits) != 2:
                raise ConfigError(f"expected 'k:psi', got {chunk.strip()!r}", path=f"{path}[{i}]")
            pairs.append(tuple(bits))
    return tuple((parse_float(k, f"{path}[{i}].k"), parse_float(v, f"{path}[{i}].psi")) for i, (k, v) in enumerate(pairs))


# -- section builders --------------------------------------------------------


def _check_keys(raw):
    for sec, body in raw.items():
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown section; allowed: {', '.join(_SCHEMA)}", path=sec)
        if not isinstance(body, dict):
            raise ConfigError("section must be a table of key = value", path=sec)
        for key in body:
            if key not in _SCHEMA[sec]:
                raise ConfigError("unknown key", path=f"{sec}.{key}")
    for sec in _REQUIRED:
        if sec not in raw:
            raise ConfigError("required section is missing", path=sec)


def _beam(sec):
    for key in ("wavelength", "r0", "n_photons"):
        if key not in sec:
            raise ConfigError("required key is missing", path=f"beam.{key}")
    if ("time" in sec) == ("distance" in sec):
        raise ConfigError("give exactly one of time or distance", path="beam.time")
    if "time" in sec:
        t = parse_quantity(sec["time"], "beam.time", _TIME_UNITS)
    else:
        t = parse_quantity(sec["distance"], "beam.distance", _LENGTH_UNITS) / C_LIGHT
    return BeamParams(
        wavelength=parse_quantity(sec["wavelength"], "beam.wavelength", _LENGTH_UNITS),
        r0=parse_quantity(sec["r0"], "beam.r0", _LENGTH_UNITS),
        n_photons=parse_float(sec["n_photons"], "beam.n_photons"),
        time=t,
    )


def _spectrum(sec, beam):
    kind = str(sec.get("kind", "gaussian")).strip().lower()
    try:
        kind = SpectrumKind(kind)
    except ValueError:
        raise ConfigError(f"unknown kind {kind!r}", path="spectrum.kind") from None
    allowed = {
        SpectrumKind.GAUSSIAN: {"kind", "amplitude", "collision_rate", "corr_length"},
        SpectrumKind.VON_KARMAN: {"kind", "amplitude", "outer_scale", "inner_scale", "exponent"},
        SpectrumKind.TABULATED: {"kind", "samples"},
    }[kind]
    for key in sec:
        if key not in allowed:
            raise ConfigError(f"not used by a {kind.value} spectrum", path=f"spectrum.{key}")
    if kind is SpectrumKind.TABULATED:
        if "samples" not in sec:
            raise ConfigError("required key is missing", path="spectrum.samples")
        pairs = _parse_samples(sec["samples"], "spectrum.samples")
        return SpectrumModel.tabulated([k for k, _ in pairs], [v for _, v in pairs])
    if kind is SpectrumKind.GAUSSIAN:
        if "corr_length" not in sec:
            raise ConfigError("required key is missing", path="spectrum.corr_length")
        l = parse_quantity(sec["corr_length"], "spectrum.corr_length", _LENGTH_UNITS)
        if ("amplitude" in sec) == ("collision_rate" in sec):
            raise ConfigError("give exactly one of amplitude or collision_rate", path="spectrum.amplitude")
        if "amplitude" in sec:
            amp = parse_float(sec["amplitude"], "spectrum.amplitude")
        else:
            # invert nu = 8 pi^2 omega0^2 A / (c l^2)
            rate = parse_float(sec["collision_rate"], "spectrum.collision_rate")
            if rate < 0:
                raise ConfigError("must be >= 0", path="spectrum.collision_rate")
            amp = rate * C_LIGHT * l * l / (8.0 * math.pi**2 * beam.omega0**2)
        return SpectrumModel.gaussian(amp, l)
    for key in ("amplitude", "outer_scale"):
        if key not in sec:
            raise ConfigError("required key is missing", path=f"spectrum.{key}")
    return SpectrumModel.von_karman(
        parse_float(sec["amplitude"], "spectrum.amplitude"),
        parse_quantity(sec["outer_scale"], "spectrum.outer_scale", _LENGTH_UNITS),
        parse_quantity(sec.get("inner_scale", 0.0), "spectrum.inner_scale", _LENGTH_UNITS),
        parse_float(sec.get("exponent", 11.0 / 3.0), "spectrum.exponent"),
    )


def _sweep(sec):
    for key in ("variable", "grid"):
        if key not in sec:
            raise ConfigError("required key is missing", path=f"sweep.{key}")
    var = str(sec["variable"]).strip()
    if var not in SWEEP_VARIABLES:
        raise ConfigError(f"must be one of {', '.join(SWEEP_VARIABLES)}", path="sweep.variable")
    grid = parse_list(sec["grid"], "sweep.grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("must be strictly increasing", path="sweep.grid")
    return Sweep(var, grid)


def _mc(sec, beam, diffuser, env_threads):
    for key in ("n_photons", "record_times"):
        if key not in sec:
            raise ConfigError("required key is missing", path=f"mc.{key}")
    mode = str(sec.get("initial_mode", "point_source")).strip()
    try:
        mode = InitialMode(mode)
    except ValueError:
        raise ConfigError(f"must be one of {', '.join(m.value for m in InitialMode)}", path="mc.initial_mode") from None
    cap = sec.get("max_events_per_photon")
    threads = parse_int(sec["threads"], "mc.threads") if "threads" in sec else env_threads
    return McConfig(
        n_photons=parse_int(sec["n_photons"], "mc.n_photons"),
        seed=parse_int(sec.get("seed", 0), "mc.seed"),
        record_times=parse_list(sec["record_times"], "mc.record_times", lambda s, p: parse_quantity(s, p, _TIME_UNITS)),
        initial_mode=mode,
        g2=diffuser.g2 if (diffuser is not None and mode is InitialMode.DIFFUSER_WAIST) else 0.0,
        max_events_per_photon=None if cap is None else parse_int(cap, "mc.max_events_per_photon"),
        histogram_bins=parse_int(sec.get("histogram_bins", 50), "mc.histogram_bins"),
        histogram_extent=parse_float(sec.get("histogram_extent", 3.0), "mc.histogram_extent"),
        threads=threads,
    )


def _quadrature(sec):
    kwargs = {}
    ints = {"max_nodes_1d", "hermite_order", "panel_order", "angular_nodes"}
    for key, val in sec.items():
        kwargs[key] = parse_int(val, f"quadrature.{key}") if key in ints else parse_float(val, f"quadrature.{key}")
    return QuadratureSettings(**kwargs)


def _output(sec):
    fmt = str(sec.get("format", "csv")).strip().lower()
    if fmt not in ("csv", "json"):
        raise ConfigError("must be csv or json", path="output.format")
    path = sec.get("path")
    return OutputSpec(fmt, None if path in (None, "", "-") else str(path).strip())


def env_threads():
    raw = os.environ.get("BEAMKIN_THREADS")
    if raw is None:
        return 1
    return parse_int(raw, "env.BEAMKIN_THREADS")


def scenario_from_dict(raw):
    """Build a :class:`Scenario` from nested ``{section: {key: value}}`` data."""
    raw = {str(s).lower(): ({str(k).lower(): v for k, v in b.items()} if isinstance(b, dict) else b) for s, b in raw.items()}
    _check_keys(raw)
    beam = _beam(raw["beam"])
    spec = _spectrum(raw["spectrum"], beam)
    diffuser = None
    if "diffuser" in raw:
        if "g2" not in raw["diffuser"]:
            raise ConfigError("required key is missing", path="diffuser.g2")
        diffuser = DiffuserParams(parse_float(raw["diffuser"]["g2"], "diffuser.g2"))
    sweep = _sweep(raw["sweep"]) if "sweep" in raw else None
    if sweep is not None and sweep.variable == "amplitude" and spec.kind is SpectrumKind.TABULATED:
        raise ConfigError("amplitude sweeps need a parametric spectrum", path="sweep.variable")
    mc = _mc(raw["mc"], beam, diffuser, env_threads()) if "mc" in raw else None
    quad = _quadrature(raw["quadrature"]) if "quadrature" in raw else QuadratureSettings()
    points = ((0.0, 0.0), (0.0, 0.0))
    if "points" in raw:
        sec = raw["points"]
        points = (
            parse_vector(sec.get("ra", "0, 0"), "points.ra"),
            parse_vector(sec.get("rb", "0, 0"), "points.rb"),
        )
    out = _output(raw["output"]) if "output" in raw else OutputSpec()
    return Scenario(beam, spec, diffuser, sweep, mc, quad, points, out)


def parse_scenario_text(text, fmt=None):
    """Parse scenario text; ``fmt`` is ``"ini"``, ``"json"`` or ``None`` to sniff."""
    if fmt is None:
        fmt = "json" if text.lstrip().startswith("{") else "ini"
    if fmt == "json":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}", path="<file>") from None
        if not isinstance(raw, dict):
            raise ConfigError("top level must be an object of sections", path="<file>")
        return scenario_from_dict(raw)
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse: {exc}".replace("\n", " "), path="<file>") from None
    return scenario_from_dict({s: dict(cp.items(s)) for s in cp.sections()})


def load_scenario(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario: {exc.strerror}", path=str(path)) from None
    fmt = "json" if str(path).endswith(".json") else None
    return parse_scenario_text(text, fmt)
