"""
Kinetic Monte-Carlo of single-photon transverse dynamics.

Each photon drifts freely with transverse velocity ``c q / q0`` and receives
momentum kicks at Poisson-distributed times with total rate ``nu``. Kick
vectors are isotropic with radial density proportional to ``k psi(k)``. This
is an unbiased sampler of the kinetic equation's collision picture: there is
no time step.

Randomness is counter-based: photon ``i`` draws from the Philox stream keyed
by ``(seed, i)``, with the event index in the counter. Photons are processed
in fixed-size blocks whose results are concatenated in order before any
reduction, so estimates are bit-identical for any number of worker threads.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import meanfield as mf
from . import spectrum as sp
from .errors import ConfigError, SimulationError
from .numerics import InverseCDFTable, philox_uniforms
from .spectrum import C_LIGHT, SpectrumKind

BLOCK_SIZE = 4096
_DOMAIN_INIT = 1
_DOMAIN_EVENT = 2


class InitialMode(str, enum.Enum):
    POINT_SOURCE = "point_source"
    GAUSSIAN_WAIST = "gaussian_waist"
    DIFFUSER_WAIST = "diffuser_waist"


@dataclass(frozen=True)
class McConfig:
    """Monte-Carlo run configuration.

    Parameters
    ----------
    n_photons : int
        Number of simulated photons (independent of the beam's physical ``N``).
    seed : int
        64-bit seed.
    record_times : tuple of float
        Strictly increasing times at which the state is recorded.
    initial_mode : InitialMode
        ``point_source`` starts every photon at ``r = q = 0``.
        ``gaussian_waist`` samples the aperture Wigner function of the
        ``exp(-r^2/r0^2)`` field: per-axis variances ``r0^2/4`` in position
        and ``1/r0^2`` in momentum. ``diffuser_waist`` adds ``g2`` per axis
        to the momentum variance.
    g2 : float
        Diffuser strength for ``diffuser_waist``.
    max_events_per_photon : int or None
        Safety cap; ``None`` uses ``10 nu t_max + 100``.
    histogram_bins : int
        Radial histogram bins per record time (0 disables the histogram).
    histogram_extent : float
        Histogram outer radius in units of the expected rms radius.
    threads : int
        Worker threads; does not affect results.
    """

    n_photons: int
    seed: int
    record_times: tuple
    initial_mode: InitialMode = InitialMode.POINT_SOURCE
    g2: float = 0.0
    max_events_per_photon: int | None = None
    histogram_bins: int = 50
    histogram_extent: float = 3.0
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "record_times", tuple(float(t) for t in self.record_times))
        object.__setattr__(self, "initial_mode", InitialMode(self.initial_mode))
        if int(self.n_photons) != self.n_photons or self.n_photons < 1:
            raise ConfigError(f"must be an integer >= 1, got {self.n_photons}", path="mc.n_photons")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError("must fit in 64 bits", path="mc.seed")
        rt = self.record_times
        if not rt:
            raise ConfigError("must not be empty", path="mc.record_times")
        if rt[0] < 0 or any(b <= a for a, b in zip(rt, rt[1:])):
            raise ConfigError("must be non-negative and strictly increasing", path="mc.record_times")
        if self.g2 < 0:
            raise ConfigError("must be >= 0", path="mc.g2")
        if self.histogram_bins < 0:
            raise ConfigError("must be >= 0", path="mc.histogram_bins")
        if self.histogram_extent <= 0:
            raise ConfigError("must be > 0", path="mc.histogram_extent")
        if self.threads < 1:
            raise ConfigError("must be >= 1", path="mc.threads")
        if self.max_events_per_photon is not None and self.max_events_per_photon < 1:
            raise ConfigError("must be >= 1", path="mc.max_events_per_photon")


@dataclass
class RadialHistogram:
    """Radial photon histogram; ``overflow`` counts photons beyond the last edge."""

    edges: np.ndarray
    counts: np.ndarray
    overflow: int
    n_simulated: int
    n_beam: float

    @property
    def areas(self):
        return math.pi * (self.edges[1:] ** 2 - self.edges[:-1] ** 2)

    @property
    def density(self):
        """Photons per m^2, scaled so the histogram plus overflow integrates to ``N``."""
        return self.counts * (self.n_beam / self.n_simulated) / self.areas

    @property
    def stderr(self):
        n = self.n_simulated
        p = self.counts / n
        return np.sqrt(n * p * (1.0 - p)) * (self.n_beam / n) / self.areas


@dataclass
class McEstimate:
    """Ensemble estimates at each record time."""

    times: np.ndarray
    n_photons: int
    mean_q2: np.ndarray
    mean_r2: np.ndarray
    mean_rq: np.ndarray
    stderr_q2: np.ndarray
    stderr_r2: np.ndarray
    stderr_rq: np.ndarray
    n_events: np.ndarray
    histograms: list = field(default_factory=list)

    _COLUMNS = ("time", "mean_q2", "stderr_q2", "mean_r2", "stderr_r2", "mean_rq", "stderr_rq", "mean_events")

    def rows(self):
        for i, t in enumerate(self.times):
            yield (
                t,
                self.mean_q2[i],
                self.stderr_q2[i],
                self.mean_r2[i],
                self.stderr_r2[i],
                self.mean_rq[i],
                self.stderr_rq[i],
                self.n_events[i] / self.n_photons,
            )

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self._COLUMNS)
        for row in self.rows():
            w.writerow([f"{v:.9g}" for v in row])
        return buf.getvalue()

    def histogram_csv(self, t_index):
        h = self.histograms[t_index]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("r_lo", "r_hi", "count", "density", "stderr"))
        for lo, hi, c, d, e in zip(h.edges[:-1], h.edges[1:], h.counts, h.density, h.stderr):
            w.writerow((f"{lo:.9g}", f"{hi:.9g}", int(c), f"{d:.9g}", f"{e:.9g}"))
        w.writerow(("overflow", "", int(h.overflow), "", ""))
        return buf.getvalue()

    def to_json(self):
        doc = {
            "n_photons": self.n_photons,
            "columns": list(self._COLUMNS),
            "rows": [[float(v) for v in row] for row in self.rows()],
            "histograms": [
                {
                    "edges": h.edges.tolist(),
                    "counts": h.counts.astype(int).tolist(),
                    "overflow": int(h.overflow),
                }
                for h in self.histograms
            ],
        }
        return json.dumps(doc, indent=1)


class KickSampler:
    """Radius sampler for kicks with radial density ``2 pi k psi(k)``."""

    def __init__(self, spec):
        self.spec = spec
        if spec.kind is SpectrumKind.GAUSSIAN:
            self.table = None
        else:
            k_max = spec.k_support
            if not math.isfinite(k_max):
                # power-law tail without inner scale: cut where the tail mass is negligible
                k_max = 1e6 / spec.outer_scale
            breaks = [s[0] for s in spec.samples] if spec.kind is SpectrumKind.TABULATED else ()
            self.table = InverseCDFTable.from_density(
                lambda k: 2.0 * math.pi * k * sp.psi(spec, k), 0.0, k_max, breakpoints=breaks
            )

    def radius(self, u):
        """Kick magnitude from uniforms ``u`` in [0, 1)."""
        if self.table is None:
            # k^2 l^2 / 4 is exponentially distributed
            return (2.0 / self.spec.corr_length) * np.sqrt(-np.log1p(-u))
        return self.table(u)


def sample_kick(spec, stream, sampler=None):
    """One isotropic kick vector drawn from ``stream``."""
    sampler = sampler or KickSampler(spec)
    k = float(sampler.radius(np.array(stream.next_uniform())))
    phi = 2.0 * math.pi * stream.next_uniform()
    return np.array([k * math.cos(phi), k * math.sin(phi)])


def _initial_state(beam, cfg, ids):
    n = ids.size
    r = np.zeros((n, 2))
    q = np.zeros((n, 2))
    if cfg.initial_mode is InitialMode.POINT_SOURCE:
        return r, q
    u = philox_uniforms(cfg.seed, ids, 0, _DOMAIN_INIT)
    v = philox_uniforms(cfg.seed, ids, 1, _DOMAIN_INIT)
    # Box-Muller: two independent normals from each pair of uniforms
    g = np.empty((n, 4))
    for j, w in enumerate((u, v)):
        rad = np.sqrt(-2.0 * np.log1p(-w[:, 0]))
        g[:, 2 * j] = rad * np.cos(2.0 * math.pi * w[:, 1])
        g[:, 2 * j + 1] = rad * np.sin(2.0 * math.pi * w[:, 1])
    r = g[:, :2] * (beam.r0 / 2.0)
    sq = 1.0 / beam.r0**2
    if cfg.initial_mode is InitialMode.DIFFUSER_WAIST:
        sq += cfg.g2
    q = g[:, 2:] * math.sqrt(sq)
    return r, q


def _simulate_block(beam, cfg, sampler, nu, cap, ids):
    """Advance one block of photons through all record times."""
    n = ids.size
    r, q = _initial_state(beam, cfg, ids)
    v = C_LIGHT / beam.q0
    t_last = np.zeros(n)
    n_ev = np.zeros(n, dtype=np.int64)
    n_rec = len(cfg.record_times)
    rec_r = np.empty((n_rec, n, 2))
    rec_q = np.empty((n_rec, n, 2))
    rec_ev = np.empty((n_rec, n), dtype=np.int64)
    if nu > 0:
        u = philox_uniforms(cfg.seed, ids, 0, _DOMAIN_EVENT)
        t_next = -np.log1p(-u[:, 0]) / nu
    else:
        t_next = np.full(n, np.inf)
    for j, t_rec in enumerate(cfg.record_times):
        while True:
            idx = np.nonzero(t_next <= t_rec)[0]
            if idx.size == 0:
                break
            dt = t_next[idx] - t_last[idx]
            r[idx] += v * q[idx] * dt[:, None]
            t_last[idx] = t_next[idx]
            n_ev[idx] += 1
            over = idx[n_ev[idx] > cap]
            if over.size:
                raise SimulationError(
                    f"photon {int(ids[over[0]])} exceeded {cap} events (nu*t = {nu * t_rec:.3g})"
                )
            # event e uses counter block e: [kick radius, kick angle, next waiting time, unused]
            u = philox_uniforms(cfg.seed, ids[idx], n_ev[idx].astype(np.uint64), _DOMAIN_EVENT)
            k = sampler.radius(u[:, 0])
            phi = 2.0 * math.pi * u[:, 1]
            q[idx, 0] += k * np.cos(phi)
            q[idx, 1] += k * np.sin(phi)
            t_next[idx] += -np.log1p(-u[:, 2]) / nu
        rec_r[j] = r + v * q * (t_rec - t_last)[:, None]
        rec_q[j] = q
        rec_ev[j] = n_ev
    return rec_r, rec_q, rec_ev


def expected_moments(beam, spec, cfg, t):
    """Exact ensemble ``(<q^2>, <r^2>, <r.q>)`` at time ``t`` for the configured initial state.

    Kicks are independent with zero mean, so the diffusive parts
    ``4 alpha t``, ``4 alpha c^2 t^3 / (3 q0^2)`` and ``2 alpha c t^2 / q0``
    are exact at any ``nu t``; the initial spread adds free-drift terms.
    """
    tau = C_LIGHT * t / beam.q0
    a = sp.alpha(spec, beam.omega0)
    q2 = 4.0 * a * t
    r2 = 4.0 * a * C_LIGHT**2 * t**3 / (3.0 * beam.q0**2)
    rq = 2.0 * a * C_LIGHT * t * t / beam.q0
    if cfg.initial_mode is not InitialMode.POINT_SOURCE:
        sq = 1.0 / beam.r0**2 + (cfg.g2 if cfg.initial_mode is InitialMode.DIFFUSER_WAIST else 0.0)
        q2 += 2.0 * sq
        r2 += beam.r0**2 / 2.0 + 2.0 * sq * tau**2
        rq += 2.0 * sq * tau
    return q2, r2, rq


def expected_r2(beam, spec, cfg, t):
    return expected_moments(beam, spec, cfg, t)[1]


def _stats(x):
    m = float(np.mean(x))
    se = float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return m, se


def simulate_photons(beam, spec, cfg):
    """Run the Monte-Carlo and aggregate estimates at every record time."""
    nu = sp.nu(spec, beam.omega0)
    t_max = cfg.record_times[-1]
    cap = cfg.max_events_per_photon
    if cap is None:
        cap = int(10 * nu * t_max) + 100
    sampler = KickSampler(spec) if nu > 0 else None
    n = int(cfg.n_photons)
    blocks = [np.arange(s, min(s + BLOCK_SIZE, n), dtype=np.uint64) for s in range(0, n, BLOCK_SIZE)]

    def run(ids):
        return _simulate_block(beam, cfg, sampler, nu, cap, ids)

    if cfg.threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
            parts = list(ex.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    rr = np.concatenate([p[0] for p in parts], axis=1)
    qq = np.concatenate([p[1] for p in parts], axis=1)
    ev = np.concatenate([p[2] for p in parts], axis=1)

    k = len(cfg.record_times)
    out = {key: np.empty(k) for key in ("q2", "r2", "rq", "sq2", "sr2", "srq")}
    hists = []
    for j, t in enumerate(cfg.record_times):
        q2 = np.sum(qq[j] ** 2, axis=1)
        r2 = np.sum(rr[j] ** 2, axis=1)
        rq = np.sum(rr[j] * qq[j], axis=1)
        out["q2"][j], out["sq2"][j] = _stats(q2)
        out["r2"][j], out["sr2"][j] = _stats(r2)
        out["rq"][j], out["srq"][j] = _stats(rq)
        if cfg.histogram_bins:
            scale = math.sqrt(expected_r2(beam, spec, cfg, t))
            if scale == 0.0:
                scale = beam.r0
            edges = np.linspace(0.0, cfg.histogram_extent * scale, cfg.histogram_bins + 1)
            rad = np.sqrt(r2)
            counts, _ = np.histogram(rad, bins=edges)
            overflow = int(np.count_nonzero(rad >= edges[-1]))
            hists.append(RadialHistogram(edges, counts, overflow, n, beam.n_photons))
    return McEstimate(
        times=np.array(cfg.record_times),
        n_photons=n,
        mean_q2=out["q2"],
        mean_r2=out["r2"],
        mean_rq=out["rq"],
        stderr_q2=out["sq2"],
        stderr_r2=out["sr2"],
        stderr_rq=out["srq"],
        n_events=ev.sum(axis=1),
        histograms=hists,
    )


@dataclass
class ProfileComparison:
    r_mid: np.ndarray
    density: np.ndarray
    stderr: np.ndarray
    expected: np.ndarray
    z: np.ndarray
    empty: np.ndarray


def estimate_intensity_profile(estimate, t_index, beam=None, spec=None, reference="saturated"):
    """Radial density with per-bin stderr and z-scores against a reference profile.

    ``reference="saturated"`` uses the bin average of the closed-form mean
    intensity. ``reference="kinetic"`` uses the exact finite-``nu t``
    point-source profile, which keeps the non-Gaussian corrections of order
    ``1/(nu t)``; it applies to point-source runs. Empty bins are flagged in
    ``empty`` and get ``z = nan``.
    """
    h = estimate.histograms[t_index]
    r_mid = 0.5 * (h.edges[1:] + h.edges[:-1])
    dens, se = h.density, h.stderr
    empty = h.counts == 0
    if beam is None:
        expected = np.full(dens.shape, np.nan)
    else:
        bt = beam.with_time(float(estimate.times[t_index]))
        if reference == "saturated":
            m = mf.moments(bt, spec)
            lo, hi = h.edges[:-1] ** 2, h.edges[1:] ** 2
            mass = math.pi * m.r2_mean * (np.exp(-lo / m.r2_mean) - np.exp(-hi / m.r2_mean)) / m.a2
        elif reference == "kinetic":
            mass = np.diff(mf.point_source_enclosed(bt, spec, h.edges))
        else:
            raise ValueError(f"unknown reference {reference!r}")
        expected = mass / h.areas
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(empty, np.nan, (dens - expected) / se)
    return ProfileComparison(r_mid=r_mid, density=dens, stderr=se, expected=expected, z=z, empty=empty)
