"""
Mean photon distribution function and mean intensity.

Two tiers are provided:

* closed-form saturated-regime expressions (:func:`moments`,
  :func:`mean_pdf_asymptotic`, :func:`mean_intensity`), valid for ``nu t >> 1``;
* direct quadrature of the general Fourier-space solution
  (:func:`mean_pdf_exact`), which keeps the aperture radius and the full
  collision kernel and serves as the oracle for the closed forms.

Normalization: the box area ``S`` is fixed to 1 m^2 and the solution constant
is ``C = N / (4 pi^2 S)``, so that ``sum_q -> S/(2 pi)^2 int d^2q`` turns the
phase-space density into a spatial photon density integrating to ``N``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import erf, erfc, j0, j1

from . import spectrum as sp
from .errors import ConfigError, NumericalError, RegimeError, RegimeWarning
from .numerics import DEFAULT_QUADRATURE, QuadratureSettings, gauss_legendre_panels, integrate_radial
from .spectrum import C_LIGHT, GammaMode

BOX_AREA = 1.0  # m^2, cancels in every observable


@dataclass(frozen=True)
class BeamParams:
    """Laser and link parameters.

    Parameters
    ----------
    wavelength : float
        Carrier wavelength in m.
    r0 : float
        Aperture field profile ``exp(-r^2 / r0^2)`` radius in m.
    n_photons : float
        Total transverse photon number ``N``.
    time : float
        Propagation time in s; ``distance = c * time``.
    """

    wavelength: float
    r0: float
    n_photons: float
    time: float

    def __post_init__(self):
        for name in ("wavelength", "r0", "n_photons"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"must be finite and > 0, got {v}", path=f"beam.{name}")
        if not (math.isfinite(self.time) and self.time >= 0):
            raise ConfigError(f"must be finite and >= 0, got {self.time}", path="beam.time")

    @classmethod
    def from_distance(cls, wavelength, r0, n_photons, distance):
        return cls(wavelength=wavelength, r0=r0, n_photons=n_photons, time=distance / C_LIGHT)

    @property
    def q0(self):
        return 2.0 * math.pi / self.wavelength

    @property
    def omega0(self):
        return C_LIGHT * self.q0

    @property
    def distance(self):
        return C_LIGHT * self.time

    @property
    def pdf_constant(self):
        return self.n_photons / (4.0 * math.pi**2 * BOX_AREA)

    def with_time(self, time):
        return replace(self, time=time)


@dataclass(frozen=True)
class RegimeThresholds:
    """Pass/warn limits for the regime diagnostics (all configurable)."""

    saturation_pass: float = 10.0
    saturation_warn: float = 1.0
    broadening_pass: float = 10.0
    broadening_warn: float = 1.0
    paraxial_pass: float = 0.01
    paraxial_warn: float = 0.1


DEFAULT_THRESHOLDS = RegimeThresholds()


@dataclass(frozen=True)
class Moments:
    r2_mean: float
    q2_mean: float
    a2: float
    nu_t: float
    saturated: bool
    paraxial: bool
    broadened: bool


@dataclass(frozen=True)
class RegimeReport:
    nu_t: float
    broadening_ratio: float
    paraxial_ratio: float
    saturation: str
    broadening: str
    paraxial: str

    @property
    def statuses(self):
        return {"saturation": self.saturation, "broadening": self.broadening, "paraxial": self.paraxial}


def _grade_large(value, pass_above, warn_above):
    if value > pass_above:
        return "pass"
    if value > warn_above:
        return "warn"
    return "fail"


def _grade_small(value, pass_below, warn_below):
    if value < pass_below:
        return "pass"
    if value < warn_below:
        return "warn"
    return "fail"


def moments(beam, spec, thresholds=DEFAULT_THRESHOLDS):
    """Saturated-regime beam statistics.

    ``<q^2> = 4 alpha t`` and ``<r^2> = 4 alpha c^2 t^3 / (3 q0^2)``.
    """
    a = sp.alpha(spec, beam.omega0)
    n = sp.nu(spec, beam.omega0)
    t = beam.time
    q2 = 4.0 * a * t
    r2 = 4.0 * a * C_LIGHT**2 * t**3 / (3.0 * beam.q0**2)
    nu_t = n * t
    return Moments(
        r2_mean=r2,
        q2_mean=q2,
        a2=math.pi * r2 / beam.n_photons,
        nu_t=nu_t,
        saturated=nu_t > thresholds.saturation_pass,
        paraxial=q2 / beam.q0**2 < thresholds.paraxial_pass,
        broadened=r2 * q2 / 4.0 > thresholds.broadening_pass,
    )


def regime_check(beam, spec, thresholds=DEFAULT_THRESHOLDS):
    """Grade the saturation, broadening and paraxial ratios as pass, warn or fail.

    At ``t = 0`` nothing has propagated and every grade is ``fail``.
    """
    m = moments(beam, spec, thresholds)
    broad = m.r2_mean * m.q2_mean / 4.0
    parax = m.q2_mean / beam.q0**2
    if beam.time == 0:
        return RegimeReport(m.nu_t, broad, parax, "fail", "fail", "fail")
    return RegimeReport(
        nu_t=m.nu_t,
        broadening_ratio=broad,
        paraxial_ratio=parax,
        saturation=_grade_large(m.nu_t, thresholds.saturation_pass, thresholds.saturation_warn),
        broadening=_grade_large(broad, thresholds.broadening_pass, thresholds.broadening_warn),
        paraxial=_grade_small(parax, thresholds.paraxial_pass, thresholds.paraxial_warn),
    )


def _saturated_moments(beam, spec, what):
    if beam.time == 0:
        raise RegimeError(f"{what}: the saturated form is singular at t = 0")
    m = moments(beam, spec)
    if m.q2_mean == 0:
        raise RegimeError(f"{what}: zero spectrum gives no saturated regime")
    if not m.saturated:
        warnings.warn(f"{what}: nu*t = {m.nu_t:.3g} is not >> 1", RegimeWarning, stacklevel=3)
    return m


def _vec(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise ValueError("vectors must have a trailing axis of length 2")
    return x


def mean_pdf_asymptotic(beam, spec, r, q):
    """Saturated-regime mean PDF at phase-space points ``(r, q)``.

    ``3 C (2 pi q0 / (c t^2 alpha))^2 exp[-4 (r - q c t / (2 q0))^2 / <r^2> - q^2 / <q^2>]``
    """
    m = _saturated_moments(beam, spec, "mean_pdf_asymptotic")
    r, q = _vec(r), _vec(q)
    a = sp.alpha(spec, beam.omega0)
    t = beam.time
    peak = 3.0 * beam.pdf_constant * (2.0 * math.pi * beam.q0 / (C_LIGHT * t * t * a)) ** 2
    d = r - q * (C_LIGHT * t / (2.0 * beam.q0))
    expo = -4.0 * np.sum(d * d, axis=-1) / m.r2_mean - np.sum(q * q, axis=-1) / m.q2_mean
    return peak * np.exp(expo)


def mean_intensity(beam, spec, r):
    """Mean photon density ``(1/a^2) exp(-r^2/<r^2>)`` in photons/m^2."""
    m = _saturated_moments(beam, spec, "mean_intensity")
    r = _vec(r)
    return np.exp(-np.sum(r * r, axis=-1) / m.r2_mean) / m.a2


def pdf_to_density_factor():
    """Factor turning ``int d^2q f`` into photons/m^2 (``S / (2 pi)^2``)."""
    return BOX_AREA / (4.0 * math.pi**2)


# ---------------------------------------------------------------------------
# Exact tier


def free_space_pdf(beam, r, q, r1_sq=None):
    """Mean PDF without turbulence: diffracting Gaussian beam.

    ``r1_sq`` replaces ``r0^2`` in the initial momentum width (phase diffuser).
    """
    r, q = _vec(r), _vec(q)
    r0sq = beam.r0**2
    r1_sq = r0sq if r1_sq is None else r1_sq
    tau = C_LIGHT * beam.time / beam.q0
    d = r - q * tau
    pre = beam.pdf_constant * (8.0 * math.pi / r0sq) * (2.0 * math.pi * r1_sq)
    return pre * np.exp(-2.0 * np.sum(d * d, axis=-1) / r0sq - np.sum(q * q, axis=-1) * r1_sq / 2.0)


def gaussian_pdf_diffusive(beam, spec, r, q, r1_sq=None):
    """Closed form of the general solution with the small-argument kernel.

    Retains the aperture radius; every integral is Gaussian. Used as an oracle
    for the quadrature path in diffusive mode.
    """
    r, q = _vec(r), _vec(q)
    r0sq = beam.r0**2
    r1_sq = r0sq if r1_sq is None else r1_sq
    t = beam.time
    tau = C_LIGHT * t / beam.q0
    at = sp.alpha(spec, beam.omega0) * t
    m = np.array([[at + 0.5 / r1_sq, -0.5 * at], [-0.5 * at, at / 3.0 + r0sq / (8.0 * tau * tau)]])
    minv = np.linalg.inv(m)
    det = np.linalg.det(m)
    s = r / tau - q
    out = beam.pdf_constant / tau**2 * (math.pi / math.sqrt(det)) ** 2
    quad = (
        minv[0, 0] * np.sum(q * q, axis=-1)
        + 2.0 * minv[0, 1] * np.sum(q * s, axis=-1)
        + minv[1, 1] * np.sum(s * s, axis=-1)
    )
    return out * np.exp(-quad / 4.0)


def _erf_diff(a, b):
    """``erf(b) - erf(a)`` for ``a <= b`` without cancellation in the tails."""
    out = np.empty(np.broadcast(a, b).shape)
    a, b = np.broadcast_arrays(a, b)
    pos = a >= 0
    neg = b <= 0
    mid = ~(pos | neg)
    out[pos] = erfc(a[pos]) - erfc(b[pos])
    out[neg] = erfc(-b[neg]) - erfc(-a[neg])
    out[mid] = 2.0 - erfc(b[mid]) - erfc(-a[mid])
    return out


class _KernelOverlap:
    """Time-averaged correlation kernel ``J = int_0^1 K(|p - w s|) ds``."""

    def __init__(self, spec):
        self.spec = spec
        if spec.kind is sp.SpectrumKind.GAUSSIAN:
            self.l = spec.corr_length
            self.table = None
        else:
            # tabulate K(a) once; the overlap is then a Gauss-Legendre average
            self.l = None
            a_max = 40.0 * math.sqrt(sp.nu(spec, 1.0) / sp.alpha(spec, 1.0))
            grid = np.concatenate([[0.0], np.geomspace(a_max * 1e-6, a_max, 600)])
            self.table = (grid, sp.correlation_kernel(spec, grid))
            self.s_nodes, self.s_weights = gauss_legendre_panels(np.linspace(0.0, 1.0, 9), 8)

    def __call__(self, p, w, cos_t):
        if self.table is None:
            return self._gaussian(p, w, cos_t)
        grid, kv = self.table
        acc = np.zeros(np.broadcast(p, w, cos_t).shape)
        for s, ws in zip(self.s_nodes, self.s_weights):
            a = np.sqrt(np.maximum(p * p - 2.0 * p * w * cos_t * s + (w * s) ** 2, 0.0))
            acc += ws * np.interp(a, grid, kv, right=0.0)
        return acc

    def _gaussian(self, p, w, cos_t):
        l = self.l
        p, w, cos_t = np.broadcast_arrays(p, w, cos_t)
        out = np.empty(p.shape)
        small = w < 1e-7 * l
        # |p - w s|^2 = w^2 (s - s0)^2 + d^2 with s0 = p cos / w
        wl = w[~small]
        pc = p[~small] * cos_t[~small]
        d2 = p[~small] ** 2 - pc * pc
        lo = -pc / l
        hi = (wl - pc) / l
        out[~small] = np.exp(-np.maximum(d2, 0.0) / l**2) * (math.sqrt(math.pi) * l / (2.0 * wl)) * _erf_diff(lo, hi)
        ps, wsm, cs = p[small], w[small], cos_t[small]
        out[small] = np.exp(-ps * ps / l**2) * (1.0 + ps * wsm * cs / l**2)
        return out


@dataclass
class ExactPDFResult:
    value: np.ndarray
    error: np.ndarray
    n_nodes: int = 0
    details: dict = field(default_factory=dict)


class ExactMeanPDF:
    """Quadrature of the general mean-PDF solution at a set of phase-space points.

    The 4D Fourier integral over ``(p, k)`` is written with ``w = k c t / q0``;
    the integrand depends on ``(p, w)`` only through ``|p|``, ``|w|`` and their
    relative angle, so the common rotation is integrated analytically (a J0
    factor) and the remaining 3D integral is done with composite
    Gauss-Legendre panels in ``|p|``, ``|w|`` and a trapezoid rule in angle.
    The unscattered part ``exp(-nu t)`` of the collision factor is split off
    and added back in closed form (free diffraction).

    The error estimate is the difference to a rule with half the panel order
    and half the angular nodes.
    """

    _L = 40.0  # Gaussian weights beyond exp(-_L) are dropped
    _MAX_EVALS = 6e8

    def __init__(self, beam, spec, quad=DEFAULT_QUADRATURE, mode=GammaMode.EXACT, g2=0.0):
        self.beam = beam
        self.spec = spec
        self.quad = quad
        self.mode = GammaMode(mode)
        self.r1_sq = beam.r0**2 / (1.0 + beam.r0**2 * g2)
        t = beam.time
        self.tau = C_LIGHT * t / beam.q0
        self.nu_t = sp.nu(spec, beam.omega0) * t
        self.alpha_t = sp.alpha(spec, beam.omega0) * t
        self.trivial = t == 0.0 or spec.is_zero
        if self.mode is GammaMode.EXACT:
            self.floor = math.exp(-self.nu_t)
            self.overlap = _KernelOverlap(spec) if not self.trivial else None
            self.l_eff = math.sqrt(self.nu_t / self.alpha_t) if not self.trivial else math.inf
        else:
            self.floor = 0.0
            self.l_eff = math.inf

    # -- integrand --------------------------------------------------------

    def _weight(self, p, w):
        return np.exp(-p * p / (2.0 * self.r1_sq) - (w * w) * self.beam.r0**2 / (8.0 * self.tau**2))

    def _remainder(self, p, w, cos_t):
        """``W (exp(-Gamma) - floor)`` on broadcast node arrays."""
        wt = self._weight(p, w)
        if self.mode is GammaMode.DIFFUSIVE:
            return wt * np.exp(-self.alpha_t * (p * p - p * w * cos_t + w * w / 3.0))
        jv = self.overlap(p, w, cos_t)
        # exp(-nu t (1 - J)) - exp(-nu t) = exp(-nu t (1 - J)) * (1 - exp(-nu t J))
        return wt * np.exp(-self.nu_t * (1.0 - jv)) * -np.expm1(-self.nu_t * jv)

    def _scales(self):
        at = self.alpha_t
        r0sq = self.beam.r0**2
        m = np.array([[at + 0.5 / self.r1_sq, -0.5 * at], [-0.5 * at, at / 3.0 + r0sq / (8.0 * self.tau**2)]])
        cov = np.linalg.inv(m) / 2.0
        p_ext = math.sqrt(2.0 * self._L * self.r1_sq)
        w_ext = math.sqrt(8.0 * self._L) * self.tau / self.beam.r0
        return math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1]), p_ext, w_ext

    def _extents(self, sig_p, sig_w, p_ext, w_ext):
        """Cut the radial ranges where the remainder's mass becomes negligible."""
        pg = np.geomspace(min(sig_p * 1e-3, p_ext * 1e-3), p_ext, 160)
        wg = np.geomspace(min(sig_w * 1e-3, w_ext * 1e-3), w_ext, 160)
        ct = np.cos(np.linspace(0.0, math.pi, 257))
        peak = np.empty((pg.size, wg.size))
        for i, p in enumerate(pg):
            vals = np.abs(self._remainder(p, wg[:, None], ct[None, :]))
            peak[i] = vals.max(axis=1)
        mass = peak * pg[:, None] ** 2 * wg[None, :] ** 2
        total = mass.sum()
        tol = 1e-13 * total
        tail_p = np.cumsum(mass.sum(axis=1)[::-1])[::-1]
        tail_w = np.cumsum(mass.sum(axis=0)[::-1])[::-1]
        ip = np.nonzero(tail_p > tol)[0]
        iw = np.nonzero(tail_w > tol)[0]
        p_cut = pg[min(ip[-1] + 1, pg.size - 1)] if ip.size else pg[0]
        w_cut = wg[min(iw[-1] + 1, wg.size - 1)] if iw.size else wg[0]
        return p_cut, w_cut

    @staticmethod
    def _panel_edges(cut, sigma, h_osc, h_struct, x_struct):
        """Geometric panels from ``sigma / 2``, capped by the oscillation width
        and, below ``x_struct``, by the kernel structure width."""
        edges = [0.0]
        x = 0.0
        while x < cut:
            h = min(max(0.5 * x, sigma / 2.0), h_osc)
            h = min(h, max(h_struct, 0.25 * max(x - x_struct, 0.0)))
            x = min(x + h, cut)
            edges.append(x)
        return np.array(edges)

    def _build(self, freq_q, freq_s):
        sig_p, sig_w, p_ext, w_ext = self._scales()
        p_cut, w_cut = self._extents(sig_p, sig_w, p_ext, w_ext)
        n = self.quad.panel_order
        hp = n / (2.0 * max(freq_q, 1e-300))
        hw = n / (2.0 * max(freq_s, 1e-300))
        # the overlap J varies on the kernel scale only while |w s| can reach |p|;
        # beyond that it decays smoothly like 1/w
        pe = self._panel_edges(p_cut, sig_p, hp, self.l_eff, p_cut)
        we = self._panel_edges(w_cut, sig_w, hw, self.l_eff, p_cut + 4.0 * self.l_eff)
        n_theta = max(
            self.quad.angular_nodes,
            int(4.0 * (w_cut * freq_s + p_cut * 0.0)) + 32,
            int(32.0 * min(p_cut, w_cut) / self.l_eff) if math.isfinite(self.l_eff) else 0,
        )
        n_theta += n_theta % 2
        rules = {}
        for tag, order, nth in (("fine", n, n_theta), ("coarse", n // 2, n_theta // 2)):
            pn, pw = gauss_legendre_panels(pe, order)
            wn, ww = gauss_legendre_panels(we, order)
            if pn.size * wn.size * nth > self._MAX_EVALS:
                raise NumericalError(
                    f"exact mean-PDF rule needs {pn.size}x{wn.size}x{nth} nodes, over budget",
                    estimate=None,
                    error_bound=None,
                )
            theta = np.arange(nth) * (2.0 * math.pi / nth)
            rules[tag] = (pn, pw, wn, ww, theta)
        self._info = dict(p_cut=p_cut, w_cut=w_cut, n_p_panels=pe.size - 1, n_w_panels=we.size - 1, n_theta=n_theta)
        return rules

    def _rows(self, pn, pw, wn, ww, theta):
        cos_t = np.cos(theta)
        dth = 2.0 * math.pi / theta.size
        for p, wp in zip(pn, pw):
            vals = self._remainder(p, wn[:, None], cos_t[None, :])
            vals *= (p * wp) * (wn * ww)[:, None] * dth
            yield p, vals

    def _integrate(self, rule, q2, s2):
        """Sum the rule against J0 at every point, streaming over ``|p|`` nodes."""
        pn, pw, wn, ww, theta = rule
        total = sum(float(np.abs(v).sum()) for _, v in self._rows(*rule))
        thresh = 1e-15 * total
        cos_t, sin_t = np.cos(theta), np.sin(theta)
        res = np.zeros(len(q2))
        kept = 0
        for p, vals in self._rows(*rule):
            iw, it = np.nonzero(np.abs(vals) > thresh)
            if iw.size == 0:
                continue
            kept += iw.size
            v = vals[iw, it]
            w, ct, st = wn[iw], cos_t[it], sin_t[it]
            for i, (qq, ss) in enumerate(zip(q2, s2)):
                # Z = p Q + w e^{-i theta} S in complex notation
                zr = p * qq[0] + w * (ct * ss[0] + st * ss[1])
                zi = p * qq[1] + w * (ct * ss[1] - st * ss[0])
                res[i] += np.dot(v, j0(np.hypot(zr, zi)))
        return res, kept

    # -- evaluation -------------------------------------------------------

    def evaluate(self, r, q):
        r, q = _vec(r), _vec(q)
        r, q = np.broadcast_arrays(r, q)
        shape = r.shape[:-1]
        r2 = r.reshape(-1, 2)
        q2 = q.reshape(-1, 2)
        free = free_space_pdf(self.beam, r2, q2, self.r1_sq)
        if self.trivial:
            val = free.reshape(shape)
            return ExactPDFResult(value=val, error=np.zeros(shape))
        s2 = r2 / self.tau - q2
        freq_q = float(np.max(np.hypot(q2[:, 0], q2[:, 1]), initial=0.0)) + 1.0 / math.sqrt(self.r1_sq)
        freq_s = float(np.max(np.hypot(s2[:, 0], s2[:, 1]), initial=0.0)) + self.beam.r0 / self.tau
        rules = self._build(freq_q, freq_s)
        pre = self.beam.pdf_constant / self.tau**2 * 2.0 * math.pi
        out = {}
        kept = 0
        for tag, rule in rules.items():
            res, k = self._integrate(rule, q2, s2)
            out[tag] = pre * res
            if tag == "fine":
                kept = k
        value = out["fine"] + self.floor * free
        err = np.abs(out["fine"] - out["coarse"])
        details = dict(self._info, n_nodes=kept)
        return ExactPDFResult(
            value=value.reshape(shape), error=err.reshape(shape), n_nodes=details["n_nodes"], details=details
        )


def mean_pdf_exact(beam, spec, r, q, quad=DEFAULT_QUADRATURE, mode=GammaMode.EXACT, g2=0.0, check=True):
    """Mean PDF by direct quadrature of the general solution.

    Returns an :class:`ExactPDFResult`. With ``check=True`` an error estimate
    above ``quad.rel_tol_4d`` times the largest requested value raises
    :class:`NumericalError` carrying the estimate and its bound.
    """
    res = ExactMeanPDF(beam, spec, quad=quad, mode=mode, g2=g2).evaluate(r, q)
    if check and res.value.size:
        scale = np.max(np.abs(res.value))
        bad = res.error > quad.rel_tol_4d * np.maximum(np.abs(res.value), 1e-6 * scale)
        if np.any(bad):
            raise NumericalError(
                "exact mean-PDF quadrature missed its tolerance",
                estimate=res.value,
                error_bound=res.error,
            )
    return res


# ---------------------------------------------------------------------------
# Finite-nu*t intensity of a point source


def _point_source_transform(beam, spec, k):
    """``<exp(-i k.r)>`` of the photon position minus its unscattered part.

    A photon released at the origin with zero momentum has characteristic
    function ``exp(-nu t (1 - J(k tau)))`` with ``J(x) = int_0^1 K(x s) ds``.
    The constant ``exp(-nu t)`` (photons never scattered, still at the
    origin) is removed.
    """
    t = beam.time
    tau = C_LIGHT * t / beam.q0
    nu_t = sp.nu(spec, beam.omega0) * t
    x = np.asarray(k, dtype=float) * tau
    if spec.kind is sp.SpectrumKind.GAUSSIAN:
        l = spec.corr_length
        small = x <= 1e-8 * l
        xs = np.where(small, 1.0, x)
        jv = np.where(small, 1.0 - x * x / (3.0 * l * l), math.sqrt(math.pi) * l / (2.0 * xs) * erf(xs / l))
    else:
        s, ws = gauss_legendre_panels(np.linspace(0.0, 1.0, 17), 16)
        jv = np.tensordot(sp.correlation_kernel(spec, np.multiply.outer(x, s)), ws, axes=([-1], [0]))
    return np.exp(-nu_t * (1.0 - jv)) * -np.expm1(-nu_t * jv)


def _point_source_kmax(beam, spec):
    m = moments(beam, spec)
    return 40.0 / math.sqrt(m.r2_mean)


def point_source_intensity(beam, spec, r):
    """Mean photon density of a point source at finite ``nu t`` (unscattered delta excluded).

    ``I(r) = N/(2 pi) int k J0(k r) G(k) dk`` with ``G`` from
    :func:`_point_source_transform`. Exact for the kinetic model, so it
    retains the non-Gaussian corrections the saturated closed form drops.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    kmax = _point_source_kmax(beam, spec)
    out = np.empty(r.shape)
    for i, rv in enumerate(r.flat):
        val, _ = _hankel_piecewise(lambda k: k * j0(k * rv) * _point_source_transform(beam, spec, k), kmax, rv)
        out.flat[i] = val
    return beam.n_photons / (2.0 * math.pi) * out


def point_source_enclosed(beam, spec, radius):
    """Photons inside ``|r| < radius`` for a point source, including the unscattered ones.

    ``M(R) = N [exp(-nu t) + R int J1(k R) G(k) dk]``.
    """
    radius = np.atleast_1d(np.asarray(radius, dtype=float))
    nu_t = sp.nu(spec, beam.omega0) * beam.time
    kmax = _point_source_kmax(beam, spec)
    out = np.empty(radius.shape)
    for i, R in enumerate(radius.flat):
        if R == 0.0:
            out.flat[i] = 0.0
            continue
        val, _ = _hankel_piecewise(lambda k: j1(k * R) * _point_source_transform(beam, spec, k), kmax, R)
        out.flat[i] = math.exp(-nu_t) + R * val
    return beam.n_photons * out


def _hankel_piecewise(f, kmax, r):
    n_pieces = int(min(max(kmax * r / math.pi, 4), 4000))
    edges = np.linspace(0.0, kmax, n_pieces + 1)
    total = err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = integrate_radial(lambda k: float(f(k)), (lo, hi), abs_tol=1e-16 / (n_pieces * max(r, 1e-300) + 1.0))
        total += v
        err += e
    return total, err
