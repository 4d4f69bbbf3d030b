"""
Turbulence spectral-density models and the collision constants they induce.

A spectrum model gives the transverse refraction-index spectral density
``psi(k)`` in m^3 (isotropic in the transverse plane). Everything else in the
package is driven by three derived quantities, all with the prefactor
``omega0^2 / c`` of the photon collision integral:

* ``nu``    total collision rate, ``(2 pi omega0^2 / c) * int d^2k psi``   [1/s]
* ``alpha`` momentum-diffusion rate, ``(pi omega0^2 / 2c) * int d^2k k^2 psi``   [1/(m^2 s)]
* ``gamma`` collision kernel for a displacement vector ``a``:
  ``(4 pi omega0^2 / c) * int d^2k psi sin^2(a.k / 2)``   [1/s]

Three model families are provided. The Gaussian model is analytic in
every quantity and is the reference for cross-checks. The amplitude ``A``
stands for the product of the normalizing volume and the squared Fourier
amplitude of the refraction index; only that product enters observables, so
no mapping to a structure constant C_n^2 is attempted.

Notes
-----
``gamma(a) = nu * (1 - K(a))`` where ``K`` is the normalized 2D Fourier
transform of ``psi`` (the :func:`correlation_kernel`). For the Gaussian model
``K(a) = exp(-|a|^2 / l^2)``. For small ``|a|``, ``gamma ~ alpha |a|^2``.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import j0

from .errors import ConfigError, NumericalError
from .numerics import QuadratureSettings, integrate_radial, monotone_interpolator

C_LIGHT = 2.99792458e8  # m/s

_QUAD = QuadratureSettings(rel_tol=1e-10, max_nodes_1d=21 * 400)


class SpectrumKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    VON_KARMAN = "von_karman"
    TABULATED = "tabulated"


class GammaMode(str, enum.Enum):
    EXACT = "exact"
    DIFFUSIVE = "diffusive"


@dataclass(frozen=True)
class SpectrumModel:
    """Isotropic transverse spectral density of refraction-index fluctuations.

    Use the :meth:`gaussian`, :meth:`von_karman` and :meth:`tabulated`
    constructors rather than the raw fields.

    Parameters
    ----------
    kind : SpectrumKind
    amplitude : float
        Spectral amplitude ``A`` in m^3.
    corr_length : float, optional
        Gaussian correlation length ``l`` (m).
    outer_scale, inner_scale, exponent : float, optional
        von Karman outer scale ``L0`` (m), inner scale ``l0`` (m), power ``p``.
    samples : tuple of (k, psi) pairs, optional
        Tabulated model, ``k`` strictly increasing in 1/m, ``psi`` in m^3.
    """

    kind: SpectrumKind
    amplitude: float = 0.0
    corr_length: float | None = None
    outer_scale: float | None = None
    inner_scale: float | None = None
    exponent: float = 11.0 / 3.0
    samples: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SpectrumKind(self.kind))
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise ConfigError(f"amplitude must be finite and >= 0, got {self.amplitude}", "spectrum.amplitude")
        if self.kind is SpectrumKind.GAUSSIAN:
            if self.corr_length is None or not self.corr_length > 0:
                raise ConfigError("Gaussian model needs corr_length > 0", "spectrum.corr_length")
        elif self.kind is SpectrumKind.VON_KARMAN:
            self._check_von_karman()
        else:
            self._check_tabulated()

    def _check_von_karman(self):
        if self.outer_scale is None or not self.outer_scale > 0:
            raise ConfigError("von Karman model needs outer_scale > 0", "spectrum.outer_scale")
        if self.inner_scale is None or self.inner_scale < 0:
            raise ConfigError("von Karman model needs inner_scale >= 0", "spectrum.inner_scale")
        if not self.exponent > 0:
            raise ConfigError("exponent must be positive", "spectrum.exponent")
        # int d^2k k^2 psi must converge: needs an inner-scale cutoff or p > 4
        if self.inner_scale == 0 and self.exponent <= 4:
            raise NumericalError(
                f"int d^2k k^2 psi diverges for inner_scale = 0 and exponent {self.exponent} <= 4"
            )

    def _check_tabulated(self):
        if self.samples is None or len(self.samples) < 4:
            raise ConfigError("tabulated model needs at least 4 (k, psi) samples", "spectrum.samples")
        samples = tuple((float(k), float(v)) for k, v in self.samples)
        object.__setattr__(self, "samples", samples)
        k = np.array([s[0] for s in samples])
        v = np.array([s[1] for s in samples])
        if not (np.all(np.isfinite(k)) and np.all(np.isfinite(v))):
            raise ConfigError("samples must be finite", "spectrum.samples")
        if k[0] < 0 or np.any(np.diff(k) <= 0):
            raise ConfigError("sample k must be >= 0 and strictly increasing", "spectrum.samples")
        if np.any(v < 0):
            raise ConfigError("sample psi must be >= 0", "spectrum.samples")

    # -- constructors --------------------------------------------------------

    @classmethod
    def gaussian(cls, amplitude, corr_length):
        return cls(SpectrumKind.GAUSSIAN, amplitude=amplitude, corr_length=corr_length)

    @classmethod
    def von_karman(cls, amplitude, outer_scale, inner_scale, exponent=11.0 / 3.0):
        return cls(
            SpectrumKind.VON_KARMAN,
            amplitude=amplitude,
            outer_scale=outer_scale,
            inner_scale=inner_scale,
            exponent=exponent,
        )

    @classmethod
    def tabulated(cls, k, psi_values):
        return cls(SpectrumKind.TABULATED, samples=tuple(zip(k, psi_values)), amplitude=0.0)

    def scaled(self, factor):
        """Same shape with the amplitude (or tabulated values) multiplied by ``factor``."""
        if self.kind is SpectrumKind.TABULATED:
            return SpectrumModel.tabulated([s[0] for s in self.samples], [s[1] * factor for s in self.samples])
        return SpectrumModel(
            self.kind,
            amplitude=self.amplitude * factor,
            corr_length=self.corr_length,
            outer_scale=self.outer_scale,
            inner_scale=self.inner_scale,
            exponent=self.exponent,
        )

    @property
    def k_support(self):
        """Upper end of the k range carrying all but ~1e-16 of the moments."""
        if self.kind is SpectrumKind.GAUSSIAN:
            return 2.0 * math.sqrt(40.0) / self.corr_length
        if self.kind is SpectrumKind.TABULATED:
            return self.samples[-1][0]
        if self.inner_scale > 0:
            return math.sqrt(40.0) / self.inner_scale
        return math.inf

    @property
    def is_zero(self):
        if self.kind is SpectrumKind.TABULATED:
            return all(v == 0 for _, v in self.samples)
        return self.amplitude == 0.0

    @functools.cached_property
    def _interp(self):
        k = [s[0] for s in self.samples]
        v = [s[1] for s in self.samples]
        return monotone_interpolator(k, v)


def psi(model, k):
    """Spectral density ``psi(k)`` in m^3; vectorized over ``k``."""
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise ValueError("k must be non-negative")
    if model.kind is SpectrumKind.GAUSSIAN:
        out = model.amplitude * np.exp(-(k * k) * model.corr_length**2 / 4.0)
    elif model.kind is SpectrumKind.VON_KARMAN:
        out = (
            model.amplitude
            * (k * k + model.outer_scale**-2) ** (-model.exponent / 2.0)
            * np.exp(-(k * k) * model.inner_scale**2)
        )
    else:
        k_first, k_last = model.samples[0][0], model.samples[-1][0]
        out = np.where(k > k_last, 0.0, model._interp(np.clip(k, k_first, k_last)))
        out = np.where(k < k_first, model.samples[0][1], out)
    return out if out.ndim else float(out)


@functools.lru_cache(maxsize=256)
def _radial_moment(model, power):
    """``2 pi int_0^inf k^(power+1) psi(k) dk`` (i.e. ``int d^2k k^power psi``)."""
    if model.is_zero:
        return 0.0

    def integrand(k):
        return 2.0 * math.pi * k ** (power + 1) * psi(model, k)

    if model.kind is SpectrumKind.TABULATED:
        ks = [s[0] for s in model.samples]
        total = 0.0
        # piecewise over sample intervals so the interpolant's knots are respected
        for a, b in zip(ks[:-1], ks[1:]):
            total += integrate_radial(integrand, (a, b), _QUAD)[0]
        if ks[0] > 0:
            total += integrate_radial(integrand, (0.0, ks[0]), _QUAD)[0]
        return total
    if model.kind is SpectrumKind.VON_KARMAN:
        scales = sorted(s for s in (1.0 / model.outer_scale, 1.0 / model.inner_scale if model.inner_scale else 0) if s > 0)
        edges = [0.0] + [m * s for s in scales for m in (1.0, 10.0)]
        edges = sorted(set(edges))
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            total += integrate_radial(integrand, (a, b), _QUAD)[0]
        total += integrate_radial(integrand, (edges[-1], np.inf), _QUAD)[0]
        if not math.isfinite(total):
            raise NumericalError("spectral moment integral diverged", estimate=total)
        return total
    l2 = model.corr_length**2
    return model.amplitude * {0: 4.0 * math.pi / l2, 2: 16.0 * math.pi / (l2 * l2)}[power]


def _prefactor(omega0):
    if not omega0 > 0:
        raise ValueError("omega0 must be positive")
    return omega0 * omega0 / C_LIGHT


def nu(model, omega0):
    """Total collision rate ``nu`` in 1/s."""
    pre = _prefactor(omega0)
    if model.kind is SpectrumKind.GAUSSIAN:
        return 2.0 * math.pi * pre * model.amplitude * 4.0 * math.pi / model.corr_length**2
    return 2.0 * math.pi * pre * _radial_moment(model, 0)


def alpha(model, omega0):
    """Momentum-diffusion constant ``alpha`` in 1/(m^2 s); ``<q^2> = 4 alpha t``."""
    pre = _prefactor(omega0)
    if model.kind is SpectrumKind.GAUSSIAN:
        return 0.5 * math.pi * pre * model.amplitude * 16.0 * math.pi / model.corr_length**4
    return 0.5 * math.pi * pre * _radial_moment(model, 2)


@dataclass(frozen=True)
class CollisionConstants:
    nu: float
    alpha: float


def collision_constants(model, omega0):
    return CollisionConstants(nu=nu(model, omega0), alpha=alpha(model, omega0))


def correlation_kernel(model, a):
    """Normalized transform ``K(a) = int d^2k psi cos(a.k) / int d^2k psi``.

    ``K(0) = 1`` and ``gamma(a) = nu (1 - K(a))``. Vectorized over ``|a|``.
    """
    a = np.abs(np.asarray(a, dtype=float))
    if model.kind is SpectrumKind.GAUSSIAN:
        return np.exp(-(a * a) / model.corr_length**2)
    norm = _radial_moment(model, 0)
    if norm == 0.0:
        return np.ones_like(a)
    out = np.empty(a.shape)
    flat = out.reshape(-1)
    for i, ai in enumerate(a.reshape(-1)):
        flat[i] = _hankel0(model, float(ai)) / norm
    return out if out.ndim else float(out)


@functools.lru_cache(maxsize=65536)
def _hankel0(model, a):
    if a == 0.0:
        return _radial_moment(model, 0)
    k_max = model.k_support
    if not math.isfinite(k_max):
        k_max = 1e3 / model.outer_scale
    # split at Bessel-zero spacing so each piece is mildly oscillatory
    n_pieces = int(min(max(a * k_max / math.pi, 1), 2000))
    edges = np.linspace(0.0, k_max, n_pieces + 1)
    settings = QuadratureSettings(rel_tol=1e-9, max_nodes_1d=21 * 200)
    floor = 1e-13 * _radial_moment(model, 0) / n_pieces
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate_radial(
            lambda k: 2.0 * math.pi * k * psi(model, k) * j0(a * k), (lo, hi), settings, abs_tol=floor
        )
        total += val
    return total


def gamma(model, omega0, k, p, t, q0, mode=GammaMode.EXACT):
    """Collision kernel ``gamma(k, p, t)`` in 1/s.

    ``k`` (1/m) and ``p`` (m) are 2-vectors (arrays with trailing axis 2);
    the kernel depends on ``a = p - k c t / q0`` only.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    k = np.asarray(k, dtype=float)
    p = np.asarray(p, dtype=float)
    a = p - k * (C_LIGHT * t / q0)
    a2 = np.sum(a * a, axis=-1)
    mode = GammaMode(mode)
    if mode is GammaMode.DIFFUSIVE:
        return alpha(model, omega0) * a2
    n = nu(model, omega0)
    if model.kind is SpectrumKind.GAUSSIAN:
        return -n * np.expm1(-a2 / model.corr_length**2)
    return n * (1.0 - correlation_kernel(model, np.sqrt(a2)))


def gamma_quadrature(model, omega0, a_vec):
    """Direct radial-angular quadrature of the sine-squared collision kernel.

    Independent of the closed forms above; used as their oracle.
    """
    a_vec = np.asarray(a_vec, dtype=float)
    a = float(np.hypot(a_vec[0], a_vec[1]))
    pre = 4.0 * math.pi * _prefactor(omega0)
    # angular average of sin^2(a k cos(phi) / 2) is (1 - J0(a k)) / 2
    k_max = model.k_support if math.isfinite(model.k_support) else 1e3 / model.outer_scale
    n_pieces = int(min(max(a * k_max / math.pi, 1), 2000))
    edges = np.linspace(0.0, k_max, n_pieces + 1)
    floor = 1e-14 * _radial_moment(model, 0) / n_pieces if not model.is_zero else 0.0
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += integrate_radial(
            lambda kk: 2.0 * math.pi * kk * psi(model, kk) * 0.5 * (1.0 - j0(a * kk)),
            (lo, hi),
            QuadratureSettings(rel_tol=1e-10, max_nodes_1d=21 * 200),
            abs_tol=floor,
        )[0]
    return pre * total
