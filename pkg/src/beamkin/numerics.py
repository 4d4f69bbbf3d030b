"""
Shared numerical machinery.

Radial quadrature, Gauss-Hermite weighted tensor quadrature, composite
Gauss-Legendre panels, bracketing root finding, monotone inverse-CDF tables
and counter-based random streams.

The random streams are Philox4x64-10 evaluated in vectorized numpy. A block
``j`` of the stream keyed by ``(seed, stream_id)`` is bit-identical to the
output of ``numpy.random.Philox(key=[seed, stream_id], counter=[j-1, 0, 0, 0])``,
which the test suite uses as a known-answer oracle.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import PchipInterpolator

from .errors import ConfigError, NumericalError


@dataclass(frozen=True)
class QuadratureSettings:
    """Tolerances and node budgets for the quadrature routines.

    Parameters
    ----------
    rel_tol : float
        Target relative error for 1D routines.
    rel_tol_4d : float
        Target relative error for the phase-space (exact mean PDF) integral.
    max_nodes_1d : int
        Node budget for adaptive 1D quadrature.
    hermite_order : int
        Gauss-Hermite order per axis for weighted 2D quadrature.
    k_cutoff_factor : float
        Gaussian weights are treated as zero beyond this many standard widths.
    panel_order : int
        Gauss-Legendre nodes per panel in the exact mean-PDF integral.
    angular_nodes : int
        Trapezoid nodes for the relative angle in the exact mean-PDF integral.
    """

    rel_tol: float = 1e-8
    rel_tol_4d: float = 1e-5
    max_nodes_1d: int = 2048
    hermite_order: int = 64
    k_cutoff_factor: float = 12.0
    panel_order: int = 16
    angular_nodes: int = 128

    def __post_init__(self):
        for name in ("rel_tol", "rel_tol_4d"):
            v = getattr(self, name)
            if not (0.0 < v <= 1e-2):
                raise ConfigError(f"must lie in (0, 1e-2], got {v}", path=f"quadrature.{name}")
        for name in ("max_nodes_1d", "hermite_order", "panel_order", "angular_nodes"):
            if getattr(self, name) < 8:
                raise ConfigError("must be >= 8", path=f"quadrature.{name}")
        if self.k_cutoff_factor <= 0:
            raise ConfigError("must be positive", path="quadrature.k_cutoff_factor")


DEFAULT_QUADRATURE = QuadratureSettings()


# ---------------------------------------------------------------------------
# 1D quadrature


def integrate_radial(f, domain=(0.0, np.inf), settings=DEFAULT_QUADRATURE, points=None, abs_tol=0.0):
    """Adaptive 1D integral of ``f`` over ``domain``.

    Backed by QUADPACK (Gauss-Kronrod 21-point subdivision). Returns
    ``(value, error_bound)``; raises :class:`NumericalError` when the node
    budget is exhausted or the bound exceeds
    ``max(settings.rel_tol * |value|, abs_tol)``.
    """
    a, b = domain
    limit = max(settings.max_nodes_1d // 21, 1)
    kwargs = dict(epsabs=abs_tol, epsrel=settings.rel_tol, limit=limit, full_output=1)
    if points is not None and np.isfinite(b):
        kwargs["points"] = [p for p in points if a < p < b]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(f, a, b, **kwargs)
    value, err = out[0], out[1]
    if not np.isfinite(value):
        raise NumericalError("integral is not finite", estimate=value, error_bound=err)
    if err > max(settings.rel_tol * abs(value), abs_tol) and err > 1e-300:
        if len(out) > 3:
            raise NumericalError(
                f"adaptive quadrature did not converge: {out[3]}", estimate=value, error_bound=err
            )
        raise NumericalError(
            f"error bound {err:.3e} exceeds rel_tol*|value| = {settings.rel_tol * abs(value):.3e}",
            estimate=value,
            error_bound=err,
        )
    return value, err


def gauss_legendre_panels(edges, order):
    """Nodes and weights of a composite Gauss-Legendre rule on ``edges``."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    nodes = (a + b) * 0.5 + half * x
    weights = half * w
    return nodes.ravel(), weights.ravel()


def _hermite_rule_2d(order, width, center):
    y, w = np.polynomial.hermite.hermgauss(order)
    s = math.sqrt(2.0) * width
    x = center[0] + s * y
    yy = center[1] + s * y
    X, Y = np.meshgrid(x, yy, indexing="ij")
    Wt = np.outer(w, w) * s * s
    return X, Y, Wt


def integrate_gauss_weighted_2d(g, weight_width, settings=DEFAULT_QUADRATURE, center=(0.0, 0.0)):
    """Integral of ``g(x, y) * exp(-|(x, y) - center|^2 / (2 width^2))`` over the plane.

    Tensor Gauss-Hermite rule at ``settings.hermite_order`` nodes per axis,
    checked against the rule at twice the order (the finer value is returned
    and the difference is the error estimate). ``g`` is called with two
    broadcast arrays and may return complex values. Returns
    ``(value, error_estimate)``.
    """
    if weight_width <= 0:
        raise ValueError("weight_width must be positive")
    n = settings.hermite_order
    vals = []
    for order in (n, 2 * n):
        X, Y, Wt = _hermite_rule_2d(order, weight_width, center)
        vals.append(np.sum(Wt * g(X, Y)))
    coarse, value = vals
    err = abs(value - coarse)
    # oscillatory integrands cancel far below the weight mass; judge them
    # against mass * sup|g| rather than the (possibly tiny) result
    mass = 2.0 * math.pi * weight_width**2 * _sup_abs(g, n, weight_width, center)
    if err > max(settings.rel_tol_4d * abs(value), 1e-12 * mass):
        raise NumericalError(
            "Gauss-Hermite orders disagree; increase hermite_order",
            estimate=value,
            error_bound=err,
        )
    return value, err


def _sup_abs(g, n, width, center):
    X, Y, _ = _hermite_rule_2d(n, width, center)
    return float(np.max(np.abs(g(X, Y))))


# ---------------------------------------------------------------------------
# Root finding


def find_root_bisection(f, bracket, tol=1e-12):
    """Root of ``f`` inside ``bracket`` by bisection.

    ``tol`` is relative to the bracket scale. A zero at either end of the
    bracket is returned as is; no sign change raises ``ValueError``.
    """
    a, b = float(bracket[0]), float(bracket[1])
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if np.sign(fa) == np.sign(fb):
        raise ValueError(f"no sign change on [{a}, {b}]: f(a)={fa}, f(b)={fb}")
    scale = max(abs(a), abs(b))
    return optimize.bisect(f, a, b, xtol=tol * scale * 1e-3, rtol=max(tol * 1e-3, 4 * np.finfo(float).eps), maxiter=2000)


# ---------------------------------------------------------------------------
# Inverse-CDF tables


@dataclass(frozen=True)
class InverseCDFTable:
    """Monotone inverse CDF of a non-negative density tabulated on ``[x0, x1]``."""

    x: np.ndarray = field(repr=False)
    cdf: np.ndarray = field(repr=False)

    @classmethod
    def from_density(cls, density, x0, x1, n_points=4096, breakpoints=()):
        grid = np.linspace(x0, x1, n_points)
        grid = np.unique(np.concatenate([grid, [b for b in breakpoints if x0 < b < x1]]))
        # per-segment Simpson with a midpoint keeps the table accurate for
        # smooth densities without another adaptive pass
        mid = 0.5 * (grid[:-1] + grid[1:])
        seg = (grid[1:] - grid[:-1]) / 6.0 * (density(grid[:-1]) + 4.0 * density(mid) + density(grid[1:]))
        seg = np.clip(seg, 0.0, None)
        cdf = np.concatenate([[0.0], np.cumsum(seg)])
        if cdf[-1] <= 0.0 or not np.isfinite(cdf[-1]):
            raise NumericalError("density has no finite positive mass", estimate=cdf[-1])
        cdf = cdf / cdf[-1]
        keep = np.concatenate([[True], np.diff(cdf) > 0.0])
        return cls(x=grid[keep], cdf=cdf[keep])

    def __call__(self, u):
        return self._interp(np.clip(u, 0.0, 1.0))

    @property
    def _interp(self):
        interp = self.__dict__.get("_pchip")
        if interp is None:
            interp = PchipInterpolator(self.cdf, self.x, extrapolate=False)
            object.__setattr__(self, "_pchip", interp)
        return interp


def monotone_interpolator(x, y):
    """Shape-preserving cubic interpolant (PCHIP); ``nan`` outside the data."""
    return PchipInterpolator(np.asarray(x, float), np.asarray(y, float), extrapolate=False)


# ---------------------------------------------------------------------------
# Counter-based random streams

_PHILOX_M0 = np.uint64(0xD2E7470EE14C6C93)
_PHILOX_M1 = np.uint64(0xCA5A826395121157)
_PHILOX_W0 = np.uint64(0x9E3779B97F4A7C15)
_PHILOX_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_U64 = 2**64


def _mulhilo(a, m):
    alo, ahi = a & _LO32, a >> _S32
    mlo, mhi = m & _LO32, m >> _S32
    ll, lh, hl, hh = alo * mlo, alo * mhi, ahi * mlo, ahi * mhi
    mid = (ll >> _S32) + (lh & _LO32) + (hl & _LO32)
    hi = hh + (lh >> _S32) + (hl >> _S32) + (mid >> _S32)
    return hi, a * m


def philox4x64(counter, key, rounds=10):
    """Philox4x64 block function, vectorized over broadcast inputs.

    ``counter`` is a sequence of four uint64 arrays, ``key`` of two.
    Returns four uint64 arrays.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) for c in counter)
    k0, k1 = (np.asarray(k, dtype=np.uint64) for k in key)
    c0, c1, c2, c3, k0, k1 = np.broadcast_arrays(c0, c1, c2, c3, k0, k1)
    with np.errstate(over="ignore"):
        for _ in range(rounds):
            hi0, lo0 = _mulhilo(c0, _PHILOX_M0)
            hi1, lo1 = _mulhilo(c2, _PHILOX_M1)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
            k0 = k0 + _PHILOX_W0
            k1 = k1 + _PHILOX_W1
    return c0, c1, c2, c3


def uint64_to_unit(x):
    """Map uint64 words to doubles in [0, 1) using the top 53 bits."""
    return (np.asarray(x, dtype=np.uint64) >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def philox_uniforms(seed, stream_ids, block, domain=0):
    """Four uniforms per stream from block ``block`` of each keyed stream.

    ``domain`` occupies the second counter word so that independent uses
    (initial conditions, events) never share counter values.
    Returns an array of shape ``(len(stream_ids), 4)``.
    """
    ids = np.asarray(stream_ids, dtype=np.uint64)
    blk = np.asarray(block, dtype=np.uint64)
    words = philox4x64((blk, np.uint64(domain), np.uint64(0), np.uint64(0)), (np.uint64(seed % _U64), ids))
    return np.stack([uint64_to_unit(w) for w in words], axis=-1)


@dataclass
class RngStream:
    """Keyed counter-based stream; the caller advances it explicitly.

    Same ``(seed, stream_id)`` gives the same sequence; the stream is a value
    and must not be shared between workers.
    """

    seed: int
    stream_id: int
    counter: int = 0
    _buffer: list = field(default_factory=list, repr=False)

    def _next_word(self):
        if not self._buffer:
            self.counter += 1
            words = philox4x64(
                (np.uint64(self.counter % _U64), np.uint64(0), np.uint64(0), np.uint64(0)),
                (np.uint64(self.seed % _U64), np.uint64(self.stream_id % _U64)),
            )
            self._buffer = [int(w) for w in reversed(words)]
        return self._buffer.pop()

    def next_raw(self):
        return self._next_word()

    def next_uniform(self):
        return (self._next_word() >> 11) * (1.0 / 9007199254740992.0)

    def next_gaussian(self):
        # Box-Muller, cosine branch only: one normal per pair of uniforms
        u1 = 1.0 - self.next_uniform()
        u2 = self.next_uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def next_exponential(self, rate):
        if rate <= 0:
            raise ValueError("rate must be positive")
        return -math.log(1.0 - self.next_uniform()) / rate


def rng_stream(seed, stream_id):
    return RngStream(seed=int(seed), stream_id=int(stream_id))
