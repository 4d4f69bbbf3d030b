"""
Photon-density correlation functions, shot kernel and scintillation index.

The correlation of photon density at two points splits into a shot term,
reflecting the discreteness of photons, and a quasiclassical term built from
two mean PDFs. The quasiclassical term is evaluated in closed form; a
Gauss-Hermite double-momentum quadrature is kept as an oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import meanfield as mf
from .errors import ConfigError, NumericalError
from .numerics import DEFAULT_QUADRATURE, integrate_radial


@dataclass(frozen=True)
class DiffuserParams:
    """Phase diffuser in the aperture plane.

    Parameters
    ----------
    g2 : float
        Per-axis variance of the random phase gradient, 1/m^2.
    """

    g2: float

    def __post_init__(self):
        if not (math.isfinite(self.g2) and self.g2 >= 0):
            raise ConfigError(f"must be finite and >= 0, got {self.g2}", path="diffuser.g2")

    def r1_sq(self, r0):
        return r1_squared(r0, self.g2)

    def kernel_width_sq(self, r0):
        """``r0^2 - r1^2``, correctly rounded.

        Evaluated in exact rational arithmetic as ``r0^4 g2 / (1 + r0^2 g2)``,
        so there is no cancellation. Zero for ``g2 = 0``, and also when the
        result underflows; such a kernel is indistinguishable from the
        delta-correlated one.
        """
        r0_sq = Fraction(r0) ** 2
        x = r0_sq * Fraction(self.g2)
        return float(r0_sq * x / (1 + x))


@dataclass(frozen=True)
class CorrelationDecomposition:
    """Shot and quasiclassical parts of the density correlation.

    ``shot`` multiplies the shot kernel (or a delta function when
    ``kernel_width_sq == 0``); ``total = shot + classical`` is only meaningful
    with a finite kernel and is reported for bookkeeping.
    """

    shot: float
    classical: float
    kernel_width_sq: float
    shot_kernel: float = 0.0  # kernel value at (rA, rB); 0 in the delta branch

    @property
    def total(self):
        return self.shot + self.classical


def r1_squared(r0, g2):
    """Initial coherence radius squared, ``r0^2 / (1 + r0^2 g2)``."""
    if r0 <= 0:
        raise ValueError("r0 must be > 0")
    if g2 < 0:
        raise ValueError("g2 must be >= 0")
    return r0 * r0 / (1.0 + r0 * r0 * g2)


def _pair(rA, rB):
    rA = np.asarray(rA, dtype=float)
    rB = np.asarray(rB, dtype=float)
    if rA.shape != (2,) or rB.shape != (2,):
        raise ValueError("rA and rB must be 2-vectors")
    return rA, rB


def shot_kernel(beam, diff, rA, rB):
    """Normalized Gaussian kernel ``exp(-|rA-rB|^2/rho^2) / (pi rho^2)``, ``rho^2 = r0^2 - r1^2``."""
    w = diff.kernel_width_sq(beam.r0)
    if w == 0.0:
        raise ValueError("g2 = 0 gives a delta-correlated shot term; use the delta branch")
    rA, rB = _pair(rA, rB)
    d = rA - rB
    return math.exp(-float(d @ d) / w) / (math.pi * w)


def _classical(m, rA, rB, width_sq):
    """Closed-form quasiclassical term with kernel width ``rho^2``.

    Both momenta are Gaussian around the same centre with per-axis variance
    ``<q^2>/8``; the double sum reduces to the characteristic function of
    their difference.
    """
    s = rA + rB
    d = rA - rB
    base = math.exp(-float(s @ s) / (2.0 * m.r2_mean)) / (m.a2 * m.a2)
    if width_sq == 0.0:
        return base * math.exp(-float(d @ d) * m.q2_mean / 8.0)
    x = width_sq * m.q2_mean / 8.0
    return base / (1.0 + x) * math.exp(-float(d @ d) / (8.0 / m.q2_mean + width_sq))


def correlation_no_diffuser(beam, spec, rA, rB):
    """Density correlation without diffuser; the shot part is a delta weight."""
    m = mf._saturated_moments(beam, spec, "correlation_no_diffuser")
    rA, rB = _pair(rA, rB)
    mid = 0.5 * (rA + rB)
    shot = math.exp(-float(mid @ mid) / m.r2_mean) / m.a2
    return CorrelationDecomposition(shot=shot, classical=_classical(m, rA, rB, 0.0), kernel_width_sq=0.0)


def correlation_with_diffuser(beam, spec, diff, rA, rB, validate=False, quad=DEFAULT_QUADRATURE):
    """Density correlation with a phase diffuser of strength ``diff.g2``.

    The saturated mean PDF does not depend on the initial width, so replacing
    ``r0`` by ``r1`` leaves ``<f>`` and ``<I>`` unchanged; the diffuser enters
    only through the kernel width ``r0^2 - r1^2``.

    With ``validate=True`` the classical term is recomputed by the
    double-momentum quadrature and a relative mismatch above 1e-4 raises
    :class:`NumericalError`.
    """
    if diff.kernel_width_sq(beam.r0) == 0.0:
        out = correlation_no_diffuser(beam, spec, rA, rB)
    else:
        m = mf._saturated_moments(beam, spec, "correlation_with_diffuser")
        rA, rB = _pair(rA, rB)
        mid = 0.5 * (rA + rB)
        w = diff.kernel_width_sq(beam.r0)
        mean_i = math.exp(-float(mid @ mid) / m.r2_mean) / m.a2
        k = shot_kernel(beam, diff, rA, rB)
        out = CorrelationDecomposition(
            shot=mean_i, classical=_classical(m, rA, rB, w), kernel_width_sq=w, shot_kernel=k
        )
    if validate:
        ref, _ = classical_quadrature(beam, spec, rA, rB, out.kernel_width_sq, quad)
        dev = abs(out.classical - ref) / abs(ref)
        if dev > 1e-4:
            raise NumericalError(
                f"closed-form classical term deviates from quadrature by {dev:.3g}",
                estimate=ref,
                error_bound=dev,
            )
    return out


def classical_quadrature(beam, spec, rA, rB, width_sq=0.0, quad=DEFAULT_QUADRATURE):
    """Double-momentum quadrature of the quasiclassical correlation.

    Evaluates ``(S/4 pi^2)^2 int d^2q d^2q1 <f>(R,q) <f>(R,q1)
    exp[i (q1-q).(rA-rB) - (q1-q)^2 width_sq / 4]`` at the midpoint ``R``.
    The mean PDF is sampled as a black box along the two momentum axes through
    its centre; it factorizes over Cartesian components, as does the kernel,
    so the 4D integral is a product of two 2D Gauss-Legendre sums. That keeps
    high orders affordable when the kernel is narrower than the envelope.
    Returns ``(value, error)`` where the error is the change from a rule of
    two thirds the order.
    """
    rA, rB = np.asarray(rA, float), np.asarray(rB, float)
    R = 0.5 * (rA + rB)
    d = rA - rB
    tau = mf.C_LIGHT * beam.time / beam.q0
    m = mf.moments(beam, spec)
    center = 1.5 * R / tau
    sigma = math.sqrt(m.q2_mean / 8.0)
    # the kernel spans ~2/sqrt(width_sq) in q; keep several nodes across it
    n = min(6 * quad.hermite_order + int(24.0 * sigma * math.sqrt(width_sq)), 6000)
    f0 = float(mf.mean_pdf_asymptotic(beam, spec, R, center))
    vals = []
    for order in (2 * n // 3, n):
        # q = centre + sqrt(2) sigma x; the envelope is below 1e-40 past |x| = 9.6
        x, w = np.polynomial.legendre.leggauss(order)
        x, wt = 9.6 * x, 9.6 * w * math.sqrt(2.0) * sigma
        total = f0 * f0
        for axis in (0, 1):
            q = np.repeat(center[None, :], order, axis=0)
            q[:, axis] += math.sqrt(2.0) * sigma * x
            g = mf.mean_pdf_asymptotic(beam, spec, np.broadcast_to(R, q.shape), q) / f0 * wt
            dq = q[None, :, axis] - q[:, None, axis]
            kern = np.exp(1j * dq * d[axis] - dq * dq * width_sq / 4.0)
            total = total * (g @ kern @ g)
        vals.append(total.real * mf.pdf_to_density_factor() ** 2)
    return vals[1], abs(vals[1] - vals[0])


def suppression_factor(beam, spec, diff):
    """Estimated centre-beam suppression ``exp(-<q^2> (r0^2 - r1^2) / 4)``."""
    m = mf._saturated_moments(beam, spec, "suppression_factor")
    return math.exp(-m.q2_mean * diff.kernel_width_sq(beam.r0) / 4.0)


def exact_suppression(beam, spec, diff):
    """Closed-form centre-beam suppression ``1 / (1 + <q^2> (r0^2 - r1^2) / 8)``."""
    m = mf._saturated_moments(beam, spec, "exact_suppression")
    return 1.0 / (1.0 + m.q2_mean * diff.kernel_width_sq(beam.r0) / 8.0)


def _disk_overlap(dist, radius):
    """Area of intersection of two disks of equal radius at centre distance ``dist``."""
    d = np.minimum(np.asarray(dist, float), 2.0 * radius)
    return 2.0 * radius**2 * np.arccos(d / (2.0 * radius)) - 0.5 * d * np.sqrt(np.maximum(4.0 * radius**2 - d * d, 0.0))


def _shot_pair_integral(width_sq, area):
    """``int_D int_D K(rA - rB)`` for a disk detector of the given area."""
    if width_sq == 0.0:
        return area
    radius = math.sqrt(area / math.pi)
    val, _ = integrate_radial(
        lambda x: 2.0 * math.pi * x * _disk_overlap(x, radius) * math.exp(-x * x / width_sq) / (math.pi * width_sq),
        (0.0, 2.0 * radius),
    )
    return val


def scintillation_index(beam, spec, r, diff=None, include_shot=False, detector_area=None):
    """Normalized intensity variance ``<(dI)^2> / <I>^2`` at ``r``.

    The shot term needs a finite collection area: it is integrated over a disk
    detector of ``detector_area`` centred at ``r``, assuming ``<I>`` constant
    across the disk, and divided by ``(<I> area)^2``.
    """
    if include_shot and (detector_area is None or not detector_area > 0):
        raise ValueError("include_shot requires detector_area > 0")
    r = np.asarray(r, dtype=float)
    if diff is None or diff.kernel_width_sq(beam.r0) == 0.0:
        corr = correlation_no_diffuser(beam, spec, r, r)
    else:
        corr = correlation_with_diffuser(beam, spec, diff, r, r)
    mean_i = corr.shot  # the shot weight is <I> at the midpoint
    sigma2 = corr.classical / (mean_i * mean_i)
    if include_shot:
        pair = _shot_pair_integral(corr.kernel_width_sq, detector_area)
        sigma2 += mean_i * pair / (mean_i * detector_area) ** 2
    return sigma2
