"""
Beam-centroid wandering.

The mean-square centroid displacement is the sum of a classical part from
four-wave interference, which shrinks as ``1/t``, and a shot part from photon
discreteness, which grows as ``t^3``. Both are normalized by the squared
total photon number.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

from . import meanfield as mf
from . import spectrum as sp
from .errors import NumericalError, RegimeWarning
from .numerics import DEFAULT_QUADRATURE, find_root_bisection, integrate_radial
from .spectrum import C_LIGHT


class WanderPart(str, enum.Enum):
    CLASSICAL = "classical"
    SHOT = "shot"


@dataclass(frozen=True)
class WanderReport:
    time: float
    r2_cl: float
    r2_sh: float
    crossover_time: float

    @property
    def total(self):
        return self.r2_cl + self.r2_sh


def wander_classical(beam, spec, thresholds=mf.DEFAULT_THRESHOLDS):
    """Classical mean-square wander ``2/<q^2> = 1/(2 alpha t)``.

    Drops a relative correction ``-4/(<r^2><q^2>)``; warns when that is not small.
    """
    m = mf._saturated_moments(beam, spec, "wander_classical")
    if m.r2_mean * m.q2_mean / 4.0 <= thresholds.broadening_pass:
        warnings.warn("wander_classical: <r^2><q^2> is not >> 4", RegimeWarning, stacklevel=2)
    return 2.0 / m.q2_mean


def wander_shot(beam, spec):
    """Shot-noise mean-square wander ``a^2/pi = <r^2>/N``."""
    m = mf._saturated_moments(beam, spec, "wander_shot")
    return m.r2_mean / beam.n_photons


def wander_crossover_time(beam, spec):
    """Time at which the classical and shot parts are equal.

    ``1/(2 alpha t) = 4 alpha c^2 t^3 / (3 N q0^2)`` gives
    ``t* = (3 N q0^2 / (8 alpha^2 c^2))^(1/4)``.
    """
    a = sp.alpha(spec, beam.omega0)
    if a <= 0:
        raise ValueError("crossover time needs alpha > 0")
    return (3.0 * beam.n_photons * beam.q0**2 / (8.0 * a * a * C_LIGHT**2)) ** 0.25


def wander_crossover_bisection(beam, spec, tol=1e-13):
    """Crossover time from bisection of ``log(R_cl^2 / R_sh^2)``; oracle for the closed form."""
    a = sp.alpha(spec, beam.omega0)
    t_star = wander_crossover_time(beam, spec)

    def g(t):
        cl = 1.0 / (2.0 * a * t)
        sh = 4.0 * a * C_LIGHT**2 * t**3 / (3.0 * beam.q0**2 * beam.n_photons)
        return math.log(cl / sh)

    # work in units of the closed-form root so the tolerance is relative
    u = find_root_bisection(lambda x: g(x * t_star), (0.1, 10.0), tol=tol)
    return u * t_star


def wander_report(beam, spec):
    return WanderReport(
        time=beam.time,
        r2_cl=wander_classical(beam, spec),
        r2_sh=wander_shot(beam, spec),
        crossover_time=wander_crossover_time(beam, spec),
    )


def _gauss_moment_2d(power, inv_width):
    """``int d^2x |x|^power exp(-inv_width |x|^2)`` by radial quadrature."""
    scale = 1.0 / math.sqrt(inv_width)
    val, err = integrate_radial(
        lambda u: 2.0 * math.pi * u ** (power + 1) * math.exp(-u * u), settings=DEFAULT_QUADRATURE
    )
    return val * scale ** (power + 2)


def wander_quadrature(beam, spec, part=WanderPart.CLASSICAL):
    """Oracle for the wander closed forms from their defining integrals.

    The classical part integrates ``(r.r') K_cl(r, r')`` over both points. With
    ``u = r + r'`` and ``v = r - r'`` (Jacobian 1/4) and
    ``r.r' = (u^2 - v^2)/4`` the Gaussian correlation factorizes, so the 4D
    integral is a combination of radial 1D integrals evaluated numerically.
    The result keeps the ``-(r - r')^2`` term that the closed form drops.
    The shot part integrates ``r^2 <I(r)>``. Both are divided by ``N^2``.
    """
    part = WanderPart(part)
    m = mf._saturated_moments(beam, spec, "wander_quadrature")
    n2 = beam.n_photons**2
    if part is WanderPart.SHOT:
        val = _gauss_moment_2d(2, 1.0 / m.r2_mean) / m.a2
        return val / n2
    iu = 1.0 / (2.0 * m.r2_mean)  # exp(-u^2 / (2 <r^2>))
    iv = m.q2_mean / 8.0  # exp(-v^2 <q^2> / 8)
    u0, u2 = _gauss_moment_2d(0, iu), _gauss_moment_2d(2, iu)
    v0, v2 = _gauss_moment_2d(0, iv), _gauss_moment_2d(2, iv)
    val = (u2 * v0 - u0 * v2) / 16.0 / (m.a2 * m.a2)
    if not math.isfinite(val):
        raise NumericalError("wander quadrature produced a non-finite value", estimate=val, error_bound=None)
    return val / n2


def centroid_first_moment(beam, spec):
    """``int x <I(r)> d^2r / N``; zero by symmetry, computed numerically along one axis."""
    m = mf._saturated_moments(beam, spec, "centroid_first_moment")
    s = math.sqrt(m.r2_mean)
    # the y-integral factorizes to sqrt(pi <r^2>)
    val, _ = integrate_radial(
        lambda x: x * math.exp(-x * x / m.r2_mean), domain=(-40.0 * s, 40.0 * s), abs_tol=1e-14 * s * s
    )
    return val * math.sqrt(math.pi * m.r2_mean) / m.a2 / beam.n_photons
