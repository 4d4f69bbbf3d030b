import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beamkin import spectrum as sp
from beamkin.errors import ConfigError, NumericalError
from beamkin.numerics import integrate_radial
from beamkin.spectrum import GammaMode, SpectrumModel

OMEGA0 = sp.C_LIGHT * 2 * math.pi / 1.55e-6
Q0 = 2 * math.pi / 1.55e-6


def dense_gaussian_table(amplitude=1e-15, l=0.05, n=2000):
    k = np.linspace(0.0, 2 * math.sqrt(40.0) / l, n)
    return SpectrumModel.tabulated(k, amplitude * np.exp(-k * k * l * l / 4))


def test_psi_gaussian_values():
    assert sp.psi(SpectrumModel.gaussian(1.0, 1.0), 0.0) == 1.0
    assert sp.psi(SpectrumModel.gaussian(2e-15, 0.1), 20.0) == pytest.approx(2e-15 * math.exp(-1), rel=1e-14)
    assert sp.psi(SpectrumModel.gaussian(2e-15, 0.1), 20.0) == pytest.approx(7.3576e-16, rel=1e-4)


def test_psi_tabulated_zero_beyond_support():
    m = SpectrumModel.tabulated([0, 1, 2, 3], [1, 0.5, 0.1, 0])
    assert sp.psi(m, 5.0) == 0.0
    assert sp.psi(m, 1.0) == pytest.approx(0.5)


def test_psi_von_karman():
    m = SpectrumModel.von_karman(3.0, 10.0, 0.01, 11 / 3)
    k = 5.0
    expected = 3.0 * (k * k + 0.01) ** (-11 / 6) * math.exp(-k * k * 1e-4)
    assert sp.psi(m, k) == pytest.approx(expected, rel=1e-14)


def test_psi_negative_k_rejected():
    with pytest.raises(ValueError):
        sp.psi(SpectrumModel.gaussian(1.0, 1.0), -1.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(amplitude=-1.0, corr_length=1.0),
        dict(amplitude=1.0, corr_length=0.0),
        dict(amplitude=float("nan"), corr_length=1.0),
    ],
)
def test_gaussian_construction_errors(kwargs):
    with pytest.raises(ConfigError):
        SpectrumModel.gaussian(**kwargs)


def test_tabulated_construction_errors():
    with pytest.raises(ConfigError, match="samples"):
        SpectrumModel.tabulated([0, 1, 2], [1, 1, 1])
    with pytest.raises(ConfigError):
        SpectrumModel.tabulated([0, 2, 1, 3], [1, 1, 1, 1])
    with pytest.raises(ConfigError):
        SpectrumModel.tabulated([0, 1, 2, 3], [1, -1, 1, 1])


def test_von_karman_divergent_moment_rejected():
    with pytest.raises(NumericalError):
        SpectrumModel.von_karman(1.0, 10.0, 0.0, 11 / 3)


def test_nu_alpha_gaussian_closed_forms():
    A, l = 1e-15, 0.05
    m = SpectrumModel.gaussian(A, l)
    assert sp.nu(m, OMEGA0) == pytest.approx(8 * math.pi**2 * OMEGA0**2 * A / (sp.C_LIGHT * l * l), rel=1e-14)
    assert sp.alpha(m, OMEGA0) * l * l == pytest.approx(sp.nu(m, OMEGA0), rel=1e-14)


def test_gaussian_radial_integrals_by_quadrature():
    # oracle for the closed forms: int d^2k e^{-k^2 l^2/4} = 4 pi / l^2, and the k^2 moment 16 pi / l^4
    l = 0.05
    m0, _ = integrate_radial(lambda k: 2 * math.pi * k * math.exp(-k * k * l * l / 4))
    m2, _ = integrate_radial(lambda k: 2 * math.pi * k**3 * math.exp(-k * k * l * l / 4))
    assert m0 == pytest.approx(4 * math.pi / l**2, rel=1e-9)
    assert m2 == pytest.approx(16 * math.pi / l**4, rel=1e-9)


def test_zero_amplitude():
    m = SpectrumModel.gaussian(0.0, 0.05)
    assert sp.nu(m, OMEGA0) == 0.0
    assert sp.alpha(m, OMEGA0) == 0.0


def test_tabulated_gaussian_copy_matches_closed_form():
    g = SpectrumModel.gaussian(1e-15, 0.05)
    t = dense_gaussian_table()
    assert sp.nu(t, OMEGA0) == pytest.approx(sp.nu(g, OMEGA0), rel=1e-4)
    assert sp.alpha(t, OMEGA0) == pytest.approx(sp.alpha(g, OMEGA0), rel=1e-4)
    assert sp.alpha(t, OMEGA0) * 0.05**2 == pytest.approx(sp.nu(t, OMEGA0), rel=1e-4)


def test_gamma_zero_argument():
    m = SpectrumModel.gaussian(1e-15, 0.05)
    t = 1e-3
    k = np.array([3.0, -1.0])
    p = k * sp.C_LIGHT * t / Q0
    n = sp.nu(m, OMEGA0)
    for mode in GammaMode:
        assert sp.gamma(m, OMEGA0, [0.0, 0.0], [0.0, 0.0], t, Q0, mode) == 0.0
        # p - k c t / q0 cancels only to rounding here
        assert abs(sp.gamma(m, OMEGA0, k, p, t, Q0, mode)) <= 1e-12 * n


def test_gamma_at_corr_length_matches_quadrature():
    m = SpectrumModel.gaussian(1e-15, 0.05)
    n = sp.nu(m, OMEGA0)
    val = sp.gamma(m, OMEGA0, [0.0, 0.0], [0.05, 0.0], 0.0, Q0)
    assert val == pytest.approx(n * (1 - math.exp(-1)), rel=1e-14)
    assert sp.gamma_quadrature(m, OMEGA0, [0.05, 0.0]) == pytest.approx(val, rel=1e-8)


def test_gamma_diffusive_limit():
    m = SpectrumModel.gaussian(1e-15, 0.05)
    a = [1e-3 * 0.05, 0.0]
    ex = sp.gamma(m, OMEGA0, [0, 0], a, 0.0, Q0, GammaMode.EXACT)
    di = sp.gamma(m, OMEGA0, [0, 0], a, 0.0, Q0, GammaMode.DIFFUSIVE)
    assert ex / di == pytest.approx(1.0, abs=1e-5)


def test_gamma_tabulated_uses_quadrature_path():
    t = dense_gaussian_table()
    g = SpectrumModel.gaussian(1e-15, 0.05)
    a = [0.03, 0.02]
    assert sp.gamma(t, OMEGA0, [0, 0], a, 0.0, Q0) == pytest.approx(sp.gamma(g, OMEGA0, [0, 0], a, 0.0, Q0), rel=1e-4)


@settings(max_examples=60, deadline=None)
@given(
    ax=st.floats(-1.0, 1.0),
    ay=st.floats(-1.0, 1.0),
    l=st.floats(1e-3, 1.0),
)
def test_gamma_bounded_by_twice_nu(ax, ay, l):
    m = SpectrumModel.gaussian(1e-15, l)
    g = sp.gamma(m, OMEGA0, [0, 0], [ax, ay], 0.0, Q0)
    assert 0.0 <= g <= 2 * sp.nu(m, OMEGA0)


@settings(max_examples=40, deadline=None)
@given(l=st.floats(1e-3, 1.0), scale=st.floats(1e-8, 1e-3))
def test_gamma_diffusive_ratio_small_argument(l, scale):
    m = SpectrumModel.gaussian(1e-15, l)
    a = [scale * l, 0.0]
    ex = sp.gamma(m, OMEGA0, [0, 0], a, 0.0, Q0, GammaMode.EXACT)
    di = sp.gamma(m, OMEGA0, [0, 0], a, 0.0, Q0, GammaMode.DIFFUSIVE)
    assert ex / di == pytest.approx(1.0, abs=1e-4)


@settings(max_examples=40, deadline=None)
@given(A=st.floats(1e-20, 1e-10), l=st.floats(1e-3, 1.0), factor=st.floats(0.1, 10.0))
def test_rates_homogeneous_in_amplitude(A, l, factor):
    m = SpectrumModel.gaussian(A, l)
    s = m.scaled(factor)
    assert sp.nu(s, OMEGA0) == pytest.approx(factor * sp.nu(m, OMEGA0), rel=1e-12)
    assert sp.alpha(s, OMEGA0) == pytest.approx(factor * sp.alpha(m, OMEGA0), rel=1e-12)


def test_von_karman_rates_positive_and_homogeneous():
    m = SpectrumModel.von_karman(1e-15, 10.0, 0.005, 11 / 3)
    n, a = sp.nu(m, OMEGA0), sp.alpha(m, OMEGA0)
    assert n > 0 and a > 0
    assert sp.nu(m.scaled(2.0), OMEGA0) == pytest.approx(2 * n, rel=1e-10)
