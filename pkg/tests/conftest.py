import math
import sys
import warnings

import pytest

from beamkin import BeamParams, SpectrumModel
from beamkin.errors import RegimeWarning
from beamkin.spectrum import C_LIGHT

WAVELENGTH = 1.55e-6
CORR_LENGTH = 0.05


def amplitude_for_rate(rate, corr_length=CORR_LENGTH, wavelength=WAVELENGTH):
    """Gaussian amplitude giving collision rate ``rate`` (inverse of the closed-form nu)."""
    omega0 = C_LIGHT * 2.0 * math.pi / wavelength
    return rate * C_LIGHT * corr_length**2 / (8.0 * math.pi**2 * omega0**2)


def reference_case(nu_t=50.0, time=1e-3, r0=0.01, n_photons=1e6):
    beam = BeamParams(wavelength=WAVELENGTH, r0=r0, n_photons=n_photons, time=time)
    spec = SpectrumModel.gaussian(amplitude_for_rate(nu_t / time), CORR_LENGTH)
    return beam, spec


@pytest.fixture
def ref():
    return reference_case()


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
