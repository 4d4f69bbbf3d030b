import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad as scipy_quad
from scipy.special import j0

from beamkin import meanfield as mf
from beamkin import spectrum as sp
from beamkin.errors import NumericalError, RegimeError, RegimeWarning
from beamkin.meanfield import BeamParams
from beamkin.numerics import QuadratureSettings
from beamkin.spectrum import C_LIGHT, GammaMode, SpectrumModel

from conftest import amplitude_for_rate, reference_case


def test_beam_params_derived():
    b = BeamParams(1.55e-6, 0.01, 1e6, 1e-3)
    assert b.q0 == pytest.approx(2 * math.pi / 1.55e-6, rel=1e-15)
    assert b.omega0 == pytest.approx(C_LIGHT * b.q0, rel=1e-15)
    assert b.distance == pytest.approx(C_LIGHT * 1e-3, rel=1e-15)
    assert BeamParams.from_distance(1.55e-6, 0.01, 1e6, b.distance).time == pytest.approx(1e-3, rel=1e-15)


@pytest.mark.parametrize("field", ["wavelength", "r0", "n_photons", "time"])
def test_beam_params_invariants(field):
    kwargs = dict(wavelength=1e-6, r0=0.01, n_photons=1e6, time=1e-3)
    kwargs[field] = -1.0
    with pytest.raises(ValueError):
        BeamParams(**kwargs)


def test_moment_closed_forms(ref):
    beam, spec = ref
    m = mf.moments(beam, spec)
    a = sp.alpha(spec, beam.omega0)
    t = beam.time
    assert m.q2_mean == pytest.approx(4 * a * t, rel=1e-12)
    assert m.r2_mean == pytest.approx(4 * a * C_LIGHT**2 * t**3 / (3 * beam.q0**2), rel=1e-12)
    assert m.r2_mean / m.q2_mean == pytest.approx(C_LIGHT**2 * t * t / (3 * beam.q0**2), rel=1e-12)
    assert m.a2 == pytest.approx(math.pi * m.r2_mean / beam.n_photons, rel=1e-15)
    assert m.nu_t == pytest.approx(50.0, rel=1e-12)
    assert m.saturated and m.paraxial and m.broadened


def test_moments_at_zero_time(ref):
    beam, spec = ref
    m = mf.moments(beam.with_time(0.0), spec)
    assert m.q2_mean == 0.0 and m.r2_mean == 0.0


@settings(max_examples=50, deadline=None)
@given(t=st.floats(1e-6, 1e-1))
def test_moment_time_scaling(t):
    beam, spec = reference_case()
    m1 = mf.moments(beam.with_time(t), spec)
    m2 = mf.moments(beam.with_time(2 * t), spec)
    assert m2.q2_mean / m1.q2_mean == pytest.approx(2.0, rel=1e-12)
    assert m2.r2_mean / m1.r2_mean == pytest.approx(8.0, rel=1e-12)


def test_regime_check_thresholds(ref):
    beam, spec = ref
    rep = mf.regime_check(beam, spec)
    assert rep.saturation == "pass"
    zero = mf.regime_check(beam.with_time(0.0), spec)
    assert (zero.nu_t, zero.broadening_ratio, zero.paraxial_ratio) == (0.0, 0.0, 0.0)
    assert zero.statuses == {"saturation": "fail", "broadening": "fail", "paraxial": "fail"}
    # <q^2> = 0.2 q0^2 is beyond the paraxial warn band; 0.05 q0^2 sits inside it
    for frac, status in ((0.05, "warn"), (0.2, "fail")):
        t = frac * beam.q0**2 / (4 * sp.alpha(spec, beam.omega0))
        assert mf.regime_check(beam.with_time(t), spec).paraxial == status


def test_asymptotic_peak(ref):
    beam, spec = ref
    a = sp.alpha(spec, beam.omega0)
    t = beam.time
    peak = 3 * beam.pdf_constant * (2 * math.pi * beam.q0 / (C_LIGHT * t * t * a)) ** 2
    assert mf.mean_pdf_asymptotic(beam, spec, [0, 0], [0, 0]) == pytest.approx(peak, rel=1e-14)


def test_asymptotic_singular_at_zero_time(ref):
    beam, spec = ref
    with pytest.raises(RegimeError):
        mf.mean_pdf_asymptotic(beam.with_time(0.0), spec, [0, 0], [0, 0])
    with pytest.raises(RegimeError):
        mf.mean_intensity(beam.with_time(0.0), spec, [0, 0])


def test_asymptotic_warns_when_unsaturated(ref):
    beam, spec = ref
    with pytest.warns(RegimeWarning):
        mf.mean_pdf_asymptotic(beam.with_time(5e-5), spec, [0, 0], [0, 0])


def _q_integral_of_pdf(beam, spec, r, n=48):
    # the PDF is Gaussian in q around 3 r / (2 tau) with per-axis variance <q^2>/8
    m = mf.moments(beam, spec)
    tau = C_LIGHT * beam.time / beam.q0
    c = 1.5 * np.asarray(r) / tau
    s = math.sqrt(m.q2_mean / 8)
    x, w = np.polynomial.hermite.hermgauss(n)
    X, Y = np.meshgrid(c[0] + math.sqrt(2) * s * x, c[1] + math.sqrt(2) * s * x, indexing="ij")
    W = np.outer(w * np.exp(x * x), w * np.exp(x * x)) * 2 * s * s
    q = np.stack([X, Y], axis=-1)
    f = mf.mean_pdf_asymptotic(beam, spec, np.broadcast_to(r, q.shape), q)
    return np.sum(W * f) * mf.pdf_to_density_factor()


@pytest.mark.parametrize("x", [0.0, 0.5, 1.0, 2.0])
def test_pdf_integrates_to_mean_intensity(ref, x):
    beam, spec = ref
    m = mf.moments(beam, spec)
    r = np.array([x * math.sqrt(m.r2_mean), 0.3 * x * math.sqrt(m.r2_mean)])
    assert _q_integral_of_pdf(beam, spec, r) == pytest.approx(float(mf.mean_intensity(beam, spec, r)), rel=1e-6)


def test_mean_intensity_normalization(ref):
    beam, spec = ref
    m = mf.moments(beam, spec)
    val, _ = scipy_quad(
        lambda rr: 2 * math.pi * rr * float(mf.mean_intensity(beam, spec, [rr, 0.0])),
        0,
        40 * math.sqrt(m.r2_mean),
        epsrel=1e-12,
        limit=200,
    )
    assert val == pytest.approx(beam.n_photons, rel=1e-9)
    r = [math.sqrt(m.r2_mean), 0.0]
    assert mf.mean_intensity(beam, spec, r) == pytest.approx(math.exp(-1) / m.a2, rel=1e-14)


def test_peak_intensity_decays_as_t_cubed(ref):
    beam, spec = ref
    i1 = mf.mean_intensity(beam, spec, [0, 0])
    i2 = mf.mean_intensity(beam.with_time(2 * beam.time), spec, [0, 0])
    assert i2 / i1 == pytest.approx(1 / 8, rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(
    rx=st.floats(-3, 3),
    ry=st.floats(-3, 3),
    qx=st.floats(-3, 3),
    qy=st.floats(-3, 3),
)
def test_asymptotic_pdf_nonnegative(rx, ry, qx, qy):
    beam, spec = reference_case()
    m = mf.moments(beam, spec)
    r = np.array([rx, ry]) * math.sqrt(m.r2_mean)
    q = np.array([qx, qy]) * math.sqrt(m.q2_mean)
    assert mf.mean_pdf_asymptotic(beam, spec, r, q) >= 0.0


def test_asymptotic_pdf_phase_space_total(ref):
    beam, spec = ref
    m = mf.moments(beam, spec)
    # integrate q at each r by Hermite nodes, then r radially
    val, _ = scipy_quad(
        lambda rr: 2 * math.pi * rr * _q_integral_of_pdf(beam, spec, np.array([rr, 0.0]), n=24),
        0,
        12 * math.sqrt(m.r2_mean),
        epsrel=1e-10,
        limit=200,
    )
    assert val == pytest.approx(beam.n_photons, rel=1e-8)


# -- exact tier -----------------------------------------------------------------


def test_exact_free_space_origin():
    beam = BeamParams(1.55e-6, 0.01, 1e6, 0.0)
    spec = SpectrumModel.gaussian(0.0, 0.05)
    val = mf.mean_pdf_exact(beam, spec, [0, 0], [0, 0]).value
    # product of the two Gaussian integrals: (8 pi / r0^2)(2 pi r0^2) C
    assert val == pytest.approx(16 * math.pi**2 * beam.pdf_constant, rel=1e-14)


def test_free_space_pdf_normalized_to_n():
    beam = BeamParams(1.55e-6, 0.01, 1e6, 0.0)
    # int d^2r e^{-2 r^2/r0^2} = pi r0^2 / 2 and int d^2q e^{-q^2 r0^2 / 2} = 2 pi / r0^2
    total = float(mf.free_space_pdf(beam, [0, 0], [0, 0])) * (math.pi * beam.r0**2 / 2) * (2 * math.pi / beam.r0**2)
    assert total * mf.pdf_to_density_factor() == pytest.approx(beam.n_photons, rel=1e-14)


@pytest.mark.parametrize("nu_t", [1e-7, 1e-3])
def test_exact_free_space_limit(nu_t):
    t = 1e-4
    beam = BeamParams(1.55e-6, 0.01, 1e6, t)
    spec = SpectrumModel.gaussian(amplitude_for_rate(nu_t / t), 0.05)
    tau = C_LIGHT * t / beam.q0
    q = np.array([[0.0, 0.0], [100.0, 50.0]])
    r = q * tau + np.array([[0.001, 0.0], [0.0, 0.005]])
    ex = mf.mean_pdf_exact(beam, spec, r, q).value
    free = mf.free_space_pdf(beam, r, q)
    # collisions perturb the free beam at first order in nu t
    assert np.all(np.abs(ex / free - 1) <= 2 * nu_t + 1e-8)


def test_exact_zero_spectrum_is_free_space():
    beam = BeamParams(1.55e-6, 0.01, 1e6, 1e-4)
    spec = SpectrumModel.gaussian(0.0, 0.05)
    tau = C_LIGHT * beam.time / beam.q0
    q = np.array([[30.0, -20.0]])
    r = q * tau + 0.002
    assert mf.mean_pdf_exact(beam, spec, r, q).value == pytest.approx(mf.free_space_pdf(beam, r, q), rel=1e-14)


def test_exact_diffusive_mode_matches_gaussian_oracle():
    beam, spec = reference_case(nu_t=50.0, time=1e-3, r0=0.1)
    m = mf.moments(beam, spec)
    tau = C_LIGHT * beam.time / beam.q0
    r = np.array([[0.0, 0.0], [0.5, 0.0], [1.0, 0.3]]) * math.sqrt(m.r2_mean)
    q = 1.5 * r / tau + np.array([[0.0, 0.0], [0.0, 0.5], [-0.7, 0.0]]) * math.sqrt(m.q2_mean / 8)
    ex = mf.mean_pdf_exact(beam, spec, r, q, mode=GammaMode.DIFFUSIVE).value
    oracle = mf.gaussian_pdf_diffusive(beam, spec, r, q)
    assert np.max(np.abs(ex / oracle - 1)) <= 1e-8


def test_exact_q_marginal_matches_hankel_oracle():
    # int d^2r f(r, q) reduces to a 1D Hankel transform in |p|, independent of
    # the 4D quadrature machinery
    beam, spec = reference_case(nu_t=50.0, time=1e-3, r0=0.1)
    m = mf.moments(beam, spec)
    nu_t, l = 50.0, spec.corr_length
    # Hermite nodes in r; the truncation error of this outer rule is ~1e-5 at n = 8
    n = 8
    x, w = np.polynomial.hermite.hermgauss(n)
    for qv in (np.array([0.0, 0.0]), np.array([1.0, 0.0]) * math.sqrt(m.q2_mean / 2)):
        tau = C_LIGHT * beam.time / beam.q0
        c = qv * tau / 2
        s = math.sqrt(m.r2_mean / 8)
        X, Y = np.meshgrid(c[0] + math.sqrt(2) * s * x, c[1] + math.sqrt(2) * s * x, indexing="ij")
        W = np.outer(w * np.exp(x * x), w * np.exp(x * x)).ravel() * 2 * s * s
        r = np.stack([X.ravel(), Y.ravel()], -1)
        # far-tail nodes carry negligible weight, so skip the per-point tolerance check
        marg = W @ mf.mean_pdf_exact(beam, spec, r, np.broadcast_to(qv, r.shape), check=False).value
        qq = float(np.hypot(*qv))
        g = lambda p: p * j0(qq * p) * math.exp(-p * p / (2 * beam.r0**2) + nu_t * math.expm1(-p * p / l**2))
        o = sum(scipy_quad(g, a, b, limit=400, epsabs=0, epsrel=1e-12)[0] for a, b in ((0, 0.02), (0.02, 1.0)))
        o *= beam.pdf_constant * (2 * math.pi) ** 3
        assert marg == pytest.approx(o, rel=2e-5)


def test_exact_error_estimate_and_budget():
    beam, spec = reference_case(nu_t=50.0, time=1e-3, r0=0.1)
    res = mf.mean_pdf_exact(beam, spec, [0, 0], [0, 0])
    assert res.error <= 1e-5 * res.value
    assert res.n_nodes > 0
    tight = QuadratureSettings(rel_tol_4d=1e-12, panel_order=8, angular_nodes=8)
    with pytest.raises(NumericalError) as info:
        mf.mean_pdf_exact(beam, spec, [0, 0], [0, 0], quad=tight)
    assert info.value.error_bound is not None


def test_exact_cross_tier_nu_t_100():
    # the cross-tier comparison at nu t = 50 is part of the acceptance suite
    beam, spec = reference_case(nu_t=100.0, time=2e-3, r0=0.1)
    m = mf.moments(beam, spec)
    tau = C_LIGHT * beam.time / beam.q0
    r = np.array([[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]]) * math.sqrt(m.r2_mean)
    q = 1.5 * r / tau
    ex = mf.mean_pdf_exact(beam, spec, r, q).value
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        asym = mf.mean_pdf_asymptotic(beam, spec, r, q)
    assert np.max(np.abs(ex / asym - 1)) <= 0.05


def test_point_source_enclosed_conserves_photons(ref):
    beam, spec = ref
    m = mf.moments(beam, spec)
    total = mf.point_source_enclosed(beam, spec, 8 * math.sqrt(m.r2_mean))
    assert total == pytest.approx(beam.n_photons, rel=1e-6)


def test_point_source_intensity_tends_to_closed_form():
    # finite nu t corrections shrink as nu t grows
    devs = []
    for nu_t in (50.0, 200.0):
        beam, spec = reference_case(nu_t=nu_t, time=1e-3)
        exact = mf.point_source_intensity(beam, spec, [0.0])[0]
        devs.append(abs(exact / float(mf.mean_intensity(beam, spec, [0, 0])) - 1))
    assert devs[1] < devs[0] < 0.1


def test_saturated_forms_ignore_initial_coherence_radius(ref):
    # the diffuser replaces r0 by r1 in the initial condition; the saturated forms drop it
    beam, spec = ref
    r, q = np.array([0.003, -0.001]), np.array([5.0, 2.0])
    narrow = replace(beam, r0=beam.r0 / 7)
    assert mf.mean_intensity(narrow, spec, r) == mf.mean_intensity(beam, spec, r)
    assert mf.mean_pdf_asymptotic(narrow, spec, r, q) == mf.mean_pdf_asymptotic(beam, spec, r, q)
