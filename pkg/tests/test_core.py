import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from hmlfloquet.core import (Boundary, DrivingProtocol, ModelParams, band_structure, dispersion,
                             drive_phase_integral, driving_amplitude, reference_params,
                             kernel_envelope, lattice_kernel_sum, memory_kernel,
                             spectral_density)

BOUNDARIES = [Boundary.OPEN, Boundary.PERIODIC]


def test_defaults_match_reference_set():
    p = reference_params(16.0)
    assert (p.omega0, p.omega_c, p.hopping, p.coupling, p.n_sites) == (1.0, 0.5, 1.5, 1.0, 200)
    assert p.drive.frequency == pytest.approx(12.0)
    assert p.drive.on_time == pytest.approx(p.drive.period / 2)
    assert p.boundary is Boundary.OPEN


@pytest.mark.parametrize("kwargs", [
    {"hopping": 0.0}, {"hopping": -1.0}, {"coupling": -0.1}, {"n_sites": 1},
    {"n_sites": 3.5}, {"omega0": math.inf}, {"omega_c": math.nan},
])
def test_model_params_invariants(kwargs):
    with pytest.raises(ValueError):
        ModelParams(**kwargs)


@pytest.mark.parametrize("kwargs", [
    {"period": 0.0}, {"period": -1.0}, {"period": 1.0, "on_time": 1.5},
    {"period": 1.0, "on_time": -0.1}, {"amplitude": math.nan},
])
def test_drive_invariants(kwargs):
    with pytest.raises(ValueError):
        DrivingProtocol(**kwargs)


def test_band_structure():
    band = band_structure(ModelParams())
    assert (band.lower, band.upper) == (0.5 - 3.0, 0.5 + 3.0)
    assert band.width == 4 * 1.5
    assert band.center == 0.5


def test_dispersion_endpoints_and_symmetry():
    p = ModelParams()
    assert dispersion(p, 0.0) == pytest.approx(p.omega_c - 2 * p.hopping)
    assert dispersion(p, -math.pi) == pytest.approx(p.omega_c + 2 * p.hopping)
    k = np.linspace(-math.pi, math.pi, 101)
    np.testing.assert_allclose(dispersion(p, k), dispersion(p, -k))


@pytest.mark.parametrize("boundary", BOUNDARIES)
def test_spectral_density_histogram_oracle(boundary):
    """A histogram of lattice normal-mode frequencies weighted by |g_k|^2 reproduces J."""
    p = ModelParams(boundary=boundary)
    n = 200_000
    if boundary is Boundary.PERIODIC:
        k = 2 * np.pi * (np.arange(n) + 0.5) / n
        w = np.full(n, p.coupling ** 2 / n)
    else:
        k = np.pi * np.arange(1, n + 1) / (n + 1)
        w = 2 * p.coupling ** 2 / (n + 1) * np.sin(k) ** 2
    edges = np.linspace(-2.5, 3.5, 61)
    hist, _ = np.histogram(dispersion(p, k), bins=edges, weights=w)
    centers = 0.5 * (edges[1:] + edges[:-1])
    expected = np.array([integrate.quad(lambda x: spectral_density(p, x), a, b)[0]
                         for a, b in zip(edges[:-1], edges[1:])])
    np.testing.assert_allclose(hist, expected, atol=2e-4)
    assert np.all(spectral_density(p, centers) >= 0)


@pytest.mark.parametrize("boundary", BOUNDARIES)
def test_spectral_density_support(boundary):
    p = ModelParams(boundary=boundary)
    band = band_structure(p)
    assert spectral_density(p, band.lower - 1e-3) == 0.0
    assert spectral_density(p, band.upper + 1.0) == 0.0
    assert spectral_density(p, band.center) > 0


@pytest.mark.parametrize("boundary", BOUNDARIES)
@pytest.mark.parametrize("g", [1.0, 0.3, 2.0])
def test_spectral_density_integrates_to_g2(boundary, g):
    p = ModelParams(coupling=g, boundary=boundary)
    band = band_structure(p)
    total, _ = integrate.quad(lambda x: spectral_density(p, x), band.lower, band.upper, limit=200)
    assert total == pytest.approx(g * g, abs=1e-6)


@pytest.mark.parametrize("boundary", BOUNDARIES)
def test_kernel_at_zero(boundary):
    p = ModelParams(coupling=1.7, boundary=boundary)
    assert abs(memory_kernel(p, 0.0) - 1.7 ** 2) < 1e-12


@pytest.mark.parametrize("boundary", BOUNDARIES)
def test_kernel_against_mpmath_bessel(boundary):
    p = ModelParams(boundary=boundary)
    for tau in [1e-7, 0.3, 1.0, 2.7, 11.0, 40.0]:
        x = mpmath.mpf(2 * p.hopping * tau)
        if boundary is Boundary.PERIODIC:
            env = mpmath.besselj(0, x)
        else:
            env = 2 * mpmath.besselj(1, x) / x
        expected = complex(p.coupling ** 2 * mpmath.exp(-1j * p.omega_c * tau) * env)
        assert abs(memory_kernel(p, tau) - expected) < 1e-13


def _band_fourier(p, tau):
    """int J(w) exp(-i w tau) dw by quadrature; the arcsine edges go into an algebraic weight."""
    h2 = 2 * p.hopping
    if p.boundary is Boundary.PERIODIC:
        # J = g^2 / (pi sqrt((2h - x)(2h + x)))
        f = lambda x, trig: p.coupling ** 2 / math.pi * trig((x + p.omega_c) * tau)
        kw = {"weight": "alg", "wvar": (-0.5, -0.5)}
    else:
        f = lambda x, trig: spectral_density(p, x + p.omega_c) * trig((x + p.omega_c) * tau)
        kw = {}
    re = integrate.quad(f, -h2, h2, args=(math.cos,), limit=400, **kw)[0]
    im = -integrate.quad(f, -h2, h2, args=(math.sin,), limit=400, **kw)[0]
    return complex(re, im)


@pytest.mark.parametrize("boundary", BOUNDARIES)
def test_kernel_is_fourier_transform_of_density(boundary):
    p = ModelParams(boundary=boundary)
    for tau in [0.4, 1.9, 5.0]:
        assert abs(memory_kernel(p, tau) - _band_fourier(p, tau)) < 1e-8


@pytest.mark.parametrize("boundary", BOUNDARIES)
def test_finite_lattice_sum_matches_kernel_before_recurrence(boundary):
    """The discrete mode sum equals the continuum kernel until the wave returns from the far end."""
    p = ModelParams(n_sites=200, boundary=boundary)
    tau = np.linspace(0, 0.8 * p.n_sites / (4 * p.hopping), 400)
    err = np.abs(lattice_kernel_sum(p, tau) - memory_kernel(p, tau))
    assert err.max() < 1e-8


@pytest.mark.parametrize("boundary", BOUNDARIES)
def test_kernel_envelope_bounds_kernel(boundary):
    p = ModelParams(boundary=boundary)
    tau = np.linspace(0.0, 60.0, 5000)
    assert np.all(np.abs(memory_kernel(p, tau)) <= p.coupling ** 2 * kernel_envelope(p, tau) + 1e-12)


def test_drive_waveform_on_and_off():
    d = DrivingProtocol(amplitude=16.0, period=1.0, on_time=0.25)
    assert driving_amplitude(d, 0.0) == 16.0
    assert driving_amplitude(d, 0.2499) == 16.0
    assert driving_amplitude(d, 0.25) == 0.0
    assert driving_amplitude(d, 0.99) == 0.0
    assert driving_amplitude(d, 1.0) == 16.0


@settings(max_examples=60, deadline=None)
@given(t=st.floats(0, 50), j=st.integers(0, 20),
       frac=st.floats(0, 1), amp=st.floats(-40, 40))
def test_drive_periodicity(t, j, frac, amp):
    d = DrivingProtocol.from_frequency(amp, 12.0, frac)
    t = round(t / 1e-3) * 1e-3 + 1e-7  # stay clear of switch instants
    assert driving_amplitude(d, t + j * d.period) == driving_amplitude(d, t)
    assert drive_phase_integral(d, t + j * d.period) == pytest.approx(
        drive_phase_integral(d, t) + j * amp * d.on_time, abs=1e-7)


def test_phase_integral_matches_quadrature():
    d = DrivingProtocol.from_frequency(7.0, 3.0, 0.3)
    for t in [0.1, 0.7, 2.5, 9.3]:
        expected = integrate.quad(lambda s: driving_amplitude(d, s), 0, t, limit=400,
                                  points=[k * d.period + o for k in range(6) for o in (0, d.on_time)])[0]
        assert drive_phase_integral(d, t) == pytest.approx(expected, abs=1e-8)
