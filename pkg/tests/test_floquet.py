import math

import numpy as np
import pytest

from hmlfloquet.core import Boundary, DrivingProtocol, ModelParams, reference_params
from hmlfloquet.floquet import (build_hamiltonian, detect_fbs, fbs_convergence, fold_quasienergy,
                                hamiltonians, localized_weight, one_period_propagator,
                                quasienergy_spectrum, spectrum_filename, static_bound_states,
                                stroboscopic_power, stroboscopic_prediction, write_spectrum_csv)


def test_two_site_hamiltonian():
    p = ModelParams(n_sites=2, omega0=1.0, omega_c=0.5, hopping=1.5, coupling=0.7,
                    drive=DrivingProtocol(amplitude=3.0))
    off = np.array([[1.0, -0.7, 0.0], [-0.7, 0.5, -1.5], [0.0, -1.5, 0.5]])
    np.testing.assert_array_equal(build_hamiltonian(p, "off"), off)
    on = off.copy()
    on[0, 0] += 3.0
    np.testing.assert_array_equal(build_hamiltonian(p, "on"), on)


def test_hamiltonian_structure():
    p = reference_params(16.0)
    ham = hamiltonians(p)
    assert ham.dimension == 201
    for mat in (ham.on, ham.off):
        np.testing.assert_array_equal(mat, mat.T)
    diff = ham.on - ham.off
    assert diff[0, 0] == 16.0
    diff[0, 0] = 0.0
    assert not diff.any()
    ring = build_hamiltonian(p.replace(boundary=Boundary.PERIODIC))
    assert ring[1, 200] == ring[200, 1] == -1.5
    assert ham.off[1, 200] == 0.0


def test_bad_segment_name():
    with pytest.raises(ValueError):
        build_hamiltonian(ModelParams(), "middle")


def test_open_chain_spectrum():
    p = ModelParams(n_sites=50, coupling=0.0)
    evals = np.linalg.eigvalsh(build_hamiltonian(p))
    m = np.arange(1, 51)
    expected = np.sort(np.append(p.omega_c - 2 * p.hopping * np.cos(np.pi * m / 51), p.omega0))
    np.testing.assert_allclose(evals, expected, atol=1e-12)


@pytest.mark.parametrize("amp", [0.0, 10.0, 35.0])
def test_period_propagator_unitary(amp):
    u = one_period_propagator(reference_params(amp))
    np.testing.assert_allclose(u.conj().T @ u, np.eye(201), atol=1e-10)


def test_static_quasienergies_fold_hamiltonian_spectrum():
    p = reference_params(0.0)
    qspec = quasienergy_spectrum(p)
    evals = np.linalg.eigvalsh(build_hamiltonian(p))
    folded = np.sort(fold_quasienergy(evals, p.drive.frequency))
    np.testing.assert_allclose(np.sort(qspec.quasienergies), folded, atol=1e-9)


@pytest.mark.parametrize("amp", [0.0, 10.0, 16.0, 22.0, 35.0])
@pytest.mark.parametrize("boundary", [Boundary.OPEN, Boundary.PERIODIC])
def test_spectrum_invariants(amp, boundary):
    qspec = quasienergy_spectrum(reference_params(amp, boundary=boundary))
    assert abs(qspec.overlaps.sum() - 1) < 1e-10
    vecs = qspec.eigenvectors
    np.testing.assert_allclose(vecs.conj().T @ vecs, np.eye(vecs.shape[1]), atol=1e-10)
    half = qspec.frequency / 2
    assert np.all(qspec.quasienergies >= -half) and np.all(qspec.quasienergies < half)
    assert np.all(np.diff(qspec.quasienergies) >= 0)


def test_folding():
    np.testing.assert_allclose(fold_quasienergy([6.0, -6.0, 7.0, -13.0, 30.0], 12.0),
                               [-6.0, -6.0, -5.0, -1.0, 6.0 - 12.0])


@pytest.mark.parametrize("amp", [10.0, 16.0, 35.0])
def test_bound_state_present(amp):
    p = reference_params(amp)
    qspec = quasienergy_spectrum(p)
    assert len(qspec.bound_states) == 1
    b = qspec.bound_states[0]
    assert 0.95 < b.residue <= 1.0
    assert b.gap > 10 * 4 * p.hopping / p.n_sites
    assert localized_weight(p, qspec.eigenvectors[:, b.index]) >= 0.9
    assert qspec.is_fbs().sum() == 1 and qspec.is_fbs()[b.index]


@pytest.mark.parametrize("amp", [0.0, 22.0])
def test_bound_state_absent(amp):
    assert quasienergy_spectrum(reference_params(amp)).bound_states == ()


def test_detection_thresholds_are_respected():
    p = reference_params(16.0)
    qspec = quasienergy_spectrum(p)
    b = qspec.bound_states[0]
    assert detect_fbs(qspec, p, z_min=b.residue + 1e-6) == []
    huge_gap = b.gap / (4 * p.hopping / p.n_sites) * 1.01
    assert detect_fbs(qspec, p, gap_factor=huge_gap) == []


@pytest.mark.parametrize("amp", [10.0, 35.0])
def test_detection_stable_under_lattice_doubling(amp):
    rep = fbs_convergence(reference_params(amp))
    assert rep.stable and rep.residue_shift < 1e-3
    assert len(rep.refined) == len(rep.bound_states) == 1


def test_static_limit_matches_bound_state_rule():
    """Undriven: quasienergy detection agrees with the out-of-band eigenvalue criterion."""
    for kwargs in ({}, {"omega0": 6.0}, {"omega0": -4.0}, {"coupling": 3.0}):
        p = reference_params(0.0, **kwargs).with_drive(period=2 * math.pi / 40.0, on_time=math.pi / 40.0)
        qspec = quasienergy_spectrum(p)
        static = static_bound_states(p)
        assert len(qspec.bound_states) == len(static), kwargs
        for b, (e, z) in zip(qspec.bound_states, sorted(static, key=lambda s: -s[1])):
            assert b.residue == pytest.approx(z, abs=1e-9)
            assert b.quasienergy == pytest.approx(float(fold_quasienergy(e, qspec.frequency)), abs=1e-9)


def test_strong_coupling_static_bound_states():
    states = static_bound_states(reference_params(0.0, coupling=3.0))
    assert len(states) == 2
    for e, z in states:
        assert e < -2.5 or e > 3.5


def test_fast_drive_approaches_average_hamiltonian():
    """Large Omega: the bound state follows the time-averaged detuning w0 + F t'/T."""
    p = ModelParams(drive=DrivingProtocol.from_frequency(8.0, 400.0), omega0=1.0)
    avg = ModelParams(omega0=1.0 + 4.0)
    qspec = quasienergy_spectrum(p)
    static = static_bound_states(avg)
    assert len(qspec.bound_states) == len(static) == 1
    assert qspec.bound_states[0].quasienergy == pytest.approx(static[0][0], abs=0.05)
    assert qspec.bound_states[0].residue == pytest.approx(static[0][1], abs=0.02)


def test_prediction_matches_powers():
    p = reference_params(10.0)
    qspec = quasienergy_spectrum(p)
    m = np.arange(0, 36)
    pred = stroboscopic_prediction(qspec, m)
    np.testing.assert_allclose(pred.full, stroboscopic_power(p, 35), atol=1e-10)
    b = qspec.bound_states[0]
    np.testing.assert_allclose(np.abs(pred.asymptote), b.residue, atol=1e-12)
    scalar = stroboscopic_prediction(qspec, 3)
    assert isinstance(scalar.full, complex)


def test_beat_frequencies_single_state():
    assert quasienergy_spectrum(reference_params(16.0)).beat_frequencies == []


def test_spectrum_csv(tmp_path):
    p = reference_params(16.0)
    qspec = quasienergy_spectrum(p)
    name = spectrum_filename(p)
    assert name == "spectrum_F16_Omega12.csv"
    lines = write_spectrum_csv(qspec, tmp_path / name, ["x"]).read_text().splitlines()
    assert lines[:2] == ["# x", "epsilon,Z,is_fbs"]
    assert len(lines) == 2 + 201
    flags = [int(l.split(",")[2]) for l in lines[2:]]
    assert sum(flags) == 1
