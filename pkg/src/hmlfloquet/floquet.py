"""Single-excitation Hamiltonian, one-period propagator and Floquet bound states.

Basis of the single-excitation sector: index 0 is the excited MQE with an
empty lattice, index ``n`` (1..N) is one magnon on lattice site ``n``.
The MQE couples to site 1 only.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg

from .core import Boundary, ModelParams, band_structure

logger = logging.getLogger(__name__)

Z_MIN = 1e-2
GAP_FACTOR = 10.0


@dataclass(frozen=True)
class SingleExcitationHamiltonian:
    on: np.ndarray
    off: np.ndarray

    @property
    def dimension(self) -> int:
        return self.off.shape[0]


def build_hamiltonian(params: ModelParams, segment: str = "off") -> np.ndarray:
    """Real symmetric ``(N+1) x (N+1)`` Hamiltonian of one drive segment."""
    if segment not in ("on", "off"):
        raise ValueError(f"segment must be 'on' or 'off', got {segment!r}")
    n = params.n_sites
    h = params.hopping
    mat = np.zeros((n + 1, n + 1))
    mat[0, 0] = params.omega0 + (params.drive.amplitude if segment == "on" else 0.0)
    idx = np.arange(1, n + 1)
    mat[idx, idx] = params.omega_c
    mat[idx[:-1], idx[1:]] = -h
    mat[idx[1:], idx[:-1]] = -h
    if params.boundary is Boundary.PERIODIC:
        mat[1, n] -= h
        mat[n, 1] -= h
    mat[0, 1] = mat[1, 0] = -params.coupling
    return mat


def hamiltonians(params: ModelParams) -> SingleExcitationHamiltonian:
    return SingleExcitationHamiltonian(on=build_hamiltonian(params, "on"),
                                       off=build_hamiltonian(params, "off"))


def hermitian_propagator(hamiltonian: np.ndarray, duration: float) -> np.ndarray:
    """``exp(-i H t)`` through the eigendecomposition of ``H``."""
    if duration == 0.0:
        return np.eye(hamiltonian.shape[0], dtype=complex)
    evals, evecs = np.linalg.eigh(hamiltonian)
    return (evecs * np.exp(-1j * evals * duration)) @ evecs.conj().T


def one_period_propagator(params: ModelParams) -> np.ndarray:
    """``U(T) = exp(-i H_off (T - t')) exp(-i H_on t')``; the on-segment acts first."""
    drive = params.drive
    ham = hamiltonians(params)
    u_on = hermitian_propagator(ham.on, drive.on_time)
    u_off = hermitian_propagator(ham.off, drive.period - drive.on_time)
    return u_off @ u_on


def fold_quasienergy(eps, frequency: float):
    """Map quasienergies into ``[-Omega/2, Omega/2)``."""
    eps = np.asarray(eps, dtype=float)
    return np.mod(eps + 0.5 * frequency, frequency) - 0.5 * frequency


def _circular_distance(a, b, frequency: float):
    d = np.abs(fold_quasienergy(np.asarray(a) - np.asarray(b), frequency))
    return d


@dataclass(frozen=True)
class FloquetBoundState:
    index: int
    quasienergy: float
    residue: float
    localization_length: float
    gap: float


@dataclass(frozen=True)
class QuasienergySpectrum:
    """Folded quasienergies and quasi-stationary states at ``t = 0``.

    ``eigenvectors[:, n]`` is ``|u_n(0)>``; ``overlaps[n] = |<u_n(0)|Phi(0)>|^2``.
    """

    quasienergies: np.ndarray
    eigenvectors: np.ndarray
    overlaps: np.ndarray
    frequency: float
    params: ModelParams
    bound_states: tuple = field(default=())

    @property
    def period(self) -> float:
        return 2 * math.pi / self.frequency

    @property
    def fbs_indices(self) -> tuple:
        return tuple(b.index for b in self.bound_states)

    def is_fbs(self) -> np.ndarray:
        mask = np.zeros(len(self.quasienergies), dtype=bool)
        mask[list(self.fbs_indices)] = True
        return mask

    @property
    def beat_frequencies(self) -> list:
        eps = [b.quasienergy for b in self.bound_states]
        return [abs(float(fold_quasienergy(a - b, self.frequency)))
                for i, a in enumerate(eps) for b in eps[i + 1:]]


def _spectrum_core(params: ModelParams):
    u = one_period_propagator(params)
    # complex Schur form of a normal matrix is diagonal and its Schur vectors
    # are orthonormal, degenerate eigenphase clusters included
    tri, vecs = linalg.schur(u, output="complex")
    lam = np.diag(tri)
    period = params.drive.period
    eps = -np.angle(lam) / period
    eps = fold_quasienergy(eps, params.drive.frequency)
    overlaps = np.abs(vecs[0, :]) ** 2
    order = np.argsort(eps, kind="stable")
    return eps[order], vecs[:, order], overlaps[order]


def quasienergy_spectrum(params: ModelParams, z_min: float = Z_MIN,
                         gap_factor: float = GAP_FACTOR) -> QuasienergySpectrum:
    """Quasienergy spectrum of the driven MQE + lattice, sorted by quasienergy, with FBS flagged."""
    eps, vecs, overlaps = _spectrum_core(params)
    qspec = QuasienergySpectrum(eps, vecs, overlaps, params.drive.frequency, params)
    bound = detect_fbs(qspec, params, z_min=z_min, gap_factor=gap_factor)
    return QuasienergySpectrum(eps, vecs, overlaps, params.drive.frequency, params, tuple(bound))


def gap_threshold(params: ModelParams, gap_factor: float = GAP_FACTOR) -> float:
    """Minimum isolation ``gap_factor * 4h / N`` required of a bound state."""
    return gap_factor * 4 * params.hopping / params.n_sites


def site_distance(params: ModelParams) -> np.ndarray:
    """Lattice distance of sites 1..N from the coupling site."""
    n = params.n_sites
    d = np.arange(n)
    if params.boundary is Boundary.PERIODIC:
        d = np.minimum(d, n - d)
    return d


def localization_length(params: ModelParams, vec: np.ndarray) -> float:
    """Mean distance from the coupling site, weighted by the lattice part of ``vec``."""
    prob = np.abs(vec[1:]) ** 2
    total = prob.sum()
    if total <= 0:
        return 0.0
    return float(np.dot(site_distance(params), prob) / total)


def localized_weight(params: ModelParams, vec: np.ndarray, n_near: int | None = None) -> float:
    """Norm carried by the MQE plus lattice sites within ``n_near`` of the coupling site."""
    if n_near is None:
        n_near = math.ceil(params.n_sites / 10)
    prob = np.abs(vec) ** 2
    near = site_distance(params) < n_near
    return float(prob[0] + prob[1:][near].sum())


def detect_fbs(spectrum: QuasienergySpectrum, params: ModelParams, z_min: float = Z_MIN,
               gap_factor: float = GAP_FACTOR) -> list:
    """Eigenstates with overlap ``>= z_min`` isolated in quasienergy by ``>= gap_factor * 4h/N``.

    Isolation is the circular distance in the folded zone to the nearest
    other eigenstate.  Returned sorted by residue, largest first.
    """
    eps = spectrum.quasienergies
    z = spectrum.overlaps
    delta = gap_threshold(params, gap_factor)
    found = []
    for i in np.flatnonzero(z >= z_min):
        dist = _circular_distance(eps, eps[i], spectrum.frequency)
        dist[i] = np.inf
        gap = float(dist.min()) if len(dist) > 1 else math.inf
        if gap >= delta:
            found.append(FloquetBoundState(
                index=int(i),
                quasienergy=float(eps[i]),
                residue=float(z[i]),
                localization_length=localization_length(params, spectrum.eigenvectors[:, i]),
                gap=gap,
            ))
    found.sort(key=lambda b: -b.residue)
    return found


@dataclass(frozen=True)
class StroboscopicPrediction:
    full: complex
    asymptote: complex


def stroboscopic_prediction(spectrum: QuasienergySpectrum, m) -> StroboscopicPrediction:
    """``c(mT)`` from the spectral sum, together with the bound-state-only asymptote."""
    t = np.asarray(m, dtype=float) * spectrum.period
    phases = np.exp(-1j * np.multiply.outer(t, spectrum.quasienergies))
    full = phases @ spectrum.overlaps
    idx = list(spectrum.fbs_indices)
    asym = phases[..., idx] @ spectrum.overlaps[idx] if idx else np.zeros_like(full)
    if np.ndim(full) == 0:
        return StroboscopicPrediction(complex(full), complex(asym))
    return StroboscopicPrediction(full, asym)


def stroboscopic_power(params: ModelParams, m_max: int) -> np.ndarray:
    """``<Phi(0)|U(T)^m|Phi(0)>`` for ``m = 0..m_max`` by repeated application."""
    u = one_period_propagator(params)
    psi = np.zeros(u.shape[0], dtype=complex)
    psi[0] = 1.0
    out = np.empty(m_max + 1, dtype=complex)
    out[0] = 1.0
    for m in range(1, m_max + 1):
        psi = u @ psi
        out[m] = psi[0]
    return out


@dataclass(frozen=True)
class ConvergenceReport:
    bound_states: tuple
    refined: tuple
    residue_shift: float
    stable: bool


def fbs_convergence(params: ModelParams, tol: float = 1e-3, **kwargs) -> ConvergenceReport:
    """Repeat FBS detection at ``2N`` and pair bound states by quasienergy.

    ``stable`` requires the same number of bound states and every residue to
    move by less than ``tol``.
    """
    base = quasienergy_spectrum(params, **kwargs).bound_states
    refined = quasienergy_spectrum(params.replace(n_sites=2 * params.n_sites), **kwargs).bound_states
    if len(base) != len(refined):
        return ConvergenceReport(base, refined, math.inf, False)
    shift = 0.0
    freq = params.drive.frequency
    pool = list(refined)
    for b in base:
        j = min(range(len(pool)),
                key=lambda i: float(abs(fold_quasienergy(pool[i].quasienergy - b.quasienergy, freq))))
        shift = max(shift, abs(pool[j].residue - b.residue))
        pool.pop(j)
    return ConvergenceReport(base, refined, shift, shift < tol)


def static_bound_states(params: ModelParams, z_min: float = Z_MIN,
                        gap_factor: float = GAP_FACTOR) -> list:
    """Bound states of the undriven Hamiltonian under the same thresholds as :func:`detect_fbs`.

    Eigenvalues of ``H_off`` outside the band, with overlap ``>= z_min`` and
    separated from every other eigenvalue by at least the gap threshold.
    """
    evals, evecs = np.linalg.eigh(build_hamiltonian(params, "off"))
    z = np.abs(evecs[0, :]) ** 2
    band = band_structure(params)
    delta = gap_threshold(params, gap_factor)
    out = []
    for i in np.flatnonzero((z >= z_min) & ~band.contains(evals)):
        dist = np.abs(evals - evals[i])
        dist[i] = np.inf
        if dist.min() >= delta:
            out.append((float(evals[i]), float(z[i])))
    return out


def spectrum_filename(params: ModelParams) -> str:
    return f"spectrum_F{params.drive.amplitude:g}_Omega{params.drive.frequency:g}.csv"


def write_spectrum_csv(spectrum: QuasienergySpectrum, path, header_lines=()) -> Path:
    """Columns ``epsilon, Z, is_fbs``; ``header_lines`` are emitted as ``#`` comments."""
    path = Path(path)
    flags = spectrum.is_fbs()
    with path.open("w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epsilon", "Z", "is_fbs"])
        for e, z, f in zip(spectrum.quasienergies, spectrum.overlaps, flags):
            writer.writerow([f"{e:.12e}", f"{z:.12e}", int(f)])
    return path
