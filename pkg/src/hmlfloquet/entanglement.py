"""Two-party entanglement carried by the amplitude ``c``.

Discrete variables: two qubits prepared in ``(|ee> + |gg>)/sqrt 2`` whose
reduced state is an X state fixed by ``c``; quantified by the Wootters
concurrence.

Continuous variables: two bosonic modes prepared in a two-mode squeezed
vacuum, each mode sent through the channel ``a -> c a + sqrt(1-|c|^2) v``
with ``v`` in vacuum; quantified by the logarithmic negativity.  Quadratures
are ``x = (a + a^dag)/sqrt 2``, ``p = (a - a^dag)/(i sqrt 2)``, so the vacuum
variance is 1/2 and ordering is ``(x1, p1, x2, p2)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, NonPhysical

DOMAIN_TOL = 1e-9
EIG_TOL = 1e-10

SIGMA_Y = np.array([[0, -1j], [1j, 0]])
SPIN_FLIP = np.kron(SIGMA_Y, SIGMA_Y)
PT = np.diag([1.0, 1.0, 1.0, -1.0])


def _check_amplitude(c) -> complex:
    c = complex(c)
    if abs(c) > 1 + DOMAIN_TOL:
        raise DomainError(f"|c| = {abs(c)!r} exceeds 1")
    return c


@dataclass(frozen=True)
class TwoQubitState:
    """Density matrix in the basis ``|ee>, |eg>, |ge>, |gg>``."""

    matrix: np.ndarray

    def validate(self, tol: float = EIG_TOL) -> "TwoQubitState":
        m = self.matrix
        if m.shape != (4, 4):
            raise NonPhysical(f"expected a 4x4 matrix, got {m.shape}")
        if not np.allclose(m, m.conj().T, atol=tol):
            raise NonPhysical("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > tol:
            raise NonPhysical(f"trace {np.trace(m).real!r} differs from 1")
        if np.linalg.eigvalsh(m).min() < -tol:
            raise NonPhysical("density matrix has a negative eigenvalue")
        return self


def two_qubit_state(c) -> TwoQubitState:
    """Reduced state of the two qubits for amplitude ``c``."""
    c = _check_amplitude(c)
    p = min(abs(c) ** 2, 1.0)
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = p * p / 2
    rho[1, 1] = rho[2, 2] = p * (1 - p) / 2
    rho[3, 3] = ((1 - p) ** 2 + 1) / 2
    rho[0, 3] = c * c / 2
    rho[3, 0] = np.conj(c * c) / 2
    return TwoQubitState(rho)


def spin_flip_eigenvalues(rho) -> np.ndarray:
    """Eigenvalues of ``rho (sy x sy) rho^* (sy x sy)`` in decreasing order."""
    m = rho.matrix if isinstance(rho, TwoQubitState) else np.asarray(rho)
    flipped = SPIN_FLIP @ m.conj() @ SPIN_FLIP
    lam = np.linalg.eigvals(m @ flipped).real
    if lam.min() < -EIG_TOL:
        raise NonPhysical(f"spin-flip spectrum has eigenvalue {lam.min()!r}")
    return np.sort(np.clip(lam, 0.0, None))[::-1]


def wootters_concurrence(rho) -> float:
    """Concurrence ``max(0, s1 - s2 - s3 - s4)``, ``s_i`` the square roots of the spin-flip spectrum.

    The ``s_i`` are obtained as singular values of ``W^T (sy x sy) W`` with
    ``rho = W W^dag``, which avoids square roots of round-off-level
    eigenvalues of ``rho rho~``.
    """
    m = rho.matrix if isinstance(rho, TwoQubitState) else np.asarray(rho)
    evals, evecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    if evals.min() < -EIG_TOL:
        raise NonPhysical(f"density matrix has eigenvalue {evals.min()!r}")
    keep = evals > 1e-14 * max(evals.max(), 1e-300)
    w = evecs[:, keep] * np.sqrt(evals[keep])
    tau = w.T @ SPIN_FLIP @ w
    s = np.sort(np.linalg.svd(tau, compute_uv=False))[::-1]
    s = np.concatenate([s, np.zeros(4 - len(s))])
    return float(max(0.0, s[0] - s[1] - s[2] - s[3]))


def concurrence_of_amplitude(c) -> float:
    return wootters_concurrence(two_qubit_state(c))


def steady_concurrence(residue: float) -> float:
    """Long-time concurrence ``Z^4``."""
    if not 0.0 <= residue <= 1.0 + DOMAIN_TOL:
        raise DomainError(f"residue {residue!r} outside [0, 1]")
    return float(residue) ** 4


@dataclass(frozen=True)
class GaussianState:
    """Zero-mean two-mode Gaussian state given by its covariance matrix."""

    cov: np.ndarray

    @property
    def blocks(self):
        v = self.cov
        return v[:2, :2], v[2:, 2:], v[:2, 2:]

    def symplectic_eigenvalues(self) -> np.ndarray:
        return symplectic_spectrum(self.cov)

    def validate(self, tol: float = DOMAIN_TOL) -> "GaussianState":
        v = self.cov
        if v.shape != (4, 4):
            raise NonPhysical(f"expected a 4x4 covariance matrix, got {v.shape}")
        if not np.allclose(v, v.T, atol=1e-12):
            raise NonPhysical("covariance matrix is not symmetric")
        if self.symplectic_eigenvalues().min() < 0.5 - tol:
            raise NonPhysical("covariance matrix violates the uncertainty relation")
        return self


OMEGA = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def symplectic_spectrum(cov: np.ndarray) -> np.ndarray:
    """Symplectic eigenvalues ``nu_1 <= nu_2`` of a positive-definite covariance matrix.

    Uses the Hermitian matrix ``V^(1/2) (i Omega) V^(1/2)`` whose spectrum is
    ``+-nu``; unlike the determinant formula this stays accurate when the two
    eigenvalues nearly coincide or one of them is small.
    """
    cov = 0.5 * (cov + cov.T)
    evals, evecs = np.linalg.eigh(cov)
    if evals.min() <= 0:
        raise NonPhysical(f"covariance matrix is not positive definite (eigenvalue {evals.min()!r})")
    root = (evecs * np.sqrt(evals)) @ evecs.T
    m = root @ (1j * OMEGA) @ root
    nu = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    return np.sort(np.abs(nu))[::2]


def tmsv_covariance(r: float) -> GaussianState:
    """Two-mode squeezed vacuum ``exp[r(a1 a2 - a1^dag a2^dag)]|00>``."""
    if r < 0:
        raise ValueError(f"squeezing must be non-negative, got {r!r}")
    ch = math.cosh(2 * r) / 2
    sh = math.sinh(2 * r) / 2
    z = np.diag([1.0, -1.0])
    v = np.block([[ch * np.eye(2), -sh * z], [-sh * z, ch * np.eye(2)]])
    return GaussianState(v)


def _mode_map(c: complex) -> np.ndarray:
    # <a> -> c <a> written on (x, p)
    th = np.angle(c)
    rot = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    return abs(c) * rot


def propagate_covariance(v0: GaussianState, c) -> GaussianState:
    """Apply the local channel ``a_l -> c a_l + sqrt(1 - |c|^2) vacuum`` to both modes."""
    c = _check_amplitude(c)
    if abs(c) > 1:
        c = c / abs(c)
    k = _mode_map(c)
    kk = np.block([[k, np.zeros((2, 2))], [np.zeros((2, 2)), k]])
    noise = 0.5 * (1 - abs(c) ** 2) * np.eye(4)
    v = kk @ v0.cov @ kk.T + noise
    return GaussianState(0.5 * (v + v.T))


def pt_symplectic_min(v: GaussianState) -> float:
    """Smaller symplectic eigenvalue of the partial transpose ``Lambda V Lambda``."""
    return float(symplectic_spectrum(PT @ v.cov @ PT)[0])


def logarithmic_negativity(v: GaussianState) -> float:
    """``max(0, -log2(2 nu_min))`` of the partially transposed covariance."""
    nu = pt_symplectic_min(v)
    if nu <= 0:
        raise NonPhysical("partial-transpose symplectic eigenvalue is zero")
    return max(0.0, -math.log2(2 * nu))


def log_negativity_of_amplitude(c, r: float) -> float:
    return logarithmic_negativity(propagate_covariance(tmsv_covariance(r), c))


def steady_log_negativity(residue: float, r: float) -> float:
    """Long-time value ``-log2|1 - Z^2 (1 - exp(-2r))|``, floored at 0."""
    if not 0.0 <= residue <= 1.0 + DOMAIN_TOL:
        raise DomainError(f"residue {residue!r} outside [0, 1]")
    if r < 0:
        raise ValueError(f"squeezing must be non-negative, got {r!r}")
    arg = abs(1 - residue ** 2 * (1 - math.exp(-2 * r)))
    return max(0.0, -math.log2(arg))


@dataclass(frozen=True)
class PropagatorCoefficients:
    xi: complex
    o: complex
    p: complex
    q: float


def propagator_coefficients(c, r: float) -> PropagatorCoefficients:
    """Coefficients of the coherent-state representation of the evolved squeezed state."""
    c = _check_amplitude(c)
    p2 = min(abs(c) ** 2, 1.0)
    t = math.tanh(r)
    xi = 1.0 / (1 - (1 - p2) ** 2 * t * t)
    return PropagatorCoefficients(
        xi=xi,
        o=xi / math.cosh(r) ** 2,
        p=-xi * c * c * t,
        q=xi * t * t * (1 - p2) * p2,
    )


def _log_power(k, log_base):
    # k * log_base with 0 * log(0) = 0
    k = np.asarray(k, dtype=float)
    out = np.zeros(np.broadcast(k, log_base).shape)
    np.multiply(k, log_base, out=out, where=k != 0)
    return out


def coefficient_state_covariance(coeffs: PropagatorCoefficients, cutoff: int = 120) -> tuple:
    """Covariance matrix of the state ``<a|rho|a'> = o exp(p a1 a2 + p* a'1 a'2 + q (a1 a'1 + a2 a'2))``.

    Moments are summed term by term in the Fock basis up to ``cutoff``
    quanta per expansion index and normalised by the resulting trace.
    Returns ``(GaussianState, trace)``; ``trace`` exposes the implicit
    normalisation of the printed coefficients.
    """
    p = complex(coeffs.p)
    q = float(coeffs.q)
    ap = abs(p)
    idx = np.arange(cutoff)
    a = idx[:, None, None]
    cc = idx[None, :, None]
    d = idx[None, None, :]
    lp = math.log(ap) if ap > 0 else -np.inf
    lq = math.log(q) if q > 0 else -np.inf
    pow_q = _log_power(cc + d, lq)
    pow_p = _log_power(2 * a, lp)
    base = (gammaln(a + cc + 1) + gammaln(a + d + 1) - gammaln(cc + 1) - gammaln(d + 1)
            - 2 * gammaln(a + 1))
    terms = np.exp(pow_p + pow_q + base)
    trace = complex(coeffs.o) * terms.sum()
    n1 = complex(coeffs.o) * ((a + cc) * terms).sum() / trace
    n2 = complex(coeffs.o) * ((a + d) * terms).sum() / trace
    # <a1 a2> = o p sum_{a>=1} |p|^{2(a-1)} q^{c+d} (a+c)!(a+d)!/(a!(a-1)!c!d!)
    a1 = a[1:]
    pow_p1 = _log_power(2 * (a1 - 1), lp)
    base1 = (gammaln(a1 + cc + 1) + gammaln(a1 + d + 1) - gammaln(cc + 1) - gammaln(d + 1)
             - gammaln(a1 + 1) - gammaln(a1))
    corr = complex(coeffs.o) * p * np.exp(pow_p1 + pow_q + base1).sum() / trace
    n1, n2 = n1.real, n2.real
    v = np.array([
        [n1 + 0.5, 0.0, corr.real, corr.imag],
        [0.0, n1 + 0.5, corr.imag, -corr.real],
        [corr.real, corr.imag, n2 + 0.5, 0.0],
        [corr.imag, -corr.real, 0.0, n2 + 0.5],
    ])
    return GaussianState(v), trace


def write_entanglement_csv(times, amplitudes, r: float, path, header_lines=()) -> Path:
    """Columns ``t, abs_c, concurrence, log_negativity``."""
    path = Path(path)
    v0 = tmsv_covariance(r)
    with path.open("w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "abs_c", "concurrence", "log_negativity"])
        for t, c in zip(times, amplitudes):
            c = complex(c)
            if abs(c) > 1:
                c = c / abs(c)
            conc = concurrence_of_amplitude(c)
            en = logarithmic_negativity(propagate_covariance(v0, c))
            writer.writerow([f"{t:.12e}", f"{abs(c):.12e}", f"{conc:.12e}", f"{en:.12e}"])
    return path
