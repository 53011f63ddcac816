"""Physical parameters, lattice band, spectral density, memory kernel and drive.

Units throughout: hbar = 1 and frequencies are quoted in units of the
MQE-lattice coupling ``g`` (so ``g`` is normally 1 and times are in 1/g).

Two lattice boundary conditions are supported and every quantity here is
consistent with the corresponding finite-lattice Hamiltonian built in
:mod:`hmlfloquet.floquet`:

``"open"`` (default)
    Open chain of ``N`` sites, the MQE couples to the end site 1.  The
    site-1 local density of states is the semicircle, giving
    ``J(w) = g^2 sqrt(4h^2 - x^2) / (2 pi h^2)`` and
    ``F(tau) = g^2 exp(-i w_c tau) * 2 J1(2 h tau) / (2 h tau)``.
``"periodic"``
    Ring of ``N`` sites (momenta ``k = 2 pi m / N``, ``|g_k|^2 = g^2 / N``).
    The density of states is the arcsine law,
    ``J(w) = g^2 / (pi sqrt(4h^2 - x^2))`` and
    ``F(tau) = g^2 exp(-i w_c tau) J0(2 h tau)``.

Here ``x = w - w_c``.  The gauge phase ``exp(ik)`` of the momentum-space
coupling is dropped; it cancels in ``|g_k|^2`` and in ``c(t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy import special

__all__ = [
    "Boundary",
    "MQEKind",
    "DrivingProtocol",
    "ModelParams",
    "BandStructure",
    "band_structure",
    "dispersion",
    "spectral_density",
    "memory_kernel",
    "kernel_envelope",
    "lattice_kernel_sum",
    "driving_amplitude",
    "drive_phase_integral",
    "reference_params",
]


class Boundary(str, Enum):
    OPEN = "open"
    PERIODIC = "periodic"


class MQEKind(str, Enum):
    QUBIT = "qubit"
    BOSON = "boson"


@dataclass(frozen=True)
class DrivingProtocol:
    """Piecewise-constant frequency modulation of the MQE.

    ``A(t) = amplitude`` on ``[jT, jT + on_time)`` and ``0`` on
    ``[jT + on_time, (j+1)T)``.
    """

    amplitude: float = 0.0
    period: float = 2 * math.pi / 12.0
    on_time: float = math.pi / 12.0

    def __post_init__(self):
        if not (math.isfinite(self.amplitude) and math.isfinite(self.period)
                and math.isfinite(self.on_time)):
            raise ValueError("driving parameters must be finite")
        if self.period <= 0:
            raise ValueError(f"period must be positive, got {self.period}")
        if not 0.0 <= self.on_time <= self.period:
            raise ValueError(
                f"on_time must lie in [0, period], got {self.on_time} for period {self.period}")

    @property
    def frequency(self) -> float:
        """Drive angular frequency ``2 pi / T``."""
        return 2 * math.pi / self.period

    @classmethod
    def from_frequency(cls, amplitude: float, frequency: float, on_fraction: float = 0.5):
        period = 2 * math.pi / frequency
        return cls(amplitude=amplitude, period=period, on_time=on_fraction * period)


@dataclass(frozen=True)
class ModelParams:
    """Constants of one MQE + lattice subsystem, in units of g."""

    omega0: float = 1.0
    omega_c: float = 0.5
    hopping: float = 1.5
    coupling: float = 1.0
    n_sites: int = 200
    drive: DrivingProtocol = field(default_factory=DrivingProtocol)
    mqe_kind: MQEKind = MQEKind.QUBIT
    boundary: Boundary = Boundary.OPEN

    def __post_init__(self):
        for name in ("omega0", "omega_c", "hopping", "coupling"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.hopping <= 0:
            raise ValueError(f"hopping must be positive, got {self.hopping}")
        if self.coupling < 0:
            raise ValueError(f"coupling must be non-negative, got {self.coupling}")
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise ValueError(f"n_sites must be an integer >= 2, got {self.n_sites}")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        object.__setattr__(self, "mqe_kind", MQEKind(self.mqe_kind))
        object.__setattr__(self, "boundary", Boundary(self.boundary))

    def with_drive(self, **kwargs) -> "ModelParams":
        return replace(self, drive=replace(self.drive, **kwargs))

    def replace(self, **kwargs) -> "ModelParams":
        return replace(self, **kwargs)


def reference_params(amplitude: float = 0.0, **kwargs) -> ModelParams:
    """Parameter set of the amplitude sweep: Omega = 12, w_c = 0.5, w0 = 1, h = 1.5, N = 200, t' = T/2."""
    drive = DrivingProtocol.from_frequency(amplitude, 12.0, 0.5)
    return ModelParams(drive=drive, **kwargs)


@dataclass(frozen=True)
class BandStructure:
    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def center(self) -> float:
        return 0.5 * (self.upper + self.lower)

    def contains(self, w) -> np.ndarray:
        return (np.asarray(w) > self.lower) & (np.asarray(w) < self.upper)


def band_structure(params: ModelParams) -> BandStructure:
    h = params.hopping
    return BandStructure(params.omega_c - 2 * h, params.omega_c + 2 * h)


def dispersion(params: ModelParams, k):
    """Lattice dispersion ``w_k = w_c - 2 h cos k``."""
    return params.omega_c - 2 * params.hopping * np.cos(k)


def spectral_density(params: ModelParams, w):
    """Continuum spectral density ``J(w)``; zero outside the open band.

    Band edges are integrable singularities for the periodic lattice and
    square-root zeros for the open chain.
    """
    w = np.asarray(w, dtype=float)
    g2 = params.coupling ** 2
    h = params.hopping
    x = w - params.omega_c
    s = 4 * h * h - x * x
    inside = s > 0
    root = np.sqrt(np.where(inside, s, 1.0))
    if params.boundary is Boundary.PERIODIC:
        val = g2 / (np.pi * root)
    else:
        val = g2 * root / (2 * np.pi * h * h)
    out = np.where(inside, val, 0.0)
    return out if out.ndim else float(out)


def _edge_bessel(x):
    # 2 J1(x) / x with the removable point at 0
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-6
    xs = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x * x / 8.0, 2.0 * special.j1(xs) / xs)


def memory_kernel(params: ModelParams, tau):
    """Bath correlation function ``F(tau) = int J(w) exp(-i w tau) dw``."""
    tau = np.asarray(tau, dtype=float)
    x = 2 * params.hopping * tau
    if params.boundary is Boundary.PERIODIC:
        env = special.j0(x)
    else:
        env = _edge_bessel(x)
    out = params.coupling ** 2 * np.exp(-1j * params.omega_c * tau) * env
    return out if out.ndim else complex(out)


def kernel_envelope(params: ModelParams, tau):
    """Upper bound on ``|F(tau)| / g^2`` used for optional kernel truncation."""
    x = np.maximum(2 * params.hopping * np.asarray(tau, dtype=float), 1e-6)
    # large-x Bessel amplitude sqrt(2/(pi x)) with a 1.5 safety factor
    amp = np.sqrt(2.0 / (np.pi * x))
    if params.boundary is Boundary.OPEN:
        amp = 2.0 * amp / x
    return np.minimum(1.0, 1.5 * amp)


def lattice_kernel_sum(params: ModelParams, tau):
    """Finite-N kernel ``sum_k |g_k|^2 exp(-i w_k tau)`` over the lattice normal modes."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    n = params.n_sites
    g2 = params.coupling ** 2
    if params.boundary is Boundary.PERIODIC:
        k = 2 * np.pi * np.arange(n) / n
        weights = np.full(n, g2 / n)
    else:
        k = np.pi * np.arange(1, n + 1) / (n + 1)
        weights = 2 * g2 / (n + 1) * np.sin(k) ** 2
    wk = dispersion(params, k)
    return np.exp(-1j * np.outer(tau, wk)) @ weights


def _period_split(protocol: DrivingProtocol, t):
    """Integer period index and in-period remainder, snapped at node boundaries."""
    t = np.asarray(t, dtype=float)
    T = protocol.period
    j = np.floor(t / T)
    rem = t - j * T
    tol = 1e-12 * T
    wrap = rem >= T - tol
    j = np.where(wrap, j + 1, j)
    rem = np.where(wrap, 0.0, np.maximum(rem, 0.0))
    return j, rem


def driving_amplitude(protocol: DrivingProtocol, t):
    """Drive ``A(t)`` with left-closed on/off intervals."""
    _, rem = _period_split(protocol, t)
    tol = 1e-12 * protocol.period
    on = rem < protocol.on_time - tol
    out = np.where(on, protocol.amplitude, 0.0)
    return out if out.ndim else float(out)


def drive_phase_integral(protocol: DrivingProtocol, t):
    """``int_0^t A(s) ds``."""
    j, rem = _period_split(protocol, t)
    out = protocol.amplitude * (j * protocol.on_time + np.minimum(rem, protocol.on_time))
    return out if np.ndim(out) else float(out)
