"""Amplitude dynamics ``c(t)`` of the driven MQE.

``c`` obeys ``dc/dt + i[w0 + A(t)] c + int_0^t F(t - s) c(s) ds = 0`` with
``c(0) = 1``.  Two independent backends are provided:

* :func:`solve_volterra` integrates that integro-differential equation with
  the continuum memory kernel of :func:`hmlfloquet.core.memory_kernel`;
* :func:`solve_lattice` evolves the finite (N+1)-dimensional single-excitation
  Schroedinger equation exactly, segment by segment.

They agree until the lattice revival time (finite-size echo).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .core import (Boundary, ModelParams, band_structure, drive_phase_integral,
                   kernel_envelope, memory_kernel, spectral_density)
from .errors import GridMisaligned, StepTooLarge
from .floquet import hamiltonians

GUARD = 1e-8
MAX_PHASE_PER_STEP = 0.5


@dataclass(frozen=True)
class TimeGrid:
    dt: float
    n_steps: int

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 0:
            raise ValueError(f"n_steps must be a non-negative integer, got {self.n_steps}")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    @property
    def t_final(self) -> float:
        return self.n_steps * self.dt

    @classmethod
    def for_periods(cls, params: ModelParams, periods: int, steps_per_period: int = 512):
        """Grid of ``periods`` drive periods with ``dt = T / steps_per_period``."""
        return cls(params.drive.period / steps_per_period, periods * steps_per_period)


def _steps(length: float, dt: float, what: str) -> int:
    ratio = length / dt
    n = round(ratio)
    if abs(ratio - n) > 1e-6 * max(1.0, ratio):
        raise GridMisaligned(f"{what} = {length!r} is not an integer multiple of dt = {dt!r}")
    return int(n)


def drive_steps(params: ModelParams, grid: TimeGrid) -> tuple:
    """``(steps per period, steps in the on-segment)``; validates node alignment."""
    steps_period = _steps(params.drive.period, grid.dt, "period T")
    steps_on = _steps(params.drive.on_time, grid.dt, "on-time t'")
    return steps_period, steps_on


def check_grid(params: ModelParams, grid: TimeGrid) -> tuple:
    steps = drive_steps(params, grid)
    rate = (abs(params.omega0) + abs(params.drive.amplitude) + 2 * params.hopping
            + abs(params.omega_c))
    if grid.dt * rate > MAX_PHASE_PER_STEP:
        raise StepTooLarge(
            f"dt * (|w0| + |F| + 2h + |w_c|) = {grid.dt * rate:.3g} exceeds {MAX_PHASE_PER_STEP}")
    return steps


def step_frequencies(params: ModelParams, grid: TimeGrid) -> np.ndarray:
    """MQE frequency ``w0 + A`` on each interval ``[t_j, t_{j+1})``."""
    steps_period, steps_on = drive_steps(params, grid)
    on = (np.arange(grid.n_steps) % steps_period) < steps_on
    return params.omega0 + np.where(on, params.drive.amplitude, 0.0)


def switch_nodes(params: ModelParams, grid: TimeGrid) -> np.ndarray:
    """Interior nodes where the drive changes value between adjacent intervals."""
    w = step_frequencies(params, grid)
    return np.flatnonzero(np.diff(w) != 0) + 1


@dataclass(frozen=True)
class AmplitudeTrajectory:
    grid: TimeGrid
    values: np.ndarray
    backend: str
    params: ModelParams | None = None

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.values)

    def at_periods(self, m) -> np.ndarray:
        """Values at ``t = mT`` (requires an attached drive)."""
        steps_period, _ = drive_steps(self.params, self.grid)
        return self.values[np.asarray(m) * steps_period]


def solve_volterra(params: ModelParams, grid: TimeGrid, kernel_cutoff: float | None = None,
                   ) -> AmplitudeTrajectory:
    """Kernel-based solution of the amplitude equation.

    Exponential trapezoidal scheme: on each interval the local phase
    ``exp(-i (w0 + A) dt)`` is integrated exactly and the memory term
    ``I(t) = int_0^t F(t - s) c(s) ds`` is handled by trapezoidal product
    integration.  The corrector is linear in ``c_{j+1}`` and is solved in
    closed form, so the scheme is second order and unconditionally stable
    in the drive phase.  Cost is ``O(n^2)``.

    ``kernel_cutoff`` truncates the convolution beyond the lag where the
    Bessel envelope of ``F / g^2`` drops below the given value.
    """
    check_grid(params, grid)
    n = grid.n_steps
    dt = grid.dt
    t = grid.times
    kern = memory_kernel(params, t)
    krev = kern[::-1].copy()  # krev[n - m] == kern[m]
    w = step_frequencies(params, grid)
    phase = np.exp(-1j * w * dt)

    max_lag = n + 1
    if kernel_cutoff is not None:
        above = np.flatnonzero(kernel_envelope(params, t) >= kernel_cutoff)
        max_lag = int(above[-1]) + 1 if len(above) else 1

    c = np.zeros(n + 1, dtype=complex)
    c[0] = 1.0
    k0 = kern[0]
    denom = 1.0 + 0.25 * dt * dt * k0
    mem_prev = 0j
    for j in range(n):
        # sum_{m=1}^{j} F_{j+1-m} c_m, truncated to lags < max_lag
        lo = max(1, j + 1 - max_lag + 1)
        conv = np.dot(krev[n - j + lo - 1:n], c[lo:j + 1]) if j >= lo else 0j
        head = 0.5 * kern[j + 1] * c[0] if j + 1 < max_lag else 0j
        partial = dt * (head + conv)
        c[j + 1] = (phase[j] * c[j] - 0.5 * dt * (phase[j] * mem_prev + partial)) / denom
        mem_prev = partial + 0.5 * dt * k0 * c[j + 1]
    return AmplitudeTrajectory(grid, c, "volterra", params)


@dataclass(frozen=True)
class LatticeRun:
    trajectory: AmplitudeTrajectory
    norms: np.ndarray
    final_state: np.ndarray


def evolve_lattice(params: ModelParams, grid: TimeGrid) -> LatticeRun:
    """Exact single-excitation evolution; norms are recorded at every segment end."""
    steps_period, steps_on = drive_steps(params, grid)
    ham = hamiltonians(params)
    eig = {}
    for name, mat in (("on", ham.on), ("off", ham.off)):
        evals, evecs = np.linalg.eigh(mat)
        eig[name] = (evals, evecs)
    dt = grid.dt
    n = grid.n_steps
    c = np.empty(n + 1, dtype=complex)
    c[0] = 1.0
    psi = np.zeros(params.n_sites + 1, dtype=complex)
    psi[0] = 1.0
    norms = [1.0]
    node = 0
    while node < n:
        pos = node % steps_period
        if pos < steps_on:
            name, length = "on", steps_on - pos
        else:
            name, length = "off", steps_period - pos
        length = min(length, n - node)
        evals, evecs = eig[name]
        amps = evecs.conj().T @ psi
        k = np.arange(1, length + 1)
        phases = np.exp(-1j * np.outer(k * dt, evals))
        c[node + 1:node + length + 1] = phases @ (evecs[0, :] * amps)
        psi = evecs @ (amps * phases[-1])
        norms.append(float(np.linalg.norm(psi)))
        node += length
    traj = AmplitudeTrajectory(grid, c, "lattice", params)
    return LatticeRun(traj, np.asarray(norms), psi)


def solve_lattice(params: ModelParams, grid: TimeGrid) -> AmplitudeTrajectory:
    """Finite-lattice oracle: exact per-segment propagation of the (N+1)-vector."""
    check_grid(params, grid)
    return evolve_lattice(params, grid).trajectory


def volterra_residual(params: ModelParams, traj: AmplitudeTrajectory) -> np.ndarray:
    """Residual of the amplitude equation at every grid midpoint ``t_j + dt/2``.

    Evaluated on ``y = exp(i phi) c`` with ``phi = int_0^t (w0 + A)``, so that
    ``dc/dt + i (w0 + A) c = exp(-i phi) dy/dt`` and the fast phase does not
    enter the finite difference.  The memory integral uses composite Simpson
    on the half-step grid with ``c`` at half steps from a cubic spline of ``y``.
    """
    grid = traj.grid
    dt = grid.dt
    n = grid.n_steps
    t = grid.times
    phi = params.omega0 * t + drive_phase_integral(params.drive, t)
    y = np.exp(1j * phi) * traj.values
    mids = t[:-1] + 0.5 * dt
    phi_mid = params.omega0 * mids + drive_phase_integral(params.drive, mids)
    y_mid = CubicSpline(t, y)(mids)
    c_half = np.empty(2 * n + 1, dtype=complex)
    c_half[0::2] = traj.values
    c_half[1::2] = np.exp(-1j * phi_mid) * y_mid
    hh = 0.5 * dt
    fh = memory_kernel(params, np.arange(2 * n + 2) * hh)
    res = np.empty(n, dtype=complex)
    for j in range(n):
        top = 2 * j + 1
        vals = fh[top::-1] * c_half[:top + 1]
        if top == 1:
            mem = 0.5 * hh * (vals[0] + vals[1])
        else:
            # first interval by a quadratic rule, rest by composite Simpson
            first = hh * (5 * vals[0] + 8 * vals[1] - vals[2]) / 12
            mem = first + integrate.simpson(vals[1:], dx=hh)
        res[j] = np.exp(-1j * phi_mid[j]) * (y[j + 1] - y[j]) / dt + mem
    return res


@dataclass(frozen=True)
class MarkovianRates:
    gamma: float
    lamb_shift: float
    edge_singular: bool = False


def _shift_weight(params: ModelParams):
    # J(w) dw = weight(theta) dtheta with w = w_c - 2h cos(theta)
    g2 = params.coupling ** 2
    if params.boundary is Boundary.PERIODIC:
        return lambda th: np.full_like(np.asarray(th, dtype=float), g2 / np.pi)
    return lambda th: 2 * g2 / np.pi * np.sin(th) ** 2


def lamb_shift(params: ModelParams, lower_cutoff: float | None = None) -> float:
    """Principal value ``P int J(w) / (w0 - w) dw`` over the band.

    ``lower_cutoff`` restricts the integral to ``w >= lower_cutoff``.
    """
    h = params.hopping
    delta = params.omega0 - params.omega_c
    weight = _shift_weight(params)
    th_lo = 0.0
    if lower_cutoff is not None:
        arg = (params.omega_c - lower_cutoff) / (2 * h)
        if arg <= -1:
            return 0.0
        th_lo = 0.0 if arg >= 1 else math.acos(arg)
    if abs(delta) >= 2 * h:
        val, _ = integrate.quad(lambda th: weight(th) / (delta + 2 * h * math.cos(th)),
                                th_lo, math.pi, limit=200, epsabs=1e-13, epsrel=1e-12)
        return float(val)
    th0 = math.acos(-delta / (2 * h))
    if th0 <= th_lo:
        val, _ = integrate.quad(lambda th: weight(th) / (delta + 2 * h * math.cos(th)),
                                th_lo, math.pi, limit=200, epsabs=1e-13, epsrel=1e-12)
        return float(val)

    def regular(th):
        # (th - th0) / (delta + 2h cos th), written without cancellation
        u = 0.5 * (th - th0)
        return -weight(th) / (2 * h * math.sin(0.5 * (th + th0)) * np.sinc(u / math.pi))

    val, _ = integrate.quad(regular, th_lo, math.pi, weight="cauchy", wvar=th0,
                            limit=200, epsabs=1e-13, epsrel=1e-12)
    return float(val)


def markovian_rates(params: ModelParams, lower_cutoff: float | None = None) -> MarkovianRates:
    """Born-Markov decay rate ``pi J(w0)`` and Lamb shift."""
    band = band_structure(params)
    at_edge = (math.isclose(params.omega0, band.lower, rel_tol=0, abs_tol=1e-12)
               or math.isclose(params.omega0, band.upper, rel_tol=0, abs_tol=1e-12))
    if at_edge:
        if params.boundary is Boundary.PERIODIC and params.coupling > 0:
            return MarkovianRates(math.inf, math.nan, edge_singular=True)
        return MarkovianRates(0.0, lamb_shift(params, lower_cutoff), edge_singular=True)
    gamma = float(math.pi * spectral_density(params, params.omega0))
    return MarkovianRates(gamma, lamb_shift(params, lower_cutoff))


def markovian_trajectory(rates: MarkovianRates, grid: TimeGrid) -> AmplitudeTrajectory:
    t = grid.times
    if math.isinf(rates.gamma):
        vals = np.where(t == 0, 1.0 + 0j, 0j)
    else:
        vals = np.exp(-(rates.gamma + 1j * rates.lamb_shift) * t)
    return AmplitudeTrajectory(grid, vals, "markovian")


@dataclass(frozen=True)
class MasterEqCoefficients:
    grid: TimeGrid
    frequency: np.ndarray
    decay_rate: np.ndarray
    valid: np.ndarray


def master_eq_coefficients(traj: AmplitudeTrajectory, guard: float = GUARD) -> MasterEqCoefficients:
    """``Omega(t) = -Im(c'/c)`` and ``Gamma(t) = -Re(c'/c)`` on the grid.

    ``c'/c`` is the finite-difference derivative of ``log c`` (unwrapped
    phase): centered in the interior, second-order one-sided at the grid ends
    and at drive switch nodes, so no stencil straddles a jump of ``A``.
    Nodes whose stencil touches ``|c| < guard`` are masked.
    """
    c = traj.values
    n = len(c) - 1
    dt = traj.grid.dt
    mod = np.abs(c)
    small = mod < guard
    logc = np.log(np.where(small, 1.0, mod)) + 1j * np.unwrap(np.angle(c))
    deriv = np.full(n + 1, np.nan + 0j)
    ok = np.zeros(n + 1, dtype=bool)
    switches = set()
    if traj.params is not None and traj.params.drive.amplitude != 0:
        switches = set(switch_nodes(traj.params, traj.grid).tolist())

    def forward(j):
        if j + 2 <= n and (j + 1) not in switches:
            return (-3 * logc[j] + 4 * logc[j + 1] - logc[j + 2]) / (2 * dt), (j, j + 1, j + 2)
        return (logc[j + 1] - logc[j]) / dt, (j, j + 1)

    for j in range(n + 1):
        if n == 0:
            break
        if j == 0 or j in switches:
            val, sten = forward(j)
        elif j == n:
            if n >= 2 and (n - 1) not in switches:
                val, sten = (3 * logc[n] - 4 * logc[n - 1] + logc[n - 2]) / (2 * dt), (n, n - 1, n - 2)
            else:
                val, sten = (logc[n] - logc[n - 1]) / dt, (n, n - 1)
        else:
            val, sten = (logc[j + 1] - logc[j - 1]) / (2 * dt), (j - 1, j, j + 1)
        if not any(small[s] for s in sten):
            deriv[j] = val
            ok[j] = True
    freq = np.where(ok, -deriv.imag, np.nan)
    rate = np.where(ok, -deriv.real, np.nan)
    return MasterEqCoefficients(traj.grid, freq, rate, ok)


def write_trajectory_csv(traj: AmplitudeTrajectory, path, header_lines=()) -> Path:
    """Columns ``t, re_c, im_c, abs_c``; ``header_lines`` become ``#`` comments."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "re_c", "im_c", "abs_c"])
        for t, v in zip(traj.times, traj.values):
            writer.writerow([f"{t:.12e}", f"{v.real:.12e}", f"{v.imag:.12e}", f"{abs(v):.12e}"])
    return path
