"""Non-Markovian decoherence and Floquet bound states of a driven magnetic quantum entity on a magnon lattice."""

__version__ = "0.1.0"

from .core import (Boundary, DrivingProtocol, MQEKind, ModelParams, band_structure,
                   dispersion, driving_amplitude, memory_kernel, reference_params,
                   spectral_density)
from .dynamics import (AmplitudeTrajectory, TimeGrid, markovian_rates, markovian_trajectory,
                       master_eq_coefficients, solve_lattice, solve_volterra)
from .entanglement import (concurrence_of_amplitude, log_negativity_of_amplitude,
                           logarithmic_negativity, propagate_covariance, steady_concurrence,
                           steady_log_negativity, tmsv_covariance, two_qubit_state,
                           wootters_concurrence)
from .floquet import (build_hamiltonian, detect_fbs, fbs_convergence, one_period_propagator,
                      quasienergy_spectrum, stroboscopic_prediction)
from .config import RunConfig, load_config
from .harness import (SweepResult, run_evolve, run_spectrum, run_sweep_amplitude,
                      run_sweep_frequency)
