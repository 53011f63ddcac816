"""Evolve, spectrum and sweep runs with deterministic CSV/JSON emission."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, ensure_output_dir
from .core import MQEKind, ModelParams
from .dynamics import (AmplitudeTrajectory, TimeGrid, _steps, solve_lattice, solve_volterra,
                       write_trajectory_csv)
from .entanglement import (DOMAIN_TOL, concurrence_of_amplitude, log_negativity_of_amplitude,
                           steady_concurrence, steady_log_negativity, write_entanglement_csv)
from .errors import ConfigError, NumericalFailure
from .floquet import (fbs_convergence, quasienergy_spectrum, spectrum_filename,
                      stroboscopic_prediction, write_spectrum_csv)

logger = logging.getLogger(__name__)

# tolerance on steady-state predictions and the decay threshold without a bound state
PREDICTION_TOL = 0.02
DECAY_THRESHOLD = 0.05


def header_lines(cfg: RunConfig, command: str, extra=()) -> list:
    return [f"hmlfloquet {__version__} {command}", f"config {cfg.canonical_json()}", *extra]


def build_grid(cfg: RunConfig, params: ModelParams, periods: int) -> TimeGrid:
    """Grid spanning ``periods`` drive periods; ``grid.dt`` overrides ``steps_per_period``."""
    if cfg.grid.dt is None:
        return TimeGrid.for_periods(params, periods, cfg.grid.steps_per_period)
    n = _steps(periods * params.drive.period, cfg.grid.dt, "checkpoint time")
    return TimeGrid(cfg.grid.dt, n)


def backends_of(cfg: RunConfig) -> list:
    return ["volterra", "lattice"] if cfg.backend == "both" else [cfg.backend]


def run_backend(name: str, params: ModelParams, grid: TimeGrid) -> AmplitudeTrajectory:
    solver = {"volterra": solve_volterra, "lattice": solve_lattice}[name]
    traj = solver(params, grid)
    values = traj.values
    if not np.all(np.isfinite(values)):
        raise NumericalFailure(f"{name} backend produced non-finite amplitudes")
    worst = float(np.max(np.abs(values)))
    if worst > 1 + DOMAIN_TOL:
        raise NumericalFailure(f"{name} backend left the unit disk: max |c| = {worst:.6g}")
    return traj


def entanglement_value(kind: MQEKind, c: complex, r: float) -> float:
    c = complex(c)
    if abs(c) > 1:
        c /= abs(c)
    if kind is MQEKind.BOSON:
        return log_negativity_of_amplitude(c, r)
    return concurrence_of_amplitude(c)


def observable_name(kind: MQEKind) -> str:
    return "log_negativity" if kind is MQEKind.BOSON else "concurrence"


def _fbs_dicts(bound_states) -> list:
    return [asdict(b) for b in bound_states]


def write_json(path, payload) -> Path:
    path = Path(path)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2, allow_nan=True) + "\n")
    return path


def _float(x) -> float | None:
    x = float(x)
    return x if math.isfinite(x) else None


def _spectrum_and_convergence(cfg: RunConfig, params: ModelParams):
    kw = {"z_min": cfg.fbs.z_min, "gap_factor": cfg.fbs.gap_factor}
    qspec = quasienergy_spectrum(params, **kw)
    conv = fbs_convergence(params, tol=cfg.fbs.convergence_tol, **kw)
    return qspec, conv


def run_spectrum(cfg: RunConfig, out_dir=None) -> dict:
    """Quasienergy spectrum CSV for the configured point and a JSON summary of its bound states."""
    out = ensure_output_dir(out_dir or cfg.output_dir)
    params = cfg.model_params()
    qspec, conv = _spectrum_and_convergence(cfg, params)
    path = write_spectrum_csv(qspec, out / spectrum_filename(params), header_lines(cfg, "spectrum"))
    summary = {
        "command": "spectrum",
        "config": cfg.physics_dump(),
        "spectrum_file": path.name,
        "fbs": _fbs_dicts(qspec.bound_states),
        "beat_frequencies": qspec.beat_frequencies,
        "convergence": {"residue_shift": _float(conv.residue_shift), "stable": conv.stable,
                        "n_sites_refined": 2 * params.n_sites},
        "predictions": _predictions(cfg, qspec, cfg.checkpoint_periods),
    }
    write_json(out / "spectrum_summary.json", summary)
    return summary


def _predictions(cfg: RunConfig, qspec, periods: int) -> dict:
    asym = abs(stroboscopic_prediction(qspec, periods).asymptote)
    residue = qspec.bound_states[0].residue if qspec.bound_states else 0.0
    r = cfg.squeezing
    return {
        "checkpoint_periods": periods,
        "residue": residue,
        "abs_c": asym,
        "concurrence": steady_concurrence(min(asym, 1.0)),
        "log_negativity": steady_log_negativity(min(asym, 1.0), r),
    }


def run_evolve(cfg: RunConfig, out_dir=None) -> dict:
    """Trajectory and entanglement CSVs per backend, plus a JSON summary."""
    out = ensure_output_dir(out_dir or cfg.output_dir)
    params = cfg.model_params()
    periods = cfg.checkpoint_periods
    grid = build_grid(cfg, params, periods)
    head = header_lines(cfg, "evolve")
    qspec = quasienergy_spectrum(params, z_min=cfg.fbs.z_min, gap_factor=cfg.fbs.gap_factor)
    results = {}
    trajs = {}
    for name in backends_of(cfg):
        traj = run_backend(name, params, grid)
        trajs[name] = traj
        write_trajectory_csv(traj, out / f"trajectory_{name}.csv", head + [f"backend {name}"])
        write_entanglement_csv(traj.times, traj.values, cfg.squeezing,
                               out / f"entanglement_{name}.csv", head + [f"backend {name}"])
        final = complex(traj.values[-1])
        results[name] = {
            "abs_c_final": abs(final),
            "concurrence_final": entanglement_value(MQEKind.QUBIT, final, cfg.squeezing),
            "log_negativity_final": entanglement_value(MQEKind.BOSON, final, cfg.squeezing),
        }
    summary = {
        "command": "evolve",
        "config": cfg.physics_dump(),
        "t_final": grid.t_final,
        "n_steps": grid.n_steps,
        "dt": grid.dt,
        "observable": observable_name(cfg.mqe_kind),
        "backends": results,
        "fbs": _fbs_dicts(qspec.bound_states),
        "predictions": _predictions(cfg, qspec, periods) if grid.n_steps else None,
    }
    if len(trajs) == 2:
        summary["backend_sup_difference"] = float(
            np.max(np.abs(trajs["volterra"].values - trajs["lattice"].values)))
    write_json(out / "evolve_summary.json", summary)
    return summary


@dataclass(frozen=True)
class SweepRecord:
    value: float
    quasienergies: tuple
    fbs: tuple
    residue_shift: float | None
    converged: bool
    abs_c: float
    entanglement: float
    predicted_abs_c: float
    predicted_entanglement: float
    consistent: bool
    abs_c_volterra: float | None = None

    @property
    def has_fbs(self) -> bool:
        return bool(self.fbs)

    @property
    def residue(self) -> float | None:
        return self.fbs[0]["residue"] if self.fbs else None


@dataclass
class SweepResult:
    parameter: str
    observable: str
    checkpoint_periods: int
    records: list = field(default_factory=list)

    def values(self) -> list:
        return [r.value for r in self.records]

    def fbs_values(self) -> list:
        return [r.value for r in self.records if r.has_fbs]

    def record_at(self, value: float) -> SweepRecord:
        for r in self.records:
            if abs(r.value - value) < 1e-9:
                return r
        raise KeyError(value)


def evaluate_point(cfg_data: dict, value: float) -> tuple:
    """One sweep point; returns the record and the spectrum CSV rows. Runs in worker processes."""
    cfg = RunConfig.model_validate(cfg_data)
    params = cfg.model_params(**{cfg.sweep.parameter: value})
    qspec, conv = _spectrum_and_convergence(cfg, params)
    periods = cfg.checkpoint_periods
    grid = build_grid(cfg, params, periods)
    primary = "volterra" if cfg.backend == "volterra" else "lattice"
    c_final = complex(run_backend(primary, params, grid).values[-1])
    c_volterra = None
    if cfg.backend == "both":
        c_volterra = abs(complex(run_backend("volterra", params, grid).values[-1]))
    kind = cfg.mqe_kind
    ent = entanglement_value(kind, c_final, cfg.squeezing)
    pred = _predictions(cfg, qspec, periods)
    pred_ent = pred[observable_name(kind)]
    if qspec.bound_states:
        consistent = (abs(abs(c_final) - pred["abs_c"]) < PREDICTION_TOL
                      and abs(ent - pred_ent) < PREDICTION_TOL)
    else:
        consistent = abs(c_final) < DECAY_THRESHOLD
    record = SweepRecord(
        value=value,
        quasienergies=tuple(float(e) for e in qspec.quasienergies),
        fbs=tuple(_fbs_dicts(qspec.bound_states)),
        residue_shift=_float(conv.residue_shift),
        converged=conv.stable,
        abs_c=abs(c_final),
        entanglement=ent,
        predicted_abs_c=pred["abs_c"],
        predicted_entanglement=pred_ent,
        consistent=consistent,
        abs_c_volterra=c_volterra,
    )
    rows = [(float(e), float(z), int(f))
            for e, z, f in zip(qspec.quasienergies, qspec.overlaps, qspec.is_fbs())]
    return record, rows, spectrum_filename(params)


def _map_points(cfg: RunConfig, values: list, workers: int) -> list:
    data = cfg.model_dump(mode="json")
    if workers <= 1 or len(values) <= 1:
        return [evaluate_point(data, v) for v in values]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map yields in submission order whatever the completion order
        return list(pool.map(evaluate_point, [data] * len(values), values))


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    return f"{x:.12e}"


def write_sweep_csv(result: SweepResult, path, head) -> Path:
    path = Path(path)
    obs = result.observable
    cols = ["value", "n_fbs", "residue", "fbs_quasienergy", "residue_shift", "converged",
            "abs_c", "predicted_abs_c", obs, f"predicted_{obs}", "consistent", "abs_c_volterra"]
    with path.open("w", newline="") as fh:
        for line in head:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for r in result.records:
            eb = r.fbs[0]["quasienergy"] if r.fbs else None
            writer.writerow([_fmt(r.value), len(r.fbs), _fmt(r.residue), _fmt(eb),
                             _fmt(r.residue_shift), _fmt(r.converged), _fmt(r.abs_c),
                             _fmt(r.predicted_abs_c), _fmt(r.entanglement),
                             _fmt(r.predicted_entanglement), _fmt(r.consistent),
                             _fmt(r.abs_c_volterra)])
    return path


def _write_point_spectrum(path, rows, head) -> None:
    with Path(path).open("w", newline="") as fh:
        for line in head:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epsilon", "Z", "is_fbs"])
        for e, z, f in rows:
            writer.writerow([f"{e:.12e}", f"{z:.12e}", f])


def run_sweep(cfg: RunConfig, out_dir=None, workers: int | None = None,
              write: bool = True) -> SweepResult:
    """Evaluate every sweep point and, if ``write``, emit the sweep CSV/JSON and per-point spectra."""
    workers = cfg.workers if workers is None else workers
    values = cfg.sweep.values()
    command = f"sweep-{cfg.sweep.parameter}"
    outputs = _map_points(cfg, values, workers)
    result = SweepResult(cfg.sweep.parameter, observable_name(cfg.mqe_kind),
                         cfg.checkpoint_periods, [o[0] for o in outputs])
    if not write:
        return result
    out = ensure_output_dir(out_dir or cfg.output_dir)
    head = header_lines(cfg, command)
    spectra = out / "spectra"
    spectra.mkdir(exist_ok=True)
    for record, rows, name in outputs:
        _write_point_spectrum(spectra / name, rows,
                              head + [f"point {cfg.sweep.parameter}={record.value:g}"])
    stem = f"sweep_{cfg.sweep.parameter}"
    write_sweep_csv(result, out / f"{stem}.csv", head)
    write_json(out / f"{stem}.json", {
        "command": command,
        "config": cfg.physics_dump(),
        "parameter": result.parameter,
        "observable": result.observable,
        "checkpoint_periods": result.checkpoint_periods,
        "fbs_values": result.fbs_values(),
        "records": [asdict(r) for r in result.records],
    })
    return result


def run_sweep_amplitude(cfg: RunConfig, out_dir=None, workers: int | None = None,
                        write: bool = True) -> SweepResult:
    if cfg.sweep.parameter != "amplitude":
        raise ConfigError(f"field 'sweep.parameter': expected 'amplitude', got '{cfg.sweep.parameter}'")
    return run_sweep(cfg, out_dir, workers, write)


def run_sweep_frequency(cfg: RunConfig, out_dir=None, workers: int | None = None,
                        write: bool = True) -> SweepResult:
    if cfg.sweep.parameter != "frequency":
        raise ConfigError(f"field 'sweep.parameter': expected 'frequency', got '{cfg.sweep.parameter}'")
    return run_sweep(cfg, out_dir, workers, write)
