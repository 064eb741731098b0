"""Monte Carlo SINR sweeps and the Hessian nonconvexity experiment."""
from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .array_model import (ArrayGeometry, Scenario, Source, SourceKind, analytical_covariance,
                          db_to_linear, generate_snapshots, interferer_powers, linear_to_db,
                          sample_covariance, signal_covariance, steering_vector)
from .beamformers import (Method, build_w0_blocks, digital_mvdr, hybrid_mvdr, mvdr_weights,
                          output_sinr, pdbf_mvdr)
from .completion import CompletionConfig, assemble_incomplete_scm, dykstra_complete
from .errors import ConfigError, NumericError
from .hybrid import SubArrayPartition, hierarchical_schedule
from .manifold import AscentOptions, hessian_spectrum_at

log = logging.getLogger(__name__)

INPUT_TAG = "INPUT"
CSV_HEADER = ("snr_db", "method", "mean_sinr_db", "std_sinr_db", "n_trials")
THREADS_ENV = "RR2D_THREADS"

# Scenario keys that describe a single fixed scenario; sweeps draw these at random.
_SCENARIO_ONLY_KEYS = {"soi_angle_deg", "interferer_angles_deg", "snr_db"}


@dataclass(frozen=True)
class ExperimentConfig:
    n_elements: int = 32
    n_digital: int = 2
    spacing: float = 0.5
    snr_db_start: float = -30.0
    snr_db_stop: float = 30.0
    snr_db_step: float = 2.0
    inr_db: float = 20.0
    inr_mode: str = "aggregate"
    n_interferers: int = 2
    k_s: int = 4
    dbf_snapshots: int | None = None
    n_trials: int = 500
    methods: tuple = tuple(Method)
    seed: int = 0
    min_separation_deg: float = 0.5
    include_soi: bool = False
    digital_rule: str = "mvdr"
    toeplitz: bool = True
    readout: str = "toeplitz"
    reg_epsilon: float | None = None
    delta_tol: float = 1e-6
    max_iters: int = 500

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(Method(m) for m in self.methods))
        if not self.snr_db_step > 0:
            raise ConfigError("snr_db_step must be positive")
        if self.snr_db_stop < self.snr_db_start:
            raise ConfigError("snr_db_stop must not be below snr_db_start")
        if self.n_trials < 1:
            raise ConfigError("n_trials must be >= 1")
        if self.n_interferers < 0:
            raise ConfigError("n_interferers must be >= 0")
        if self.inr_mode not in ("aggregate", "per_interferer"):
            raise ConfigError(f"unknown inr_mode {self.inr_mode!r}")
        if self.digital_rule not in ("mvdr", "mse"):
            raise ConfigError(f"unknown digital_rule {self.digital_rule!r}")
        if not self.methods:
            raise ConfigError("at least one method is required")
        self.partition  # divisibility check
        self.completion_config()
        if self.dbf_samples() != self.hybrid_samples_per_element():
            raise ConfigError(
                f"sample budget mismatch: DBF uses {self.dbf_samples()} snapshots per element, "
                f"switching gives {self.hybrid_samples_per_element()}")

    @property
    def partition(self):
        return SubArrayPartition.for_array(self.n_elements, self.n_digital)

    @property
    def geometry(self):
        return ArrayGeometry(self.n_elements, self.spacing)

    def dbf_samples(self):
        return 2 * self.n_elements if self.dbf_snapshots is None else int(self.dbf_snapshots)

    def hybrid_samples_per_element(self):
        p = self.partition
        return self.k_s * p.n_per_subarray ** (p.n_digital - 1)

    def snr_grid(self):
        n = int(np.floor((self.snr_db_stop - self.snr_db_start) / self.snr_db_step + 1e-9)) + 1
        return [round(self.snr_db_start + i * self.snr_db_step, 10) for i in range(n)]

    def completion_config(self):
        try:
            return CompletionConfig(reg_epsilon=self.reg_epsilon, delta_tol=self.delta_tol,
                                    max_iters=self.max_iters, use_toeplitz=self.toeplitz,
                                    readout=self.readout)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_mapping(cls, cfg):
        cfg = dict(cfg or {})
        rng_spec = cfg.pop("snr_db_range", None)
        if rng_spec is not None:
            if isinstance(rng_spec, dict):
                rng_spec = [rng_spec.get(k) for k in ("start", "stop", "step")]
            try:
                cfg["snr_db_start"], cfg["snr_db_stop"], cfg["snr_db_step"] = map(float, rng_spec)
            except (TypeError, ValueError):
                raise ConfigError("snr_db_range must be [start, stop, step]") from None
        ignored = sorted(set(cfg) & _SCENARIO_ONLY_KEYS)
        if ignored:
            log.info("sweep draws angles and SNR itself; ignoring %s", ", ".join(ignored))
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(cfg) - known - _SCENARIO_ONLY_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        kwargs = {k: v for k, v in cfg.items() if k in known}
        if "methods" in kwargs:
            try:
                kwargs["methods"] = tuple(Method(m) for m in kwargs["methods"])
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class ResultRecord:
    snr_db: float
    method: str
    mean_sinr_db: float
    std_sinr_db: float
    n_trials: int
    mean_linear_sinr_db: float = field(default=float("nan"), compare=False)


def load_config(path):
    """Parse a YAML or JSON config file into a plain mapping."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def worker_count(requested=None):
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            n = min(n, int(cap))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer") from None
    return max(1, n)


def trial_seed(master_seed, snr_index, trial_index):
    """Seed material for one trial; methods share it so comparisons are paired."""
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(snr_index), int(trial_index)))


def input_sinr_db(config: ExperimentConfig, snr_db):
    p_i = sum(interferer_powers(config.inr_db, config.n_interferers, config.inr_mode))
    return float(linear_to_db(db_to_linear(snr_db) / (p_i + 1.0)))


def draw_scenario(config: ExperimentConfig, snr_db, rng, seed=0):
    """Uniform SOI and interferer angles, redrawn while an interferer is too close."""
    powers = interferer_powers(config.inr_db, config.n_interferers, config.inr_mode)
    redraws = 0
    while True:
        angles = rng.uniform(-90.0, 90.0, 1 + config.n_interferers)
        if np.all(np.abs(angles[1:] - angles[0]) >= config.min_separation_deg):
            break
        redraws += 1
    if redraws:
        log.debug("redrew scenario angles %d time(s)", redraws)
    soi = Source(float(angles[0]), db_to_linear(snr_db), SourceKind.SOI)
    interferers = tuple(Source(float(t), p) for t, p in zip(angles[1:], powers))
    return Scenario(config.geometry, soi, interferers, 1.0, seed)


def _switched_scm(config, scenario, rng):
    schedule = hierarchical_schedule(config.partition, config.k_s)
    K = len(schedule) * schedule.snapshots_per_config
    X = generate_snapshots(scenario, K, config.include_soi, rng).samples
    ks = schedule.snapshots_per_config
    blocks = [X[list(cfg), i * ks:(i + 1) * ks] for i, cfg in enumerate(schedule.configs)]
    return assemble_incomplete_scm(schedule, blocks)


def _streams(seed_seq, n=3):
    # Same children as a fresh seed_seq.spawn(n), without mutating seed_seq.
    return [np.random.SeedSequence(seed_seq.entropy, spawn_key=seed_seq.spawn_key + (k,),
                                   pool_size=seed_seq.pool_size) for k in range(n)]


def run_trial(config: ExperimentConfig, snr_db, method, seed_seq):
    """Output SINR (dB) of one method on one random scenario.

    Every method derives the same scenario and snapshot streams from
    ``seed_seq``; SINR is always evaluated against the analytical covariances.
    """
    method = Method(method)
    scen_ss, dbf_ss, switch_ss = _streams(seed_seq)
    scenario = draw_scenario(config, snr_db, np.random.default_rng(scen_ss))
    a = steering_vector(scenario.geometry, scenario.soi.angle)
    R_in = analytical_covariance(scenario, include_soi=False)
    R_s = signal_covariance(scenario)
    R_model = analytical_covariance(scenario, include_soi=config.include_soi)
    partition = config.partition
    hybrid_kw = dict(digital_rule=config.digital_rule)

    if method in (Method.D_SMI, Method.H_SMI_SCM):
        X = generate_snapshots(scenario, config.dbf_samples(), config.include_soi,
                               np.random.default_rng(dbf_ss))
        R_hat = sample_covariance(X)

    if method is Method.D_MVDR:
        res = digital_mvdr(R_model, a, method)
    elif method is Method.D_SMI:
        res = digital_mvdr(R_hat, a, method)
    elif method is Method.H_MVDR_ACM:
        res = hybrid_mvdr(R_model, a, partition, AscentOptions(), method, **hybrid_kw)
    elif method is Method.H_SMI_SCM:
        res = hybrid_mvdr(R_hat, a, partition, AscentOptions(), method, **hybrid_kw)
    elif method is Method.H_SMI_RR2D:
        inc = _switched_scm(config, scenario, np.random.default_rng(switch_ss))
        R_v, report = dykstra_complete(inc, config.completion_config())
        if not report.converged:
            log.debug("completion stopped after %d sweeps (change %.2e)",
                      report.iterations_run, report.final_relative_change)
        res = hybrid_mvdr(R_v, a, partition, AscentOptions(), method, **hybrid_kw)
    else:
        res = pdbf_mvdr(R_model, a, partition, method)
    return output_sinr(res.effective_weights, R_s, R_in)


def _trial_task(args):
    config, snr_index, snr_db, trial = args
    ss = trial_seed(config.seed, snr_index, trial)
    return [(snr_index, m.value, trial, run_trial(config, snr_db, m, ss)) for m in config.methods]


def collect_trials(config: ExperimentConfig, workers=None):
    """Run every (SNR, method, trial) and return ``{(snr_index, method): array}``.

    Results are sorted by (snr, method, trial) before grouping, so the worker
    count never changes the output.
    """
    grid = config.snr_grid()
    tasks = [(config, i, snr, t) for i, snr in enumerate(grid) for t in range(config.n_trials)]
    n_workers = worker_count(workers)
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            chunks = list(pool.map(_trial_task, tasks, chunksize=max(1, len(tasks) // (8 * n_workers))))
    else:
        chunks = [_trial_task(t) for t in tasks]
    rows = sorted(r for chunk in chunks for r in chunk)
    table = {}
    for snr_index, method, _, value in rows:
        table.setdefault((snr_index, method), []).append(value)
    return {k: np.asarray(v) for k, v in table.items()}


def aggregate(config: ExperimentConfig, table):
    records = []
    for i, snr in enumerate(config.snr_grid()):
        base = input_sinr_db(config, snr)
        records.append(ResultRecord(snr, INPUT_TAG, base, 0.0, config.n_trials, base))
        for m in config.methods:
            v = table[(i, m.value)]
            lin = float(linear_to_db(np.mean(db_to_linear(v))))
            records.append(ResultRecord(snr, m.value, float(np.mean(v)), float(np.std(v)),
                                        int(v.size), lin))
    return records


def records_to_csv(records):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow([f"{r.snr_db:g}", r.method, f"{r.mean_sinr_db:.6f}",
                         f"{r.std_sinr_db:.6f}", r.n_trials])
    return buf.getvalue()


def _write(path, text):
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def run_sweep(config: ExperimentConfig, out_dir=None, workers=None):
    """Average every method over ``n_trials`` per SNR point.

    With ``out_dir`` set, ``sinr.csv`` is written there.
    """
    records = aggregate(config, collect_trials(config, workers))
    if out_dir is not None:
        out = Path(out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create {out}: {exc.strerror or exc}") from exc
        _write(out / "sinr.csv", records_to_csv(records))
    return records


# -- Hessian experiment -----------------------------------------------------

def mvdr_phase_objective(scenario, partition, include_soi=False):
    """``a^H W^H (W R W^H)^{-1} W a`` as a function of the analog phases."""
    a = steering_vector(scenario.geometry, scenario.soi.angle)
    R = analytical_covariance(scenario, include_soi)
    n_d, n_s = partition.n_digital, partition.n_per_subarray
    rows = np.repeat(np.arange(n_d), n_s)
    cols = np.arange(partition.n_elements)

    def f(phi):
        W = np.zeros((n_d, partition.n_elements), dtype=complex)
        W[rows, cols] = np.exp(1j * np.asarray(phi))
        v = W @ a
        R_D = W @ R @ W.conj().T
        return float(np.real(np.vdot(v, np.linalg.solve(R_D, v))))

    return f


def mse_phase_objective(scenario, partition, include_soi=False):
    """``w^H B^H B w`` with ``w = exp(j phi)``; the quadratic surrogate."""
    a = steering_vector(scenario.geometry, scenario.soi.angle)
    B = build_w0_blocks(mvdr_weights(analytical_covariance(scenario, include_soi), a), partition)
    Q = B.conj().T @ B

    def f(phi):
        w = np.exp(1j * np.asarray(phi))
        return float(np.real(np.vdot(w, Q @ w)))

    return f


_OBJECTIVES = {"mvdr": mvdr_phase_objective, "mse": mse_phase_objective}


@dataclass
class HessianResult:
    eigenvalues: np.ndarray = field(repr=False)
    fraction_negative: float
    fraction_positive: float
    n_points: int
    n_skipped: int


def run_hessian_experiment(config: ExperimentConfig, n_points, n_realizations, fd_step=1e-4,
                           out_dir=None, objective="mvdr", bins=60):
    """Pool Hessian eigenvalues over random phase points and scenarios.

    ``objective`` is ``"mvdr"`` (digital weights eliminated in closed form),
    ``"mse"`` (the quadratic surrogate) or a callable
    ``(scenario, partition) -> f(phi)``.
    """
    make = _OBJECTIVES[objective] if isinstance(objective, str) else objective
    partition = config.partition
    eigs, skipped = [], 0
    for r in range(n_realizations):
        rng = np.random.default_rng(trial_seed(config.seed, 10**6, r))
        scenario = draw_scenario(config, 0.0, rng)
        f = make(scenario, partition)
        for _ in range(n_points):
            phi = rng.uniform(0.0, 2.0 * np.pi, partition.n_elements)
            try:
                eigs.append(hessian_spectrum_at(f, phi, fd_step))
            except (NumericError, np.linalg.LinAlgError) as exc:
                skipped += 1
                log.warning("skipping Hessian point: %s", exc)
    ev = np.concatenate(eigs) if eigs else np.empty(0)
    frac_neg = float(np.mean(ev < 0)) if ev.size else float("nan")
    frac_pos = float(np.mean(ev > 0)) if ev.size else float("nan")
    result = HessianResult(ev, frac_neg, frac_pos, n_points * n_realizations - skipped, skipped)
    if out_dir is not None:
        write_hessian_files(result, out_dir, bins)
    return result


def write_hessian_files(result: HessianResult, out_dir, bins=60):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ev = result.eigenvalues
    _write(out / "hessian_eigenvalues.txt", "".join(f"{x:.10e}\n" for x in ev))
    counts, edges = np.histogram(ev, bins=bins) if ev.size else (np.zeros(0, int), np.zeros(1))
    density = counts / (counts.sum() * np.diff(edges)) if counts.sum() else counts.astype(float)
    lines = ["bin_left,bin_right,count,density\n"]
    lines += [f"{lo:.6e},{hi:.6e},{c},{d:.6e}\n"
              for lo, hi, c, d in zip(edges[:-1], edges[1:], counts, density)]
    _write(out / "hessian_histogram.csv", "".join(lines))
    _write(out / "hessian_summary.txt",
           f"points {result.n_points}\nskipped {result.n_skipped}\n"
           f"eigenvalues {ev.size}\nfraction_negative {result.fraction_negative:.6f}\n"
           f"fraction_positive {result.fraction_positive:.6f}\n")
