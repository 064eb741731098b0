"""Covariance completion from cross-sub-array switched observations.

Switched snapshots only ever observe one element per sub-array at a time, so
intra-sub-array covariance entries are missing. They are filled with a
distance-weighted same-lag estimate and then refined by Dykstra's alternating
projections onto the PSD cone, the Hermitian-Toeplitz subspace and the set of
matrices agreeing with the measured entries.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, NumericError
from .hybrid import SwitchSchedule
from .matrix import check_finite, hermitian_part

READOUT_STAGES = ("psd", "toeplitz", "observed")


@dataclass(frozen=True)
class MaskedCovariance:
    """Partially observed sample covariance.

    ``values`` holds the averaged outer products on observed entries and zero
    elsewhere; ``counts`` is the number of snapshots behind each entry.
    """

    values: np.ndarray = field(repr=False)
    mask: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        mask = np.asarray(self.mask, dtype=bool)
        if values.ndim != 2 or values.shape[0] != values.shape[1] or mask.shape != values.shape:
            raise DomainError("masked covariance must be square with a matching mask")
        if not np.array_equal(mask, mask.T):
            raise DomainError("observation mask must be symmetric")
        counts = mask.astype(int) if self.counts is None else np.asarray(self.counts, dtype=int)
        object.__setattr__(self, "values", np.where(mask, values, 0))
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "counts", counts)

    @property
    def n(self):
        return self.values.shape[0]

    @classmethod
    def from_full(cls, R, mask):
        return cls(np.asarray(R, dtype=complex), mask)


@dataclass(frozen=True)
class CompletionConfig:
    """Knobs of the completion.

    ``reg_epsilon=None`` means ``1e-6 * trace / N`` of the observed diagonal.
    ``readout`` selects which stage of the final sweep is taken as the
    estimate before the closing PSD repair; if that stage is disabled the
    sweep's last iterate is used.
    """

    fill_constant: complex = 0.01
    distance_epsilon: float = 1e-6
    reg_epsilon: float | None = None
    delta_tol: float = 1e-6
    max_iters: int = 500
    use_toeplitz: bool = True
    readout: str = "toeplitz"

    def __post_init__(self):
        if self.distance_epsilon <= 0 or self.delta_tol <= 0:
            raise ConfigError("distance_epsilon and delta_tol must be positive")
        if self.reg_epsilon is not None and self.reg_epsilon < 0:
            raise ConfigError("reg_epsilon must be non-negative")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if self.readout not in READOUT_STAGES:
            raise ConfigError(f"readout must be one of {READOUT_STAGES}")


@dataclass(frozen=True)
class CompletionReport:
    iterations_run: int
    converged: bool
    final_relative_change: float
    psd_min_eig: float
    toeplitz_frobenius_rel: float
    observed_frobenius_rel: float

    @property
    def constraint_residuals(self):
        return {
            "psd_min_eig": self.psd_min_eig,
            "toeplitz_frobenius_rel": self.toeplitz_frobenius_rel,
            "observed_frobenius_rel": self.observed_frobenius_rel,
        }


def assemble_incomplete_scm(schedule: SwitchSchedule, blocks) -> MaskedCovariance:
    """Average the outer products of active-element samples into an N_A x N_A SCM.

    ``blocks`` holds one ``N_D x K_S`` sample array (or SnapshotBlock) per
    configuration, in schedule order.
    """
    blocks = list(blocks)
    if len(blocks) != len(schedule.configs):
        raise DomainError(f"expected {len(schedule.configs)} snapshot blocks, got {len(blocks)}")
    n = schedule.partition.n_elements
    n_d = schedule.partition.n_digital
    acc = np.zeros((n, n), dtype=complex)
    counts = np.zeros((n, n), dtype=int)
    for cfg, block in zip(schedule.configs, blocks):
        Y = np.asarray(getattr(block, "samples", block))
        if Y.ndim != 2 or Y.shape[0] != n_d:
            raise DomainError(f"snapshot block of shape {Y.shape} does not have {n_d} rows")
        ix = np.ix_(cfg, cfg)
        acc[ix] += Y @ Y.conj().T
        counts[ix] += Y.shape[1]
    mask = counts > 0
    values = np.zeros_like(acc)
    values[mask] = acc[mask] / counts[mask]
    return MaskedCovariance(hermitian_part(values), mask, counts)


def toeplitz_initialize(inc: MaskedCovariance, cfg: CompletionConfig = CompletionConfig()):
    """Fill each missing entry from observed entries on the same diagonal.

    Weights are inverse index-space distances ``1 / (dist + eps)``,
    normalised to sum to one. Diagonals without any observation get
    ``cfg.fill_constant``. The result is Hermitian-symmetrised.
    """
    n = inc.n
    M = inc.values.copy()
    mask = inc.mask
    for k in range(-n + 1, n):
        rows = np.arange(max(0, -k), n - max(0, k))
        cols = rows + k
        obs = mask[rows, cols]
        if obs.all():
            continue
        mr, mc = rows[~obs], cols[~obs]
        if not obs.any():
            M[mr, mc] = cfg.fill_constant
            continue
        pr, pc = rows[obs], cols[obs]
        dist = np.hypot(mr[:, None] - pr[None, :], mc[:, None] - pc[None, :])
        w = 1.0 / (dist + cfg.distance_epsilon)
        w /= w.sum(axis=1, keepdims=True)
        M[mr, mc] = w @ inc.values[pr, pc]
    return hermitian_part(M)


def project_psd(M, reg_epsilon=0.0):
    """Nearest PSD matrix in Frobenius norm, then ``+ reg_epsilon * I``."""
    M = check_finite(np.asarray(M, dtype=complex), "PSD projection input")
    try:
        lam, V = np.linalg.eigh(hermitian_part(M))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc
    R = (V * np.clip(lam, 0.0, None)) @ V.conj().T
    R = hermitian_part(R)
    if reg_epsilon:
        R[np.diag_indices_from(R)] += reg_epsilon
    return R


@functools.lru_cache(maxsize=32)
def _lag_index(n):
    idx = np.arange(n)
    off = idx[None, :] - idx[:, None]
    return off, np.abs(off).ravel(), off.ravel() >= 0


def project_toeplitz(M):
    """Orthogonal projection onto Hermitian Toeplitz matrices.

    Lag ``k`` becomes the mean of ``M[i, i+k]`` and ``conj(M[i+k, i])``.
    """
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    off, absoff, upper = _lag_index(n)
    # Fold the lower triangle onto the upper one by conjugation.
    folded = np.where(upper, M.ravel(), M.ravel().conj())
    both = np.concatenate([folded, folded[off.ravel() == 0].conj()])
    lags = np.concatenate([absoff, np.zeros(n, dtype=int)])
    re = np.bincount(lags, weights=both.real, minlength=n)
    im = np.bincount(lags, weights=both.imag, minlength=n)
    c = (re + 1j * im) / (2.0 * (n - np.arange(n)))
    c[0] = c[0].real
    return np.where(off >= 0, c[np.abs(off)], c[np.abs(off)].conj())


def project_observed(M, inc: MaskedCovariance):
    """Overwrite the observed entries with their measured values."""
    M = np.asarray(M)
    if M.shape != inc.values.shape:
        raise DomainError("matrix does not match the observation mask")
    return np.where(inc.mask, inc.values, M)


def _floor_eigenvalues(M, floor):
    # Nearest matrix with every eigenvalue >= floor; a no-op on loaded PSD input.
    eye = floor * np.eye(M.shape[0])
    return project_psd(M - eye) + eye


def default_reg_epsilon(inc: MaskedCovariance):
    return 1e-6 * float(np.trace(inc.values).real) / inc.n


def constraint_residuals(R, inc: MaskedCovariance):
    lam_min = float(np.linalg.eigvalsh(hermitian_part(R))[0])
    norm = max(np.linalg.norm(R), np.finfo(float).tiny)
    obs_norm = max(np.linalg.norm(inc.values), np.finfo(float).tiny)
    return (
        max(0.0, -lam_min),
        float(np.linalg.norm(R - project_toeplitz(R)) / norm),
        float(np.linalg.norm(np.where(inc.mask, R - inc.values, 0)) / obs_norm),
    )


def dykstra_complete(inc: MaskedCovariance, cfg: CompletionConfig = CompletionConfig()):
    """Complete ``inc`` to a Hermitian PD matrix.

    Each sweep applies PSD -> Toeplitz -> observed projections with one
    Dykstra correction term per set. Iteration stops once the relative
    Frobenius change between successive sweeps drops below ``cfg.delta_tol``
    or after ``cfg.max_iters`` sweeps. The selected readout stage is
    finally projected onto matrices whose eigenvalues are at least the
    diagonal-loading level.

    Returns
    -------
    R : ndarray
        Completed covariance.
    report : CompletionReport
    """
    reg = default_reg_epsilon(inc) if cfg.reg_epsilon is None else cfg.reg_epsilon
    stages = [("psd", lambda Z: project_psd(Z, reg))]
    if cfg.use_toeplitz:
        stages.append(("toeplitz", project_toeplitz))
    stages.append(("observed", lambda Z: project_observed(Z, inc)))

    X = toeplitz_initialize(inc, cfg)
    corrections = [np.zeros_like(X) for _ in stages]
    converged = False
    change = np.inf
    it = 0
    snapshot = {}
    for it in range(1, cfg.max_iters + 1):
        prev = X
        for k, (name, proj) in enumerate(stages):
            Z = X + corrections[k]
            X = proj(Z)
            corrections[k] = Z - X
            snapshot[name] = X
        check_finite(X, "Dykstra iterate")
        change = np.linalg.norm(X - prev) / max(np.linalg.norm(prev), np.finfo(float).tiny)
        if change < cfg.delta_tol:
            converged = True
            break

    R = _floor_eigenvalues(snapshot.get(cfg.readout, X), reg)
    report = CompletionReport(it, converged, float(change), *constraint_residuals(R, inc))
    return R, report


def read_masked_matrix(path):
    """Read ``N`` followed by ``N^2`` lines of ``i j re im observed_flag``.

    Lines starting with ``#`` are ignored.
    """
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ConfigError(f"{path}: empty matrix file")
    try:
        n = int(lines[0][0])
        values = np.zeros((n, n), dtype=complex)
        mask = np.zeros((n, n), dtype=bool)
        seen = np.zeros((n, n), dtype=bool)
        for parts in lines[1:]:
            i, j = int(parts[0]), int(parts[1])
            values[i, j] = float(parts[2]) + 1j * float(parts[3])
            mask[i, j] = bool(int(parts[4]))
            seen[i, j] = True
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"{path}: malformed matrix file ({exc})") from None
    if not seen.all():
        raise ConfigError(f"{path}: expected {n * n} entries")
    return MaskedCovariance(values, mask)


def write_matrix(path, R, mask=None, report: CompletionReport | None = None):
    R = np.asarray(R)
    n = R.shape[0]
    mask = np.ones((n, n), dtype=bool) if mask is None else mask
    out = [f"{n}\n"]
    for i in range(n):
        for j in range(n):
            z = R[i, j]
            out.append(f"{i} {j} {z.real:.17g} {z.imag:.17g} {int(mask[i, j])}\n")
    if report is not None:
        out.append("# report\n")
        out.append(f"# iterations_run {report.iterations_run}\n")
        out.append(f"# converged {str(report.converged).lower()}\n")
        out.append(f"# final_relative_change {report.final_relative_change:.6e}\n")
        for key, val in report.constraint_residuals.items():
            out.append(f"# {key} {val:.6e}\n")
    with open(path, "w") as fh:
        fh.writelines(out)
