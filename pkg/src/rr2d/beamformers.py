"""MVDR/SMI weights for digital, partial-digital and sub-array hybrid arrays."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DomainError, NumericError
from .hybrid import (AnalogWeights, SubArrayPartition, block_diagonal, digital_covariance,
                     effective_full_weights, selection_matrix)
from .manifold import AscentOptions, maximize_quadratic_on_circle, normalize_phases


class Method(str, enum.Enum):
    D_MVDR = "D_MVDR"
    D_SMI = "D_SMI"
    H_MVDR_ACM = "H_MVDR_ACM"
    H_SMI_SCM = "H_SMI_SCM"
    H_SMI_RR2D = "H_SMI_RR2D"
    PDBF_MVDR = "PDBF_MVDR"


@dataclass(frozen=True)
class HybridWeights:
    analog: AnalogWeights
    digital: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not np.all(np.isfinite(self.digital)):
            raise NumericError("digital weights are not finite")

    @property
    def combiner(self):
        return block_diagonal(self.analog)

    def effective(self):
        return effective_full_weights(self.combiner, self.digital)


@dataclass(frozen=True)
class BeamformerResult:
    effective_weights: np.ndarray = field(repr=False)
    method_tag: Method
    manifold_objective: float = float("nan")
    distortionless_error: float = float("nan")
    hybrid: HybridWeights | None = field(default=None, repr=False)

    @property
    def diagnostics(self):
        return {"manifold_objective": self.manifold_objective,
                "distortionless_error": self.distortionless_error}


def _distortionless_error(w, a):
    return float(abs(np.vdot(w, a) - 1.0))


def mvdr_weights(R, a):
    """``R^{-1} a / (a^H R^{-1} a)``.

    Raises
    ------
    NumericError
        If ``R`` is not positive definite. Apply diagonal loading upstream.
    """
    R = np.asarray(R, dtype=complex)
    a = np.asarray(a, dtype=complex)
    if R.shape != (a.size, a.size):
        raise DomainError(f"covariance {R.shape} does not match steering vector {a.shape}")
    try:
        x = scipy.linalg.cho_solve(scipy.linalg.cho_factor(0.5 * (R + R.conj().T)), a)
    except np.linalg.LinAlgError as exc:
        raise NumericError("covariance is singular or indefinite; apply diagonal loading "
                           "before computing MVDR weights") from exc
    denom = np.vdot(a, x)
    if not np.isfinite(denom) or abs(denom) == 0:
        raise NumericError("degenerate MVDR normalisation")
    return x / denom


def hybrid_digital_weights_closed_form(W_A, R, a):
    """MVDR weights in the reduced space ``W_A R W_A^H`` for a fixed combiner."""
    W_A = np.asarray(W_A)
    return mvdr_weights(digital_covariance(W_A, R), W_A @ np.asarray(a))


def hybrid_digital_weights_mse(W_A, w0, n_per_subarray):
    """Least-squares digital weights ``W_A w0 / N_S`` for unit-modulus ``W_A``."""
    return np.asarray(W_A) @ np.asarray(w0) / n_per_subarray


def build_w0_blocks(w0, partition: SubArrayPartition):
    """Row-block matrix ``B`` with ``B @ w_a == W_A @ w0`` for ``W_A`` built from ``w_a``."""
    w0 = np.asarray(w0, dtype=complex)
    if w0.size != partition.n_elements:
        raise DomainError("w0 length does not match the partition")
    B = np.zeros((partition.n_digital, partition.n_elements), dtype=complex)
    for d in range(partition.n_digital):
        idx = partition.indices(d)
        B[d, idx.start:idx.stop] = w0[idx.start:idx.stop]
    return B


def digital_mvdr(R, a, method_tag=Method.D_MVDR):
    w = mvdr_weights(R, a)
    return BeamformerResult(w, Method(method_tag), distortionless_error=_distortionless_error(w, a))


def hybrid_mvdr(R_source, a, partition, opts=AscentOptions(), method_tag=Method.H_MVDR_ACM,
                digital_rule="mvdr", rng=None):
    """Hybrid MVDR through an auxiliary fully digital beamformer.

    1. ``w0`` = MVDR weights of ``R_source``.
    2. Analog phases maximise ``w_a^H B^H B w_a`` on the circle manifold,
       warm-started at ``conj(w0) / |w0|``.
    3. Digital weights: ``digital_rule="mvdr"`` uses the closed-form MVDR
       weights of the reduced covariance; ``"mse"`` uses ``W_A w0 / N_S``
       rescaled to unit gain toward ``a``.
    """
    a = np.asarray(a, dtype=complex)
    w0 = mvdr_weights(R_source, a)
    B = build_w0_blocks(w0, partition)
    Q = B.conj().T @ B
    w_a, objective = maximize_quadratic_on_circle(Q, normalize_phases(w0.conj()), opts, rng)
    analog = AnalogWeights.from_vector(w_a, partition)
    W_A = block_diagonal(analog)
    if digital_rule == "mvdr":
        w_D = hybrid_digital_weights_closed_form(W_A, R_source, a)
    elif digital_rule == "mse":
        w_D = hybrid_digital_weights_mse(W_A, w0, partition.n_per_subarray)
        gain = np.vdot(w_D, W_A @ a)
        if abs(gain) == 0:
            raise NumericError("hybrid weights have no gain toward the SOI")
        w_D = w_D / np.conj(gain)
    else:
        raise DomainError(f"unknown digital_rule {digital_rule!r}")
    hw = HybridWeights(analog, w_D)
    w = hw.effective()
    return BeamformerResult(w, Method(method_tag), objective, _distortionless_error(w, a), hw)


def pdbf_elements(partition):
    """First element of every sub-array."""
    return tuple(partition.indices(d).start for d in range(partition.n_digital))


def pdbf_mvdr(R, a, partition, method_tag=Method.PDBF_MVDR):
    """MVDR on the partial digital array made of one element per sub-array."""
    a = np.asarray(a, dtype=complex)
    S = selection_matrix(pdbf_elements(partition), partition.n_elements)
    w_D = mvdr_weights(digital_covariance(S, R), S @ a)
    w = effective_full_weights(S, w_D)
    return BeamformerResult(w, Method(method_tag), distortionless_error=_distortionless_error(w, a))


def output_sinr(w, R_s, R_in):
    """``10 log10(w^H R_s w / w^H R_in w)`` in dB."""
    w = np.asarray(w, dtype=complex)
    if not np.any(w):
        raise DomainError("output SINR is undefined for zero weights")
    num = float(np.real(np.vdot(w, np.asarray(R_s) @ w)))
    den = float(np.real(np.vdot(w, np.asarray(R_in) @ w)))
    if den <= 0:
        raise NumericError("interference-plus-noise output power is not positive")
    return 10.0 * np.log10(num / den)
