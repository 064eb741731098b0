"""Sub-array hybrid architecture: analog combiner, digital covariance, switching."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class SubArrayPartition:
    """``n_digital`` contiguous sub-arrays of ``n_per_subarray`` elements each."""

    n_digital: int
    n_per_subarray: int

    def __post_init__(self):
        if self.n_digital < 1 or self.n_per_subarray < 1:
            raise ConfigError("sub-array partition sizes must be >= 1")

    @classmethod
    def for_array(cls, n_elements, n_digital):
        if n_digital < 1 or n_elements % n_digital:
            raise ConfigError(f"{n_elements} elements cannot be split into {n_digital} sub-arrays")
        return cls(n_digital, n_elements // n_digital)

    @property
    def n_elements(self):
        return self.n_digital * self.n_per_subarray

    def indices(self, d):
        start = d * self.n_per_subarray
        return range(start, start + self.n_per_subarray)

    def subarray_of(self, element):
        return element // self.n_per_subarray


@dataclass(frozen=True)
class AnalogWeights:
    """Unit-modulus phase weights, one row of ``N_S`` entries per sub-array."""

    per_subarray: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.per_subarray, dtype=complex)
        if w.ndim != 2:
            raise DomainError("analog weights must be an N_D x N_S array")
        if np.max(np.abs(np.abs(w) - 1.0)) > 1e-12:
            raise DomainError("analog weights must have unit modulus")
        object.__setattr__(self, "per_subarray", w)

    @classmethod
    def from_vector(cls, w, partition):
        return cls(np.asarray(w).reshape(partition.n_digital, partition.n_per_subarray))

    @classmethod
    def from_phases(cls, phases, partition):
        return cls.from_vector(np.exp(1j * np.asarray(phases, dtype=float)), partition)

    def as_vector(self):
        return self.per_subarray.ravel()


@dataclass(frozen=True)
class SwitchSchedule:
    """Ordered active-element configurations, each held for ``snapshots_per_config``."""

    partition: SubArrayPartition
    configs: tuple
    snapshots_per_config: int

    def __len__(self):
        return len(self.configs)

    def activations_per_element(self):
        counts = np.zeros(self.partition.n_elements, dtype=int)
        for cfg in self.configs:
            counts[list(cfg)] += 1
        return counts

    def samples_per_element(self):
        return self.activations_per_element() * self.snapshots_per_config


def block_diagonal(weights):
    """``N_D x N_A`` combiner whose row ``a`` carries sub-array ``a``'s weights."""
    w = weights.per_subarray
    n_d, n_s = w.shape
    W = np.zeros((n_d, n_d * n_s), dtype=complex)
    for a in range(n_d):
        W[a, a * n_s:(a + 1) * n_s] = w[a]
    return W


def digital_covariance(W_A, R):
    """Covariance seen behind the analog combiner, ``W_A R W_A^H``."""
    W_A = np.asarray(W_A)
    R = np.asarray(R)
    if W_A.ndim != 2 or R.shape != (W_A.shape[1], W_A.shape[1]):
        raise DomainError(f"combiner {W_A.shape} does not conform with covariance {R.shape}")
    R_D = W_A @ R @ W_A.conj().T
    return 0.5 * (R_D + R_D.conj().T)


def hierarchical_schedule(partition, k_s):
    """Odometer enumeration of one active element per sub-array.

    The last sub-array is the fastest-varying digit, so every element of one
    sub-array is paired with every element of each other sub-array.
    """
    if k_s < 1:
        raise ConfigError("snapshots per configuration must be >= 1")
    ranges = [partition.indices(d) for d in range(partition.n_digital)]
    configs = tuple(itertools.product(*ranges))
    return SwitchSchedule(partition, configs, int(k_s))


def validate_configuration(config, partition):
    if len(config) != partition.n_digital:
        raise DomainError("configuration needs one active element per sub-array")
    for d, idx in enumerate(config):
        if idx not in partition.indices(d):
            raise DomainError(f"active element {idx} is not in sub-array {d}")


def selection_matrix(config, n_elements):
    """Measurement-mode combiner: unit gain on the active elements, zero elsewhere."""
    S = np.zeros((len(config), n_elements), dtype=complex)
    S[np.arange(len(config)), list(config)] = 1.0
    return S


def effective_full_weights(W_A, w_D):
    """Element-space weights ``W_A^H w_D``, so that ``y = w_eff^H x``."""
    W_A = np.asarray(W_A)
    w_D = np.asarray(w_D)
    if w_D.shape != (W_A.shape[0],):
        raise DomainError(f"digital weights {w_D.shape} do not match combiner {W_A.shape}")
    return W_A.conj().T @ w_D
