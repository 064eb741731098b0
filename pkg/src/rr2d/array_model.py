"""Uniform linear array, source scenarios and snapshot simulation."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError


class SourceKind(str, enum.Enum):
    SOI = "soi"
    INTERFERER = "interferer"


@dataclass(frozen=True)
class ArrayGeometry:
    """ULA with ``n_elements`` sensors spaced ``element_spacing`` wavelengths."""

    n_elements: int
    element_spacing: float = 0.5

    def __post_init__(self):
        if int(self.n_elements) != self.n_elements or self.n_elements < 1:
            raise ConfigError("n_elements must be a positive integer")
        if not self.element_spacing > 0:
            raise ConfigError("element_spacing must be positive")


@dataclass(frozen=True)
class Source:
    angle: float
    power: float
    kind: SourceKind = SourceKind.INTERFERER

    def __post_init__(self):
        _check_angle(self.angle)
        if not self.power > 0:
            raise ConfigError("source power must be positive")


@dataclass(frozen=True)
class Scenario:
    """Ground-truth environment: one SOI, any number of interferers, white noise."""

    geometry: ArrayGeometry
    soi: Source
    interferers: tuple = ()
    noise_power: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "interferers", tuple(self.interferers))
        if self.soi.kind is not SourceKind.SOI:
            raise ConfigError("soi must have kind SOI")
        if any(s.kind is not SourceKind.INTERFERER for s in self.interferers):
            raise ConfigError("interferers must have kind INTERFERER")
        if not self.noise_power > 0:
            raise ConfigError("noise_power must be positive")

    @property
    def n_elements(self):
        return self.geometry.n_elements

    def sources(self, include_soi=True):
        return ((self.soi,) if include_soi else ()) + self.interferers

    @classmethod
    def from_config(cls, cfg):
        """Build a scenario from a mapping of config keys.

        Recognised keys: ``n_elements``, ``spacing``, ``soi_angle_deg``,
        ``snr_db``, ``interferer_angles_deg``, ``inr_db``, ``seed`` and
        ``inr_mode``. With ``inr_mode="aggregate"`` (the default) the INR is the
        total interference power over noise, split evenly between interferers;
        with ``"per_interferer"`` every interferer gets the full INR.
        """
        try:
            geometry = ArrayGeometry(int(cfg["n_elements"]), float(cfg.get("spacing", 0.5)))
            soi = Source(float(cfg["soi_angle_deg"]), db_to_linear(float(cfg.get("snr_db", 0.0))),
                         SourceKind.SOI)
            angles = [float(x) for x in cfg.get("interferer_angles_deg", [])]
            powers = interferer_powers(float(cfg.get("inr_db", 20.0)), len(angles),
                                       cfg.get("inr_mode", "aggregate"))
        except KeyError as exc:
            raise ConfigError(f"missing scenario key {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        interferers = tuple(Source(t, p) for t, p in zip(angles, powers))
        return cls(geometry, soi, interferers, 1.0, int(cfg.get("seed", 0)))

    def to_config(self):
        powers = [s.power for s in self.interferers]
        cfg = {
            "n_elements": self.geometry.n_elements,
            "spacing": self.geometry.element_spacing,
            "soi_angle_deg": self.soi.angle,
            "snr_db": linear_to_db(self.soi.power / self.noise_power),
            "interferer_angles_deg": [s.angle for s in self.interferers],
            "seed": self.seed,
        }
        if powers:
            if np.allclose(powers, powers[0]):
                cfg["inr_db"] = linear_to_db(sum(powers) / self.noise_power)
                cfg["inr_mode"] = "aggregate"
            else:
                raise ConfigError("unequal interferer powers cannot be serialised")
        return cfg


@dataclass(frozen=True)
class SnapshotBlock:
    """``samples`` is ``n_rows x K``, one column per temporal snapshot."""

    samples: np.ndarray = field(repr=False)
    includes_soi: bool = False

    @property
    def n_snapshots(self):
        return self.samples.shape[1]


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def interferer_powers(inr_db, n_interferers, mode="aggregate"):
    total = db_to_linear(inr_db)
    if mode == "aggregate":
        return [total / n_interferers] * n_interferers if n_interferers else []
    if mode == "per_interferer":
        return [total] * n_interferers
    raise ConfigError(f"unknown inr_mode {mode!r}")


def _check_angle(angle):
    if not -90.0 <= angle <= 90.0:
        raise DomainError(f"angle {angle} deg outside [-90, 90]")


def steering_vector(geometry, angle):
    """Array response ``exp(+j 2 pi d n sin(theta))`` for ``n = 0..N-1``."""
    _check_angle(angle)
    n = np.arange(geometry.n_elements)
    phase = 2.0 * np.pi * geometry.element_spacing * np.sin(np.deg2rad(angle))
    return np.exp(1j * phase * n)


def analytical_covariance(scenario, include_soi=False):
    """Exact covariance of the received ensemble.

    Sum of ``p * a a^H`` over the included sources plus ``noise_power * I``.
    """
    N = scenario.n_elements
    R = scenario.noise_power * np.eye(N, dtype=complex)
    for src in scenario.sources(include_soi):
        a = steering_vector(scenario.geometry, src.angle)
        R += src.power * np.outer(a, a.conj())
    return 0.5 * (R + R.conj().T)


def signal_covariance(scenario):
    a = steering_vector(scenario.geometry, scenario.soi.angle)
    return scenario.soi.power * np.outer(a, a.conj())


def _cn(rng, shape, power=1.0):
    return np.sqrt(power / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def generate_snapshots(scenario, K, include_soi=False, rng=None):
    """Draw ``K`` i.i.d. narrowband snapshots.

    Source waveforms are circularly symmetric complex Gaussian with the source
    power; noise is elementwise ``CN(0, noise_power)``. With
    ``include_soi=False`` the SOI is absent, as after pre-filtering.
    """
    if K < 1:
        raise DomainError("K must be at least 1")
    if rng is None:
        rng = np.random.default_rng(scenario.seed)
    N = scenario.n_elements
    sources = scenario.sources(include_soi)
    X = _cn(rng, (N, K), scenario.noise_power)
    if sources:
        A = np.stack([steering_vector(scenario.geometry, s.angle) for s in sources], axis=1)
        powers = np.array([s.power for s in sources])
        G = _cn(rng, (len(sources), K)) * np.sqrt(powers)[:, None]
        X = X + A @ G
    return SnapshotBlock(X, include_soi)


def sample_covariance(block):
    X = block.samples if isinstance(block, SnapshotBlock) else np.asarray(block)
    K = X.shape[1]
    if K < 1:
        raise DomainError("need at least one snapshot")
    R = X @ X.conj().T / K
    return 0.5 * (R + R.conj().T)
