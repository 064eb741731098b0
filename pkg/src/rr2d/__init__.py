"""Hybrid SMI beamforming on sub-array architectures via covariance completion."""
from .array_model import (ArrayGeometry, Scenario, SnapshotBlock, Source, SourceKind,
                          analytical_covariance, generate_snapshots, sample_covariance,
                          steering_vector)
from .beamformers import (BeamformerResult, HybridWeights, Method, hybrid_mvdr, mvdr_weights,
                          output_sinr, pdbf_mvdr)
from .completion import (CompletionConfig, CompletionReport, MaskedCovariance,
                         assemble_incomplete_scm, dykstra_complete, toeplitz_initialize)
from .errors import ConfigError, DomainError, NumericError
from .hybrid import AnalogWeights, SubArrayPartition, SwitchSchedule, hierarchical_schedule
from .manifold import AscentOptions, maximize_quadratic_on_circle

__version__ = "0.1.0"
