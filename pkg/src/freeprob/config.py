"""Centralized tolerance and sizing defaults.

Every numeric cutoff used across the package lives in one frozen record so
the test suite can sweep or tighten them in one place instead of chasing
magic numbers through the modules.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # measure construction and serialization
    mass_atol: float = 1e-12
    # functional inversion of the moment transform
    inversion_atol: float = 1e-12
    bracket_delta: float = 1e-9
    # agreement between closed-form and numeric transform paths
    closed_numeric_atol: float = 1e-10
    roundtrip_atol: float = 1e-10
    # radial CDF normalization
    cdf_end_atol: float = 1e-12
    # rank / membership decisions in linear-algebra routines
    rank_rtol: float = 1e-9
    gap_flag_ratio: float = 10.0
    # residual ceilings for structural identities
    exact_identity_atol: float = 1e-10
    invariance_atol: float = 1e-9
    projection_atol: float = 1e-10
    normality_atol: float = 1e-10
    commutator_atol: float = 1e-8
    nilpotency_atol: float = 1e-8
    # spectral atom detection, relative to the operator norm
    zero_eig_rtol: float = 1e-8
    # eigenvalue clustering when extracting eigenspaces of commutant elements
    cluster_rtol: float = 1e-7


@dataclass(frozen=True)
class Sizing:
    # number of stored radial CDF samples (uniform in radius)
    cdf_samples: int = 2049
    # quantile-map evaluation grid behind the radial recipe
    quantile_grid: int = 8192
    # default Brown-field grid
    grid_nx: int = 256
    grid_ny: int = 256
    # default regularization scale: epsilon = epsilon_scale * ||T||^2
    epsilon_scale: float = 1e-6
    # orbit-sampling budget for the multi-vector transitivity test
    orbit_tuples: int = 32
    # random commutant combinations fed to subspace discovery
    commutant_draws: int = 3


TOL = Tolerances()
SIZE = Sizing()
