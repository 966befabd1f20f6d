"""Terrain roughness from point-cloud elevation profiles.

Welch PSD of detrended longitudinal profiles, power-law fit ``R * omega**w``,
patch aggregation with delta-method uncertainty, ISO 8608 classification.
"""
from .classify import band_rms, detect_defects, iso_classify, semantic_label, sensitivity_floor
from .errors import (
    ContractViolationError,
    DegeneratePatchError,
    InsufficientDataError,
    InvalidArgumentError,
    TerrainError,
    UnfittableSpectrumError,
)
from .kernels import BACKEND
from .preprocess import (
    Attitude,
    ElevationPatch,
    PatchSpec,
    PointCloud,
    compensate_tilt,
    detrend,
    extract_patch,
    filter_outliers,
    rasterize,
)
from .roughness import aggregate_patch, delta_method, fit_power_law
from .spectrum import Waveband, WelchConfig, make_waveband, welch_psd
from .synth import SurfaceModel, generate_patch, generate_profile, generate_traverse

__version__ = "0.1.0"
