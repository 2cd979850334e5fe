"""specprune: prune spectral libraries before sparse hyperspectral unmixing.

Pipeline: regression-based denoising, ADMM sparse abundance estimation,
per-atom nuclear-norm-difference scoring, top-p selection. Includes a
synthetic scene generator, evaluation metrics, an OMP baseline, and a
seeded experiment harness behind the `specprune` command.
"""

from .core import (
    AbundanceMatrix,
    ConstraintMode,
    HsiCube,
    IndexSet,
    SpectralLibrary,
    reconstruct,
    validate_pair,
)
from .denoise import NoiseEstimate, denoise, estimate_noise_mlr
from .errors import (
    DimensionError,
    DimensionMismatch,
    EmptyLibrary,
    EmptyTrials,
    HeaderParse,
    IndexOutOfRange,
    InfeasiblePurity,
    InvalidP,
    IoFailure,
    MissingFile,
    NonFiniteData,
    NonFiniteIterate,
    RaggedRows,
    SingularRegression,
    SizeMismatch,
    SpecpruneError,
    ZeroNormAtom,
)
from .io import (
    CubeHeader,
    dumps_canonical,
    load_cube,
    load_library,
    save_cube,
    save_library,
    save_report,
    write_json,
)
from .metrics import EvalReport, asad, detection_probability, sad, sre
from .pruning import PruneResult, mutual_coherence, nuclear_norm, omp_prune, prune_nnd
from .solver import (
    SolveDiagnostics,
    SolverConfig,
    default_lambda,
    default_rho,
    soft_threshold,
    sunsal,
)
from .synth import (
    PortableStream,
    SceneSpec,
    SceneTruth,
    generate_abundances,
    generate_scene,
    generate_smooth_library,
)

__version__ = "0.1.0"

__all__ = [
    "AbundanceMatrix",
    "ConstraintMode",
    "HsiCube",
    "IndexSet",
    "SpectralLibrary",
    "reconstruct",
    "validate_pair",
    "NoiseEstimate",
    "denoise",
    "estimate_noise_mlr",
    "SpecpruneError",
    "DimensionError",
    "DimensionMismatch",
    "EmptyLibrary",
    "EmptyTrials",
    "HeaderParse",
    "IndexOutOfRange",
    "InfeasiblePurity",
    "InvalidP",
    "IoFailure",
    "MissingFile",
    "NonFiniteData",
    "NonFiniteIterate",
    "RaggedRows",
    "SingularRegression",
    "SizeMismatch",
    "ZeroNormAtom",
    "CubeHeader",
    "dumps_canonical",
    "load_cube",
    "load_library",
    "save_cube",
    "save_library",
    "save_report",
    "write_json",
    "EvalReport",
    "asad",
    "detection_probability",
    "sad",
    "sre",
    "PruneResult",
    "mutual_coherence",
    "nuclear_norm",
    "omp_prune",
    "prune_nnd",
    "SolveDiagnostics",
    "SolverConfig",
    "default_lambda",
    "default_rho",
    "soft_threshold",
    "sunsal",
    "PortableStream",
    "SceneSpec",
    "SceneTruth",
    "generate_abundances",
    "generate_scene",
    "generate_smooth_library",
    "__version__",
]
