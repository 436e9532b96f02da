"""Compositional nearest-neighbor image synthesis.

A pluggable Stage-1 regressor produces a smoothed mid-frequency image; the
engine then copies per-pixel high-frequency residuals from an exemplar
database via two-level (global K, windowed T) nearest-neighbor search over
multiscale descriptors, yielding many controllable photorealistic outputs
plus dense correspondence maps.
"""

from .database import (
    Exemplar,
    ExemplarDatabase,
    build_database,
    database_from_fields,
    load_database,
    save_database,
    subset,
)
from .descriptor import (
    DescriptorConfig,
    DescriptorField,
    GlobalDescriptor,
    compute_field,
    cosine_distance,
    global_descriptor,
    load_external_field,
    save_field,
)
from .image import (
    ImageRGB,
    LowFreqImage,
    SpectrumStats,
    bicubic_resample,
    load_png,
    png_bytes,
    psnr,
    save_png,
    spectrum,
)
from .metrics import (
    AngularErrorStats,
    EvaluationReport,
    NormalMap,
    angular_stats,
    average_precision,
    evaluate_candidates,
    normal_map_from_image,
    normal_map_from_tensor_file,
)
from .search import (
    PixelMatch,
    SearchConfig,
    brute_force_match,
    global_knn,
    windowed_match,
)
from .synthesis import (
    Candidate,
    CorrespondenceMap,
    compositional_synthesize,
    exemplar_synthesize,
    generate_candidates,
    load_correspondence,
    reconstruct_from_correspondence,
    save_correspondence,
    select,
    stage1,
)

__version__ = "0.1.0"

__all__ = [
    "AngularErrorStats",
    "Candidate",
    "CorrespondenceMap",
    "DescriptorConfig",
    "DescriptorField",
    "EvaluationReport",
    "Exemplar",
    "ExemplarDatabase",
    "GlobalDescriptor",
    "ImageRGB",
    "LowFreqImage",
    "NormalMap",
    "PixelMatch",
    "SearchConfig",
    "SpectrumStats",
    "angular_stats",
    "average_precision",
    "bicubic_resample",
    "brute_force_match",
    "build_database",
    "compositional_synthesize",
    "compute_field",
    "cosine_distance",
    "database_from_fields",
    "evaluate_candidates",
    "exemplar_synthesize",
    "generate_candidates",
    "global_descriptor",
    "global_knn",
    "load_correspondence",
    "load_database",
    "load_external_field",
    "load_png",
    "normal_map_from_image",
    "normal_map_from_tensor_file",
    "png_bytes",
    "psnr",
    "reconstruct_from_correspondence",
    "save_correspondence",
    "save_database",
    "save_field",
    "save_png",
    "select",
    "spectrum",
    "stage1",
    "subset",
    "windowed_match",
]
