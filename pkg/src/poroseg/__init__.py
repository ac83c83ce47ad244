"""Unsupervised porosity segmentation for layer-wise XCT image stacks.

Point prompts are harvested from cluster-centroid foreground pools and fed
to a pluggable promptable-segmentation backend; results are scored with the
Dice coefficient and prompt sensitivity is quantified by m-out-of-n
bootstrap confidence intervals.
"""

__version__ = "0.1.0"

from .backend import (
    BackendDescriptor,
    BackendError,
    OnnxModelBackend,
    OracleBackend,
    SegmentationTriplet,
    make_oracle,
    segment_image,
    select_mask,
)
from .clustering import (
    CentroidRecord,
    ClusterModel,
    StoreFormatError,
    build_centroid_records,
    kmeans_images,
    kmedoids_images,
    load_store,
    save_store,
)
from .distances import dtw, euclidean
from .evaluation import (
    BootstrapReport,
    BootstrapSummary,
    count_instances,
    dsc,
    porosity_pct,
    run_bootstrap_eval,
    summarize_bootstrap,
)
from .image_core import (
    ImageFormatError,
    ModelInput,
    load_gray,
    load_mask,
    mask_to_original,
    median_filter,
    save_gray,
    save_mask,
    to_model_input,
    transform_coords,
)
from .prompts import (
    PromptSet,
    UnusableRecordError,
    bootstrap_prompts,
    generate_prompts,
)
from .synth import GenerationError, SyntheticSpec, generate, generate_stack
from .thresholding import (
    DegenerateImageError,
    IntensityCentroids,
    binarize,
    make_reference_mask,
    pixel_kmeans,
)

__all__ = [
    "BackendDescriptor",
    "BackendError",
    "BootstrapReport",
    "BootstrapSummary",
    "CentroidRecord",
    "ClusterModel",
    "DegenerateImageError",
    "GenerationError",
    "ImageFormatError",
    "IntensityCentroids",
    "ModelInput",
    "OnnxModelBackend",
    "OracleBackend",
    "PromptSet",
    "SegmentationTriplet",
    "StoreFormatError",
    "SyntheticSpec",
    "UnusableRecordError",
    "binarize",
    "bootstrap_prompts",
    "build_centroid_records",
    "count_instances",
    "dsc",
    "dtw",
    "euclidean",
    "generate",
    "generate_prompts",
    "generate_stack",
    "kmeans_images",
    "kmedoids_images",
    "load_gray",
    "load_mask",
    "load_store",
    "make_oracle",
    "make_reference_mask",
    "mask_to_original",
    "median_filter",
    "pixel_kmeans",
    "porosity_pct",
    "run_bootstrap_eval",
    "save_gray",
    "save_mask",
    "save_store",
    "segment_image",
    "select_mask",
    "summarize_bootstrap",
    "to_model_input",
    "transform_coords",
]
