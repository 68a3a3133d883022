"""Checkerboard clean-label trigger toolkit.

Images are float64 arrays of shape (H, W, C) with values in [0, 1]; datasets
are an (N, H, W, C) image array plus an (N,) integer label array.
"""

from ._core import (
    Error,
    FormatError,
    InvalidInput,
    NumericalError,
    ResourceLimit,
    amplify,
    analyze_separability,
    brute_force_optimum,
    cge_detect,
    cge_score,
    cge_scores,
    checkerboard_coefficient,
    checkerboard_template,
    clip_unit,
    dataset_fingerprint,
    dct2,
    dct_suppress,
    detect_from_scores,
    discrete_objective,
    gaussian_blur,
    gaussian_kernel,
    gen_template,
    idct2,
    inject,
    load_bundle,
    load_dataset,
    load_tensor,
    luminance_vectors,
    mean_filter,
    notch_sanitize,
    poison_dataset,
    rank_by_cge,
    read_manifest,
    save_bundle,
    save_tensor,
    select_css,
    select_random,
    sobel_gradients,
    soft_threshold,
    to_gray,
    write_manifest,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
