"""Light-field super-resolution: cost analysis, inference and metrics."""

from ._core import (
    ConfigError,
    Error,
    ShapeError,
    analyze,
    baseline_sr,
    degrade_bicubic,
    disparity_field,
    gradcheck,
    init_checkpoint,
    load_field,
    lr_at,
    psnr,
    run_cli,
    ssim,
    store_field,
    super_resolve,
)

__all__ = [
    "ConfigError",
    "Error",
    "ShapeError",
    "analyze",
    "baseline_sr",
    "degrade_bicubic",
    "disparity_field",
    "gradcheck",
    "init_checkpoint",
    "load_field",
    "lr_at",
    "psnr",
    "run_cli",
    "ssim",
    "store_field",
    "super_resolve",
]
