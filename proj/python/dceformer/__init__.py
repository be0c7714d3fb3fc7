"""DCE-MRI synthesis from non-contrast inputs (C++ core)."""

import json

from ._core import (
    Error,
    Generator,
    evaluate,
    fid,
    freq_fft_loss,
    freq_pixel_loss,
    frequency_split,
    gaussian_kernel,
    generate_phantom,
    load_dataset,
    mae,
    nmi,
    psnr,
    ssim,
    write_phantom_dataset,
)
from ._core import train as _train


def train(config, data, output_dir=""):
    """Train from a config dict (or JSON string); returns the step history."""
    if not isinstance(config, str):
        config = json.dumps(config)
    return _train(config, str(data), str(output_dir))


__all__ = [
    "Error",
    "Generator",
    "evaluate",
    "fid",
    "freq_fft_loss",
    "freq_pixel_loss",
    "frequency_split",
    "gaussian_kernel",
    "generate_phantom",
    "load_dataset",
    "mae",
    "nmi",
    "psnr",
    "ssim",
    "train",
    "write_phantom_dataset",
]
