"""Compressed-sensing MRI harness: masks, masked Fourier sampling, l1-Haar recovery."""

from .compare import ComparisonConfig, scheme_comparison
from .masks import KSpaceMask, iid_mask, rasterize
from .operators import ReconConfig, measure, psnr, reconstruct
from .phantom import phantom

__all__ = [
    "ComparisonConfig", "KSpaceMask", "ReconConfig", "iid_mask", "measure",
    "phantom", "psnr", "rasterize", "reconstruct", "scheme_comparison",
]
