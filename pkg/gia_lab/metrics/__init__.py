"""Reconstruction quality metrics."""
from .similarity import (DEFAULT_SSIM, SsimParams, best_assignment_ssim, mse, psnr, random_baseline_ssim,
                         score_reconstruction, ssim, ssim_batch, ssim_map, to_pixels)

__all__ = [
    'DEFAULT_SSIM', 'SsimParams', 'best_assignment_ssim', 'mse', 'psnr', 'random_baseline_ssim',
    'score_reconstruction', 'ssim', 'ssim_batch', 'ssim_map', 'to_pixels',
]
