"""Reconstruction quality metrics."""
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.signal import correlate2d

from gia_lab.core.exceptions import PreconditionError, ShapeError
from gia_lab.core.models import Normalization

MAX_ASSIGNMENT_BATCH = 16


@dataclass(frozen=True)
class SsimParams:
    """
    Structural similarity constants.

    Args:
        window_size: Side of the Gaussian window
        sigma: Gaussian standard deviation
        data_range: Dynamic range L of the pixel space
        k1: C1 = (k1 * L)^2
        k2: C2 = (k2 * L)^2
    """
    window_size: int = 7
    sigma: float = 1.5
    data_range: float = 1.0
    k1: float = 0.01
    k2: float = 0.03

    @property
    def c1(self) -> float:
        return (self.k1 * self.data_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.data_range) ** 2

    def window(self) -> np.ndarray:
        return _gaussian_window(self.window_size, self.sigma)


@lru_cache(maxsize=8)
def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    offsets = np.arange(size) - (size - 1) / 2.0
    profile = np.exp(-offsets ** 2 / (2.0 * sigma ** 2))
    window = np.outer(profile, profile)
    window = window / window.sum()
    window.setflags(write=False)
    return window


DEFAULT_SSIM = SsimParams()


def _as_image(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        return x[None]
    if x.ndim != 3:
        raise ShapeError(f"SSIM expects C x H x W images, got {x.shape}")
    return x


def ssim_map(a: np.ndarray, b: np.ndarray, params: SsimParams = DEFAULT_SSIM) -> np.ndarray:
    """Local SSIM at every valid window position, one map per channel."""
    a, b = _as_image(a), _as_image(b)
    if a.shape != b.shape:
        raise ShapeError(f"SSIM shapes differ: {a.shape} and {b.shape}")
    if min(a.shape[1:]) < params.window_size:
        raise ShapeError(f"SSIM needs H, W >= {params.window_size}, got {a.shape[1:]}")
    window = params.window()

    def local(x: np.ndarray) -> np.ndarray:
        return correlate2d(x, window, mode='valid')

    maps = []
    for ca, cb in zip(a, b):
        mu_a, mu_b = local(ca), local(cb)
        var_a = local(ca * ca) - mu_a * mu_a
        var_b = local(cb * cb) - mu_b * mu_b
        cov = local(ca * cb) - mu_a * mu_b
        numerator = (2.0 * mu_a * mu_b + params.c1) * (2.0 * cov + params.c2)
        denominator = (mu_a * mu_a + mu_b * mu_b + params.c1) * (var_a + var_b + params.c2)
        maps.append(numerator / denominator)
    return np.stack(maps)


def ssim(a: np.ndarray, b: np.ndarray, params: SsimParams = DEFAULT_SSIM) -> float:
    """Mean local SSIM over valid windows, averaged across channels."""
    return float(np.mean(ssim_map(a, b, params)))


def ssim_batch(recon: np.ndarray, true: np.ndarray, params: SsimParams = DEFAULT_SSIM) -> List[float]:
    """Per-image SSIM of two batches in their given order."""
    if np.shape(recon) != np.shape(true):
        raise ShapeError(f"Batch shapes differ: {np.shape(recon)} and {np.shape(true)}")
    return [ssim(r, t, params) for r, t in zip(recon, true)]


def best_assignment_ssim(recon: np.ndarray, true: np.ndarray,
                         params: SsimParams = DEFAULT_SSIM) -> Tuple[float, List[int]]:
    """
    Mean SSIM under the pairing of reconstructed to true images that maximizes the total.

    Returns:
        The mean and ``assignment``, where recon[j] is paired with true[assignment[j]]
    """
    recon, true = np.asarray(recon), np.asarray(true)
    if recon.shape != true.shape or recon.ndim != 4:
        raise ShapeError(f"Batch shapes differ: {recon.shape} and {true.shape}")
    size = recon.shape[0]
    if size > MAX_ASSIGNMENT_BATCH:
        raise PreconditionError(f"Best assignment supports at most {MAX_ASSIGNMENT_BATCH} images, got {size}")
    scores = np.array([[ssim(r, t, params) for t in true] for r in recon])
    rows, cols = linear_sum_assignment(scores, maximize=True)
    assignment = [int(c) for _, c in sorted(zip(rows, cols))]
    return float(scores[np.arange(size), assignment].mean()), assignment


def mse(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"Shapes differ: {a.shape} and {b.shape}")
    return float(np.mean((a - b) ** 2))


def psnr(a: np.ndarray, b: np.ndarray, data_range: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; identical inputs give +inf."""
    error = mse(a, b)
    if error == 0.0:
        return float('inf')
    return float(10.0 * np.log10(data_range ** 2 / error))


def random_baseline_ssim(true_pixels: np.ndarray, count: int = 20, seed: int = 0,
                         params: SsimParams = DEFAULT_SSIM) -> float:
    """Mean best-assignment SSIM of ``count`` seeded uniform-noise batches against a batch in [0, 1]."""
    true_pixels = np.asarray(true_pixels, dtype=np.float64)
    rng = np.random.default_rng(seed)
    scores = [best_assignment_ssim(rng.uniform(0.0, 1.0, true_pixels.shape), true_pixels, params)[0]
              for _ in range(count)]
    return float(np.mean(scores))


def to_pixels(images: np.ndarray, normalization: Optional[Normalization]) -> np.ndarray:
    """De-normalize to [0, 1] pixel space, clamping out-of-range values."""
    if normalization is None:
        return np.clip(images, 0.0, 1.0)
    return np.clip(normalization.denormalize(images), 0.0, 1.0)


def score_reconstruction(recon: np.ndarray, true: np.ndarray, normalization: Optional[Normalization],
                         params: SsimParams = DEFAULT_SSIM) -> Tuple[float, List[int], List[float]]:
    """
    Best-assignment SSIM of normalized batches, measured in pixel space.

    Returns:
        Mean SSIM, the assignment, and the SSIM of each reconstructed image
        against its assigned true image
    """
    recon_px, true_px = to_pixels(recon, normalization), to_pixels(true, normalization)
    mean, assignment = best_assignment_ssim(recon_px, true_px, params)
    per_image = [ssim(recon_px[j], true_px[i], params) for j, i in enumerate(assignment)]
    return mean, assignment, per_image
