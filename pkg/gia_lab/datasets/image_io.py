"""Image files: binary PPM output and side-by-side panels."""
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from gia_lab.core.exceptions import ShapeError

PathLike = Union[str, Path]
PANEL_GAP = 2


def quantize(pixels: np.ndarray) -> np.ndarray:
    """C x H x W floats in [0, 1] to H x W x 3 uint8 (grey channels are replicated)."""
    pixels = np.asarray(pixels, dtype=np.float64)
    if pixels.ndim != 3 or pixels.shape[0] not in (1, 3):
        raise ShapeError(f"Expected a 1- or 3-channel C x H x W image, got {pixels.shape}")
    if pixels.shape[0] == 1:
        pixels = np.repeat(pixels, 3, axis=0)
    return np.round(np.clip(pixels, 0.0, 1.0) * 255.0).astype(np.uint8).transpose(1, 2, 0)


def write_ppm(pixels: np.ndarray, path: PathLike) -> Path:
    """Write a binary P6 PPM with maxval 255."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(quantize(pixels)).save(path, format='PPM')
    return path


def read_image(path: PathLike, size: int = None) -> np.ndarray:
    """Read any Pillow-supported image as 3 x H x W floats in [0, 1]."""
    with Image.open(path) as image:
        image = image.convert('RGB')
        if size is not None and image.size != (size, size):
            image = image.resize((size, size), Image.Resampling.BILINEAR)
        data = np.asarray(image, dtype=np.float64) / 255.0
    return data.transpose(2, 0, 1)


def write_panel(original: np.ndarray, reconstruction: np.ndarray, path: PathLike) -> Path:
    """Original and reconstruction side by side, separated by a white gap."""
    if np.shape(original) != np.shape(reconstruction):
        raise ShapeError(f"Panel images differ in shape: {np.shape(original)} and {np.shape(reconstruction)}")
    left, right = quantize(original), quantize(reconstruction)
    gap = np.full((left.shape[0], PANEL_GAP, 3), 255, dtype=np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.concatenate([left, gap, right], axis=1)).save(path, format='PPM')
    return path
