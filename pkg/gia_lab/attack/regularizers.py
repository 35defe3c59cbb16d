"""Attack objective terms.

The differentiable terms accept either graph Vars or numpy arrays, so the
same code builds the attack graph and serves direct numeric evaluation.
"""
import math
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

from gia_lab.autodiff import Var
from gia_lab.core.exceptions import PreconditionError, ShapeError
from gia_lab.core.models import LayerStats

ArrayLike = Union[np.ndarray, Var]
TV_DELTA = 1e-12


def _sqrt(value: ArrayLike) -> ArrayLike:
    return value.sqrt() if isinstance(value, Var) else np.sqrt(value)


def _total(value: ArrayLike) -> ArrayLike:
    return value.sum() if isinstance(value, Var) else float(np.sum(value))


def r_bn(candidate: Mapping[str, Tuple[ArrayLike, ArrayLike]], target: Mapping[str, LayerStats]) -> ArrayLike:
    """Sum over layers of squared L2 distances of means and of variances."""
    if set(candidate) != set(target):
        raise PreconditionError(f"Layer sets differ: {sorted(set(candidate) ^ set(target))}")
    total: ArrayLike = 0.0
    for layer in sorted(candidate):
        mean, var = candidate[layer]
        total = total + _total((mean - target[layer].mean) ** 2) + _total((var - target[layer].var) ** 2)
    return total


def total_variation(x: ArrayLike, delta: float = TV_DELTA) -> ArrayLike:
    """
    Isotropic total variation over the interior region i < H-1, j < W-1.

    Each term is sqrt(dx^2 + dy^2 + delta) - sqrt(delta), so flat images
    score exactly 0 while the gradient stays finite.
    """
    if x.ndim != 4 or x.shape[2] < 2 or x.shape[3] < 2:
        raise ShapeError(f"total_variation needs B x C x H x W with H, W >= 2, got {x.shape}")
    corner = x[:, :, :-1, :-1]
    down = x[:, :, 1:, :-1] - corner
    right = x[:, :, :-1, 1:] - corner
    terms = _sqrt(down * down + right * right + delta) - math.sqrt(delta)
    return _total(terms)


def _norm_sq(value: ArrayLike) -> ArrayLike:
    return _total(value * value)


def cosine_discrepancy(g: Mapping[str, ArrayLike], g_star: Mapping[str, np.ndarray],
                       mask: Optional[Mapping[str, np.ndarray]] = None,
                       per_layer: bool = False) -> ArrayLike:
    """
    1 - cosine similarity between two gradient sets.

    The global form flattens every (masked) tensor into one vector; the
    per-layer form averages the discrepancy of each tensor.
    """
    if set(g) != set(g_star):
        raise ShapeError(f"Gradient names differ: {sorted(set(g) ^ set(g_star))}")
    names = list(g_star)
    for name in names:
        if tuple(g[name].shape) != tuple(np.shape(g_star[name])):
            raise ShapeError(f"Gradient '{name}' has shape {g[name].shape}, expected {np.shape(g_star[name])}")

    def masked(name: str) -> Tuple[ArrayLike, np.ndarray]:
        target = np.asarray(g_star[name], dtype=np.float64)
        if mask is None:
            return g[name], target
        w = np.asarray(mask[name], dtype=np.float64)
        return g[name] * w, target * w

    if per_layer:
        terms = []
        for name in names:
            a, b = masked(name)
            b_norm = math.sqrt(float(np.sum(b * b)))
            if b_norm == 0.0:
                continue
            terms.append(1.0 - _total(a * b) / (_sqrt(_norm_sq(a)) * b_norm))
        if not terms:
            raise PreconditionError("Every compared gradient of the target is zero")
        total: ArrayLike = 0.0
        for term in terms:
            total = total + term
        return total * (1.0 / len(terms))

    dot: ArrayLike = 0.0
    a_sq: ArrayLike = 0.0
    b_sq = 0.0
    for name in names:
        a, b = masked(name)
        dot = dot + _total(a * b)
        a_sq = a_sq + _norm_sq(a)
        b_sq += float(np.sum(b * b))
    if b_sq == 0.0:
        raise PreconditionError("Target gradient is zero; the cosine is undefined")
    if not isinstance(a_sq, Var) and a_sq == 0.0:
        raise PreconditionError("Both gradient vectors are zero; the cosine is undefined")
    return 1.0 - dot / (_sqrt(a_sq) * math.sqrt(b_sq))


def top_change_mask(g_star: Mapping[str, np.ndarray], fraction: float,
                    order: Optional[Sequence[str]] = None) -> Dict[str, np.ndarray]:
    """
    Boolean mask of the ceil(fraction * N) largest-magnitude entries, across all tensors.

    Ties go to the earlier tensor in ``order`` and then to the lower flat index.
    """
    if not 0.0 < fraction <= 1.0:
        raise PreconditionError(f"fraction must be in (0, 1], got {fraction}")
    names = list(order) if order is not None else list(g_star)
    flat = np.concatenate([np.abs(np.asarray(g_star[n], dtype=np.float64)).ravel() for n in names])
    # rounding guard so that e.g. (1/3) * 3 selects exactly one entry
    k = min(flat.size, math.ceil(round(fraction * flat.size, 9)))
    selected = np.zeros(flat.size, dtype=bool)
    selected[np.argsort(-flat, kind='stable')[:k]] = True

    masks = {}
    offset = 0
    for name in names:
        shape = np.shape(g_star[name])
        size = int(np.prod(shape, dtype=np.int64))
        masks[name] = selected[offset:offset + size].reshape(shape)
        offset += size
    return masks


def median_smooth(x: np.ndarray) -> np.ndarray:
    """3x3 median filter per channel with edge replication; shape preserving."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim < 2:
        raise ShapeError(f"median_smooth needs at least 2-D input, got {x.shape}")
    size = (1,) * (x.ndim - 2) + (3, 3)
    return ndimage.median_filter(x, size=size, mode='nearest')
