"""Direct 2-D convolution kernels on NCHW float64 arrays.

The three kernels are mutually adjoint bilinear maps:

    <g, conv2d(x, w)> == <conv2d_input_grad(g, w), x> == <conv2d_weight_grad(x, g), w>

which is what lets the graph differentiate convolutions any number of times.
Each kernel loops over kernel offsets and contracts channels with einsum; no
im2col buffers are materialized.
"""
from typing import Tuple

import numpy as np

from gia_lab.core.exceptions import ShapeError

Shape = Tuple[int, ...]


def output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    """Spatial output size of a convolution along one axis."""
    out = (size + 2 * padding - kernel) // stride + 1
    if out < 1:
        raise ShapeError(
            f"Convolution output is empty (size={size}, kernel={kernel}, stride={stride}, padding={padding})"
        )
    return out


def conv2d_output_shape(x_shape: Shape, w_shape: Shape, stride: int, padding: int) -> Shape:
    if len(x_shape) != 4 or len(w_shape) != 4:
        raise ShapeError(f"conv2d expects 4-D input and kernel, got {x_shape} and {w_shape}")
    n, c, h, w = x_shape
    o, c_k, kh, kw = w_shape
    if c != c_k:
        raise ShapeError(f"conv2d channel mismatch: input has {c}, kernel expects {c_k}")
    return (n, o, output_size(h, kh, stride, padding), output_size(w, kw, stride, padding))


def _window(a: int, b: int, ho: int, wo: int, stride: int) -> Tuple[slice, slice]:
    return (slice(a, a + stride * (ho - 1) + 1, stride),
            slice(b, b + stride * (wo - 1) + 1, stride))


def _pad(x: np.ndarray, padding: int) -> np.ndarray:
    if padding == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))


def conv2d(x: np.ndarray, w: np.ndarray, stride: int = 1, padding: int = 0) -> np.ndarray:
    n, o, ho, wo = conv2d_output_shape(x.shape, w.shape, stride, padding)
    xp = _pad(x, padding)
    out = np.zeros((n, o, ho, wo), dtype=np.float64)
    for a in range(w.shape[2]):
        for b in range(w.shape[3]):
            rows, cols = _window(a, b, ho, wo, stride)
            out += np.einsum('nchw,oc->nohw', xp[:, :, rows, cols], w[:, :, a, b])
    return out


def conv2d_input_grad(g: np.ndarray, w: np.ndarray, input_shape: Shape,
                      stride: int = 1, padding: int = 0) -> np.ndarray:
    """Adjoint of ``conv2d`` in its first argument."""
    n, c, h, wd = input_shape
    _, _, ho, wo = g.shape
    padded = np.zeros((n, c, h + 2 * padding, wd + 2 * padding), dtype=np.float64)
    for a in range(w.shape[2]):
        for b in range(w.shape[3]):
            rows, cols = _window(a, b, ho, wo, stride)
            padded[:, :, rows, cols] += np.einsum('nohw,oc->nchw', g, w[:, :, a, b])
    if padding == 0:
        return padded
    return padded[:, :, padding:padding + h, padding:padding + wd].copy()


def conv2d_weight_grad(x: np.ndarray, g: np.ndarray, kernel_shape: Shape,
                       stride: int = 1, padding: int = 0) -> np.ndarray:
    """Adjoint of ``conv2d`` in its second argument."""
    o, c, kh, kw = kernel_shape
    _, _, ho, wo = g.shape
    xp = _pad(x, padding)
    out = np.zeros(kernel_shape, dtype=np.float64)
    for a in range(kh):
        for b in range(kw):
            rows, cols = _window(a, b, ho, wo, stride)
            out[:, :, a, b] = np.einsum('nohw,nchw->oc', g, xp[:, :, rows, cols])
    return out
