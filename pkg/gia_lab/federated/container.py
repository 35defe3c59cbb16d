"""Flat binary container for updates, parameters and ground-truth bundles.

Layout, all little-endian::

    b"GIAU" | version u32 | entry count u32
    per entry: name length u32 | name (utf-8) | rank u32 | dims u64 * rank | payload f64 * prod(dims)

Entries are written in sorted name order so identical content gives
identical bytes.
"""
import math
import struct
from pathlib import Path
from typing import Dict, Union

import numpy as np

from gia_lab.core.exceptions import ContainerFormatError
from gia_lab.core.models import Batch, BNMode, ClientUpdate, LayerStats
from gia_lab.nn.model import ModelParams

MAGIC = b'GIAU'
VERSION = 1

PathLike = Union[str, Path]
Entries = Dict[str, np.ndarray]


def encode_entries(entries: Entries) -> bytes:
    parts = [MAGIC, struct.pack('<II', VERSION, len(entries))]
    for name in sorted(entries):
        value = np.ascontiguousarray(entries[name], dtype='<f8')
        encoded_name = name.encode('utf-8')
        parts.append(struct.pack('<I', len(encoded_name)))
        parts.append(encoded_name)
        parts.append(struct.pack('<I', value.ndim))
        parts.append(struct.pack(f'<{value.ndim}Q', *value.shape))
        parts.append(value.tobytes())
    return b''.join(parts)


def decode_entries(data: bytes) -> Entries:
    view = memoryview(data)
    offset = 0

    def take(size: int) -> memoryview:
        nonlocal offset
        if offset + size > len(view):
            raise ContainerFormatError("Container is truncated")
        chunk = view[offset:offset + size]
        offset += size
        return chunk

    if bytes(take(4)) != MAGIC:
        raise ContainerFormatError("Not a GIAU container")
    version, count = struct.unpack('<II', take(8))
    if version != VERSION:
        raise ContainerFormatError(f"Unsupported container version {version}")

    entries: Entries = {}
    for _ in range(count):
        (name_length,) = struct.unpack('<I', take(4))
        try:
            name = bytes(take(name_length)).decode('utf-8')
        except UnicodeDecodeError:
            raise ContainerFormatError("Entry name is not valid UTF-8") from None
        (rank,) = struct.unpack('<I', take(4))
        dims = struct.unpack(f'<{rank}Q', take(8 * rank))
        size = math.prod(dims)
        payload = np.frombuffer(take(8 * size), dtype='<f8').astype(np.float64)
        if name in entries:
            raise ContainerFormatError(f"Duplicate entry '{name}'")
        try:
            entries[name] = payload.reshape(dims)
        except (ValueError, OverflowError) as e:
            raise ContainerFormatError(f"Entry '{name}' has unusable dimensions {dims}: {e}") from None
    if offset != len(view):
        raise ContainerFormatError(f"{len(view) - offset} trailing bytes after the last entry")
    return entries


def write_entries(entries: Entries, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_entries(entries))
    return path


def read_entries(path: PathLike) -> Entries:
    try:
        return decode_entries(Path(path).read_bytes())
    except FileNotFoundError:
        raise ContainerFormatError(f"Container not found: {path}") from None


def _stats_entries(prefix: str, snapshot: Dict[str, LayerStats]) -> Entries:
    entries = {}
    for layer, stats in snapshot.items():
        entries[f'{prefix}/{layer}/mean'] = stats.mean
        entries[f'{prefix}/{layer}/var'] = stats.var
    return entries


def _stats_from_entries(prefix: str, entries: Entries) -> Dict[str, LayerStats]:
    layers = {}
    for name in entries:
        if name.startswith(prefix + '/'):
            layer, _, field = name[len(prefix) + 1:].rpartition('/')
            layers.setdefault(layer, {})[field] = entries[name]
    try:
        return {layer: LayerStats(v['mean'], v['var']) for layer, v in layers.items()}
    except KeyError:
        raise ContainerFormatError(f"Incomplete '{prefix}' statistics") from None


def _scalar(entries: Entries, name: str) -> float:
    try:
        return float(entries[name])
    except KeyError:
        raise ContainerFormatError(f"Missing entry '{name}'") from None


def update_to_entries(update: ClientUpdate) -> Entries:
    entries: Entries = {f'grad/{name}': value for name, value in update.gradients.items()}
    if update.stats_before is not None:
        entries.update(_stats_entries('stats_before', update.stats_before))
    if update.stats_after is not None:
        entries.update(_stats_entries('stats_after', update.stats_after))
    entries['meta/batch_size'] = np.array(float(update.batch_size))
    entries['meta/labels'] = np.array(update.labels, dtype=np.float64)
    entries['meta/momentum'] = np.array(update.momentum)
    entries['meta/mode'] = np.array(0.0 if update.mode == BNMode.TRAINING else 1.0)
    for layer, n in update.n_per_channel.items():
        entries[f'meta/n/{layer}'] = np.array(float(n))
    return entries


def update_from_entries(entries: Entries) -> ClientUpdate:
    gradients = {name[len('grad/'):]: value for name, value in entries.items() if name.startswith('grad/')}
    if not gradients:
        raise ContainerFormatError("Update has no gradient entries")
    if 'meta/labels' not in entries:
        raise ContainerFormatError("Missing entry 'meta/labels'")
    before = _stats_from_entries('stats_before', entries)
    after = _stats_from_entries('stats_after', entries)
    if bool(before) != bool(after):
        raise ContainerFormatError("Update carries only one statistics snapshot")
    return ClientUpdate(
        gradients=gradients,
        labels=tuple(int(round(y)) for y in entries['meta/labels'].ravel()),
        batch_size=int(_scalar(entries, 'meta/batch_size')),
        momentum=_scalar(entries, 'meta/momentum'),
        n_per_channel={name[len('meta/n/'):]: int(value) for name, value in entries.items()
                       if name.startswith('meta/n/')},
        mode=BNMode.TRAINING if _scalar(entries, 'meta/mode') == 0.0 else BNMode.INFERENCE,
        stats_before=before or None,
        stats_after=after or None,
    )


def write_update(update: ClientUpdate, path: PathLike) -> Path:
    return write_entries(update_to_entries(update), path)


def read_update(path: PathLike) -> ClientUpdate:
    return update_from_entries(read_entries(path))


def write_params(params: ModelParams, path: PathLike) -> Path:
    entries: Entries = {f'param/{name}': value for name, value in params.tensors.items()}
    entries.update(_stats_entries('running', params.running_stats))
    return write_entries(entries, path)


def read_params(path: PathLike, order=None) -> ModelParams:
    """Read parameters; ``order`` restores the model's construction order."""
    entries = read_entries(path)
    tensors = {name[len('param/'):]: value for name, value in entries.items() if name.startswith('param/')}
    if order is not None:
        missing = [name for name in order if name not in tensors]
        if missing:
            raise ContainerFormatError(f"Parameter file lacks {missing}")
        tensors = {name: tensors[name] for name in order}
    return ModelParams(tensors=tensors, running_stats=_stats_from_entries('running', entries))


def write_truth(batch: Batch, path: PathLike) -> Path:
    """Ground-truth bundle, kept apart from the update and used for evaluation only."""
    return write_entries({'truth/images': batch.images,
                          'truth/labels': np.array(batch.labels, dtype=np.float64)}, path)


def read_truth(path: PathLike) -> Batch:
    entries = read_entries(path)
    try:
        return Batch(entries['truth/images'], [int(round(y)) for y in entries['truth/labels'].ravel()])
    except KeyError:
        raise ContainerFormatError("Not a ground-truth bundle") from None
