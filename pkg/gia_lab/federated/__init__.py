"""Federated client simulation and the update container."""
from .client import client_step
from .container import (MAGIC, VERSION, decode_entries, encode_entries, read_params, read_truth,
                        read_update, update_from_entries, update_to_entries, write_params,
                        write_truth, write_update)

__all__ = [
    'client_step', 'MAGIC', 'VERSION', 'decode_entries', 'encode_entries', 'read_params',
    'read_truth', 'read_update', 'update_from_entries', 'update_to_entries', 'write_params',
    'write_truth', 'write_update',
]
