"""Dataset ingestion and image files."""
from .sources import Dataset, load_dataset, read_cifar_binary, read_image_dir, synthetic_shapes
from .image_io import quantize, read_image, write_panel, write_ppm

__all__ = ['Dataset', 'load_dataset', 'read_cifar_binary', 'read_image_dir', 'synthetic_shapes',
           'quantize', 'read_image', 'write_panel', 'write_ppm']
