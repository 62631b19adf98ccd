"""
IDX connector.

Reads and writes the big-endian IDX format used by MNIST, Fashion-MNIST and
Kuzushiji-MNIST:

    image file: u32 magic 0x00000803, u32 count, u32 rows, u32 cols, u8 pixels (row-major)
    label file: u32 magic 0x00000801, u32 count, u8 labels

Pixels are scaled by 1/255 into [0, 1] on load and mapped back on write.
"""

import logging
import struct
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from core.exceptions import FormatError, ParameterError
from ..datasets import Dataset

logger = logging.getLogger(__name__)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

PathLike = Union[str, Path]


def _read_header(buffer: bytes, words: int, path: PathLike) -> Tuple[int, ...]:
    size = 4 * words
    if len(buffer) < size:
        raise FormatError(f"Truncated IDX header in {path}: expected {size} bytes, found {len(buffer)}",
                          offset=len(buffer))
    return struct.unpack(f">{words}I", buffer[:size])


def read_idx_images(path: PathLike) -> Tuple[np.ndarray, Tuple[int, int]]:
    """Read an IDX image file.

    Returns:
        (pixels as uint8 array of shape (count, rows * cols), (rows, cols))
    """
    buffer = Path(path).read_bytes()
    magic, = _read_header(buffer, 1, path)
    if magic != IMAGE_MAGIC:
        raise FormatError(f"Bad magic number 0x{magic:08x} in image file {path} "
                          f"(expected 0x{IMAGE_MAGIC:08x})", offset=0)
    _, count, rows, cols = _read_header(buffer, 4, path)
    expected = 16 + count * rows * cols
    if len(buffer) < expected:
        raise FormatError(f"Truncated image file {path}: header declares {count} images of "
                          f"{rows}x{cols} but the file has {len(buffer)} bytes", offset=len(buffer))
    pixels = np.frombuffer(buffer, dtype=np.uint8, count=count * rows * cols, offset=16)
    return pixels.reshape(count, rows * cols), (rows, cols)


def read_idx_labels(path: PathLike) -> np.ndarray:
    """Read an IDX label file into a uint8 array."""
    buffer = Path(path).read_bytes()
    magic, = _read_header(buffer, 1, path)
    if magic != LABEL_MAGIC:
        raise FormatError(f"Bad magic number 0x{magic:08x} in label file {path} "
                          f"(expected 0x{LABEL_MAGIC:08x})", offset=0)
    _, count = _read_header(buffer, 2, path)
    if len(buffer) < 8 + count:
        raise FormatError(f"Truncated label file {path}: header declares {count} labels "
                          f"but the file has {len(buffer)} bytes", offset=len(buffer))
    return np.frombuffer(buffer, dtype=np.uint8, count=count, offset=8)


def load_idx(images_path: PathLike, labels_path: PathLike, num_classes: Optional[int] = None) -> Dataset:
    """Load an image/label IDX pair as a ``Dataset`` with pixels scaled into [0, 1].

    Args:
        images_path: IDX image file
        labels_path: IDX label file
        num_classes: Number of classes; defaults to ``max(label) + 1`` (at least 10 for digit sets)

    Raises:
        FormatError: On a bad magic number, a truncated file, or a count mismatch
    """
    pixels, image_shape = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if pixels.shape[0] != labels.shape[0]:
        raise FormatError(f"Sample count mismatch: {pixels.shape[0]} images in {images_path} "
                          f"but {labels.shape[0]} labels in {labels_path}", offset=4)
    if num_classes is None:
        num_classes = max(10, int(labels.max()) + 1) if labels.size else 10
    features = pixels.astype(np.float64) / 255.0
    logger.info(f"Loaded {labels.shape[0]} samples ({image_shape[0]}x{image_shape[1]}) from {images_path}")
    return Dataset(features, labels.astype(np.int64), num_classes=num_classes, image_shape=image_shape)


def write_idx(ds: Dataset, images_path: PathLike, labels_path: PathLike,
              image_shape: Optional[Tuple[int, int]] = None):
    """Write a dataset as an IDX image/label pair.

    Features are multiplied by 255 and rounded, so datasets loaded from IDX
    files round-trip bit-exactly.
    """
    rows, cols = image_shape or ds.image_shape or (ds.feature_dim, 1)
    if rows * cols != ds.feature_dim:
        raise ParameterError(f"Image shape {rows}x{cols} does not match feature dimension {ds.feature_dim}")
    if ds.labels.size and ds.labels.max() > 255:
        raise ParameterError("IDX label files hold one byte per label")
    pixels = np.clip(np.rint(ds.features * 255.0), 0, 255).astype(np.uint8)
    count = len(ds)
    with open(images_path, "wb") as f:
        f.write(struct.pack(">4I", IMAGE_MAGIC, count, rows, cols))
        f.write(pixels.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">2I", LABEL_MAGIC, count))
        f.write(ds.labels.astype(np.uint8).tobytes())
    logger.debug(f"Wrote {count} samples to {images_path} and {labels_path}")
