"""
Model checkpoints.

Format: one ASCII header line describing the shape, terminated by LF, then a
little-endian u64 parameter count, then that many little-endian float64 values.
"""

import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np

from core.exceptions import FormatError
from .classifiers import ModelParams, ModelShape

logger = logging.getLogger(__name__)

_HEADER_PREFIX = "drdm-model "


def save_checkpoint(params: ModelParams, path: Union[str, Path]):
    """Write ``params`` to ``path``."""
    with open(path, "wb") as f:
        f.write((_HEADER_PREFIX + params.shape.header() + "\n").encode("ascii"))
        f.write(struct.pack("<Q", params.flat.size))
        f.write(params.flat.astype("<f8").tobytes())
    logger.debug(f"Saved checkpoint with {params.flat.size} parameters to {path}")


def load_checkpoint(path: Union[str, Path]) -> ModelParams:
    """Read a checkpoint written by ``save_checkpoint``."""
    buffer = Path(path).read_bytes()
    newline = buffer.find(b"\n")
    if newline < 0 or not buffer.startswith(_HEADER_PREFIX.encode("ascii")):
        raise FormatError(f"Missing checkpoint header in {path}", offset=0)
    try:
        shape = ModelShape.from_header(buffer[len(_HEADER_PREFIX):newline].decode("ascii"))
    except (KeyError, ValueError) as e:
        raise FormatError(f"Malformed checkpoint header in {path}: {e}", offset=0)
    cursor = newline + 1
    if len(buffer) < cursor + 8:
        raise FormatError(f"Truncated checkpoint {path}", offset=len(buffer))
    count, = struct.unpack("<Q", buffer[cursor:cursor + 8])
    cursor += 8
    if len(buffer) != cursor + 8 * count:
        raise FormatError(f"Checkpoint {path} declares {count} values but holds "
                          f"{(len(buffer) - cursor) // 8}", offset=cursor)
    flat = np.frombuffer(buffer, dtype="<f8", count=count, offset=cursor).astype(np.float64)
    return ModelParams(flat, shape)
