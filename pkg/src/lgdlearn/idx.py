"""Reading and writing IDX files (the MNIST container format).

Layout, all integers big-endian:

    image file:  u32 magic 0x00000803 | u32 count | u32 rows | u32 cols | u8 pixels...
    label file:  u32 magic 0x00000801 | u32 count | u8 labels...

Pixels are stored row-major, one image after another. Files must contain
exactly the declared number of payload bytes; anything shorter or longer is
rejected with the byte offset at which the mismatch was detected.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import IdxFormatError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


def _read_header(buf: bytes, n_fields: int, path) -> tuple[int, ...]:
    need = 4 * n_fields
    if len(buf) < need:
        raise IdxFormatError(f"{path}: truncated header, need {need} bytes", offset=len(buf))
    return struct.unpack_from(f">{n_fields}I", buf, 0)


def _check_payload(buf: bytes, header_len: int, expected: int, path) -> None:
    end = header_len + expected
    if len(buf) < end:
        raise IdxFormatError(f"{path}: truncated payload, expected {expected} bytes", offset=len(buf))
    if len(buf) > end:
        raise IdxFormatError(f"{path}: {len(buf) - end} trailing bytes after payload", offset=end)


def read_idx_images(path) -> np.ndarray:
    """Parse an IDX image file into a uint8 array of shape (count, rows, cols)."""
    buf = Path(path).read_bytes()
    magic, count, rows, cols = _read_header(buf, 4, path)
    if magic != IMAGE_MAGIC:
        raise IdxFormatError(f"{path}: bad image magic 0x{magic:08x}, expected 0x{IMAGE_MAGIC:08x}", offset=0)
    _check_payload(buf, 16, count * rows * cols, path)
    pixels = np.frombuffer(buf, dtype=np.uint8, count=count * rows * cols, offset=16)
    return pixels.reshape(count, rows, cols)


def read_idx_labels(path) -> np.ndarray:
    """Parse an IDX label file into a uint8 array of shape (count,)."""
    buf = Path(path).read_bytes()
    magic, count = _read_header(buf, 2, path)
    if magic != LABEL_MAGIC:
        raise IdxFormatError(f"{path}: bad label magic 0x{magic:08x}, expected 0x{LABEL_MAGIC:08x}", offset=0)
    _check_payload(buf, 8, count, path)
    return np.frombuffer(buf, dtype=np.uint8, count=count, offset=8)


def write_idx_images(path, images: np.ndarray) -> None:
    """Write a (count, rows, cols) uint8 array as an IDX image file."""
    images = np.ascontiguousarray(images, dtype=np.uint8)
    if images.ndim != 3:
        raise ValueError(f"images must be 3-d (count, rows, cols), got shape {images.shape}")
    n, rows, cols = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">4I", IMAGE_MAGIC, n, rows, cols))
        fh.write(images.tobytes())


def write_idx_labels(path, labels: np.ndarray) -> None:
    """Write a (count,) integer array as an IDX label file."""
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ValueError(f"labels must be 1-d, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() > 255):
        raise ValueError("labels must fit in an unsigned byte")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">2I", LABEL_MAGIC, labels.size))
        fh.write(labels.astype(np.uint8).tobytes())
