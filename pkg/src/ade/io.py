"""File formats: raw tensors, PNM images, key=value configs.

All writers go through a temp file in the destination directory followed by
os.replace, so readers never observe a partial artifact.

Tensor files are little-endian throughout: magic "ADET", version u32 (=1),
dtype u8 (0 = float32, 1 = float64), ndim u32, then ndim u64 dims and the
row-major payload.
"""

from __future__ import annotations

import hashlib
import os
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError, ValidationError

MAGIC = b"ADET"
VERSION = 1
_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODE_FOR = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}


def atomic_write_bytes(path: str | Path, payload: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def write_tensor(path: str | Path, array: np.ndarray) -> None:
    """Serialize a float32/float64 array; other dtypes are rejected."""
    array = np.asarray(array)
    code = _CODE_FOR.get(array.dtype)
    if code is None:
        raise ValidationError(
            f"tensor dtype must be float32 or float64, got {array.dtype}")
    if array.ndim < 1:
        raise ValidationError("0-dimensional tensors are not supported")
    header = MAGIC + struct.pack("<IBI", VERSION, code, array.ndim)
    header += struct.pack(f"<{array.ndim}Q", *array.shape)
    payload = np.ascontiguousarray(array).astype(
        _DTYPE_CODES[code], copy=False).tobytes()
    atomic_write_bytes(path, header + payload)


def read_tensor(path: str | Path) -> np.ndarray:
    """Parse a tensor file; malformed input raises FormatError with the
    byte offset of the first problem."""
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC:
        raise FormatError(f"bad magic {blob[:4]!r}, expected {MAGIC!r}",
                          offset=0)
    if len(blob) < 13:
        raise FormatError("truncated header", offset=len(blob))
    version, code, ndim = struct.unpack_from("<IBI", blob, 4)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    if code not in _DTYPE_CODES:
        raise FormatError(f"unknown dtype code {code}", offset=8)
    if ndim < 1 or ndim > 32:
        raise FormatError(f"implausible ndim {ndim}", offset=9)
    if len(blob) < 13 + 8 * ndim:
        raise FormatError("truncated dims", offset=len(blob))
    dims = struct.unpack_from(f"<{ndim}Q", blob, 13)
    start = 13 + 8 * ndim
    dtype = _DTYPE_CODES[code]
    expected = int(np.prod(dims)) * dtype.itemsize
    if len(blob) - start != expected:
        raise FormatError(
            f"payload is {len(blob) - start} bytes, expected {expected}",
            offset=start)
    data = np.frombuffer(blob, dtype=dtype, offset=start).reshape(dims)
    # native byte order, writable copy
    return data.astype(dtype.newbyteorder("="), copy=True)


def _next_token(blob: bytes, pos: int) -> tuple[bytes, int]:
    # skip whitespace and '#' comments, netpbm style
    n = len(blob)
    while pos < n:
        c = blob[pos:pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            while pos < n and blob[pos:pos + 1] != b"\n":
                pos += 1
        else:
            break
    if pos >= n:
        raise FormatError("truncated image header", offset=pos)
    start = pos
    while pos < n and not blob[pos:pos + 1].isspace():
        pos += 1
    return blob[start:pos], pos


def read_image(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a binary PGM (P5) or PPM (P6) image.

    Returns a [C, H, W] float64 stack with values sample/maxval in [0, 1]
    (C = 1 for P5, 3 for P6) plus the file's maxval. 16-bit samples are
    big-endian per the netpbm convention.
    """
    blob = Path(path).read_bytes()
    magic, pos = _next_token(blob, 0)
    if magic not in (b"P5", b"P6"):
        raise FormatError(f"unsupported image magic {magic!r}", offset=0)
    fields = []
    for _ in range(3):
        tok, pos = _next_token(blob, pos)
        if not tok.isdigit():
            raise FormatError(f"expected integer, got {tok!r}",
                              offset=pos - len(tok))
        fields.append(int(tok))
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise FormatError(f"bad dimensions {width}x{height}", offset=0)
    if not 0 < maxval < 65536:
        raise FormatError(f"maxval {maxval} out of range", offset=0)
    pos += 1  # single whitespace byte after maxval
    channels = 1 if magic == b"P5" else 3
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height * channels
    expected = count * dtype.itemsize
    if len(blob) - pos != expected:
        raise FormatError(
            f"payload is {len(blob) - pos} bytes, expected {expected}",
            offset=pos)
    raw = np.frombuffer(blob, dtype=dtype, offset=pos).astype(np.float64)
    if np.any(raw > maxval):
        raise FormatError(f"sample exceeds maxval {maxval}", offset=pos)
    stack = raw.reshape(height, width, channels).transpose(2, 0, 1)
    return stack / float(maxval), maxval


def write_image(path: str | Path, stack: np.ndarray,
                maxval: int = 255) -> None:
    """Write a [C, H, W] (or [H, W]) stack as P5 (C=1) or P6 (C=3).

    Values are clamped to [0, 1] and quantized with round-half-to-even, so
    read_image -> write_image at the same maxval is byte-identical.
    """
    stack = np.asarray(stack, dtype=np.float64)
    if stack.ndim == 2:
        stack = stack[None]
    if stack.ndim != 3 or stack.shape[0] not in (1, 3):
        raise ValidationError(
            f"expected [C, H, W] with C in (1, 3), got {stack.shape}")
    if maxval not in (255, 65535):
        raise ValidationError(f"maxval must be 255 or 65535, got {maxval}")
    if not np.all(np.isfinite(stack)):
        raise ValidationError("image values contain NaN or Inf")
    channels, height, width = stack.shape
    q = np.clip(np.rint(np.clip(stack, 0.0, 1.0) * maxval), 0, maxval)
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    payload = q.transpose(1, 2, 0).astype(dtype).tobytes()
    magic = b"P5" if channels == 1 else b"P6"
    header = magic + f"\n{width} {height}\n{maxval}\n".encode()
    atomic_write_bytes(path, header + payload)


def write_heatmap(path: str | Path, field: np.ndarray,
                  maxval: int = 255) -> None:
    """Min-max normalized grayscale rendering of a 2D field."""
    field = np.asarray(field, dtype=np.float64)
    if field.ndim != 2:
        raise ValidationError(f"heatmap field must be 2D, got {field.shape}")
    lo, hi = field.min(), field.max()
    if hi > lo:
        norm = (field - lo) / (hi - lo)
    else:
        norm = np.full_like(field, 0.5)
    write_image(path, norm[None], maxval=maxval)


def read_config(path: str | Path) -> dict[str, str]:
    """Parse key=value lines; '#' starts a comment, blanks are skipped.

    Later duplicates win. A non-empty line without '=' is a format error.
    """
    out: dict[str, str] = {}
    offset = 0
    for line in Path(path).read_bytes().splitlines(keepends=True):
        text = line.decode("utf-8").strip()
        if text and not text.startswith("#"):
            if "=" not in text:
                raise FormatError(f"expected key=value, got {text!r}",
                                  offset=offset)
            key, value = text.split("=", 1)
            out[key.strip()] = value.strip()
        offset += len(line)
    return out


def write_config(path: str | Path, entries: dict[str, object]) -> None:
    """Write key=value lines in insertion order."""
    lines = [f"{k}={v}" for k, v in entries.items()]
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("utf-8"))


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
