"""CXT1 binary tensor file format.

Layout (little-endian throughout):
  4-byte magic "CXT1"
  uint32 rank
  rank * uint64 extents
  row-major interleaved (real, imag) float32 payload

The reader promotes to complex128.
"""

import struct

import numpy as np

MAGIC = b"CXT1"
_MAX_RANK = 16


def write_cxt1(path, arr):
    """Write a complex array to `path` in CXT1 format (float32 storage)."""
    arr = np.asarray(arr)
    data = np.ascontiguousarray(arr, dtype=np.complex128)
    payload = np.empty(data.shape + (2,), dtype="<f4")
    payload[..., 0] = data.real
    payload[..., 1] = data.imag
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", data.ndim))
        f.write(struct.pack("<" + "Q" * data.ndim, *data.shape))
        f.write(payload.tobytes())


def read_cxt1(path):
    """Read a CXT1 file, returning a complex128 array."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != MAGIC:
            raise ValueError(f"{path}: not a CXT1 file (bad magic {magic!r})")
        (rank,) = struct.unpack("<I", f.read(4))
        if rank == 0 or rank > _MAX_RANK:
            raise ValueError(f"{path}: unreasonable rank {rank}")
        shape = struct.unpack("<" + "Q" * rank, f.read(8 * rank))
        count = 2 * int(np.prod(shape))
        raw = np.fromfile(f, dtype="<f4", count=count)
        if raw.size != count:
            raise ValueError(f"{path}: truncated payload")
    raw = raw.reshape(shape + (2,))
    out = raw[..., 0].astype(np.complex128)
    out.imag = raw[..., 1]
    return out
