"""Binary checkpoint files for named float64 arrays.

Layout, all little-endian:
    magic "DACN" | u32 version | records...
    record: u32 name_len | name (utf-8) | u32 rank | u64 dims[rank] | f64 data
Records keep insertion order; readers consume until EOF.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"DACN"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path: str | Path, arrays: dict[str, np.ndarray]) -> None:
    path = Path(path)
    chunks = [MAGIC, struct.pack("<I", VERSION)]
    for name, arr in arrays.items():
        data = np.ascontiguousarray(arr, dtype=np.float64)
        nb = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(nb)))
        chunks.append(nb)
        chunks.append(struct.pack("<I", data.ndim))
        chunks.append(struct.pack(f"<{data.ndim}Q", *data.shape))
        chunks.append(data.astype("<f8").tobytes())
    path.write_bytes(b"".join(chunks))


def load_checkpoint(path: str | Path) -> dict[str, np.ndarray]:
    buf = Path(path).read_bytes()
    if buf[:4] != MAGIC:
        raise CheckpointError(f"bad magic {buf[:4]!r}, want {MAGIC!r}")
    (version,) = struct.unpack_from("<I", buf, 4)
    if version != VERSION:
        raise CheckpointError(f"unsupported version {version}")
    pos = 8
    out: dict[str, np.ndarray] = {}
    while pos < len(buf):
        try:
            (name_len,) = struct.unpack_from("<I", buf, pos)
            pos += 4
            name = buf[pos:pos + name_len].decode("utf-8")
            pos += name_len
            (rank,) = struct.unpack_from("<I", buf, pos)
            pos += 4
            dims = struct.unpack_from(f"<{rank}Q", buf, pos)
            pos += 8 * rank
            count = int(np.prod(dims)) if rank else 1
            arr = np.frombuffer(buf, dtype="<f8", count=count, offset=pos)
            pos += 8 * count
        except (struct.error, ValueError) as e:
            raise CheckpointError(f"truncated checkpoint: {e}") from e
        out[name] = arr.reshape(dims).astype(np.float64)
    return out
