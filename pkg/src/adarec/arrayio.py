"""Deterministic binary container for named arrays plus a JSON manifest.

Layout: magic, 8-byte little-endian manifest length, manifest JSON (sorted
keys), then raw C-order array bytes in manifest order. Identical inputs
produce identical bytes, which the determinism guarantees rely on.
"""
from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"ADRC1\n"


def dump_bytes(meta: dict, arrays: dict[str, np.ndarray]) -> bytes:
    names = sorted(arrays)
    manifest = {
        "meta": meta,
        "arrays": [
            {"name": n, "dtype": str(arrays[n].dtype), "shape": list(arrays[n].shape)}
            for n in names
        ],
    }
    head = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [MAGIC, struct.pack("<Q", len(head)), head]
    parts.extend(np.ascontiguousarray(arrays[n]).tobytes() for n in names)
    return b"".join(parts)


def load_bytes(blob: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    if blob[: len(MAGIC)] != MAGIC:
        raise ValueError("not an adarec checkpoint (bad magic)")
    off = len(MAGIC)
    (head_len,) = struct.unpack("<Q", blob[off:off + 8])
    off += 8
    manifest = json.loads(blob[off:off + head_len].decode("utf-8"))
    off += head_len
    arrays = {}
    for spec in manifest["arrays"]:
        dtype = np.dtype(spec["dtype"])
        shape = tuple(spec["shape"])
        size = dtype.itemsize * int(np.prod(shape, dtype=np.int64)) if shape else dtype.itemsize
        count = int(np.prod(shape, dtype=np.int64))
        arr = np.frombuffer(blob, dtype=dtype, count=count, offset=off).reshape(shape)
        arrays[spec["name"]] = arr.copy()
        off += size
    return manifest["meta"], arrays


def save(path, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as fh:
        fh.write(dump_bytes(meta, arrays))


def load(path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        return load_bytes(fh.read())
