"""Binary sample files (layout version 1, see ``docs/sample_format.md``).

All integers little-endian::

    magic     8 bytes   b"GLABSMP\\0"
    version   u16       1
    d         u16       lattice dimension
    dims      d x u32   extent of the rectangular volume per axis
    q         u16       alphabet size
    symbols   q x i32   alphabet symbols in index order
    seed      u64
    t         f64       time horizon
    reps      u64       number of stored configurations
    packing   u8        0 = one byte per site, 1 = bit-packed (q = 2 only)
    origin    d x i32   lexicographically smallest site

followed by ``reps`` records, each one configuration in row-major
(lexicographic) site order, as symbol indices.
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .lattice import Alphabet, Volume

MAGIC = b"GLABSMP\0"
VERSION = 1


@dataclass
class SampleFile:
    volume: Volume
    alphabet: Alphabet
    seed: int
    t: float
    values: np.ndarray  # (reps, n) symbols


def _rect_volume(origin, dims) -> Volume:
    grids = np.meshgrid(*[np.arange(o, o + n) for o, n in zip(origin, dims)], indexing="ij")
    return Volume(np.stack([g.ravel() for g in grids], axis=1))


def write_samples(path, volume: Volume, alphabet: Alphabet, values, seed: int, t: float) -> Path:
    lo, hi = volume.bounding_box
    dims = [b - a + 1 for a, b in zip(lo, hi)]
    if len(volume) != int(np.prod(dims)):
        raise ValueError("sample files store full rectangular volumes only")
    idx = alphabet.indices(np.atleast_2d(values)).astype(np.uint8)
    packing = 1 if alphabet.size == 2 else 0
    d = volume.d
    head = MAGIC + struct.pack("<HH", VERSION, d) + struct.pack(f"<{d}I", *dims)
    head += struct.pack("<H", alphabet.size) + struct.pack(f"<{alphabet.size}i", *alphabet.symbols)
    head += struct.pack("<QdQB", seed & (2**64 - 1), float(t), idx.shape[0], packing)
    head += struct.pack(f"<{d}i", *lo)
    body = np.packbits(idx, axis=1).tobytes() if packing else idx.tobytes()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(head)
            fh.write(body)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from None
    return path


def read_samples(path) -> SampleFile:
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise ValueError(f"{path}: not a sample file")
    off = 8
    version, d = struct.unpack_from("<HH", data, off)
    off += 4
    if version != VERSION:
        raise ValueError(f"{path}: unsupported sample format version {version}")
    dims = struct.unpack_from(f"<{d}I", data, off)
    off += 4 * d
    (q,) = struct.unpack_from("<H", data, off)
    off += 2
    symbols = struct.unpack_from(f"<{q}i", data, off)
    off += 4 * q
    seed, t, reps, packing = struct.unpack_from("<QdQB", data, off)
    off += struct.calcsize("<QdQB")
    origin = struct.unpack_from(f"<{d}i", data, off)
    off += 4 * d
    n = int(np.prod(dims))
    raw = np.frombuffer(data, dtype=np.uint8, offset=off)
    if packing:
        idx = np.unpackbits(raw.reshape(reps, -1), axis=1, count=n)
    else:
        idx = raw.reshape(reps, n)
    alphabet = Alphabet(tuple(symbols))
    return SampleFile(_rect_volume(origin, dims), alphabet, seed, t, alphabet.to_symbols(idx))
