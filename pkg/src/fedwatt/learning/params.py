"""Flat model parameter vectors with bit-size accounting and file I/O."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"FWPV"
FORMAT_VERSION = 1

# header: magic (4s), format version (u16), bits per parameter (u16),
# parameter count (u64), all little-endian; then the raw values.
_HEADER = struct.Struct("<4sHHQ")

_DTYPES = {32: np.dtype("<f4"), 64: np.dtype("<f8")}


@dataclass(frozen=True)
class ParamVector:
    """Flat parameter vector plus the bit width used for transmission accounting."""

    values: np.ndarray
    bits_per_param: int = 32

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", arr)
        if arr.ndim != 1:
            raise ValueError("parameter vector must be one-dimensional")
        if self.bits_per_param not in _DTYPES:
            raise ValueError(f"unsupported bits_per_param: {self.bits_per_param}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("parameter vector contains non-finite entries")

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def bit_size(self) -> int:
        """Transmitted size in bits: parameter count times bits per parameter."""
        return len(self) * self.bits_per_param

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParamVector):
            return NotImplemented
        return (
            self.bits_per_param == other.bits_per_param
            and self.values.shape == other.values.shape
            and bool(np.all(self.values == other.values))
        )

    def save(self, path) -> None:
        """Write the documented little-endian binary format."""
        dtype = _DTYPES[self.bits_per_param]
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, self.bits_per_param, len(self)))
            fh.write(np.ascontiguousarray(self.values, dtype=dtype).tobytes())

    @classmethod
    def load(cls, path) -> "ParamVector":
        with open(path, "rb") as fh:
            header = fh.read(_HEADER.size)
            if len(header) != _HEADER.size:
                raise ValueError(f"{path}: truncated header")
            magic, version, bits, count = _HEADER.unpack(header)
            if magic != MAGIC:
                raise ValueError(f"{path}: not a parameter vector file (bad magic)")
            if version != FORMAT_VERSION:
                raise ValueError(f"{path}: unsupported format version {version}")
            if bits not in _DTYPES:
                raise ValueError(f"{path}: unsupported bits_per_param {bits}")
            dtype = _DTYPES[bits]
            payload = fh.read(count * dtype.itemsize)
            if len(payload) != count * dtype.itemsize:
                raise ValueError(f"{path}: truncated payload")
            values = np.frombuffer(payload, dtype=dtype).astype(np.float64)
        return cls(values=values, bits_per_param=bits)
