"""Parameter checkpoints.

Layout (little-endian): magic ``SGW1``, u32 entry count, then per entry a
u32 name length, the UTF-8 name, u32 rank, u32 dims[rank] and float32 values
in row-major order. Besides the weight and bias tensors the file carries one
``input_size`` entry holding (H, W, 3) so the network config can be rebuilt.
Values are stored as float32; float32 parameters round-trip bit-exactly.
"""

import struct
from pathlib import Path

import numpy as np

from .network import NetworkConfig, NetworkParams

MAGIC = b"SGW1"
INPUT_SIZE_ENTRY = "input_size"


class CheckpointError(ValueError):
    pass


def _entries(params):
    yield INPUT_SIZE_ENTRY, np.asarray(params.config.input_size, dtype=np.float32)
    yield from params.tensors.items()


def dumps(params):
    entries = list(_entries(params))
    out = [MAGIC, struct.pack("<I", len(entries))]
    for name, arr in entries:
        raw = name.encode("utf-8")
        arr = np.asarray(arr, dtype="<f4")
        out.append(struct.pack("<I", len(raw)) + raw)
        out.append(struct.pack(f"<I{arr.ndim}I", arr.ndim, *arr.shape))
        out.append(np.ascontiguousarray(arr).tobytes())
    return b"".join(out)


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise CheckpointError("checkpoint truncated")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u32(self):
        return struct.unpack("<I", self.take(4))[0]

    def u32s(self, count):
        return struct.unpack(f"<{count}I", self.take(4 * count))


def loads(data):
    if data[:4] != MAGIC:
        raise CheckpointError(f"bad checkpoint magic {data[:4]!r}")
    r = _Reader(data)
    r.take(4)
    tensors = {}
    for _ in range(r.u32()):
        name = r.take(r.u32()).decode("utf-8")
        rank = r.u32()
        dims = r.u32s(rank)
        count = int(np.prod(dims))
        arr = np.frombuffer(r.take(4 * count), dtype="<f4").reshape(dims)
        if name in tensors:
            raise CheckpointError(f"duplicate entry {name!r}")
        tensors[name] = arr.astype(np.float32)
    if r.pos != len(data):
        raise CheckpointError(f"{len(data) - r.pos} trailing bytes after last entry")
    if INPUT_SIZE_ENTRY not in tensors:
        raise CheckpointError("checkpoint lacks the input_size entry")
    input_size = tuple(int(v) for v in tensors.pop(INPUT_SIZE_ENTRY))
    filters = []
    i = 1
    while f"conv{i}.weight" in tensors:
        filters.append(tensors[f"conv{i}.weight"].shape[-1])
        i += 1
    config = NetworkConfig(input_size=input_size, conv_blocks=tuple(filters))
    expected = config.param_shapes()
    if set(expected) != set(tensors):
        raise CheckpointError(f"entries {sorted(tensors)} do not match a network with "
                              f"{len(filters)} conv blocks")
    for name, shape in expected.items():
        if tensors[name].shape != shape:
            raise CheckpointError(f"{name} has shape {tensors[name].shape}, expected {shape}")
    return NetworkParams(config, {name: tensors[name] for name in expected})


def save(path, params):
    Path(path).write_bytes(dumps(params))


def load(path):
    return loads(Path(path).read_bytes())
