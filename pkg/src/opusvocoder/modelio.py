"""LPNW model files.

Layout (little-endian)::

    b"LPNW"  u32 version
    config:  u32 n_a, n_b, feature_dim, frame_dim, n_classes, embed_dim, flags
             f64 density_u, density_r, density_h, beta_slope, threshold
    u32 section_count
    section: u16 name_len, name (ascii), u8 dtype (0 f32, 1 i32), u8 ndim,
             ndim x u32 dims, payload
    u64 checksum  (blake2b-64 of every preceding byte)

Block-sparse matrices are stored as three sections ``<name>.rows``,
``<name>.cols`` (i32 block coordinates) and ``<name>.values`` (f32, n x 16).
"""

import hashlib
import os
import struct
import tempfile

import numpy as np

from .nnet import BlockSparseMatrix, ModelConfig, ModelError, ModelWeights

MAGIC = b"LPNW"
VERSION = 1
FLAG_ADAPTED = 1

_HEAD = struct.Struct("<4sI")
_CONFIG = struct.Struct("<7I5d")
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<i4")}
_DTYPE_CODES = {np.dtype("<f4"): 0, np.dtype("<i4"): 1}


class ChecksumError(ModelError):
    pass


def checksum(payload):
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def _sections(model):
    for name, arr in model.arrays().items():
        yield name, np.asarray(arr, dtype="<f4")
    for name, m in model.sparse().items():
        yield f"{name}.rows", m.block_rows.astype("<i4")
        yield f"{name}.cols", m.block_cols.astype("<i4")
        yield f"{name}.values", m.values.astype("<f4")


def model_bytes(model):
    c = model.config
    out = [_HEAD.pack(MAGIC, VERSION),
           _CONFIG.pack(c.n_a, c.n_b, c.feature_dim, c.frame_dim, c.n_classes,
                        c.embed_dim, FLAG_ADAPTED if c.adapted else 0,
                        c.density_u, c.density_r, c.density_h, c.beta_slope, c.threshold)]
    sections = list(_sections(model))
    out.append(struct.pack("<I", len(sections)))
    for name, arr in sections:
        key = name.encode("ascii")
        out.append(struct.pack("<H", len(key)) + key)
        out.append(struct.pack("<BB", _DTYPE_CODES[arr.dtype], arr.ndim))
        out.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        out.append(np.ascontiguousarray(arr).tobytes())
    body = b"".join(out)
    return body + struct.pack("<Q", checksum(body))


def save_model(model, path):
    """Write atomically (temp file + rename); returns the byte count."""
    payload = model_bytes(model)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".lpnw-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return len(payload)


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise ModelError(f"model file truncated at byte {self.pos}")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt):
        s = struct.Struct(fmt)
        return s.unpack(self.take(s.size))


def parse_model(data):
    if len(data) < _HEAD.size + 8:
        raise ModelError("model file too short")
    body, tail = data[:-8], data[-8:]
    magic, version = _HEAD.unpack_from(body, 0)
    if magic != MAGIC:
        raise ModelError(f"bad magic {magic!r}, expected LPNW")
    if version != VERSION:
        raise ModelError(f"unsupported model version {version}")
    stored = struct.unpack("<Q", tail)[0]
    if stored != checksum(body):
        raise ChecksumError("model checksum mismatch")
    rd = _Reader(body)
    rd.pos = _HEAD.size
    vals = rd.unpack(_CONFIG.format)
    config = ModelConfig(n_a=vals[0], n_b=vals[1], feature_dim=vals[2], frame_dim=vals[3],
                         n_classes=vals[4], embed_dim=vals[5],
                         adapted=bool(vals[6] & FLAG_ADAPTED),
                         density_u=vals[7], density_r=vals[8], density_h=vals[9],
                         beta_slope=vals[10], threshold=vals[11])
    (count,) = rd.unpack("<I")
    arrays = {}
    for _ in range(count):
        (n,) = rd.unpack("<H")
        name = rd.take(n).decode("ascii")
        code, ndim = rd.unpack("<BB")
        if code not in _DTYPES:
            raise ModelError(f"section {name}: unknown dtype code {code}")
        shape = rd.unpack(f"<{ndim}I") if ndim else ()
        dtype = _DTYPES[code]
        nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        arrays[name] = np.frombuffer(rd.take(nbytes), dtype=dtype).reshape(shape).copy()
    if rd.pos != len(body):
        raise ModelError("unexpected bytes after last section")
    kwargs = {}
    for name in ("w_u", "w_r", "w_h"):
        try:
            kwargs[name] = BlockSparseMatrix(
                config.n_a, config.n_a, arrays.pop(f"{name}.rows"),
                arrays.pop(f"{name}.cols"), arrays.pop(f"{name}.values"))
        except KeyError as exc:
            raise ModelError(f"missing section {exc.args[0]}") from None
    try:
        return ModelWeights(config=config, **arrays, **kwargs)
    except TypeError as exc:
        raise ModelError(f"inconsistent section set: {exc}") from None


def load_model(path):
    with open(path, "rb") as fh:
        return parse_model(fh.read())


def file_checksum(path):
    with open(path, "rb") as fh:
        data = fh.read()
    return struct.unpack("<Q", data[-8:])[0]
