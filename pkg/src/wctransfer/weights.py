"""Binary weight container ("WCTW") and the weight store the engine runs from.

Layout, all little-endian:

    magic  b"WCTW"
    u32    version (currently 1)
    u32    metadata length, then that many UTF-8 bytes of "key: value" lines
    u32    tensor count
    per tensor:
        u16  name length, then UTF-8 name
        u8   dtype code (0 = float32)
        u8   rank, then rank x u32 dims
        raw  row-major data
        u32  CRC32 of the raw data
    u32    CRC32 of the whole file up to this point

A weight store also carries the network layer specs (text, one layer per line);
loading a bare .wctw file attaches the packaged VGG-19 specs, while loading a
directory lets spec files sitting next to the weights override them.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, WeightFormatError

__all__ = [
    "MAGIC",
    "VERSION",
    "WEIGHTS_FILENAME",
    "WeightStore",
    "load_weights",
    "load_model_dir",
    "write_weights",
]

MAGIC = b"WCTW"
VERSION = 1
DTYPE_FLOAT32 = 0
WEIGHTS_FILENAME = "weights.wctw"

_DIRECTIONS = ("encoder", "decoder")
_LEVELS = (1, 2, 3, 4, 5)


@dataclass
class WeightStore:
    """Loaded tensors + metadata + network spec texts. Immutable after load."""

    tensors: dict[str, np.ndarray]
    metadata: dict[str, str]
    netspecs: dict[tuple[str, int], str]
    tensor_order: tuple[str, ...] = ()
    networks_cache: dict = field(default_factory=dict, repr=False)

    def tensor(self, name: str) -> np.ndarray:
        try:
            return self.tensors[name]
        except KeyError:
            raise ConfigurationError(
                f"weight store has no tensor named {name!r}"
            ) from None

    def netspec(self, direction: str, level: int) -> str:
        try:
            return self.netspecs[(direction, level)]
        except KeyError:
            raise ConfigurationError(
                f"no network spec for {direction} level {level}"
            ) from None

    def mean(self) -> np.ndarray:
        """Per-channel preprocessing means, in network channel order."""
        raw = self.metadata.get("mean", "0,0,0")
        try:
            parts = [float(p) for p in raw.split(",")]
        except ValueError:
            parts = []
        if len(parts) != 3:
            raise WeightFormatError(f"metadata 'mean' must be three floats, got {raw!r}")
        return np.array(parts, dtype=np.float32)

    def channel_order(self) -> str:
        order = self.metadata.get("channel_order", "rgb")
        if order not in ("rgb", "bgr"):
            raise WeightFormatError(
                f"metadata 'channel_order' must be 'rgb' or 'bgr', got {order!r}"
            )
        return order


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.buf):
            raise WeightFormatError(
                f"file truncated while reading {what}", offset=self.pos
            )
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self, what: str) -> int:
        return self.take(1, what)[0]

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def parse_metadata(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#") or ":" not in line:
            continue
        key, value = line.split(":", 1)
        out[key.strip()] = value.strip()
    return out


def read_weight_file(path) -> tuple[dict[str, np.ndarray], dict[str, str], tuple[str, ...]]:
    """Parse one .wctw file: (tensors, metadata, tensor order)."""
    data = Path(path).read_bytes()
    if len(data) < 4 + 4 + 4 + 4 + 4:
        raise WeightFormatError("file too short to be a weight container", offset=0)
    if data[-4:] != struct.pack("<I", zlib.crc32(data[:-4]) & 0xFFFFFFFF):
        raise WeightFormatError(
            "file checksum mismatch: container is corrupt or truncated",
            offset=len(data) - 4,
        )
    r = _Reader(data[:-4])
    if r.take(4, "magic") != MAGIC:
        raise WeightFormatError(
            f"bad magic: expected {MAGIC!r}", offset=0
        )
    version = r.u32("version")
    if version != VERSION:
        raise WeightFormatError(
            f"unsupported container version {version} (supported: {VERSION})", offset=4
        )
    meta_len = r.u32("metadata length")
    try:
        meta_text = r.take(meta_len, "metadata").decode("utf-8")
    except UnicodeDecodeError as e:
        raise WeightFormatError(f"metadata is not valid UTF-8: {e}", offset=12) from None
    metadata = parse_metadata(meta_text)

    count = r.u32("tensor count")
    tensors: dict[str, np.ndarray] = {}
    order: list[str] = []
    for i in range(count):
        name_at = r.pos
        name_len = r.u16(f"tensor {i} name length")
        try:
            name = r.take(name_len, f"tensor {i} name").decode("utf-8")
        except UnicodeDecodeError as e:
            raise WeightFormatError(
                f"tensor {i} name is not valid UTF-8: {e}", offset=name_at
            ) from None
        if name in tensors:
            raise WeightFormatError(f"duplicate tensor name {name!r}", offset=name_at)
        dtype = r.u8(f"tensor {name} dtype")
        if dtype != DTYPE_FLOAT32:
            raise WeightFormatError(
                f"tensor {name!r} has unsupported dtype code {dtype}", offset=r.pos - 1
            )
        rank = r.u8(f"tensor {name} rank")
        dims = tuple(r.u32(f"tensor {name} dim {j}") for j in range(rank))
        n_elems = 1
        for d in dims:
            if d == 0:
                raise WeightFormatError(
                    f"tensor {name!r} has a zero dimension", offset=r.pos
                )
            n_elems *= d
        data_at = r.pos
        raw = r.take(4 * n_elems, f"tensor {name} data")
        crc = r.u32(f"tensor {name} checksum")
        if crc != (zlib.crc32(raw) & 0xFFFFFFFF):
            raise WeightFormatError(
                f"tensor {name!r} data fails its checksum", offset=data_at
            )
        arr = np.frombuffer(raw, dtype="<f4").reshape(dims).astype(np.float32)
        if not np.all(np.isfinite(arr)):
            raise WeightFormatError(
                f"tensor {name!r} contains non-finite values", offset=data_at
            )
        tensors[name] = arr
        order.append(name)
    if r.pos != len(r.buf):
        raise WeightFormatError(
            f"{len(r.buf) - r.pos} trailing bytes after the last tensor", offset=r.pos
        )
    return tensors, metadata, tuple(order)


def write_weights(path, tensors, metadata: dict[str, str] | None = None) -> None:
    """Serialize tensors (name -> float32 array) into the container format.

    ``tensors`` may be a dict (insertion order kept) or a list of (name, array).
    """
    items = list(tensors.items()) if isinstance(tensors, dict) else list(tensors)
    meta_text = "".join(f"{k}: {v}\n" for k, v in (metadata or {}).items())
    meta_bytes = meta_text.encode("utf-8")
    parts = [MAGIC, struct.pack("<I", VERSION)]
    parts.append(struct.pack("<I", len(meta_bytes)))
    parts.append(meta_bytes)
    parts.append(struct.pack("<I", len(items)))
    for name, arr in items:
        arr = np.ascontiguousarray(arr, dtype="<f4")
        name_bytes = name.encode("utf-8")
        parts.append(struct.pack("<H", len(name_bytes)))
        parts.append(name_bytes)
        parts.append(struct.pack("<BB", DTYPE_FLOAT32, arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        raw = arr.tobytes()
        parts.append(raw)
        parts.append(struct.pack("<I", zlib.crc32(raw) & 0xFFFFFFFF))
    body = b"".join(parts)
    Path(path).write_bytes(body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF))


def packaged_netspecs() -> dict[tuple[str, int], str]:
    """The VGG-19 encoder/decoder layer specs shipped with the package."""
    specs: dict[tuple[str, int], str] = {}
    base = resources.files("wctransfer").joinpath("netspecs")
    for direction in _DIRECTIONS:
        for level in _LEVELS:
            specs[(direction, level)] = (
                base.joinpath(f"{direction}{level}.txt").read_text(encoding="utf-8")
            )
    return specs


def load_weights(path) -> WeightStore:
    """Load a bare .wctw file; network specs default to the packaged VGG-19 set."""
    tensors, metadata, order = read_weight_file(path)
    return WeightStore(tensors, metadata, packaged_netspecs(), order)


def load_model_dir(path) -> WeightStore:
    """Load a model directory: weights.wctw plus optional per-network spec overrides.

    A file named encoder3.txt (etc.) next to the weights replaces the packaged
    spec for that network — this is how reduced-width test models ship.
    """
    root = Path(path)
    weight_path = root / WEIGHTS_FILENAME
    if not weight_path.is_file():
        raise FileNotFoundError(f"no {WEIGHTS_FILENAME} in {root}")
    tensors, metadata, order = read_weight_file(weight_path)
    specs = packaged_netspecs()
    for direction in _DIRECTIONS:
        for level in _LEVELS:
            override = root / f"{direction}{level}.txt"
            if override.is_file():
                specs[(direction, level)] = override.read_text(encoding="utf-8")
    return WeightStore(tensors, metadata, specs, order)


def resolve_store(path) -> WeightStore:
    """Accept either a model directory or a bare .wctw file path."""
    p = Path(path)
    if p.is_dir():
        return load_model_dir(p)
    return load_weights(p)
