"""Binary checkpoint format for networks and optimizer state.

Layout (all integers little-endian)::

    magic        8 bytes   b"DQNDOVS\\x00"
    version      u32
    arch hash    32 bytes  sha256 of the architecture config
    step         u64       optimizer step counter
    manifest len u32
    manifest     JSON      tensor names, shapes, byte offsets, metadata
    payload      float64   little-endian, tensors back to back
    checksum     32 bytes  sha256 of everything above

Files are written in one go and read back with the checksum verified before
anything else is trusted.
"""

import hashlib
import json
import logging
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from dqndovs.core.errors import ChecksumMismatch, CheckpointError, VersionMismatch
from dqndovs.core.network import Adam, ArchitectureConfig, QNetwork

logger = logging.getLogger("dqndovs.checkpoint")

MAGIC = b"DQNDOVS\x00"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sI32sQI")
_DIGEST_SIZE = 32
_FLOAT = np.dtype("<f8")


@dataclass
class Checkpoint:
    """Everything restored from a checkpoint file."""

    online: QNetwork
    target: QNetwork | None = None
    optimizer: Adam | None = None
    step: int = 0
    meta: dict = field(default_factory=dict)


def save_weights(
    path: Path | str,
    net: QNetwork,
    opt: Adam | None = None,
    target: QNetwork | None = None,
    meta: dict | None = None,
) -> str:
    """Write a checkpoint and return the sha256 hex digest of the file."""
    tensors: list[tuple[str, np.ndarray]] = [(f"online/{k}", v) for k, v in net.params.items()]
    if target is not None:
        tensors += [(f"target/{k}", v) for k, v in target.params.items()]
    optimizer = None
    if opt is not None:
        tensors += [(f"adam.m/{k}", v) for k, v in opt.m.items()]
        tensors += [(f"adam.v/{k}", v) for k, v in opt.v.items()]
        optimizer = {
            "lr_start": opt.lr_start,
            "lr_end": opt.lr_end,
            "total_steps": opt.total_steps,
            "beta1": opt.beta1,
            "beta2": opt.beta2,
            "eps": opt.eps,
        }

    entries = []
    chunks = []
    offset = 0
    for name, value in tensors:
        data = np.ascontiguousarray(value, dtype=_FLOAT).tobytes()
        entries.append({"name": name, "shape": list(value.shape), "offset": offset})
        chunks.append(data)
        offset += len(data)

    manifest = json.dumps(
        {
            "arch": asdict(net.arch),
            "optimizer": optimizer,
            "meta": meta or {},
            "tensors": entries,
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode()
    step = opt.step if opt is not None else 0
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, net.arch.digest(), step, len(manifest))
    body = header + manifest + b"".join(chunks)
    digest = hashlib.sha256(body).digest()

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(body + digest)
    logger.info("Wrote checkpoint %s (step %d)", path, step)
    return hashlib.sha256(body + digest).hexdigest()


def load_weights(path: Path | str, arch: ArchitectureConfig | None = None) -> Checkpoint:
    """Read a checkpoint written by ``save_weights``.

    Args:
        path: Checkpoint file.
        arch: Expected architecture; when given, a file built for another
            architecture is rejected.

    Raises:
        ChecksumMismatch: If the file is truncated or corrupted.
        VersionMismatch: On an unknown format version or architecture.
        CheckpointError: If the file is not a checkpoint at all.
    """
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size + _DIGEST_SIZE:
        raise ChecksumMismatch(f"{path}: file too short to be a checkpoint")
    body, digest = raw[:-_DIGEST_SIZE], raw[-_DIGEST_SIZE:]
    if hashlib.sha256(body).digest() != digest:
        raise ChecksumMismatch(f"{path}: checksum does not match contents")

    magic, version, arch_hash, step, manifest_len = _HEADER.unpack_from(body)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"{path}: format version {version}, expected {FORMAT_VERSION}")

    manifest = json.loads(body[_HEADER.size : _HEADER.size + manifest_len])
    stored_arch = ArchitectureConfig(**manifest["arch"])
    if stored_arch.digest() != arch_hash:
        raise VersionMismatch(f"{path}: architecture hash does not match its manifest")
    if arch is not None and arch != stored_arch:
        raise VersionMismatch(f"{path}: checkpoint was built for a different architecture")

    payload = body[_HEADER.size + manifest_len :]
    arrays: dict[str, np.ndarray] = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        end = start + count * _FLOAT.itemsize
        if end > len(payload):
            raise ChecksumMismatch(f"{path}: tensor {entry['name']} runs past the payload")
        arrays[entry["name"]] = (
            np.frombuffer(payload[start:end], dtype=_FLOAT).astype(np.float64).reshape(shape)
        )

    online = _network(stored_arch, arrays, "online/")
    target = _network(stored_arch, arrays, "target/") if any(
        k.startswith("target/") for k in arrays
    ) else None

    optimizer = None
    if manifest.get("optimizer") is not None:
        settings = manifest["optimizer"]
        optimizer = Adam(online.params, **settings)
        optimizer.step = step
        for name in online.params:
            optimizer.m[name] = arrays[f"adam.m/{name}"]
            optimizer.v[name] = arrays[f"adam.v/{name}"]

    logger.debug("Loaded checkpoint %s (step %d)", path, step)
    return Checkpoint(online=online, target=target, optimizer=optimizer, step=step, meta=manifest["meta"])


def _network(arch: ArchitectureConfig, arrays: dict[str, np.ndarray], prefix: str) -> QNetwork:
    net = QNetwork(arch, seed=0)
    for name, shape in arch.shapes().items():
        key = prefix + name
        if key not in arrays or arrays[key].shape != shape:
            raise VersionMismatch(f"tensor {key} missing or has the wrong shape")
        net.params[name] = arrays[key]
    return net
