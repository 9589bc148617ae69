"""Binary model files: a JSON manifest, raw little-endian parameter blobs
with per-blob shape headers, and a whole-file SHA-256 checksum.

Relevance-network files do not embed their experts; they reference them
by checksum so the frozen stage-1 models stay shared on disk.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .errors import CorruptFileError, VersionError
from .experts import ExpertConfig, ExpertModel, SegmentNet, TrainingMetadata
from .features import BandSplit
from .relevance import ExpertSet
from .relnet import ConvnetModel, RelnetModel

EXPERT_MAGIC = b"RAEX"
RELNET_MAGIC = b"RARN"
CONVNET_MAGIC = b"RACN"
FORMAT_VERSION = 1
_CHECKSUM_LEN = 32

_DTYPES = {0: "<f4", 1: "<f8"}
_DTYPE_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}


class _Writer:
    def __init__(self, magic: bytes):
        self.parts = [magic, struct.pack("<I", FORMAT_VERSION)]

    def manifest(self, payload: dict) -> None:
        raw = json.dumps(payload, sort_keys=True).encode()
        self.parts.append(struct.pack("<I", len(raw)))
        self.parts.append(raw)

    def blobs(self, named: list[tuple[str, np.ndarray]]) -> None:
        self.parts.append(struct.pack("<I", len(named)))
        for name, array in named:
            encoded = name.encode()
            code = _DTYPE_CODES[np.dtype(array.dtype)]
            self.parts.append(struct.pack("<H", len(encoded)))
            self.parts.append(encoded)
            self.parts.append(struct.pack("<BB", code, array.ndim))
            self.parts.append(struct.pack(f"<{array.ndim}I", *array.shape))
            self.parts.append(np.ascontiguousarray(array, dtype=_DTYPES[code]).tobytes())

    def write(self, path: str | Path) -> str:
        body = b"".join(self.parts)
        digest = hashlib.sha256(body).digest()
        Path(path).write_bytes(body + digest)
        return digest.hex()


class _Reader:
    def __init__(self, path: str | Path, magic: bytes):
        raw = Path(path).read_bytes()
        if len(raw) < 8 + _CHECKSUM_LEN:
            raise CorruptFileError(f"model file {path} is truncated")
        body, digest = raw[:-_CHECKSUM_LEN], raw[-_CHECKSUM_LEN:]
        if hashlib.sha256(body).digest() != digest:
            raise CorruptFileError(f"model file {path} failed its checksum")
        if body[:4] != magic:
            raise CorruptFileError(
                f"{path} does not look like a {magic.decode()} model file")
        (version,) = struct.unpack_from("<I", body, 4)
        if version != FORMAT_VERSION:
            raise VersionError(
                f"model file {path} has format version {version}, this build "
                f"reads version {FORMAT_VERSION}")
        self.body = body
        self.offset = 8
        self.checksum = digest.hex()
        self.path = path

    def _take(self, fmt: str):
        values = struct.unpack_from(fmt, self.body, self.offset)
        self.offset += struct.calcsize(fmt)
        return values

    def manifest(self) -> dict:
        (length,) = self._take("<I")
        raw = self.body[self.offset:self.offset + length]
        self.offset += length
        return json.loads(raw)

    def blobs(self) -> dict[str, np.ndarray]:
        (count,) = self._take("<I")
        out = {}
        for _ in range(count):
            (name_len,) = self._take("<H")
            name = self.body[self.offset:self.offset + name_len].decode()
            self.offset += name_len
            code, ndim = self._take("<BB")
            shape = self._take(f"<{ndim}I")
            dtype = np.dtype(_DTYPES[code])
            n_bytes = int(np.prod(shape)) * dtype.itemsize
            data = self.body[self.offset:self.offset + n_bytes]
            if len(data) != n_bytes:
                raise CorruptFileError(f"model file {self.path} is truncated")
            self.offset += n_bytes
            out[name] = np.frombuffer(data, dtype=dtype).reshape(shape).copy()
        return out


def file_checksum(path: str | Path) -> str:
    """Checksum as stored in the file's trailer."""
    raw = Path(path).read_bytes()
    if len(raw) < _CHECKSUM_LEN:
        raise CorruptFileError(f"model file {path} is truncated")
    return raw[-_CHECKSUM_LEN:].hex()


def _config_dict(config: ExpertConfig) -> dict:
    return asdict(config)


def _config_from_dict(raw: dict) -> ExpertConfig:
    raw = dict(raw)
    raw["band_split"] = BandSplit(**raw["band_split"])
    return ExpertConfig(**raw)


def _metadata_dict(metadata: TrainingMetadata) -> dict:
    return {"epochs_run": metadata.epochs_run, "best_epoch": metadata.best_epoch,
            "best_val_loss": metadata.best_val_loss}


def _metadata_from_dict(raw: dict) -> TrainingMetadata:
    return TrainingMetadata(raw["epochs_run"], raw["best_epoch"], raw["best_val_loss"])


def _load_net(config: ExpertConfig, n_out: int, blobs: dict[str, np.ndarray],
              path) -> SegmentNet:
    net = SegmentNet(config, n_out=n_out)
    for name, param in net.named_params():
        if name not in blobs:
            raise CorruptFileError(f"model file {path} is missing parameter {name!r}")
        stored = blobs[name]
        if stored.shape != param.value.shape:
            raise CorruptFileError(
                f"model file {path}: parameter {name!r} has shape {stored.shape}, "
                f"expected {param.value.shape}")
        param.value = stored
        param.grad = np.zeros_like(stored)
    return net


def save_expert(model: ExpertModel, path: str | Path) -> str:
    """Write an expert model; returns the file checksum (hex)."""
    writer = _Writer(EXPERT_MAGIC)
    writer.manifest({
        "kind": "expert",
        "class_id": model.class_id,
        "class_name": model.class_name,
        "config": _config_dict(model.config),
        "metadata": _metadata_dict(model.metadata),
    })
    writer.blobs([(name, p.value) for name, p in model.net.named_params()])
    return writer.write(path)


def load_expert(path: str | Path) -> ExpertModel:
    reader = _Reader(path, EXPERT_MAGIC)
    manifest = reader.manifest()
    config = _config_from_dict(manifest["config"])
    net = _load_net(config, 2, reader.blobs(), path)
    return ExpertModel(config, manifest["class_id"], manifest["class_name"], net,
                       _metadata_from_dict(manifest["metadata"]))


def save_relnet(model: RelnetModel, path: str | Path,
                expert_checksums: dict[int, str]) -> str:
    """Write the classifier branch plus checksum references to its experts.

    expert_checksums maps class_id -> hex checksum of the expert file, as
    returned by save_expert.
    """
    missing = [e.class_id for e in model.experts if e.class_id not in expert_checksums]
    if missing:
        raise ValueError(f"no expert file checksums for classes {missing}")
    writer = _Writer(RELNET_MAGIC)
    writer.manifest({
        "kind": "relnet",
        "experts": [
            {"class_id": e.class_id, "class_name": e.class_name,
             "checksum": expert_checksums[e.class_id]}
            for e in model.experts
        ],
        "config": _config_dict(model.classifier.config),
        "metadata": _metadata_dict(model.metadata),
    })
    writer.blobs([(name, p.value) for name, p in model.classifier.named_params()])
    return writer.write(path)


def load_relnet(path: str | Path, expert_files: dict[str, ExpertModel]) -> RelnetModel:
    """Load a relevance network, resolving experts from checksum -> model.

    expert_files usually comes from load_expert_directory().
    """
    reader = _Reader(path, RELNET_MAGIC)
    manifest = reader.manifest()
    entries = []
    for ref in manifest["experts"]:
        expert = expert_files.get(ref["checksum"])
        if expert is None:
            raise ValueError(
                f"relnet file {path} references expert {ref['class_name']!r} "
                f"(checksum {ref['checksum'][:12]}...) which is not available")
        entries.append(expert)
    config = _config_from_dict(manifest["config"])
    net = _load_net(config, len(entries), reader.blobs(), path)
    return RelnetModel(ExpertSet(entries), net, _metadata_from_dict(manifest["metadata"]))


def save_convnet(model: ConvnetModel, path: str | Path) -> str:
    """Write the baseline classifier (no relevance branch)."""
    writer = _Writer(CONVNET_MAGIC)
    writer.manifest({
        "kind": "convnet",
        "class_names": model.class_names,
        "config": _config_dict(model.classifier.config),
        "metadata": _metadata_dict(model.metadata),
    })
    writer.blobs([(name, p.value) for name, p in model.classifier.named_params()])
    return writer.write(path)


def load_convnet(path: str | Path) -> ConvnetModel:
    reader = _Reader(path, CONVNET_MAGIC)
    manifest = reader.manifest()
    config = _config_from_dict(manifest["config"])
    net = _load_net(config, len(manifest["class_names"]), reader.blobs(), path)
    return ConvnetModel(net, manifest["class_names"],
                        _metadata_from_dict(manifest["metadata"]))


def load_expert_directory(directory: str | Path, pattern: str = "*.expert"
                          ) -> dict[str, ExpertModel]:
    """Load every expert file under a directory, keyed by checksum."""
    out = {}
    for file in sorted(Path(directory).glob(pattern)):
        out[file_checksum(file)] = load_expert(file)
    return out
