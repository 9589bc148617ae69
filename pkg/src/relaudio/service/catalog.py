"""Artifact registry loaded once at startup and immutable afterwards."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ..data import load_manifest
from ..errors import FileFormatError
from ..experts import ExpertModel
from ..features import MelSpectrogram, load_features
from ..modelio import file_checksum, load_expert, load_relnet
from ..relnet import RelnetModel


@dataclass
class ClipEntry:
    id: str
    label: str
    features: MelSpectrogram

    @property
    def duration_seconds(self) -> float:
        return self.features.frames * self.features.frame_hop_seconds


class SessionCatalog:
    """Clips, experts, and relevance networks for one service process.

    Everything is loaded and checksum-verified up front; a corrupt file
    aborts startup with the offending path in the error.
    """

    def __init__(self, models_dir: str | Path, features_dir: str | Path,
                 manifest_path: str | Path | None = None):
        models_dir = Path(models_dir)
        features_dir = Path(features_dir)
        self.experts: dict[str, ExpertModel] = {}
        self._by_checksum: dict[str, ExpertModel] = {}
        for file in sorted(models_dir.glob("*.expert")):
            try:
                model = load_expert(file)
            except FileFormatError as exc:
                raise FileFormatError(f"cannot load expert file {file}: {exc}") from exc
            self.experts[file.stem] = model
            self._by_checksum[file_checksum(file)] = model

        self.relnets: dict[str, RelnetModel] = {}
        for file in sorted(models_dir.glob("*.relnet")):
            try:
                self.relnets[file.stem] = load_relnet(file, self._by_checksum)
            except FileFormatError as exc:
                raise FileFormatError(f"cannot load relnet file {file}: {exc}") from exc

        self.clips: dict[str, ClipEntry] = {}
        if manifest_path is not None and Path(manifest_path).exists():
            manifest = load_manifest(manifest_path)
            root = Path(manifest_path).parent
            for record in manifest.records:
                clip_id = Path(record.path).stem
                feature_file = self._resolve(record.path, root, features_dir)
                self.clips[clip_id] = ClipEntry(clip_id, record.label,
                                                load_features(feature_file))
        else:
            for file in sorted(features_dir.glob("*.mel")):
                self.clips[file.stem] = ClipEntry(file.stem, "", load_features(file))

    @staticmethod
    def _resolve(record_path: str, manifest_root: Path, features_dir: Path) -> Path:
        candidate = manifest_root / record_path
        if candidate.exists():
            return candidate
        return features_dir / Path(record_path).name
