# Save as: snapslam/io_utils/manifest.py
import hashlib
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from snapslam.config import TOOL_VERSION


@dataclass
class RunManifest:
    """Everything needed to rerun a command and get the same bytes back."""

    command_line: List[str]
    scenario_hash: str
    scenario_file_sha256: str
    master_seed: Optional[int] = None
    tool_version: str = TOOL_VERSION
    kernel_backend: str = ""
    threads: Optional[int] = None
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    extra: Dict[str, Any] = field(default_factory=dict)


def file_sha256(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def manifest_path(output: Union[str, Path]) -> Path:
    output = Path(output)
    return output.with_name(output.name + ".manifest.json")


def write_manifest(output: Union[str, Path], manifest: RunManifest) -> Path:
    path = manifest_path(output)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(asdict(manifest), f, indent=2, sort_keys=True)
        f.write("\n")
    return path
