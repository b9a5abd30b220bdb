# Save as: snapslam/config.py
# Runtime settings. Environment variables win over defaults.yaml, and a .env
# file in the working directory is read first.
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict

import yaml
from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)

TOOL_VERSION = "0.1"

DEFAULTS_PATH = Path(os.environ.get("SNAPSLAM_DEFAULTS", Path(__file__).parent / "defaults.yaml"))

_BUILTIN_DEFAULTS: Dict[str, Any] = {
    "search_region": {"x_min": -5.0, "x_max": 5.0, "y_min": -10.0, "y_max": 30.0},
    "object_height_z": -1.4,
    "placement_bounds": {"x_min": -4.0, "x_max": 4.0, "y_min": -8.0, "y_max": 8.0},
    "min_ue_sp_separation_m": 1.0,
    "success_radius_m": 0.2,
    "oracle_match_radius_m": 0.5,
    "residual_eps": 1e-3,
    "max_targets": 3,
    "grid_cap": 100_000_000,
}


@dataclass(frozen=True)
class Bounds2D:
    x_min: float
    x_max: float
    y_min: float
    y_max: float


@dataclass(frozen=True)
class ExperimentDefaults:
    search_region: Bounds2D
    object_height_z: float
    placement_bounds: Bounds2D
    min_ue_sp_separation_m: float
    success_radius_m: float
    oracle_match_radius_m: float
    residual_eps: float
    max_targets: int
    grid_cap: int
    source: str = field(default="builtin", compare=False)


def _load_yaml_defaults(path: Path) -> Dict[str, Any]:
    """Loads defaults.yaml; anything missing or unreadable falls back to builtins."""
    merged = dict(_BUILTIN_DEFAULTS)
    try:
        with open(path, "r", encoding="utf-8") as f:
            loaded = yaml.safe_load(f) or {}
        if not isinstance(loaded, dict):
            raise ValueError(f"expected a mapping, got {type(loaded).__name__}")
        unknown = set(loaded) - set(_BUILTIN_DEFAULTS)
        if unknown:
            logger.warning(f"⚠️ [Config] Ignoring unknown keys in {path}: {sorted(unknown)}")
        merged.update({k: v for k, v in loaded.items() if k in _BUILTIN_DEFAULTS})
    except FileNotFoundError:
        logger.warning(f"⚠️ [Config] Defaults file not found at {path}, using built-in values")
    except (yaml.YAMLError, ValueError) as e:
        logger.warning(f"⚠️ [Config] Could not read {path} ({e}), using built-in values")
    return merged


def load_defaults(path: Path = DEFAULTS_PATH) -> ExperimentDefaults:
    raw = _load_yaml_defaults(path)
    return ExperimentDefaults(
        search_region=Bounds2D(**{k: float(v) for k, v in raw["search_region"].items()}),
        object_height_z=float(raw["object_height_z"]),
        placement_bounds=Bounds2D(**{k: float(v) for k, v in raw["placement_bounds"].items()}),
        min_ue_sp_separation_m=float(raw["min_ue_sp_separation_m"]),
        success_radius_m=float(raw["success_radius_m"]),
        oracle_match_radius_m=float(raw["oracle_match_radius_m"]),
        residual_eps=float(raw["residual_eps"]),
        max_targets=int(raw["max_targets"]),
        grid_cap=int(os.environ.get("SNAPSLAM_GRID_CAP", raw["grid_cap"])),
        source=str(path),
    )


DEFAULTS = load_defaults()

LOG_LEVEL = os.environ.get("SNAPSLAM_LOG_LEVEL", "INFO").upper()
SHOW_PROGRESS = os.environ.get("SNAPSLAM_PROGRESS", "1") not in ("0", "false", "no")


def default_threads() -> int:
    env_threads = os.environ.get("SNAPSLAM_THREADS")
    if env_threads:
        return max(1, int(env_threads))
    return os.cpu_count() or 1


def set_threads(n: int) -> int:
    """Applies the imaging kernel thread count. Returns the count in effect."""
    from snapslam.imaging.kernels import set_kernel_threads

    return set_kernel_threads(max(1, int(n)))
