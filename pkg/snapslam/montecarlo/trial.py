# Save as: snapslam/montecarlo/trial.py
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from snapslam.config import DEFAULTS, Bounds2D
from snapslam.errors import SnapSlamError
from snapslam.forward import Seeded, draw_phases, synthesize_snapshot
from snapslam.imaging.grid import GridSpec
from snapslam.montecarlo.matching import match_pairs
from snapslam.rng import Stream, substream
from snapslam.scene import Scenario, ScatterPoint, Vec3, mirror_point, surface_from_vue
from snapslam.slam import StopRule, run_slam, run_slam_oracle_removal

logger = logging.getLogger(__name__)

OBJECTS = ("UE", "VUE", "SP")

_MAX_PLACEMENT_ATTEMPTS = 10_000


class Variant(Enum):
    ESTIMATED = "estimated"
    PERFECT_REMOVAL = "pr"


def default_search_grid(spacing: float) -> GridSpec:
    r = DEFAULTS.search_region
    return GridSpec(r.x_min, r.x_max, r.y_min, r.y_max, DEFAULTS.object_height_z, spacing)


@dataclass(frozen=True)
class TrialConfig:
    """One Monte Carlo experiment point.

    UE and SP are placed uniformly and continuously inside `placement`, at the
    known height `object_z`, at least `min_separation` apart. The base
    scenario must hold exactly one reflecting surface and one scatterer; the
    scatterer keeps its RCS and only moves.
    """

    base_scenario: Scenario
    grid: GridSpec
    trials: int = 500
    master_seed: int = 0
    variant: Variant = Variant.ESTIMATED
    placement: Bounds2D = DEFAULTS.placement_bounds
    object_z: float = DEFAULTS.object_height_z
    min_separation: float = DEFAULTS.min_ue_sp_separation_m
    success_radius: float = DEFAULTS.success_radius_m
    match_radius: float = DEFAULTS.oracle_match_radius_m
    max_targets: int = DEFAULTS.max_targets
    snap_to_grid: bool = False

    def __post_init__(self):
        if not self.success_radius > 0:
            raise ValueError(f"success_radius must be positive, got {self.success_radius}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if len(self.base_scenario.surfaces) != 1 or len(self.base_scenario.scatterers) != 1:
            raise ValueError("Monte Carlo trials need exactly one reflecting surface and one scatterer")
        p = self.placement
        if p.x_max < p.x_min or p.y_max < p.y_min:
            raise ValueError(f"placement bounds are inverted: {p}")

    def at(self, spacing: float, variant: Variant) -> "TrialConfig":
        return replace(self, grid=self.grid.with_spacing(spacing), variant=variant)


@dataclass
class TrialOutcome:
    trial_index: int
    flags: Dict[str, bool]
    truths: Dict[str, Vec3] = field(default_factory=dict)
    detections: List[Vec3] = field(default_factory=list)
    matches: Dict[str, int] = field(default_factory=dict)
    surface_offset_err: Optional[float] = None
    surface_angle_err: Optional[float] = None
    error: Optional[str] = None


def draw_placement(cfg: TrialConfig, trial_index: int) -> Tuple[Vec3, Vec3]:
    rng = substream(cfg.master_seed, trial_index, Stream.PLACEMENT)
    p = cfg.placement

    def draw() -> Vec3:
        return Vec3(rng.uniform(p.x_min, p.x_max), rng.uniform(p.y_min, p.y_max), cfg.object_z)

    ue = draw()
    for _ in range(_MAX_PLACEMENT_ATTEMPTS):
        sp = draw()
        if sp.distance_to(ue) >= cfg.min_separation:
            break
    else:
        raise SnapSlamError(f"could not place the SP {cfg.min_separation} m from the UE")

    if cfg.snap_to_grid:
        ue = cfg.grid.cell_center(cfg.grid.nearest_index(ue))
        sp = cfg.grid.cell_center(cfg.grid.nearest_index(sp))
    return ue, sp


def trial_scene(cfg: TrialConfig, trial_index: int) -> Tuple[Scenario, np.ndarray]:
    """Ground-truth scenario and path phases for one trial."""
    ue, sp = draw_placement(cfg, trial_index)
    rcs = cfg.base_scenario.scatterers[0].rcs
    scenario = cfg.base_scenario.with_objects(ue, [ScatterPoint(position=sp, rcs=rcs)])
    phases = draw_phases(scenario.path_count, substream(cfg.master_seed, trial_index, Stream.PHASES))
    return scenario, phases


def _surface_errors(scenario: Scenario, ue_hat: Vec3, vue_hat: Vec3) -> Tuple[float, float]:
    true_surface = scenario.surfaces[0]
    est_surface = surface_from_vue(ue_hat, vue_hat)
    nu = true_surface.normal.as_array()
    offset = abs(float(np.dot(est_surface.anchor.as_array() - true_surface.anchor.as_array(), nu)))
    cos_angle = min(1.0, abs(float(np.dot(est_surface.normal.as_array(), nu))))
    return offset, float(np.arccos(cos_angle))


def run_trial(cfg: TrialConfig, trial_index: int) -> TrialOutcome:
    """Synthesises, detects and scores one trial; bit-reproducible in (cfg, trial_index)."""
    try:
        scenario, phases = trial_scene(cfg, trial_index)
        truths = {
            "UE": scenario.ue,
            "VUE": mirror_point(scenario.ue, scenario.surfaces[0]),
            "SP": scenario.scatterers[0].position,
        }
        y = synthesize_snapshot(scenario, phases, Seeded(cfg.master_seed, trial_index))
        stop = StopRule(max_targets=cfg.max_targets)
        aps = scenario.ap_positions()
        f_c = scenario.rf.carrier_hz
        if cfg.variant is Variant.PERFECT_REMOVAL:
            detections = run_slam_oracle_removal(
                y, cfg.grid, aps, f_c, stop, truth=scenario, phases=phases, match_radius=cfg.match_radius
            )
        else:
            detections = run_slam(y, cfg.grid, aps, f_c, stop)
    except (SnapSlamError, ValueError) as e:
        logger.warning(f"🔥 [Trial] Trial {trial_index} failed: {type(e).__name__}: {e}")
        return TrialOutcome(
            trial_index=trial_index,
            flags={name: False for name in OBJECTS},
            error=f"{type(e).__name__}: {e}",
        )

    matches = match_pairs(detections, truths, cfg.success_radius)
    outcome = TrialOutcome(
        trial_index=trial_index,
        flags={name: name in matches for name in OBJECTS},
        truths=truths,
        detections=[d.position for d in detections],
        matches=matches,
    )
    if "UE" in matches and "VUE" in matches:
        outcome.surface_offset_err, outcome.surface_angle_err = _surface_errors(
            scenario, detections[matches["UE"]].position, detections[matches["VUE"]].position
        )
    return outcome
