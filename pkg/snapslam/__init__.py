# Package root; the core operations are importable from here
from . import config
from .errors import SnapSlamError
from .scene import AccessPoint, ReflectingSurface, RfParams, Scenario, ScatterPoint, Vec3, mirror_point
from .forward import Seeded, Snapshot, synthesize_snapshot
from .slam import Detection, StopRule, run_slam, run_slam_oracle_removal
