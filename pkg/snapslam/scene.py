# Save as: snapslam/scene.py
# Geometric scene: APs, UE, reflecting surfaces, scatter points, RF parameters.
# Coordinates: origin at the ceiling centre, z negative downward into the room.
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union

import numpy as np

from snapslam.errors import DegenerateGeometry, ParallelLine

COINCIDENCE_TOL_M = 1e-6
UNIT_NORMAL_TOL = 1e-12


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"Vec3.{name} must be finite, got {value}")
            object.__setattr__(self, name, value)

    @classmethod
    def of(cls, values: Sequence[float]) -> "Vec3":
        if len(values) != 3:
            raise ValueError(f"expected 3 coordinates, got {len(values)}")
        return cls(float(values[0]), float(values[1]), float(values[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    def as_list(self) -> List[float]:
        return [self.x, self.y, self.z]

    def distance_to(self, other: "Vec3") -> float:
        return float(np.linalg.norm(self.as_array() - other.as_array()))


@dataclass(frozen=True)
class AccessPoint:
    id: int
    position: Vec3


@dataclass(frozen=True)
class ReflectingSurface:
    """An infinite reflecting plane through `anchor` with unit `normal`.

    Non-unit normals are normalised here; a zero normal is rejected.
    `attenuation` is not range-checked at construction so that
    validate_scenario can report it.
    """

    anchor: Vec3
    normal: Vec3
    attenuation: float

    def __post_init__(self):
        n = self.normal.as_array()
        length = float(np.linalg.norm(n))
        if length < 1e-300:
            raise DegenerateGeometry("reflecting surface normal must be non-zero")
        object.__setattr__(self, "normal", Vec3.of(n / length))
        object.__setattr__(self, "attenuation", float(self.attenuation))

    def signed_distance(self, x: Vec3) -> float:
        return float(np.dot(x.as_array() - self.anchor.as_array(), self.normal.as_array()))


@dataclass(frozen=True)
class ScatterPoint:
    position: Vec3
    rcs: float


@dataclass(frozen=True)
class RfParams:
    carrier_hz: float
    tx_power_w: float
    symbol_bandwidth_hz: float
    noise_psd_w_per_hz: float
    noise_figure_db: float
    pilot: complex = 1 + 0j


@dataclass(frozen=True)
class Scenario:
    aps: Tuple[AccessPoint, ...]
    ue: Vec3
    surfaces: Tuple[ReflectingSurface, ...] = ()
    scatterers: Tuple[ScatterPoint, ...] = ()
    rf: RfParams = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "aps", tuple(self.aps))
        object.__setattr__(self, "surfaces", tuple(self.surfaces))
        object.__setattr__(self, "scatterers", tuple(self.scatterers))

    @property
    def path_count(self) -> int:
        return 1 + len(self.surfaces) + len(self.scatterers)

    def ap_positions(self) -> np.ndarray:
        return ap_matrix(self.aps)

    def with_objects(self, ue: Vec3, scatterers: Sequence[ScatterPoint]) -> "Scenario":
        return Scenario(aps=self.aps, ue=ue, surfaces=self.surfaces, scatterers=tuple(scatterers), rf=self.rf)


@dataclass(frozen=True)
class Violation:
    entity: str
    rule: str
    detail: str = ""

    def __str__(self):
        return f"{self.entity}: {self.rule}" + (f" ({self.detail})" if self.detail else "")


ApsLike = Union[Sequence[AccessPoint], np.ndarray]


def ap_matrix(aps: ApsLike) -> np.ndarray:
    """(N, 3) float64 array of AP positions, in AP order."""
    if isinstance(aps, np.ndarray):
        arr = np.ascontiguousarray(aps, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"AP array must have shape (N, 3), got {arr.shape}")
        return arr
    return np.array([ap.position.as_list() for ap in aps], dtype=np.float64).reshape(-1, 3)


def ap_lattice(nx: int, ny: int, spacing: float, plane_z: float) -> List[AccessPoint]:
    """Centred nx-by-ny lattice on the plane z = plane_z, x varying fastest."""
    if nx < 1 or ny < 1 or spacing <= 0:
        raise ValueError("lattice needs nx, ny >= 1 and spacing > 0")
    xs = (np.arange(nx) - (nx - 1) / 2.0) * spacing
    ys = (np.arange(ny) - (ny - 1) / 2.0) * spacing
    aps = []
    for j in range(ny):
        for i in range(nx):
            aps.append(AccessPoint(id=len(aps), position=Vec3(xs[i], ys[j], plane_z)))
    return aps


def mirror_point(x: Vec3, surface: ReflectingSurface) -> Vec3:
    """Householder reflection of x across the surface plane (the VUE formula)."""
    nu = surface.normal.as_array()
    p = x.as_array()
    mu = surface.anchor.as_array()
    return Vec3.of(p - 2.0 * nu * np.dot(nu, p) + 2.0 * nu * np.dot(nu, mu))


def incidence_point(ap: Vec3, vue: Vec3, surface: ReflectingSurface) -> Vec3:
    """Point where the line from ap to vue crosses the surface plane."""
    a = ap.as_array()
    direction = vue.as_array() - a
    nu = surface.normal.as_array()
    denom = float(np.dot(direction, nu))
    if abs(denom) < UNIT_NORMAL_TOL * float(np.linalg.norm(direction)) or not np.any(direction):
        raise ParallelLine(f"line from {ap.as_list()} to {vue.as_list()} is parallel to the surface")
    t = float(np.dot(surface.anchor.as_array() - a, nu)) / denom
    return Vec3.of(a + t * direction)


def surface_from_vue(ue: Vec3, vue: Vec3, attenuation: float = 1.0) -> ReflectingSurface:
    """Recovers the reflecting plane whose mirror image of ue is vue."""
    u = ue.as_array()
    v = vue.as_array()
    if np.linalg.norm(v - u) < COINCIDENCE_TOL_M:
        raise DegenerateGeometry("UE and VUE coincide; the surface is undefined")
    return ReflectingSurface(anchor=Vec3.of((u + v) / 2.0), normal=Vec3.of(v - u), attenuation=attenuation)


def validate_scenario(s: Scenario) -> List[Violation]:
    violations: List[Violation] = []

    if len(s.aps) < 2:
        violations.append(Violation("aps", "too-few-aps", f"need >= 2, got {len(s.aps)}"))
    ids = [ap.id for ap in s.aps]
    if sorted(ids) != list(range(len(ids))):
        violations.append(Violation("aps", "ap-ids-not-contiguous", f"ids {ids[:8]}..."))

    for k, surface in enumerate(s.surfaces):
        if not 0.0 <= surface.attenuation <= 1.0:
            violations.append(Violation(f"surfaces[{k}]", "attenuation-out-of-range", f"{surface.attenuation}"))
        if abs(float(np.linalg.norm(surface.normal.as_array())) - 1.0) > UNIT_NORMAL_TOL:
            violations.append(Violation(f"surfaces[{k}]", "normal-not-unit"))

    for k, sp in enumerate(s.scatterers):
        if not sp.rcs >= 0.0:
            violations.append(Violation(f"scatterers[{k}]", "rcs-negative", f"{sp.rcs}"))
        if sp.position.distance_to(s.ue) <= COINCIDENCE_TOL_M:
            violations.append(Violation(f"scatterers[{k}]", "scatterer-coincides-with-ue"))
        for ap in s.aps:
            if sp.position.distance_to(ap.position) <= COINCIDENCE_TOL_M:
                violations.append(Violation(f"scatterers[{k}]", "scatterer-coincides-with-ap", f"ap {ap.id}"))

    for ap in s.aps:
        if s.ue.distance_to(ap.position) <= COINCIDENCE_TOL_M:
            violations.append(Violation("ue", "ue-coincides-with-ap", f"ap {ap.id}"))

    rf = s.rf
    if rf is None:
        violations.append(Violation("rf", "rf-missing"))
    else:
        if not rf.carrier_hz > 0:
            violations.append(Violation("rf.carrier_hz", "non-positive", f"{rf.carrier_hz}"))
        if not rf.tx_power_w > 0:
            violations.append(Violation("rf.tx_power_w", "non-positive", f"{rf.tx_power_w}"))
        if not rf.symbol_bandwidth_hz > 0:
            violations.append(Violation("rf.symbol_bandwidth_hz", "non-positive", f"{rf.symbol_bandwidth_hz}"))
        if not rf.noise_psd_w_per_hz >= 0:
            violations.append(Violation("rf.noise_psd_w_per_hz", "negative", f"{rf.noise_psd_w_per_hz}"))
        if abs(abs(complex(rf.pilot)) - 1.0) > UNIT_NORMAL_TOL:
            violations.append(Violation("rf.pilot", "pilot-not-unit-modulus", f"{rf.pilot}"))

    return violations


def scenario_digest(s: Scenario) -> str:
    """sha256 of a canonical JSON rendering (floats written with repr precision)."""
    doc = {
        "aps": [[ap.id, *ap.position.as_list()] for ap in s.aps],
        "ue": s.ue.as_list(),
        "surfaces": [[*x.anchor.as_list(), *x.normal.as_list(), x.attenuation] for x in s.surfaces],
        "scatterers": [[*x.position.as_list(), x.rcs] for x in s.scatterers],
        "rf": None if s.rf is None else [
            s.rf.carrier_hz, s.rf.tx_power_w, s.rf.symbol_bandwidth_hz,
            s.rf.noise_psd_w_per_hz, s.rf.noise_figure_db,
            complex(s.rf.pilot).real, complex(s.rf.pilot).imag,
        ],
    }
    canonical = json.dumps(doc, separators=(",", ":"), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
