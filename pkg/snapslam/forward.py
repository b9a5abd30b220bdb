# Save as: snapslam/forward.py
# Narrowband single-snapshot uplink model: per-path delays and gains, common
# phases, AWGN, and the stacked per-AP snapshot.
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from snapslam.errors import DegenerateGeometry, LengthMismatch
from snapslam.rng import Stream, substream
from snapslam.scene import COINCIDENCE_TOL_M, RfParams, Scenario, Vec3, mirror_point, scenario_digest

SPEED_OF_LIGHT = 299_792_458.0
TWO_PI = 2.0 * np.pi


class PathKind(Enum):
    LOS = "los"
    REFLECTION = "reflection"
    SCATTER = "scatter"


@dataclass(frozen=True)
class PathRef:
    kind: PathKind
    index: int = 0


@dataclass(frozen=True)
class PathDescriptor:
    kind: PathKind
    index: int
    delays: np.ndarray
    amplitudes: np.ndarray
    common_phase: float = 0.0


@dataclass(frozen=True)
class Seeded:
    """Noise drawn from the (seed, trial_index) noise substream."""

    seed: int
    trial_index: int = 0


NOISE_OFF = None


@dataclass(frozen=True)
class Snapshot:
    samples: np.ndarray
    scenario_hash: str = ""
    seed: Optional[int] = None
    noisy: bool = False

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.complex128).reshape(-1)
        if not np.all(np.isfinite(samples)):
            raise ValueError("snapshot samples must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return int(self.samples.shape[0])

    def energy(self) -> float:
        return float(np.vdot(self.samples, self.samples).real)

    def with_samples(self, samples: np.ndarray) -> "Snapshot":
        return Snapshot(samples=samples, scenario_hash=self.scenario_hash, seed=self.seed, noisy=self.noisy)


def wavelength(rf: RfParams) -> float:
    return SPEED_OF_LIGHT / rf.carrier_hz


def symbol_energy(rf: RfParams) -> float:
    """Energy of one SLAM symbol: transmit power times symbol duration 1/Δf."""
    return rf.tx_power_w / rf.symbol_bandwidth_hz


def noise_variance(rf: RfParams) -> float:
    """Total complex noise variance per AP sample, noise PSD scaled by the noise figure."""
    return rf.noise_psd_w_per_hz * 10.0 ** (rf.noise_figure_db / 10.0)


def _distances(points: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum((points - x) ** 2, axis=1))


def _check_distance(d: np.ndarray, what: str):
    if np.any(d < COINCIDENCE_TOL_M):
        raise DegenerateGeometry(f"{what} distance below {COINCIDENCE_TOL_M} m")


def path_geometry(s: Scenario, ref: PathRef) -> PathDescriptor:
    """Delays and amplitudes for one path, with zero common phase."""
    aps = s.ap_positions()
    lam = wavelength(s.rf)
    four_pi = 4.0 * np.pi
    ue = s.ue.as_array()

    if ref.kind is PathKind.LOS:
        d = _distances(aps, ue)
        _check_distance(d, "UE-AP")
        delays = d / SPEED_OF_LIGHT
        amplitudes = lam / (four_pi * d)
    elif ref.kind is PathKind.REFLECTION:
        surface = s.surfaces[ref.index]
        vue = mirror_point(s.ue, surface).as_array()
        d = _distances(aps, vue)
        _check_distance(d, "VUE-AP")
        delays = d / SPEED_OF_LIGHT
        amplitudes = lam * surface.attenuation / (four_pi * d)
    elif ref.kind is PathKind.SCATTER:
        sp = s.scatterers[ref.index]
        x_sp = sp.position.as_array()
        d_ap = _distances(aps, x_sp)
        d_ue = float(np.linalg.norm(ue - x_sp))
        _check_distance(d_ap, "SP-AP")
        _check_distance(np.array([d_ue]), "UE-SP")
        delays = (d_ap + d_ue) / SPEED_OF_LIGHT
        amplitudes = lam * sp.rcs / (four_pi ** 1.5 * d_ap * d_ue)
    else:
        raise ValueError(f"unknown path kind {ref.kind}")

    return PathDescriptor(kind=ref.kind, index=ref.index, delays=delays, amplitudes=amplitudes)


def path_refs(s: Scenario) -> List[PathRef]:
    """LoS first, then one reflection per surface, then one scatter per scatterer."""
    refs = [PathRef(PathKind.LOS)]
    refs += [PathRef(PathKind.REFLECTION, k) for k in range(len(s.surfaces))]
    refs += [PathRef(PathKind.SCATTER, k) for k in range(len(s.scatterers))]
    return refs


def path_image_position(s: Scenario, ref: PathRef) -> Vec3:
    """Where the path's peak shows up in the image: UE, VUE or SP."""
    if ref.kind is PathKind.LOS:
        return s.ue
    if ref.kind is PathKind.REFLECTION:
        return mirror_point(s.ue, s.surfaces[ref.index])
    return s.scatterers[ref.index].position


def enumerate_paths(s: Scenario, phases: Sequence[float]) -> List[PathDescriptor]:
    phases = np.asarray(phases, dtype=np.float64).reshape(-1)
    refs = path_refs(s)
    if phases.shape[0] != len(refs):
        raise LengthMismatch(f"expected {len(refs)} path phases, got {phases.shape[0]}")
    descriptors = []
    for ref, theta in zip(refs, phases):
        geometry = path_geometry(s, ref)
        descriptors.append(
            PathDescriptor(
                kind=geometry.kind,
                index=geometry.index,
                delays=geometry.delays,
                amplitudes=geometry.amplitudes,
                common_phase=float(np.mod(theta, TWO_PI)),
            )
        )
    return descriptors


def path_snapshots(s: Scenario, phases: Sequence[float]) -> List[np.ndarray]:
    """Noiseless contribution of each path, in enumerate_paths order."""
    sqrt_e = np.sqrt(symbol_energy(s.rf))
    pilot = complex(s.rf.pilot)
    contributions = []
    for path in enumerate_paths(s, phases):
        carrier_phase = TWO_PI * s.rf.carrier_hz * path.delays
        contributions.append(
            sqrt_e * path.amplitudes * np.exp(1j * path.common_phase) * np.exp(-1j * carrier_phase) * pilot
        )
    return contributions


def draw_noise(rf: RfParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with total variance N0_eff, one row per AP."""
    scale = np.sqrt(noise_variance(rf) / 2.0)
    normals = rng.standard_normal((n, 2))
    return scale * (normals[:, 0] + 1j * normals[:, 1])


def draw_phases(count: int, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.0, TWO_PI, size=count)


def synthesize_snapshot(s: Scenario, phases: Sequence[float], noise: Optional[Seeded] = NOISE_OFF) -> Snapshot:
    contributions = path_snapshots(s, phases)
    y = np.zeros(len(s.aps), dtype=np.complex128)
    for contribution in contributions:
        y = y + contribution
    if noise is not None:
        y = y + draw_noise(s.rf, len(s.aps), substream(noise.seed, noise.trial_index, Stream.NOISE))
    return Snapshot(
        samples=y,
        scenario_hash=scenario_digest(s),
        seed=None if noise is None else noise.seed,
        noisy=noise is not None,
    )
