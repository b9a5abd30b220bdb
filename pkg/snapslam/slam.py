# Save as: snapslam/slam.py
# Iterative snapshot SLAM: image the residual, take the strongest cell, estimate
# its common phase and per-AP real amplitudes, subtract, repeat.
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from snapslam.config import DEFAULTS
from snapslam.errors import DegenerateEstimate, LengthMismatch
from snapslam.forward import Snapshot, path_image_position, path_refs, path_snapshots
from snapslam.imaging.core import argmax_cell, compute_image, refine_peak, steering_vector
from snapslam.imaging.grid import GridSpec
from snapslam.scene import ApsLike, Scenario, Vec3, ap_matrix

logger = logging.getLogger(__name__)

DEGENERATE_PHASE_TOL = 1e-30


@dataclass(frozen=True)
class StopRule:
    """Stop at `max_targets` detections or when the residual energy drops to
    `residual_eps` times the initial energy, whichever comes first."""

    max_targets: Optional[int] = None
    residual_eps: Optional[float] = None

    def __post_init__(self):
        if self.max_targets is None and self.residual_eps is None:
            raise ValueError("a stop rule needs max_targets, residual_eps, or both")
        if self.max_targets is not None and self.max_targets < 1:
            raise ValueError(f"max_targets must be positive, got {self.max_targets}")
        if self.residual_eps is not None and not 0.0 < self.residual_eps <= 1.0:
            raise ValueError(f"residual_eps must be in (0, 1], got {self.residual_eps}")


@dataclass(frozen=True)
class Detection:
    position: Vec3
    amplitudes: np.ndarray
    phase: float
    peak_value: float
    iteration: int
    residual_energy: float = float("nan")
    removed_by_oracle: bool = False


@dataclass
class SlamOutcome:
    detections: List[Detection] = field(default_factory=list)
    residual: Optional[Snapshot] = None
    initial_energy: float = 0.0


def estimate_component(residual: Snapshot, x_hat: Vec3, aps: ApsLike, f_c: float) -> Tuple[np.ndarray, float]:
    """ML common phase and real per-AP amplitudes of a source at x_hat.

    The phase is defined modulo pi; it is reported in [0, pi). Raises
    DegenerateEstimate when sum(rho_tilde**2) vanishes.
    """
    a = steering_vector(aps, x_hat, f_c).entries
    samples = residual.samples if isinstance(residual, Snapshot) else np.asarray(residual, dtype=np.complex128)
    if samples.shape[0] != a.shape[0]:
        raise LengthMismatch(f"residual has {samples.shape[0]} samples for {a.shape[0]} APs")
    rho_tilde = samples * np.conj(a)
    square_sum = np.sum(rho_tilde ** 2)
    if abs(square_sum) < DEGENERATE_PHASE_TOL:
        raise DegenerateEstimate(f"phase undefined, |sum rho^2| = {abs(square_sum):.3e}")
    theta = float(np.mod(0.5 * np.angle(square_sum), np.pi))
    if theta >= np.pi:
        theta = 0.0
    rho_hat = np.real(rho_tilde * np.exp(-1j * theta))
    return rho_hat, theta


def component(amplitudes: np.ndarray, phase: float, position: Vec3, aps: ApsLike, f_c: float) -> np.ndarray:
    return amplitudes * np.exp(1j * phase) * steering_vector(aps, position, f_c).entries


def cancel(residual: Snapshot, det: Detection, aps: ApsLike, f_c: float) -> Snapshot:
    n_aps = ap_matrix(aps).shape[0]
    if det.amplitudes.shape[0] != n_aps or len(residual) != n_aps:
        raise LengthMismatch(
            f"detection has {det.amplitudes.shape[0]} amplitudes, residual {len(residual)} samples, {n_aps} APs"
        )
    return residual.with_samples(residual.samples - component(det.amplitudes, det.phase, det.position, aps, f_c))


# remover(residual, position, amplitudes, phase) -> (new residual samples, removed_by_oracle)
Remover = Callable[[Snapshot, Vec3, np.ndarray, float], Tuple[np.ndarray, bool]]


def slam_loop(
    y: Union[Snapshot, np.ndarray],
    grid: GridSpec,
    aps: ApsLike,
    f_c: float,
    stop: StopRule,
    remover: Optional[Remover] = None,
    refine_factor: Optional[int] = None,
    cap: Optional[int] = None,
) -> SlamOutcome:
    """Runs the detect-estimate-cancel iterations and keeps the final residual."""
    if not isinstance(y, Snapshot):
        y = Snapshot(samples=y)
    positions = ap_matrix(aps)
    if remover is None:
        def remover(residual, position, amplitudes, phase):
            return residual.samples - component(amplitudes, phase, position, positions, f_c), False

    outcome = SlamOutcome(residual=y, initial_energy=y.energy())
    residual = y
    while True:
        if stop.max_targets is not None and len(outcome.detections) >= stop.max_targets:
            break
        energy = residual.energy()
        if stop.residual_eps is not None and energy <= stop.residual_eps * outcome.initial_energy:
            break

        img = compute_image(residual, grid, positions, f_c, cap=cap)
        index, position, peak = argmax_cell(img)
        if refine_factor:
            position, peak = refine_peak(residual, grid, positions, f_c, index, refine_factor)

        try:
            amplitudes, phase = estimate_component(residual, position, positions, f_c)
        except DegenerateEstimate as e:
            logger.warning(f"⚠️ [SLAM] Iteration {len(outcome.detections) + 1}: {e}; recording a zero-amplitude detection")
            amplitudes, phase = np.zeros(positions.shape[0]), 0.0

        new_samples, by_oracle = remover(residual, position, amplitudes, phase)
        new_residual = residual.with_samples(new_samples)
        outcome.detections.append(
            Detection(
                position=position,
                amplitudes=amplitudes,
                phase=phase,
                peak_value=peak,
                iteration=len(outcome.detections) + 1,
                residual_energy=new_residual.energy(),
                removed_by_oracle=by_oracle,
            )
        )
        logger.debug(
            f"🎯 [SLAM] t={len(outcome.detections)} peak {peak:.4e} at "
            f"({position.x:.3f}, {position.y:.3f}, {position.z:.3f}), residual {new_residual.energy():.4e}"
        )
        if np.array_equal(new_residual.samples, residual.samples):
            # Nothing was removed, so the next iteration would repeat this one.
            residual = new_residual
            break
        residual = new_residual

    outcome.residual = residual
    return outcome


def run_slam(
    y: Union[Snapshot, np.ndarray],
    grid: GridSpec,
    aps: ApsLike,
    f_c: float,
    stop: StopRule,
    refine_factor: Optional[int] = None,
    cap: Optional[int] = None,
) -> List[Detection]:
    return slam_loop(y, grid, aps, f_c, stop, refine_factor=refine_factor, cap=cap).detections


def oracle_remover(truth: Scenario, phases: Sequence[float], f_c: float, aps: ApsLike,
                   match_radius: Optional[float] = None) -> Remover:
    """Subtracts the exact forward-model contribution of the nearest true object.

    Each object is removed at most once; a peak with no unremoved object within
    `match_radius` falls back to the estimated component.
    """
    radius = DEFAULTS.oracle_match_radius_m if match_radius is None else match_radius
    positions = ap_matrix(aps)
    refs = path_refs(truth)
    object_positions = np.array([path_image_position(truth, ref).as_list() for ref in refs])
    contributions = path_snapshots(truth, phases)
    remaining = set(range(len(refs)))

    def remove(residual, position, amplitudes, phase):
        if remaining:
            candidates = sorted(remaining)
            d = np.linalg.norm(object_positions[candidates] - position.as_array(), axis=1)
            best = int(np.argmin(d))
            if d[best] <= radius:
                remaining.discard(candidates[best])
                return residual.samples - contributions[candidates[best]], True
        return residual.samples - component(amplitudes, phase, position, positions, f_c), False

    return remove


def run_slam_oracle_removal(
    y: Union[Snapshot, np.ndarray],
    grid: GridSpec,
    aps: ApsLike,
    f_c: float,
    stop: StopRule,
    truth: Scenario,
    phases: Sequence[float],
    match_radius: Optional[float] = None,
    refine_factor: Optional[int] = None,
    cap: Optional[int] = None,
) -> List[Detection]:
    if len(truth.aps) != ap_matrix(aps).shape[0]:
        raise LengthMismatch(f"truth scenario has {len(truth.aps)} APs, imaging uses {ap_matrix(aps).shape[0]}")
    remover = oracle_remover(truth, phases, f_c, aps, match_radius)
    return slam_loop(y, grid, aps, f_c, stop, remover=remover, refine_factor=refine_factor, cap=cap).detections
