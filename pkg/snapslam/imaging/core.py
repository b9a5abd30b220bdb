# Save as: snapslam/imaging/core.py
import logging
import time
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from snapslam.config import DEFAULTS
from snapslam.errors import EmptyImage, LengthMismatch
from snapslam.forward import SPEED_OF_LIGHT, Snapshot
from snapslam.imaging.grid import GridSpec, SpatialImage
from snapslam.imaging.kernels import image_values
from snapslam.scene import ApsLike, Vec3, ap_matrix

logger = logging.getLogger(__name__)

# Images at or above this many cells get a timing line in the log.
_TIMING_LOG_CELLS = 1_000_000


@dataclass(frozen=True)
class SteeringVector:
    entries: np.ndarray

    def __len__(self):
        return int(self.entries.shape[0])


def wavenumber(f_c: float) -> float:
    return 2.0 * np.pi * f_c / SPEED_OF_LIGHT


def _samples(y: Union[Snapshot, np.ndarray]) -> np.ndarray:
    if isinstance(y, Snapshot):
        return y.samples
    return np.asarray(y, dtype=np.complex128).reshape(-1)


def steering_vector(aps: ApsLike, x: Vec3, f_c: float) -> SteeringVector:
    positions = ap_matrix(aps)
    d = np.sqrt(np.sum((positions - x.as_array()) ** 2, axis=1))
    return SteeringVector(entries=np.exp(-1j * wavenumber(f_c) * d))


def image_value(y: Union[Snapshot, np.ndarray], a: Union[SteeringVector, np.ndarray]) -> float:
    """Spatial matched-filter output |a^H y|^2."""
    samples = _samples(y)
    entries = a.entries if isinstance(a, SteeringVector) else np.asarray(a, dtype=np.complex128)
    if samples.shape[0] != entries.shape[0]:
        raise LengthMismatch(f"snapshot has {samples.shape[0]} samples, steering vector {entries.shape[0]}")
    return float(abs(np.vdot(entries, samples)) ** 2)


def compute_image(
    y: Union[Snapshot, np.ndarray],
    grid: GridSpec,
    aps: ApsLike,
    f_c: float,
    cap: Optional[int] = None,
) -> SpatialImage:
    samples = _samples(y)
    positions = ap_matrix(aps)
    if positions.shape[0] < 2:
        raise LengthMismatch(f"imaging needs at least 2 APs, got {positions.shape[0]}")
    if samples.shape[0] != positions.shape[0]:
        raise LengthMismatch(f"snapshot has {samples.shape[0]} samples for {positions.shape[0]} APs")
    grid.check_cap(DEFAULTS.grid_cap if cap is None else cap)

    started = time.perf_counter()
    xs, ys, zs = grid.axes()
    values = image_values(samples, positions, xs, ys, zs, wavenumber(f_c))
    if grid.cell_count >= _TIMING_LOG_CELLS:
        logger.debug(
            f"⏱️ [Imaging] {grid.cell_count} cells x {positions.shape[0]} APs "
            f"in {time.perf_counter() - started:.2f}s"
        )
    return SpatialImage(grid=grid, values=values)


def ambiguity(x_hyp: Vec3, x: Vec3, aps: ApsLike, f_c: float) -> float:
    """Normalised spatial ambiguity |a^H(x_hyp) a(x)| / (|a(x_hyp)| |a(x)|), in [0, 1]."""
    a_hyp = steering_vector(aps, x_hyp, f_c).entries
    a_true = steering_vector(aps, x, f_c).entries
    value = abs(np.vdot(a_hyp, a_true)) / (np.linalg.norm(a_hyp) * np.linalg.norm(a_true))
    return float(min(1.0, value))


def ambiguity_map(reference: Vec3, grid: GridSpec, aps: ApsLike, f_c: float, cap: Optional[int] = None) -> SpatialImage:
    """Ambiguity of every cell against a fixed reference point."""
    a_ref = steering_vector(aps, reference, f_c).entries
    raw = compute_image(a_ref, grid, aps, f_c, cap=cap)
    n = a_ref.shape[0]
    return SpatialImage(grid=grid, values=np.minimum(np.sqrt(raw.values) / n, 1.0))


def argmax_cell(img: SpatialImage) -> Tuple[int, Vec3, float]:
    """Strongest cell; ties go to the lowest linear index."""
    if img.values.size == 0:
        raise EmptyImage("cannot take the argmax of an empty image")
    index = int(np.argmax(img.values))
    return index, img.grid.cell_center(index), float(img.values[index])


def sidelobe_level(img: SpatialImage, center: Vec3, exclusion_radius: float) -> Tuple[float, Optional[Vec3]]:
    """Largest value outside `exclusion_radius` of `center` (the peak sidelobe)."""
    positions = img.grid.positions()
    outside = np.linalg.norm(positions - center.as_array(), axis=1) > exclusion_radius
    if not np.any(outside):
        return 0.0, None
    masked = np.where(outside, img.values, -np.inf)
    index = int(np.argmax(masked))
    return float(img.values[index]), img.grid.cell_center(index)


def refine_peak(
    y: Union[Snapshot, np.ndarray],
    grid: GridSpec,
    aps: ApsLike,
    f_c: float,
    index: int,
    factor: int = 10,
) -> Tuple[Vec3, float]:
    """Searches a `factor`-times finer grid one coarse cell around `index`.

    Opt-in only; the detection loop uses the flat grid unless asked.
    """
    if factor < 1:
        raise ValueError("refinement factor must be >= 1")
    c = grid.cell_center(index)
    h = grid.spacing
    local = GridSpec(
        x_min=c.x - h, x_max=c.x + h,
        y_min=c.y - h, y_max=c.y + h,
        z_fixed=c.z - h if grid.is_3d else c.z,
        spacing=h / factor,
        z_max=c.z + h if grid.is_3d else None,
    )
    # Degenerate axes of the coarse grid stay degenerate.
    if grid.x_max == grid.x_min:
        local = GridSpec(c.x, c.x, local.y_min, local.y_max, local.z_fixed, local.spacing, local.z_max)
    if grid.y_max == grid.y_min:
        local = GridSpec(local.x_min, local.x_max, c.y, c.y, local.z_fixed, local.spacing, local.z_max)
    _, position, value = argmax_cell(compute_image(y, local, aps, f_c))
    return position, value
