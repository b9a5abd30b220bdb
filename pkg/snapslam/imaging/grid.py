# Save as: snapslam/imaging/grid.py
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from snapslam.errors import GridError, GridTooLarge
from snapslam.scene import Vec3

# Absorbs floating-point noise in (max - min) / spacing, e.g. 26 / 0.01.
_COUNT_SLACK = 1e-9


def _axis_count(lo: float, hi: float, spacing: float) -> int:
    return int(math.floor((hi - lo) / spacing + _COUNT_SLACK)) + 1


@dataclass(frozen=True)
class GridSpec:
    """Search grid of point hypotheses at cell centres.

    Cell (i, j[, k]) sits at (x_min + i*spacing, y_min + j*spacing, z) and has
    linear index i + nx*(j + ny*k), x fastest. With z_max unset the grid is the
    2-D plane z = z_fixed. A degenerate axis (max == min) holds one cell, which
    is how one-dimensional line scans are expressed.
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    z_fixed: float
    spacing: float
    z_max: Optional[float] = None

    def __post_init__(self):
        values = (self.x_min, self.x_max, self.y_min, self.y_max, self.z_fixed, self.spacing)
        if not all(math.isfinite(float(v)) for v in values):
            raise GridError("grid bounds and spacing must be finite")
        if not self.spacing > 0:
            raise GridError(f"grid spacing must be positive, got {self.spacing}")
        if self.x_max < self.x_min:
            raise GridError(f"x_min {self.x_min} > x_max {self.x_max}")
        if self.y_max < self.y_min:
            raise GridError(f"y_min {self.y_min} > y_max {self.y_max}")
        if self.z_max is not None and self.z_max < self.z_fixed:
            raise GridError(f"z_min {self.z_fixed} > z_max {self.z_max}")

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """Parses "xmin,xmax,ymin,ymax,z,spacing" (optionally a trailing z_max)."""
        try:
            parts = [float(p) for p in text.split(",")]
        except ValueError:
            raise GridError(f"grid must be comma-separated numbers, got {text!r}")
        if len(parts) not in (6, 7):
            raise GridError(f"grid needs 6 values xmin,xmax,ymin,ymax,z,spacing, got {len(parts)}")
        z_max = parts[6] if len(parts) == 7 else None
        return cls(*parts[:6], z_max=z_max)

    @property
    def is_3d(self) -> bool:
        return self.z_max is not None

    @property
    def shape(self) -> Tuple[int, int, int]:
        """(nz, ny, nx); values reshape to this in C order."""
        nz = _axis_count(self.z_fixed, self.z_max, self.spacing) if self.is_3d else 1
        return nz, _axis_count(self.y_min, self.y_max, self.spacing), _axis_count(self.x_min, self.x_max, self.spacing)

    @property
    def cell_count(self) -> int:
        nz, ny, nx = self.shape
        return nz * ny * nx

    def axes(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        nz, ny, nx = self.shape
        xs = self.x_min + np.arange(nx, dtype=np.float64) * self.spacing
        ys = self.y_min + np.arange(ny, dtype=np.float64) * self.spacing
        zs = self.z_fixed + np.arange(nz, dtype=np.float64) * self.spacing
        return xs, ys, zs

    def cell_center(self, index: int) -> Vec3:
        nz, ny, nx = self.shape
        if not 0 <= index < nz * ny * nx:
            raise IndexError(f"cell {index} outside grid of {nz * ny * nx} cells")
        k, rem = divmod(int(index), ny * nx)
        j, i = divmod(rem, nx)
        return Vec3(self.x_min + i * self.spacing, self.y_min + j * self.spacing, self.z_fixed + k * self.spacing)

    def nearest_index(self, x: Vec3) -> int:
        """Linear index of the cell centre closest to x (clamped to the grid)."""
        nz, ny, nx = self.shape
        i = min(max(int(round((x.x - self.x_min) / self.spacing)), 0), nx - 1)
        j = min(max(int(round((x.y - self.y_min) / self.spacing)), 0), ny - 1)
        k = min(max(int(round((x.z - self.z_fixed) / self.spacing)), 0), nz - 1) if self.is_3d else 0
        return i + nx * (j + ny * k)

    def positions(self) -> np.ndarray:
        """(cell_count, 3) cell centres in linear-index order."""
        xs, ys, zs = self.axes()
        zz, yy, xx = np.meshgrid(zs, ys, xs, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])

    def check_cap(self, cap: int):
        if self.cell_count > cap:
            raise GridTooLarge(f"grid has {self.cell_count} cells, cap is {cap}")

    def with_spacing(self, spacing: float) -> "GridSpec":
        return GridSpec(self.x_min, self.x_max, self.y_min, self.y_max, self.z_fixed, spacing, self.z_max)


@dataclass(frozen=True)
class SpatialImage:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if values.shape[0] != self.grid.cell_count:
            raise GridError(f"image has {values.shape[0]} values for {self.grid.cell_count} cells")
        object.__setattr__(self, "values", values)

    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)
