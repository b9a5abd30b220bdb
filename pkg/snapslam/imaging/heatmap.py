# Save as: snapslam/imaging/heatmap.py
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from snapslam.imaging.grid import SpatialImage


def heatmap_array(img: SpatialImage) -> np.ndarray:
    """Min-max normalised uint16 raster, y increasing upward.

    3-D grids are collapsed with a max projection over z.
    """
    values = img.as_array().max(axis=0)
    lo = float(values.min())
    hi = float(values.max())
    if hi > lo:
        scaled = (values - lo) / (hi - lo)
    else:
        scaled = np.zeros_like(values)
    raster = np.round(scaled * 65535.0).astype(np.uint16)
    return np.ascontiguousarray(raster[::-1, :])


def write_heatmap(img: SpatialImage, path: Union[str, Path]):
    """Writes a 16-bit binary PGM."""
    Image.fromarray(heatmap_array(img)).save(str(path), format="PPM")
