# Save as: snapslam/imaging/kernels.py
"""Imaging kernel: |a^H(x) y|^2 for every grid cell.

Each cell accumulates over APs in AP order in double precision, and the
per-(cell, AP) phase is computed directly from the distance, never by
stepping from a neighbouring cell. Cells are independent, so the output does
not depend on how many threads share the work.

numba (optional) runs the cell loop in parallel; without it a chunked numpy
path produces the same quantity.
"""
import logging

import numpy as np
from scipy.spatial.distance import cdist

try:
    import numba as nb
    _HAS_NUMBA = True
except ImportError:
    _HAS_NUMBA = False

logger = logging.getLogger(__name__)

_CHUNK_CELLS = 32768


if _HAS_NUMBA:

    @nb.njit(parallel=True, cache=True)
    def _nb_image_kernel(y_re, y_im, aps, xs, ys, zs, wavenumber, out):
        nx = xs.shape[0]
        ny = ys.shape[0]
        nz = zs.shape[0]
        n_aps = aps.shape[0]
        n_cells = nx * ny * nz

        for cell in nb.prange(n_cells):
            k = cell // (nx * ny)
            rem = cell - k * nx * ny
            j = rem // nx
            i = rem - j * nx
            px = xs[i]
            py = ys[j]
            pz = zs[k]

            acc_re = 0.0
            acc_im = 0.0
            for n in range(n_aps):
                dx = px - aps[n, 0]
                dy = py - aps[n, 1]
                dz = pz - aps[n, 2]
                phi = wavenumber * np.sqrt(dx * dx + dy * dy + dz * dz)
                cos_p = np.cos(phi)
                sin_p = np.sin(phi)
                # conj(e^{-j phi}) * y
                acc_re += cos_p * y_re[n] - sin_p * y_im[n]
                acc_im += cos_p * y_im[n] + sin_p * y_re[n]

            out[cell] = acc_re * acc_re + acc_im * acc_im


def _np_image_kernel(y_re, y_im, aps, xs, ys, zs, wavenumber, out):
    nx, ny, nz = xs.shape[0], ys.shape[0], zs.shape[0]
    n_cells = nx * ny * nz
    for start in range(0, n_cells, _CHUNK_CELLS):
        cells = np.arange(start, min(start + _CHUNK_CELLS, n_cells))
        k, rem = np.divmod(cells, nx * ny)
        j, i = np.divmod(rem, nx)
        points = np.column_stack([xs[i], ys[j], zs[k]])
        phi = wavenumber * cdist(points, aps)
        cos_p = np.cos(phi)
        sin_p = np.sin(phi)
        acc_re = (cos_p * y_re - sin_p * y_im).sum(axis=1)
        acc_im = (cos_p * y_im + sin_p * y_re).sum(axis=1)
        out[start:start + cells.shape[0]] = acc_re * acc_re + acc_im * acc_im


def image_values(samples, aps, xs, ys, zs, wavenumber) -> np.ndarray:
    """Imaging values over the axes' cartesian product, x fastest."""
    samples = np.ascontiguousarray(samples, dtype=np.complex128)
    y_re = np.ascontiguousarray(samples.real)
    y_im = np.ascontiguousarray(samples.imag)
    aps = np.ascontiguousarray(aps, dtype=np.float64)
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    zs = np.ascontiguousarray(zs, dtype=np.float64)
    out = np.empty(xs.shape[0] * ys.shape[0] * zs.shape[0], dtype=np.float64)
    if _HAS_NUMBA:
        _nb_image_kernel(y_re, y_im, aps, xs, ys, zs, float(wavenumber), out)
    else:
        _np_image_kernel(y_re, y_im, aps, xs, ys, zs, float(wavenumber), out)
    return out


def set_kernel_threads(n: int) -> int:
    if not _HAS_NUMBA:
        logger.info("ℹ️ [Imaging] numba not installed, kernel runs single-threaded on numpy")
        return 1
    n = min(n, nb.config.NUMBA_NUM_THREADS)
    nb.set_num_threads(n)
    return n


def kernel_backend() -> str:
    return "numba" if _HAS_NUMBA else "numpy"
