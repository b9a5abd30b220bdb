# Save as: snapslam/io_utils/csv_io.py
# CSV codecs. Floats are written as %.16e (17 significant digits) and lines end in
# "\n", so equal inputs give byte-identical files.
import csv
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from snapslam.errors import ScenarioParseError
from snapslam.forward import Snapshot
from snapslam.imaging.grid import SpatialImage
from snapslam.montecarlo.sweep import DetectionStats
from snapslam.montecarlo.trial import OBJECTS, TrialOutcome
from snapslam.slam import Detection

SNAPSHOT_HEADER = ["ap_id", "re", "im"]
DETECTION_HEADER = ["iteration", "x", "y", "z", "phase", "peak_value", "residual_energy"]
SWEEP_HEADER = ["resolution_m", "variant", "object", "trials", "successes", "p_detect", "std_err"]
DIAGNOSTICS_HEADER = [
    "resolution_m", "variant", "trial",
    "ue_x", "ue_y", "vue_x", "vue_y", "sp_x", "sp_y",
    "ue_ok", "vue_ok", "sp_ok",
    "detections", "surface_offset_err", "surface_angle_err", "error",
]

PathLike = Union[str, Path]


def fmt(value: float) -> str:
    return format(float(value), ".16e")


def _writer(f):
    return csv.writer(f, lineterminator="\n")


def write_snapshot_csv(snapshot: Snapshot, path: PathLike):
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = _writer(f)
        writer.writerow(SNAPSHOT_HEADER)
        for n, sample in enumerate(snapshot.samples):
            writer.writerow([n, fmt(sample.real), fmt(sample.imag)])


def read_snapshot_csv(path: PathLike) -> Snapshot:
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            rows = list(csv.reader(f))
    except OSError as e:
        raise ScenarioParseError(f"could not read snapshot {path}: {e}")
    if not rows or rows[0] != SNAPSHOT_HEADER:
        raise ScenarioParseError(f"{path}: expected header {','.join(SNAPSHOT_HEADER)}")
    samples = []
    for line_no, row in enumerate(rows[1:], start=2):
        try:
            ap_id, re_part, im_part = int(row[0]), float(row[1]), float(row[2])
        except (ValueError, IndexError):
            raise ScenarioParseError(f"{path}:{line_no}: malformed row {row}")
        if ap_id != len(samples):
            raise ScenarioParseError(f"{path}:{line_no}: ap_id {ap_id} out of order, expected {len(samples)}")
        samples.append(complex(re_part, im_part))
    try:
        return Snapshot(samples=np.array(samples, dtype=np.complex128))
    except ValueError as e:
        raise ScenarioParseError(f"{path}: {e}")


def write_image_csv(img: SpatialImage, path: PathLike):
    positions = img.grid.positions()
    if img.grid.is_3d:
        header = "x,y,z,value"
        table = np.column_stack([positions, img.values])
    else:
        header = "x,y,value"
        table = np.column_stack([positions[:, :2], img.values])
    with open(path, "w", encoding="utf-8", newline="") as f:
        np.savetxt(f, table, fmt="%.16e", delimiter=",", header=header, comments="", newline="\n")


def write_detections_csv(detections: Sequence[Detection], path: PathLike):
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = _writer(f)
        writer.writerow(DETECTION_HEADER)
        for d in detections:
            writer.writerow([
                d.iteration, fmt(d.position.x), fmt(d.position.y), fmt(d.position.z),
                fmt(d.phase), fmt(d.peak_value), fmt(d.residual_energy),
            ])


def write_sweep_csv(table: Sequence[DetectionStats], path: PathLike):
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = _writer(f)
        writer.writerow(SWEEP_HEADER)
        for stats in table:
            for name in OBJECTS:
                s = stats.objects[name]
                writer.writerow([
                    fmt(stats.resolution_m), stats.variant.value, name,
                    s.trials, s.successes, fmt(s.probability), fmt(s.std_err),
                ])


def _maybe(value: Optional[float]) -> str:
    return "" if value is None else fmt(value)


def write_diagnostics_csv(diagnostics: Dict[tuple, List[TrialOutcome]], path: PathLike):
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = _writer(f)
        writer.writerow(DIAGNOSTICS_HEADER)
        for (resolution, variant), outcomes in diagnostics.items():
            for o in outcomes:
                truths = [o.truths.get(name) for name in OBJECTS]
                coords = []
                for t in truths:
                    coords += ["", ""] if t is None else [fmt(t.x), fmt(t.y)]
                found = ";".join(f"{fmt(p.x)}:{fmt(p.y)}" for p in o.detections)
                writer.writerow([
                    fmt(resolution), variant.value, o.trial_index, *coords,
                    *[int(o.flags[name]) for name in OBJECTS],
                    found, _maybe(o.surface_offset_err), _maybe(o.surface_angle_err), o.error or "",
                ])
