# Save as: snapslam/montecarlo/matching.py
from typing import Dict, Mapping, Sequence, Union

import numpy as np
from scipy.spatial.distance import cdist

from snapslam.scene import Vec3
from snapslam.slam import Detection


def _position(item: Union[Detection, Vec3]) -> Vec3:
    return item.position if isinstance(item, Detection) else item


def match_pairs(
    detections: Sequence[Union[Detection, Vec3]],
    truths: Mapping[str, Vec3],
    radius: float,
) -> Dict[str, int]:
    """Greedy one-to-one matching, globally closest pair first.

    Returns truth name -> index of the detection that consumed it. Equal
    distances resolve by detection index, then truth order.
    """
    if not radius > 0:
        raise ValueError(f"match radius must be positive, got {radius}")
    names = list(truths)
    if not detections or not names:
        return {}
    det_xyz = np.array([_position(d).as_list() for d in detections])
    truth_xyz = np.array([truths[name].as_list() for name in names])
    distances = cdist(det_xyz, truth_xyz)

    candidates = [
        (distances[i, j], i, j)
        for i in range(distances.shape[0])
        for j in range(distances.shape[1])
        if distances[i, j] <= radius
    ]
    candidates.sort()

    used_detections = set()
    matched: Dict[str, int] = {}
    for _, i, j in candidates:
        if i in used_detections or names[j] in matched:
            continue
        used_detections.add(i)
        matched[names[j]] = i
    return matched


def match_detections(
    detections: Sequence[Union[Detection, Vec3]],
    truths: Mapping[str, Vec3],
    radius: float,
) -> Dict[str, bool]:
    """Per-object success flags: a truth succeeds iff some detection claimed it."""
    matched = match_pairs(detections, truths, radius)
    return {name: name in matched for name in truths}
