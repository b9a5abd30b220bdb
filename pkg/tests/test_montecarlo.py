"""Matching, trial synthesis and detection-probability sweeps."""
import math
import os

import numpy as np
import pytest

from snapslam.config import DEFAULTS
from snapslam.imaging import GridSpec
from snapslam.montecarlo import (
    OBJECTS,
    ObjectStats,
    TrialConfig,
    TrialOutcome,
    Variant,
    aggregate,
    default_search_grid,
    match_detections,
    match_pairs,
    run_trial,
    run_trials,
    sweep,
    trial_scene,
)
from snapslam.montecarlo.trial import draw_placement
from snapslam.scene import Scenario, Vec3, mirror_point

TRUTHS = {"UE": Vec3(0, 0, 0), "VUE": Vec3(5, 0, 0), "SP": Vec3(0, 5, 0)}


# ── Matching ───────────────────────────────────────────────────────────────

def test_exact_detections_all_match():
    detections = [TRUTHS["SP"], TRUTHS["UE"], TRUTHS["VUE"]]
    assert match_pairs(detections, TRUTHS, 0.2) == {"SP": 0, "UE": 1, "VUE": 2}
    assert match_detections(detections, TRUTHS, 0.2) == {"UE": True, "VUE": True, "SP": True}


def test_one_detection_cannot_serve_two_truths():
    close = {"A": Vec3(0, 0, 0), "B": Vec3(0.1, 0, 0)}
    assert match_detections([Vec3(0.05, 0, 0)], close, 0.2) in ({"A": True, "B": False}, {"A": False, "B": True})
    # equal distances fall to truth order
    assert match_pairs([Vec3(0.05, 0, 0)], close, 0.2) == {"A": 0}


def test_radius_boundary_is_inclusive():
    assert match_detections([Vec3(0.25, 0, 0)], {"UE": Vec3(0, 0, 0)}, 0.2) == {"UE": False}
    assert match_detections([Vec3(0.125, 0, 0)], {"UE": Vec3(0, 0, 0)}, 0.125) == {"UE": True}


def test_greedy_takes_globally_closest_pair_first():
    truths = {"A": Vec3(0, 0, 0), "B": Vec3(0.3, 0, 0)}
    detections = [Vec3(0.16, 0, 0), Vec3(0.29, 0, 0)]
    assert match_pairs(detections, truths, 0.2) == {"B": 1, "A": 0}


def test_matching_rejects_bad_radius_and_handles_empty():
    with pytest.raises(ValueError):
        match_pairs([], TRUTHS, 0.0)
    assert match_detections([], TRUTHS, 0.2) == {"UE": False, "VUE": False, "SP": False}


# ── Statistics ─────────────────────────────────────────────────────────────

def test_binomial_standard_error():
    stats = ObjectStats(successes=250, trials=500)
    assert stats.probability == 0.5
    assert stats.std_err == pytest.approx(math.sqrt(0.25 / 500))
    assert ObjectStats(successes=500, trials=500).std_err == 0.0


def test_aggregate_counts_failures():
    outcomes = [
        TrialOutcome(0, {"UE": True, "VUE": True, "SP": False}),
        TrialOutcome(1, {"UE": True, "VUE": False, "SP": False}),
        TrialOutcome(2, {name: False for name in OBJECTS}, error="DegenerateGeometry: boom"),
    ]
    stats = aggregate(0.01, Variant.ESTIMATED, outcomes)
    assert stats.objects["UE"].successes == 2
    assert stats.objects["VUE"].successes == 1
    assert stats.objects["SP"].successes == 0
    assert all(s.trials == 3 for s in stats.objects.values())
    assert stats.failed_trials == 1


# ── Trials ─────────────────────────────────────────────────────────────────

def _config(room, **overrides):
    params = dict(base_scenario=room, grid=default_search_grid(0.1), trials=4, master_seed=3)
    params.update(overrides)
    return TrialConfig(**params)


def test_config_requires_one_surface_and_one_scatterer(room):
    with pytest.raises(ValueError):
        TrialConfig(base_scenario=Scenario(room.aps, room.ue, rf=room.rf), grid=default_search_grid(0.1))
    with pytest.raises(ValueError):
        _config(room, success_radius=0.0)


def test_default_search_grid_covers_the_search_region():
    grid = default_search_grid(0.01)
    assert (grid.x_min, grid.x_max, grid.y_min, grid.y_max, grid.z_fixed) == (-5, 5, -10, 30, -1.4)


def test_default_search_grid_holds_every_virtual_ue(room):
    grid = default_search_grid(0.01)
    wall = room.surfaces[0]
    p = DEFAULTS.placement_bounds
    for x in (p.x_min, p.x_max):
        for y in (p.y_min, p.y_max):
            vue = mirror_point(Vec3(x, y, DEFAULTS.object_height_z), wall)
            assert grid.x_min <= vue.x <= grid.x_max
            assert grid.y_min <= vue.y <= grid.y_max
            assert vue.z == grid.z_fixed


def test_placement_respects_bounds_and_separation(room):
    cfg = _config(room, trials=200)
    for i in range(cfg.trials):
        ue, sp = draw_placement(cfg, i)
        for p in (ue, sp):
            assert -4 <= p.x <= 4 and -8 <= p.y <= 8 and p.z == -1.4
        assert ue.distance_to(sp) >= 1.0


def test_placement_can_snap_to_grid(room):
    cfg = _config(room, snap_to_grid=True)
    ue, sp = draw_placement(cfg, 0)
    assert cfg.grid.cell_center(cfg.grid.nearest_index(ue)) == ue
    assert cfg.grid.cell_center(cfg.grid.nearest_index(sp)) == sp


def test_trial_scene_is_deterministic_and_keeps_rcs(room):
    cfg = _config(room)
    s1, p1 = trial_scene(cfg, 2)
    s2, p2 = trial_scene(cfg, 2)
    s3, _ = trial_scene(cfg, 3)
    assert s1 == s2 and np.array_equal(p1, p2)
    assert s1.ue != s3.ue
    assert s1.scatterers[0].rcs == room.scatterers[0].rcs
    assert s1.surfaces == room.surfaces
    assert np.all((p1 >= 0) & (p1 < 2 * np.pi))


def test_run_trial_is_reproducible(room):
    cfg = _config(room)
    a = run_trial(cfg, 1)
    b = run_trial(cfg, 1)
    assert a.flags == b.flags
    assert a.detections == b.detections
    assert a.error is None
    assert set(a.truths) == set(OBJECTS)


def test_on_grid_trials_find_the_direct_path(room):
    cfg = _config(room, grid=default_search_grid(0.05), snap_to_grid=True, trials=3)
    for outcome in run_trials(cfg, show_progress=False):
        assert outcome.flags["UE"]


def test_perfect_removal_trial(room):
    cfg = _config(room, variant=Variant.PERFECT_REMOVAL, grid=default_search_grid(0.05), snap_to_grid=True, trials=2)
    for outcome in run_trials(cfg, show_progress=False):
        assert outcome.error is None
        assert outcome.flags["UE"]


def test_surface_errors_recorded_when_ue_and_vue_match(room):
    cfg = _config(room, grid=default_search_grid(0.05), snap_to_grid=True, trials=3)
    for outcome in run_trials(cfg, show_progress=False):
        if outcome.flags["UE"] and outcome.flags["VUE"]:
            # both ends lie within the success radius of the truth
            assert outcome.surface_offset_err <= 0.2 + 1e-9
            assert 0.0 <= outcome.surface_angle_err < 0.15
        else:
            assert outcome.surface_offset_err is None


# ── Sweep ──────────────────────────────────────────────────────────────────

def test_sweep_table_layout_and_determinism(room):
    cfg = _config(room, trials=2)
    variants = [Variant.ESTIMATED, Variant.PERFECT_REMOVAL]
    diagnostics = {}
    table = sweep(cfg, [0.2, 0.1], variants, diagnostics=diagnostics, show_progress=False)
    again = sweep(cfg, [0.2, 0.1], variants, show_progress=False)

    assert [(row.resolution_m, row.variant) for row in table] == [
        (0.2, Variant.ESTIMATED), (0.2, Variant.PERFECT_REMOVAL),
        (0.1, Variant.ESTIMATED), (0.1, Variant.PERFECT_REMOVAL),
    ]
    for row, other in zip(table, again):
        assert row.objects == other.objects
        for s in row.objects.values():
            assert s.trials == 2 and 0 <= s.successes <= 2
    assert set(diagnostics) == {(r, v) for r in (0.2, 0.1) for v in variants}
    assert [o.trial_index for o in diagnostics[(0.1, Variant.ESTIMATED)]] == [0, 1]


def test_sweep_rejects_non_positive_resolution(room):
    with pytest.raises(ValueError):
        sweep(_config(room), [0.1, 0.0], [Variant.ESTIMATED], show_progress=False)


def test_worker_pool_matches_serial_run(room):
    cfg = _config(room, grid=GridSpec(-5, 5, -10, 16, -1.4, 0.2), trials=3)
    serial = run_trials(cfg, workers=1, show_progress=False)
    pooled = run_trials(cfg, workers=2, threads_per_worker=1, show_progress=False)
    assert [o.trial_index for o in pooled] == [0, 1, 2]
    assert [o.detections for o in pooled] == [o.detections for o in serial]
    assert [o.flags for o in pooled] == [o.flags for o in serial]


# ── Detection-probability reproduction (200 trials per point) ──────────────

SWEEP_RESOLUTIONS = [0.01, 0.03, 0.05, 0.1]
BOTH = [Variant.ESTIMATED, Variant.PERFECT_REMOVAL]


@pytest.fixture(scope="module")
def reference_sweep(room):
    cfg = TrialConfig(base_scenario=room, grid=default_search_grid(SWEEP_RESOLUTIONS[0]), trials=200, master_seed=0)
    workers = os.cpu_count() or 1
    table = sweep(cfg, SWEEP_RESOLUTIONS, BOTH, workers=workers, threads_per_worker=1, show_progress=False)
    return {(row.resolution_m, row.variant): row for row in table}


def _two_se(a: ObjectStats, b: ObjectStats) -> float:
    return 2.0 * math.hypot(a.std_err, b.std_err)


@pytest.mark.slow
def test_fine_grid_spot_checks(reference_sweep):
    estimated = reference_sweep[(0.01, Variant.ESTIMATED)]
    removal = reference_sweep[(0.01, Variant.PERFECT_REMOVAL)]
    assert estimated.failed_trials == 0 and removal.failed_trials == 0
    assert estimated.objects["UE"].probability >= 0.98
    assert estimated.objects["SP"].probability <= 0.05
    assert removal.objects["SP"].probability >= 0.9


@pytest.mark.slow
def test_coarse_grid_ue_spot_check(reference_sweep):
    ue = reference_sweep[(0.1, Variant.ESTIMATED)].objects["UE"]
    assert abs(ue.probability - 0.432) <= 0.15


@pytest.mark.slow
def test_detection_probability_does_not_grow_with_spacing(reference_sweep):
    for variant in BOTH:
        for finer, coarser in zip(SWEEP_RESOLUTIONS, SWEEP_RESOLUTIONS[1:]):
            for name in OBJECTS:
                a = reference_sweep[(finer, variant)].objects[name]
                b = reference_sweep[(coarser, variant)].objects[name]
                assert b.probability <= a.probability + _two_se(a, b), (variant, name, finer, coarser)


@pytest.mark.slow
def test_objects_rank_by_strength(reference_sweep):
    for resolution in SWEEP_RESOLUTIONS:
        p = {name: s.probability for name, s in reference_sweep[(resolution, Variant.ESTIMATED)].objects.items()}
        assert p["UE"] >= p["VUE"] >= p["SP"], resolution


@pytest.mark.slow
def test_perfect_removal_is_no_worse_than_estimated(reference_sweep):
    for resolution in SWEEP_RESOLUTIONS:
        for name in ("VUE", "SP"):
            est = reference_sweep[(resolution, Variant.ESTIMATED)].objects[name]
            pr = reference_sweep[(resolution, Variant.PERFECT_REMOVAL)].objects[name]
            assert pr.probability >= est.probability - _two_se(est, pr), (resolution, name)
