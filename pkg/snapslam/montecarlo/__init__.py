# Expose the experiment harness at package level
from .matching import match_detections, match_pairs
from .trial import OBJECTS, TrialConfig, TrialOutcome, Variant, default_search_grid, run_trial, trial_scene
from .sweep import DetectionStats, ObjectStats, aggregate, run_trials, sweep
