# Save as: snapslam/montecarlo/sweep.py
import logging
import math
import multiprocessing
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

from tqdm import tqdm

from snapslam.config import SHOW_PROGRESS
from snapslam.montecarlo.trial import OBJECTS, TrialConfig, TrialOutcome, Variant, run_trial

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ObjectStats:
    successes: int
    trials: int

    @property
    def probability(self) -> float:
        return self.successes / self.trials

    @property
    def std_err(self) -> float:
        """Binomial standard error of the detection probability."""
        p = self.probability
        return math.sqrt(p * (1.0 - p) / self.trials)


@dataclass
class DetectionStats:
    resolution_m: float
    variant: Variant
    objects: Dict[str, ObjectStats] = field(default_factory=dict)
    failed_trials: int = 0


def aggregate(resolution_m: float, variant: Variant, outcomes: Iterable[TrialOutcome]) -> DetectionStats:
    outcomes = list(outcomes)
    trials = len(outcomes)
    return DetectionStats(
        resolution_m=resolution_m,
        variant=variant,
        objects={
            name: ObjectStats(successes=sum(1 for o in outcomes if o.flags.get(name)), trials=trials)
            for name in OBJECTS
        },
        failed_trials=sum(1 for o in outcomes if o.error is not None),
    )


def _init_worker(threads: Optional[int]):
    if threads:
        from snapslam.config import set_threads
        set_threads(threads)


def run_trials(
    cfg: TrialConfig,
    workers: int = 1,
    threads_per_worker: Optional[int] = None,
    label: str = "",
    show_progress: bool = SHOW_PROGRESS,
) -> List[TrialOutcome]:
    """All of cfg's trials, ordered by trial index whatever the worker count."""
    indices = range(cfg.trials)
    # disable=None lets tqdm switch itself off when stderr is not a terminal
    progress = tqdm(total=cfg.trials, desc=label or "trials", disable=None if show_progress else True, leave=False)
    outcomes: List[TrialOutcome] = []
    try:
        if workers <= 1:
            for index in indices:
                outcomes.append(run_trial(cfg, index))
                progress.update(1)
        else:
            # spawn: the numba threading layer is not fork-safe
            context = multiprocessing.get_context("spawn")
            with ProcessPoolExecutor(
                max_workers=workers,
                mp_context=context,
                initializer=_init_worker,
                initargs=(threads_per_worker,),
            ) as pool:
                futures = [pool.submit(run_trial, cfg, index) for index in indices]
                for future in as_completed(futures):
                    outcomes.append(future.result())
                    progress.update(1)
    finally:
        progress.close()
    outcomes.sort(key=lambda o: o.trial_index)
    return outcomes


def sweep(
    cfg: TrialConfig,
    resolutions: Sequence[float],
    variants: Sequence[Variant],
    workers: int = 1,
    threads_per_worker: Optional[int] = None,
    diagnostics: Optional[Dict[tuple, List[TrialOutcome]]] = None,
    show_progress: bool = SHOW_PROGRESS,
) -> List[DetectionStats]:
    """Detection statistics for every (resolution, variant) pair, in input order.

    Pass a dict as `diagnostics` to also collect the per-trial outcomes.
    """
    if any(not r > 0 for r in resolutions):
        raise ValueError(f"resolutions must be positive, got {list(resolutions)}")

    table: List[DetectionStats] = []
    for resolution in resolutions:
        for variant in variants:
            point = cfg.at(resolution, variant)
            started = time.perf_counter()
            outcomes = run_trials(
                point, workers, threads_per_worker,
                label=f"{resolution} m {variant.value}", show_progress=show_progress,
            )
            stats = aggregate(resolution, variant, outcomes)
            table.append(stats)
            if diagnostics is not None:
                diagnostics[(resolution, variant)] = outcomes
            summary = ", ".join(f"{name} {s.probability:.3f}" for name, s in stats.objects.items())
            logger.info(
                f"✅ [Sweep] {resolution} m / {variant.value}: {summary} "
                f"({point.trials} trials, {time.perf_counter() - started:.1f}s)"
            )
            if stats.failed_trials:
                logger.warning(f"⚠️ [Sweep] {stats.failed_trials} trial(s) failed at {resolution} m / {variant.value}")
    return table
