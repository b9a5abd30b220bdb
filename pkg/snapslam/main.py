# Save as: snapslam/main.py
# Command-line entry point: `snapslam <command> ...`
import argparse
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional

from snapslam.config import DEFAULTS, LOG_LEVEL, TOOL_VERSION, default_threads, set_threads
from snapslam.errors import SnapSlamError, UsageError
from snapslam.forward import Seeded, draw_phases, synthesize_snapshot
from snapslam.imaging import GridSpec, ambiguity_map, compute_image, write_heatmap
from snapslam.imaging.kernels import kernel_backend
from snapslam.io_utils import (
    BUNDLED_SCENARIO,
    RunManifest,
    file_sha256,
    manifest_path,
    parse_scenario,
    write_manifest,
)
from snapslam.io_utils.csv_io import (
    read_snapshot_csv,
    write_detections_csv,
    write_diagnostics_csv,
    write_image_csv,
    write_snapshot_csv,
    write_sweep_csv,
)
from snapslam.montecarlo import TrialConfig, Variant, default_search_grid, sweep
from snapslam.rng import Stream, substream
from snapslam.scene import Vec3, scenario_digest
from snapslam.slam import StopRule, run_slam

logger = logging.getLogger("snapslam")

VARIANT_CHOICES = {
    "estimated": [Variant.ESTIMATED],
    "pr": [Variant.PERFECT_REMOVAL],
    "both": [Variant.ESTIMATED, Variant.PERFECT_REMOVAL],
}

# Options whose values may start with "-" (negative coordinates).
VALUE_OPTIONS = ("--grid", "--ref", "--resolutions")


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of printing usage and exiting."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def join_option_values(argv: List[str]) -> List[str]:
    """Rewrites `--grid -5,5,...` as `--grid=-5,5,...` so argparse does not read the value as a flag."""
    out: List[str] = []
    i = 0
    while i < len(argv):
        token = argv[i]
        if token in VALUE_OPTIONS and i + 1 < len(argv):
            out.append(f"{token}={argv[i + 1]}")
            i += 2
            continue
        out.append(token)
        i += 1
    return out


class RunContext:
    """Per-invocation state: the parsed arguments and every file written so far."""

    def __init__(self, args: argparse.Namespace, argv: List[str]):
        self.args = args
        self.argv = argv
        self.written: List[Path] = []
        self.scenario_path = Path(args.scenario)
        self.scenario = parse_scenario(self.scenario_path)

    def output(self, path) -> Path:
        path = Path(path)
        self.written.append(path)
        return path

    def manifest(self, out: Path, seed: Optional[int] = None, **extra):
        m = RunManifest(
            command_line=self.argv,
            scenario_hash=scenario_digest(self.scenario),
            scenario_file_sha256=file_sha256(self.scenario_path),
            master_seed=seed,
            kernel_backend=kernel_backend(),
            threads=self.args.threads,
            extra=extra,
        )
        self.written.append(manifest_path(out))
        write_manifest(out, m)

    def remove_partial_outputs(self):
        for path in self.written:
            try:
                path.unlink()
            except FileNotFoundError:
                pass
            except OSError as e:
                logger.warning(f"⚠️ [CLI] Could not remove partial output {path}: {e}")


def _parse_floats(text: str, what: str) -> List[float]:
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ValueError(f"{what} must be comma-separated numbers, got {text!r}")


def _parse_point(text: str) -> Vec3:
    values = _parse_floats(text, "--ref")
    if len(values) != 3:
        raise ValueError(f"--ref needs x,y,z, got {text!r}")
    return Vec3(*values)


# ── Commands ───────────────────────────────────────────────────────────────

def cmd_synth(ctx: RunContext):
    args = ctx.args
    s = ctx.scenario
    phases = draw_phases(s.path_count, substream(args.seed, 0, Stream.PHASES))
    noise = None if args.no_noise else Seeded(args.seed, 0)
    y = synthesize_snapshot(s, phases, noise)
    out = ctx.output(args.out)
    write_snapshot_csv(y, out)
    ctx.manifest(out, seed=args.seed, noisy=not args.no_noise, phases=[float(p) for p in phases])
    logger.info(f"✅ [Synth] {len(y)} samples, {s.path_count} paths, energy {y.energy():.4e} -> {out}")


def _load_snapshot_and_grid(ctx: RunContext):
    grid = GridSpec.parse(ctx.args.grid)
    y = read_snapshot_csv(ctx.args.snapshot)
    return y, grid


def cmd_image(ctx: RunContext):
    args = ctx.args
    y, grid = _load_snapshot_and_grid(ctx)
    img = compute_image(y, grid, ctx.scenario.ap_positions(), ctx.scenario.rf.carrier_hz)
    out = ctx.output(args.out)
    write_image_csv(img, out)
    provenance = dict(grid=args.grid, snapshot_sha256=file_sha256(args.snapshot))
    ctx.manifest(out, **provenance)
    if args.heatmap:
        heatmap = ctx.output(args.heatmap)
        write_heatmap(img, heatmap)
        ctx.manifest(heatmap, image=str(out), **provenance)
    logger.info(f"✅ [Imaging] {grid.cell_count} cells -> {out}")


def cmd_slam(ctx: RunContext):
    args = ctx.args
    y, grid = _load_snapshot_and_grid(ctx)
    max_targets = args.max_targets
    if max_targets is None and args.residual_eps is None:
        max_targets = DEFAULTS.max_targets
    stop = StopRule(max_targets=max_targets, residual_eps=args.residual_eps)
    detections = run_slam(
        y, grid, ctx.scenario.ap_positions(), ctx.scenario.rf.carrier_hz, stop, refine_factor=args.refine
    )
    out = ctx.output(args.out)
    write_detections_csv(detections, out)
    ctx.manifest(
        out,
        grid=args.grid,
        snapshot_sha256=file_sha256(args.snapshot),
        max_targets=max_targets,
        residual_eps=args.residual_eps,
        refine=args.refine,
    )
    for d in detections:
        logger.info(f"🎯 [SLAM] #{d.iteration} at ({d.position.x:.3f}, {d.position.y:.3f}, {d.position.z:.3f})")
    logger.info(f"✅ [SLAM] {len(detections)} detection(s) -> {out}")


def cmd_ambiguity(ctx: RunContext):
    args = ctx.args
    reference = _parse_point(args.ref)
    grid = GridSpec.parse(args.grid)
    img = ambiguity_map(reference, grid, ctx.scenario.ap_positions(), ctx.scenario.rf.carrier_hz)
    out = ctx.output(args.out)
    write_image_csv(img, out)
    ctx.manifest(out, grid=args.grid, ref=reference.as_list())
    logger.info(f"✅ [Ambiguity] {grid.cell_count} cells around {reference.as_list()} -> {out}")


def cmd_sweep(ctx: RunContext):
    args = ctx.args
    resolutions = _parse_floats(args.resolutions, "--resolutions")
    if not resolutions:
        raise ValueError("--resolutions is empty")
    cfg = TrialConfig(
        base_scenario=ctx.scenario,
        grid=default_search_grid(resolutions[0]),
        trials=args.trials,
        master_seed=args.seed,
        snap_to_grid=args.snap_to_grid,
    )
    workers = max(1, args.workers)
    diagnostics = {} if args.diagnostics else None
    started = time.perf_counter()
    table = sweep(
        cfg,
        resolutions,
        VARIANT_CHOICES[args.variant],
        workers=workers,
        threads_per_worker=max(1, args.threads // workers),
        diagnostics=diagnostics,
        show_progress=not args.quiet,
    )
    out = ctx.output(args.out)
    write_sweep_csv(table, out)
    provenance = dict(
        resolutions=resolutions,
        trials=args.trials,
        variant=args.variant,
        snap_to_grid=args.snap_to_grid,
    )
    ctx.manifest(out, seed=args.seed, **provenance)
    if diagnostics is not None:
        diagnostics_out = ctx.output(args.diagnostics)
        write_diagnostics_csv(diagnostics, diagnostics_out)
        ctx.manifest(diagnostics_out, seed=args.seed, sweep=str(out), **provenance)
    logger.info(f"✅ [Sweep] {len(table)} row group(s) in {time.perf_counter() - started:.1f}s -> {out}")


# ── Parser ─────────────────────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    common = CliParser(add_help=False)
    common.add_argument("--scenario", default=str(BUNDLED_SCENARIO), help="scenario JSON (default: bundled reference room)")
    common.add_argument("--threads", type=int, default=default_threads(), help="imaging kernel threads")
    common.add_argument("--workers", type=int, default=1, help="Monte Carlo worker processes")
    common.add_argument("--quiet", action="store_true", help="only warnings and errors on stderr")

    parser = CliParser(prog="snapslam", description="Single-snapshot coherent SLAM simulator")
    parser.add_argument("--version", action="version", version=f"snapslam {TOOL_VERSION}")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("synth", parents=[common], help="synthesize a snapshot")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-noise", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_synth)

    p = commands.add_parser("image", parents=[common], help="image a snapshot over a grid")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--grid", required=True, help="xmin,xmax,ymin,ymax,z,spacing[,zmax]")
    p.add_argument("--out", required=True)
    p.add_argument("--heatmap", help="also write a 16-bit PGM heatmap")
    p.set_defaults(handler=cmd_image)

    p = commands.add_parser("slam", parents=[common], help="detect targets by iterative cancellation")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--grid", required=True, help="xmin,xmax,ymin,ymax,z,spacing[,zmax]")
    p.add_argument("--max-targets", type=int)
    p.add_argument("--residual-eps", type=float)
    p.add_argument("--refine", type=int, help="local refinement factor around each peak (off by default)")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_slam)

    p = commands.add_parser("ambiguity", parents=[common], help="ambiguity map around a reference point")
    p.add_argument("--ref", required=True, help="x,y,z")
    p.add_argument("--grid", required=True, help="xmin,xmax,ymin,ymax,z,spacing[,zmax]")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_ambiguity)

    p = commands.add_parser("sweep", parents=[common], help="Monte Carlo detection probability sweep")
    p.add_argument("--resolutions", required=True, help="comma-separated grid spacings in metres")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", choices=sorted(VARIANT_CHOICES), default="both")
    p.add_argument("--snap-to-grid", action="store_true", help="place UE and SP on grid cells")
    p.add_argument("--diagnostics", help="also write per-trial diagnostics CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_sweep)
    return parser


def setup_logging(quiet: bool):
    level = logging.WARNING if quiet else getattr(logging, LOG_LEVEL, logging.INFO)
    root = logging.getLogger("snapslam")
    root.handlers.clear()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    root.addHandler(handler)
    root.setLevel(level)
    root.propagate = False


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(join_option_values(argv))
    except UsageError as e:
        return _fail(None, e.one_line(), e.exit_code)
    setup_logging(args.quiet)

    ctx: Optional[RunContext] = None
    try:
        if args.threads < 1:
            raise ValueError(f"--threads must be >= 1, got {args.threads}")
        in_effect = set_threads(args.threads)
        logger.debug(f"🧵 [CLI] {kernel_backend()} kernel, {in_effect} thread(s)")
        ctx = RunContext(args, argv)
        args.handler(ctx)
    except SnapSlamError as e:
        return _fail(ctx, e.one_line(), e.exit_code)
    except ValueError as e:
        return _fail(ctx, f"{type(e).__name__}: {' '.join(str(e).split())}", 2)
    except OSError as e:
        return _fail(ctx, f"{type(e).__name__}: {' '.join(str(e).split())}", 1)
    return 0


def _fail(ctx: Optional[RunContext], line: str, code: int) -> int:
    if ctx is not None:
        ctx.remove_partial_outputs()
    print(f"snapslam: {line}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
