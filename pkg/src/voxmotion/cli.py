"""Command-line driver.

Subcommands:
  classify   manifest or PLY directory in, verdict report out
  synth      scene spec in, rendered frames plus manifest (or raw clouds) out
  register   two clouds in, one pair decision plus arrow field out
  inspect    echo the auto-resolved size parameters for an input
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .classifier import (
    ClassifierParams,
    analyze_pair,
    classify_sequence,
    default_workers,
    resolve_region_size,
)
from .dataset import DEFAULT_DEPTH_SCALE, FrameRecord, load_frames, read_manifest, write_depth_png, write_manifest, write_mask_png
from .errors import FrameSkipped, InsufficientFrames, VoxmotionError
from .geometry import aabb_diagonal
from .ply import export_arrows, read_ply, write_ply
from .preprocess import CameraIntrinsics, PreprocessParams, mean_smooth, preprocess_frame, remove_statistical_outliers, voxel_downsample
from .registration import IcpParams
from .report import build_report, decision_to_dict, write_report
from .synthetic import generate_sequence, render_depth, scene_from_dict


def _add_classifier_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("classifier")
    group.add_argument("--region-size", type=float, default=None,
                       help="local registration cube edge in metres (default: AABB diagonal / 5)")
    group.add_argument("--quat-bin", type=float, default=0.1, help="quaternion quantization bin")
    group.add_argument("--trans-bin", type=float, default=0.1, help="translation quantization bin, metres")
    group.add_argument("--frame-skip", type=int, default=5, help="index gap between paired frames")
    group.add_argument("--min-matched-fraction", type=float, default=0.5,
                       help="minimum fraction of regions that must register for a reliable pair")
    group.add_argument("--min-fitness", type=float, default=0.3,
                       help="minimum ICP fitness to keep a region registration")
    group.add_argument("--filter-window", type=int, default=5, help="odd mode-filter window size")
    group.add_argument("--zero-q-tol", type=float, default=0.02,
                       help="quaternion distance from identity treated as no motion")
    group.add_argument("--zero-t-tol", type=float, default=0.01,
                       help="translation magnitude treated as no motion, metres")
    icp_group = parser.add_argument_group("icp")
    icp_group.add_argument("--icp-iterations", type=int, default=50)
    icp_group.add_argument("--icp-tolerance", type=float, default=1e-6)
    icp_group.add_argument("--icp-max-dist", type=float, default=None,
                           help="correspondence gate in metres (default: region size / 2)")
    icp_group.add_argument("--icp-min-pairs", type=int, default=3)
    parser.add_argument("--workers", type=int, default=None,
                        help="region registration threads (default: $VOXMOTION_THREADS or 1)")


def _add_preprocess_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("preprocess")
    group.add_argument("--outlier-std-ratio", type=float, default=0.5)
    group.add_argument("--neighbor-fraction", type=float, default=0.1)
    group.add_argument("--max-neighbors", type=int, default=200)
    group.add_argument("--voxel-size", type=float, default=None,
                       help="downsample cube edge in metres (default: AABB diagonal / 20)")
    group.add_argument("--smooth-radius", type=float, default=None,
                       help="mean smoothing radius in metres (default: 5 x voxel size)")


def _classifier_params(args) -> ClassifierParams:
    return ClassifierParams(
        region_size=args.region_size,
        quat_bin=args.quat_bin,
        trans_bin=args.trans_bin,
        frame_skip=args.frame_skip,
        min_matched_fraction=args.min_matched_fraction,
        min_fitness=args.min_fitness,
        filter_window=args.filter_window,
        zero_q_tol=args.zero_q_tol,
        zero_t_tol=args.zero_t_tol,
    )


def _icp_params(args) -> IcpParams:
    return IcpParams(
        max_iterations=args.icp_iterations,
        tolerance=args.icp_tolerance,
        max_pair_distance=args.icp_max_dist,
        min_pairs=args.icp_min_pairs,
    )


def _preprocess_params(args) -> PreprocessParams:
    return PreprocessParams(
        outlier_std_ratio=args.outlier_std_ratio,
        neighbor_fraction=args.neighbor_fraction,
        max_neighbors=args.max_neighbors,
        voxel_size=args.voxel_size,
        smooth_radius=args.smooth_radius,
    )


def _workers(args) -> int:
    return args.workers if args.workers is not None else default_workers()


def _preprocess_cloud(cloud, params: PreprocessParams):
    """Cloud-level cleanup for inputs that are already 3D (PLY replay path)."""
    cloud = remove_statistical_outliers(
        cloud,
        std_ratio=params.outlier_std_ratio,
        neighbor_fraction=params.neighbor_fraction,
        max_neighbors=params.max_neighbors,
    )
    voxel = params.voxel_size if params.voxel_size is not None else aabb_diagonal(cloud) / 20.0
    if voxel > 0:
        cloud = voxel_downsample(cloud, voxel)
        radius = params.smooth_radius if params.smooth_radius is not None else 5.0 * voxel
        cloud = mean_smooth(cloud, radius)
    return cloud


def _load_classify_input(args, preprocess: PreprocessParams):
    """Returns (clouds, indices, skipped frame indices, source description)."""
    source = Path(args.input)
    clouds, indices, skipped = [], [], []
    if source.is_dir():
        files = sorted(source.glob("*.ply"))
        if not files:
            raise InsufficientFrames(f"{source}: no .ply files found")
        for position, file in enumerate(files):
            cloud = read_ply(file)
            if not args.raw_clouds:
                cloud = _preprocess_cloud(cloud, preprocess)
            clouds.append(cloud)
            indices.append(position)
        return clouds, indices, skipped, str(source)

    manifest = read_manifest(source)
    for frame in load_frames(manifest):
        try:
            clouds.append(preprocess_frame(frame, preprocess))
            indices.append(frame.frame_index)
        except FrameSkipped:
            skipped.append(frame.frame_index)
    if len(clouds) < 2:
        raise InsufficientFrames(f"{source}: only {len(clouds)} usable frames after skipping")
    return clouds, indices, skipped, str(source)


def _cmd_classify(args) -> int:
    preprocess = _preprocess_params(args)
    params = _classifier_params(args)
    icp_params = _icp_params(args)
    workers = _workers(args)

    started = time.perf_counter()
    clouds, indices, skipped, source = _load_classify_input(args, preprocess)
    verdict = classify_sequence(
        clouds, params, icp_params, indices=indices, stride=args.stride, workers=workers
    )
    elapsed = time.perf_counter() - started

    report = build_report(
        verdict,
        classifier_params=params,
        icp_params=icp_params,
        preprocess_params=None if args.raw_clouds else preprocess,
        source=source,
        stride=args.stride,
        workers=workers,
        elapsed_seconds=elapsed,
    )
    if skipped:
        report["skipped_frames"] = skipped
    write_report(report, args.output)
    print(f"{verdict.label.value} ({len(verdict.decisions)} pairs) -> {args.output}")
    return 0


def _cmd_synth(args) -> int:
    document = json.loads(Path(args.spec).read_text())
    spec = scene_from_dict(document)
    frames, truth = generate_sequence(spec)

    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)

    truth_doc = [
        [
            {"rotation_wxyz": [float(c) for c in t.rotation],
             "translation": [float(c) for c in t.translation]}
            for t in per_frame
        ]
        for per_frame in truth
    ]
    (out / "truth.json").write_text(json.dumps(truth_doc, indent=2) + "\n")

    if args.ply:
        for f, cloud in enumerate(frames):
            write_ply(cloud, out / f"cloud_{f:04d}.ply")
        print(f"{len(frames)} clouds -> {out}")
        return 0

    camera = document.get("camera", {})
    intrinsics = CameraIntrinsics(
        fx=float(camera.get("fx", 525.0)),
        fy=float(camera.get("fy", 525.0)),
        cx=float(camera.get("cx", 319.5)),
        cy=float(camera.get("cy", 239.5)),
    )
    shape = (int(camera.get("height", 480)), int(camera.get("width", 640)))
    records = []
    for f, cloud in enumerate(frames):
        frame = render_depth(cloud, intrinsics, shape, frame_index=f)
        depth_name = f"depth_{f:04d}.png"
        mask_name = f"mask_{f:04d}.png"
        write_depth_png(out / depth_name, frame.depth, DEFAULT_DEPTH_SCALE)
        write_mask_png(out / mask_name, frame.mask)
        records.append(FrameRecord(index=f, depth_path=Path(depth_name), mask_path=Path(mask_name)))
    write_manifest(out / "manifest.json", intrinsics, records, DEFAULT_DEPTH_SCALE)
    print(f"{len(frames)} frames -> {out / 'manifest.json'}")
    return 0


def _cmd_register(args) -> int:
    cloud_a = read_ply(args.cloud_a)
    cloud_b = read_ply(args.cloud_b)
    if args.preprocess:
        preprocess = _preprocess_params(args)
        cloud_a = _preprocess_cloud(cloud_a, preprocess)
        cloud_b = _preprocess_cloud(cloud_b, preprocess)

    analysis = analyze_pair(
        cloud_a, cloud_b, _classifier_params(args), _icp_params(args), workers=_workers(args)
    )
    decision = analysis.decision
    document = decision_to_dict(decision)
    document["region_size"] = analysis.region_size
    Path(args.output).write_text(json.dumps(document, indent=2) + "\n")
    if args.arrows:
        export_arrows(decision.keys, analysis.regions, analysis.transforms, args.arrows)
    print(f"{decision.label.value} (keys={decision.key_count}, kept={decision.kept}, "
          f"skipped={decision.skipped}) -> {args.output}")
    return 0


def _cmd_inspect(args) -> int:
    source = Path(args.input)
    if source.suffix == ".json":
        manifest = read_manifest(source)
        frames = load_frames(manifest)
        cloud = None
        for frame in frames:
            try:
                cloud = preprocess_frame(frame, PreprocessParams())
                break
            except FrameSkipped:
                continue
        if cloud is None:
            raise InsufficientFrames(f"{source}: every frame was skipped")
        described = f"{source} (first usable frame, preprocessed)"
    else:
        cloud = read_ply(source)
        described = str(source)

    diagonal = aabb_diagonal(cloud)
    region = resolve_region_size(cloud, cloud, None)
    resolved = {
        "input": described,
        "points": int(len(cloud)),
        "aabb_diagonal": diagonal,
        "voxel_size": diagonal / 20.0,
        "smooth_radius": 5.0 * (diagonal / 20.0),
        "region_size": region,
        "icp_max_dist": region / 2.0,
    }
    print(json.dumps(resolved, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voxmotion",
        description="Classify an observed object as articulated, rigid, or "
                    "nondeterministic from a sequence of single-view point clouds.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="classify a frame sequence")
    p.add_argument("input", help="manifest JSON file or directory of per-frame PLY clouds")
    p.add_argument("-o", "--output", default="report.json", help="report path")
    p.add_argument("--stride", type=int, default=None,
                   help="pair start advance (default: the frame skip)")
    p.add_argument("--raw-clouds", action="store_true",
                   help="treat PLY inputs as already preprocessed")
    _add_preprocess_flags(p)
    _add_classifier_flags(p)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("synth", help="generate a synthetic sequence")
    p.add_argument("spec", help="scene spec JSON")
    p.add_argument("-o", "--output", default="scene_out", help="output directory")
    p.add_argument("--ply", action="store_true",
                   help="write raw per-frame clouds instead of rendered depth frames")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("register", help="classify a single cloud pair (debugging)")
    p.add_argument("cloud_a", help="source cloud PLY")
    p.add_argument("cloud_b", help="target cloud PLY")
    p.add_argument("-o", "--output", default="pair.json", help="decision path")
    p.add_argument("--arrows", default=None, help="also export the arrow field PLY here")
    p.add_argument("--preprocess", action="store_true", help="run cloud cleanup first")
    _add_preprocess_flags(p)
    _add_classifier_flags(p)
    p.set_defaults(func=_cmd_register)

    p = sub.add_parser("inspect", help="echo auto-resolved parameters for an input")
    p.add_argument("input", help="PLY cloud or manifest JSON")
    p.set_defaults(func=_cmd_inspect)

    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VoxmotionError as exc:
        print(f"{args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())
