"""Subcommand front-end binding the pipeline together.

Every subcommand reads an optional JSON config (flags win), writes its
artifacts plus a machine-readable run summary, and logs to stderr. Runs are
deterministic: identical config, seed, and inputs produce byte-identical
outputs. Exit codes: 0 success, 1 config/runtime/I-O error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import fileio
from .augment import augment, maybe_mixup
from .config import ConfigError, PipelineConfig
from .evaluation import Detection, classification_metrics, map50
from .model import Annotation, Source
from .prep import (
    SplitItem,
    assign_classes_from_image,
    black_fraction,
    class_weights,
    count_instances,
    expand_bbox,
    extract_crops,
    merge_labels,
    split_dataset,
    tile_image,
)
from .registration import estimate_similarity, invert, map_bbox, warp_image
from .report import compare_runs, expansion_factor, table_instances, table_splits

logger = logging.getLogger("holoprep")

JOBS_ENV_VAR = "HOLOPREP_JOBS"


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV_VAR, "1")))
    except ValueError:
        return 1


def _write_summary(path: str | Path | None, payload: dict) -> None:
    if path is None:
        return
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _summary_path(args, default_for: str | None) -> str | Path | None:
    """Explicit --summary wins; otherwise summaries land next to the main output."""
    if args.summary:
        return args.summary
    if default_for is None:
        return None
    p = Path(default_for)
    return p / "run_summary.json" if p.is_dir() else p.with_name(p.name + ".summary.json")


def _summary_base(command: str, config: PipelineConfig) -> dict:
    return {"command": command, "config": config.to_dict()}


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig.load(args.config) if getattr(args, "config", None) else PipelineConfig()
    overrides = {}
    for name in (
        "tile_size",
        "crop_size",
        "black_threshold",
        "keep_fraction",
        "expansion_factor",
        "expand_mode",
        "merge_iou",
        "seed",
        "max_warp_pixels",
    ):
        if hasattr(args, name):
            overrides[name] = getattr(args, name)
    return config.override(**overrides)


# --- subcommand implementations -----------------------------------------------


def _cmd_register(args, config: PipelineConfig) -> int:
    pairs = fileio.load_point_pairs(args.pairs)
    report = estimate_similarity(pairs)
    fileio.save_transform(report.transform, args.out)
    scale, angle, tx, ty = report.transform.params()
    logger.info(
        "registered %d pairs: scale=%.6g angle=%.6g rad t=(%.6g, %.6g) rms=%.3g%s",
        report.n_points, scale, angle, tx, ty, report.rms_residual,
        " [degenerate configuration]" if report.degenerate else "",
    )
    summary = _summary_base("register", config)
    summary.update(
        {
            "pairs": args.pairs,
            "transform": args.out,
            "n_points": report.n_points,
            "rms_residual": report.rms_residual,
            "degenerate": report.degenerate,
            "scale": scale,
            "angle_rad": angle,
            "translation": [tx, ty],
        }
    )
    _write_summary(_summary_path(args, args.out), summary)
    return 0


def _cmd_warp(args, config: PipelineConfig) -> int:
    raster = fileio.load_raster(args.image)
    transform = fileio.load_transform(args.transform)
    warped = warp_image(
        raster, transform, args.width, args.height,
        interpolation=args.interpolation, max_pixels=config.max_warp_pixels,
    )
    fileio.save_raster(warped, args.out)
    frac = black_fraction(warped)
    logger.info("warped %s -> %s (%dx%d, black fraction %.4f)", args.image, args.out, args.width, args.height, frac)
    summary = _summary_base("warp", config)
    summary.update({"image": args.image, "out": args.out, "width": args.width, "height": args.height,
                    "interpolation": args.interpolation, "black_fraction": frac})
    _write_summary(_summary_path(args, args.out), summary)
    return 0


def _map_labels_through(annotations, transform, in_size, out_size):
    """Normalized labels -> pixel boxes in the input frame -> transformed -> normalized."""
    in_w, in_h = in_size
    out_w, out_h = out_size
    mapped = []
    for ann in annotations:
        box_px = ann.box.to_pixel(in_w, in_h)
        moved = map_bbox(transform, box_px)
        clipped = moved.clipped(float(out_w), float(out_h))
        if clipped is None:
            continue
        mapped.append(
            Annotation(clipped.to_normalized(out_w, out_h), ann.class_id, ann.confidence, ann.source)
        )
    return mapped


def _cmd_propagate(args, config: PipelineConfig) -> int:
    parsed = fileio.load_labels(args.labels)
    annotations = list(parsed.annotations)
    for lineno, reason in parsed.rejects:
        logger.warning("%s line %d: %s", args.labels, lineno, reason)
    dropped = 0
    if args.transform:
        transform = fileio.load_transform(args.transform)
        if args.invert:
            transform = invert(transform)
        if not (args.in_size and args.out_size):
            raise ValueError("--transform requires --in-size and --out-size to renormalize labels")
        before = len(annotations)
        annotations = _map_labels_through(annotations, transform, args.in_size, args.out_size)
        dropped = before - len(annotations)
    factor = args.expand if args.expand is not None else config.expansion_factor
    if factor > 1.0:
        annotations = [
            Annotation(expand_bbox(ann.box, factor, mode=config.expand_mode), ann.class_id, ann.confidence, ann.source)
            for ann in annotations
        ]
    fileio.save_labels(annotations, args.out)
    logger.info("propagated %d labels -> %s (dropped %d, expand %.3g)", len(annotations), args.out, dropped, factor)
    summary = _summary_base("propagate", config)
    summary.update({"labels": args.labels, "out": args.out, "count": len(annotations),
                    "dropped_outside": dropped, "rejected_lines": len(parsed.rejects), "expansion": factor})
    _write_summary(_summary_path(args, args.out), summary)
    return 0


def _cmd_tile(args, config: PipelineConfig) -> int:
    raster = fileio.load_raster(args.image)
    stem = Path(args.image).stem
    annotations = ()
    if args.labels:
        annotations = fileio.load_labels(args.labels).annotations
    result = tile_image(raster, annotations, config.tile_size, config.keep_fraction, parent=stem)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for tile in result.tiles:
        fileio.save_raster(tile.raster, out_dir / f"{tile.name}.png")
        fileio.save_labels(tile.annotations, out_dir / f"{tile.name}.txt")
    logger.info("tiled %s into %d tiles (%d damaged annotations)", args.image, len(result.tiles), result.damaged)
    summary = _summary_base("tile", config)
    summary.update(
        {
            "image": args.image,
            "out_dir": args.out_dir,
            "tiles": len(result.tiles),
            "damaged_annotations": result.damaged,
            "tile_annotations": sum(len(t.annotations) for t in result.tiles),
        }
    )
    _write_summary(_summary_path(args, args.out_dir), summary)
    return 0


def _cmd_crops(args, config: PipelineConfig) -> int:
    raster = fileio.load_raster(args.image)
    stem = Path(args.image).stem
    parsed = fileio.load_labels(args.labels)
    class_names = args.classes.split(",")
    crops = extract_crops(raster, parsed.annotations, config.crop_size)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for idx, (crop, class_id) in enumerate(crops):
        cname = class_names[class_id] if 0 <= class_id < len(class_names) else str(class_id)
        name = f"{stem}_a{idx}_{cname}.png"
        fileio.save_raster(crop, out_dir / name)
        names.append(name)
    logger.info("extracted %d crops from %s", len(crops), args.image)
    summary = _summary_base("crops", config)
    summary.update({"image": args.image, "out_dir": args.out_dir, "crops": names})
    _write_summary(_summary_path(args, args.out_dir), summary)
    return 0


def _cmd_screen(args, config: PipelineConfig) -> int:
    tile_paths = sorted(Path(args.tiles_dir).glob("*.png"))
    if not tile_paths:
        raise FileNotFoundError(f"no .png tiles found in {args.tiles_dir}")

    def fraction_of(path: Path) -> float:
        return black_fraction(fileio.load_raster(path))

    jobs = max(1, args.jobs)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            fractions = list(pool.map(fraction_of, tile_paths))
    else:
        fractions = [fraction_of(p) for p in tile_paths]

    kept, excluded = [], []
    for path, frac in zip(tile_paths, fractions):
        (excluded if frac >= config.black_threshold else kept).append(path.name)
    Path(args.kept).write_text("".join(n + "\n" for n in kept), encoding="utf-8")
    Path(args.excluded).write_text("".join(n + "\n" for n in excluded), encoding="utf-8")
    logger.info("screened %d tiles: %d kept, %d excluded (threshold %.4f)",
                len(tile_paths), len(kept), len(excluded), config.black_threshold)
    summary = _summary_base("screen", config)
    summary.update({"tiles_dir": args.tiles_dir, "kept": len(kept), "excluded": len(excluded),
                    "kept_manifest": args.kept, "excluded_manifest": args.excluded})
    _write_summary(_summary_path(args, args.kept), summary)
    return 0


def _cmd_expand(args, config: PipelineConfig) -> int:
    parsed = fileio.load_labels(args.labels)
    factor = args.factor if args.factor is not None else config.expansion_factor
    expanded = [
        Annotation(expand_bbox(ann.box, factor, mode=config.expand_mode), ann.class_id, ann.confidence, ann.source)
        for ann in parsed.annotations
    ]
    fileio.save_labels(expanded, args.out)
    logger.info("expanded %d boxes by area factor %.4g -> %s", len(expanded), factor, args.out)
    summary = _summary_base("expand", config)
    summary.update({"labels": args.labels, "out": args.out, "factor": factor,
                    "mode": config.expand_mode, "count": len(expanded)})
    _write_summary(_summary_path(args, args.out), summary)
    return 0


def _cmd_merge(args, config: PipelineConfig) -> int:
    manual = fileio.load_labels(args.manual, source=Source.MANUAL).annotations
    auto = fileio.load_labels(args.auto, source=Source.AUTO).annotations
    merged = merge_labels(manual, auto, config.merge_iou)
    fileio.save_labels(merged, args.out)
    suppressed = len(manual) + len(auto) - len(merged)
    logger.info("merged %d manual + %d auto -> %d (%d suppressed)", len(manual), len(auto), len(merged), suppressed)
    summary = _summary_base("merge", config)
    summary.update({"manual": args.manual, "auto": args.auto, "out": args.out,
                    "kept": len(merged), "suppressed": suppressed})
    _write_summary(_summary_path(args, args.out), summary)
    return 0


def _load_split_items(args) -> list[SplitItem]:
    if args.items:
        histograms: dict[str, dict[str, int]] = {}
        for lineno, line in enumerate(Path(args.items).read_text(encoding="utf-8").splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#") or line.lower().startswith("item,"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 3:
                raise ValueError(f"{args.items} line {lineno}: expected 'item,class,count'")
            item_id, cname, count = parts[0], parts[1], int(parts[2])
            hist = histograms.setdefault(item_id, {})
            hist[cname] = hist.get(cname, 0) + count
        return [SplitItem(k, v) for k, v in histograms.items()]
    manifest = fileio.load_manifest(args.manifest)
    items = []
    for rec in manifest.records:
        rec = fileio.load_record_annotations(rec, Path(args.manifest).parent)
        rec = assign_classes_from_image(rec, manifest.class_names)
        hist: dict[str, int] = {}
        for ann in rec.annotations:
            cname = manifest.class_names[ann.class_id]
            hist[cname] = hist.get(cname, 0) + 1
        items.append(SplitItem(rec.image_path, hist))
    return items


def _cmd_split(args, config: PipelineConfig) -> int:
    items = _load_split_items(args)
    assignment = split_dataset(items, config.split_ratios, config.seed)
    lines = ["item,split"]
    lines += [f"{item_id},{split.value}" for item_id, split in sorted(assignment.assignment.items())]
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    sizes = assignment.sizes()
    logger.info("split %d items: %s", len(items), {s.value: n for s, n in sizes.items()})
    summary = _summary_base("split", config)
    summary.update({"out": args.out, "items": len(items),
                    "sizes": {s.value: n for s, n in sizes.items()}})
    _write_summary(_summary_path(args, args.out), summary)
    return 0


def _parse_counts_arg(text: str) -> dict[str, int]:
    counts = {}
    for part in text.split(","):
        if not part.strip():
            continue
        name, _, value = part.partition("=")
        if not value:
            raise ValueError(f"counts must look like CLASS=N, got {part!r}")
        counts[name.strip()] = int(value)
    if not counts:
        raise ValueError("no counts given")
    return counts


def _cmd_weights(args, config: PipelineConfig) -> int:
    counts = _parse_counts_arg(args.counts)
    table = class_weights(counts)
    doc = {"counts": counts, "weights": {k: table.weights[k] for k in counts}}
    Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    for cname in counts:
        logger.info("weight[%s] = %.5f (count %d)", cname, table.weights[cname], counts[cname])
    summary = _summary_base("weights", config)
    summary.update(doc)
    _write_summary(_summary_path(args, args.out), summary)
    return 0


def _cmd_augment(args, config: PipelineConfig) -> int:
    raster = fileio.load_raster(args.image)
    annotations = fileio.load_labels(args.labels).annotations if args.labels else ()
    if args.policy == "detection":
        policy = config.detection_augmentation
    elif args.policy == "classification":
        policy = config.classification_augmentation
    else:
        raise ValueError(f"unknown policy {args.policy!r}")
    policy = policy.with_seed(config.seed)
    mix_raster = fileio.load_raster(args.mix_with) if args.mix_with else None

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.image).stem
    total_dropped = 0
    mixed = 0
    for draw in range(args.draws):
        result = augment(raster, annotations, policy, draw)
        out_raster = result.raster
        if mix_raster is not None and policy.mixup_p > 0:
            out_raster, lam = maybe_mixup(policy, draw, out_raster, mix_raster)
            mixed += lam is not None
        fileio.save_raster(out_raster, out_dir / f"{stem}_d{draw}.png")
        fileio.save_labels(result.annotations, out_dir / f"{stem}_d{draw}.txt")
        total_dropped += result.dropped
    logger.info("augmented %s x%d draws (%d boxes dropped, %d mixed)", args.image, args.draws, total_dropped, mixed)
    summary = _summary_base("augment", config)
    summary.update({"image": args.image, "out_dir": args.out_dir, "draws": args.draws,
                    "policy": args.policy, "dropped_annotations": total_dropped, "mixup_applied": mixed})
    _write_summary(_summary_path(args, args.out_dir), summary)
    return 0


def _cmd_evaluate(args, config: PipelineConfig) -> int:
    class_names = args.classes.split(",")
    if args.mode == "detect":
        gt_dir, det_dir = Path(args.truth), Path(args.predictions)
        ground_truths = {}
        for path in sorted(gt_dir.glob("*.txt")):
            ground_truths[path.stem] = list(fileio.load_labels(path, source=Source.MANUAL).annotations)
        detections = []
        for path in sorted(det_dir.glob("*.txt")):
            for ann in fileio.load_labels(path, source=Source.AUTO).annotations:
                detections.append(Detection(path.stem, ann.box, ann.class_id, ann.confidence or 0.0))
        result = map50(detections, ground_truths, class_names, iou_threshold=args.iou)
        logger.info("mAP@%.2f = %.4f over %d classes", args.iou, result.map50, len(result.per_class_ap))
    else:
        truth = [int(v) for v in Path(args.truth).read_text(encoding="utf-8").split()]
        pred = [int(v) for v in Path(args.predictions).read_text(encoding="utf-8").split()]
        result = classification_metrics(pred, truth, len(class_names), class_names)
        logger.info("overall accuracy = %.4f on %d samples", result.accuracy, len(truth))
    doc = result.to_json_dict()
    Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    sys.stdout.write(_eval_text_report(result))
    summary = _summary_base("evaluate", config)
    summary.update({"mode": args.mode, "out": args.out, "result": doc})
    _write_summary(_summary_path(args, args.out), summary)
    return 0


def _eval_text_report(result) -> str:
    lines = []
    if result.map50 is not None:
        for cname, ap in result.per_class_ap.items():
            lines.append(f"AP[{cname}] = {ap:.4f}")
        lines.append(f"mAP50 = {result.map50:.4f}  (TP {result.tp}, FP {result.fp}, GT {result.n_gt})")
    if result.accuracy is not None:
        lines.append(f"overall accuracy = {result.accuracy:.4f}")
        lines.append("confusion (rows = truth):")
        for cname, row in zip(result.class_names, result.confusion):
            lines.append(f"  {cname}: " + " ".join(str(int(v)) for v in row))
    return "".join(line + "\n" for line in lines)


def _manifest_counts(manifest_path: str):
    manifest = fileio.load_manifest(manifest_path)
    root = Path(manifest_path).parent
    records = []
    for rec in manifest.records:
        rec = fileio.load_record_annotations(rec, root)
        rec = assign_classes_from_image(rec, manifest.class_names)
        records.append(rec)
    manifest = type(manifest)(tuple(records), manifest.class_names, manifest.splits)
    return count_instances(manifest)


def _cmd_report(args, config: PipelineConfig) -> int:
    out_lines = []
    summary = _summary_base("report", config)
    if args.kind == "factors":
        if len(args.values) % 2 != 0 or not args.values:
            raise ValueError("factors needs BASELINE EXPANDED pairs")
        factors = []
        for i in range(0, len(args.values), 2):
            fr = expansion_factor(int(args.values[i]), int(args.values[i + 1]))
            out_lines.append(f"{fr.baseline} -> {fr.expanded}: factor {fr.display}")
            factors.append({"baseline": fr.baseline, "expanded": fr.expanded, "raw": fr.raw, "display": fr.display})
        summary["factors"] = factors
    elif args.kind == "compare":
        if len(args.values) % 2 != 0 or not args.values:
            raise ValueError("compare needs BASELINE UPDATED pairs")
        ratios = []
        for i in range(0, len(args.values), 2):
            rr = compare_runs(float(args.values[i]), float(args.values[i + 1]))
            out_lines.append(f"{rr.baseline:g} -> {rr.updated:g}: {rr.display} times {rr.direction}")
            ratios.append({"baseline": rr.baseline, "updated": rr.updated, "raw": rr.ratio,
                           "display": rr.display, "direction": rr.direction})
        summary["ratios"] = ratios
    elif args.kind in ("instances", "splits"):
        if not args.manifest:
            raise ValueError(f"report {args.kind} requires --manifest")
        counts = _manifest_counts(args.manifest)
        table = table_instances(counts) if args.kind == "instances" else table_splits(counts)
        out_lines.append(table.to_text().rstrip("\n"))
        summary["csv"] = table.to_csv()
        if args.csv:
            Path(args.csv).write_text(table.to_csv(), encoding="utf-8")
    else:
        raise ValueError(f"unknown report kind {args.kind!r}")
    text = "\n".join(out_lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    _write_summary(args.summary, summary)
    return 0


# --- parser -------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON pipeline config; flags override its fields")
    p.add_argument("--summary", help="write a machine-readable run summary to this path")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")


def _size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like WIDTHxHEIGHT, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="holoprep", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("register", help="estimate a similarity transform from a point-pair file")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True, help="transform file (7 numbers)")
    _add_common(p)
    p.set_defaults(func=_cmd_register)

    p = sub.add_parser("warp", help="apply a transform to an image")
    p.add_argument("--image", required=True)
    p.add_argument("--transform", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--interpolation", choices=["bilinear", "nearest"], default="bilinear")
    p.add_argument("--max-warp-pixels", dest="max_warp_pixels", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_warp)

    p = sub.add_parser("propagate", help="carry labels into an aligned frame, optionally expanding")
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--expand", type=float, default=None, help="area expansion factor (default from config)")
    p.add_argument("--transform", help="map boxes through this transform instead of copying")
    p.add_argument("--invert", action="store_true", help="use the inverse transform (optical -> raw holographic)")
    p.add_argument("--in-size", type=_size, default=None, help="input frame WxH (required with --transform)")
    p.add_argument("--out-size", type=_size, default=None, help="output frame WxH (required with --transform)")
    p.add_argument("--expand-mode", dest="expand_mode", choices=["area", "side"], default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_propagate)

    p = sub.add_parser("tile", help="split an image into grid tiles with renormalized labels")
    p.add_argument("--image", required=True)
    p.add_argument("--labels")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--tile-size", dest="tile_size", type=int, default=None)
    p.add_argument("--keep-fraction", dest="keep_fraction", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_tile)

    p = sub.add_parser("crops", help="cut per-annotation crops resized for classification")
    p.add_argument("--image", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--classes", required=True, help="comma-separated class names")
    p.add_argument("--crop-size", dest="crop_size", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_crops)

    p = sub.add_parser("screen", help="partition tiles by black-area fraction")
    p.add_argument("--tiles-dir", required=True)
    p.add_argument("--kept", required=True, help="output list of kept tile names")
    p.add_argument("--excluded", required=True, help="output list of excluded tile names")
    p.add_argument("--black-threshold", dest="black_threshold", type=float, default=None)
    p.add_argument("--jobs", type=int, default=_default_jobs(), help=f"worker threads (env {JOBS_ENV_VAR})")
    _add_common(p)
    p.set_defaults(func=_cmd_screen)

    p = sub.add_parser("expand", help="expand bounding-box areas about their centers")
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--factor", type=float, default=None, help="area factor, e.g. 1.25 or 1.5")
    p.add_argument("--expand-mode", dest="expand_mode", choices=["area", "side"], default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_expand)

    p = sub.add_parser("merge", help="merge manual and auto labels with IoU dedup")
    p.add_argument("--manual", required=True)
    p.add_argument("--auto", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--merge-iou", dest="merge_iou", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_merge)

    p = sub.add_parser("split", help="stratified train/val/test assignment")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--manifest")
    group.add_argument("--items", help="CSV of item,class,count rows")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("weights", help="inverse-frequency class weights")
    p.add_argument("--counts", required=True, help="e.g. T1=790,T2=766,T5=1288,T9=1692")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_weights)

    p = sub.add_parser("augment", help="write seeded augmented copies of an image")
    p.add_argument("--image", required=True)
    p.add_argument("--labels")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--policy", choices=["detection", "classification"], default="detection")
    p.add_argument("--draws", type=int, default=1)
    p.add_argument("--mix-with", help="second image enabling mixup at the policy probability")
    _add_common(p)
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("evaluate", help="score detections (mAP) or classifications (accuracy)")
    p.add_argument("--mode", choices=["detect", "classify"], default="detect")
    p.add_argument("--truth", required=True, help="label dir (detect) or label-index file (classify)")
    p.add_argument("--predictions", required=True, help="detections dir (detect) or label-index file (classify)")
    p.add_argument("--classes", required=True, help="comma-separated class names")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--out", required=True, help="JSON metrics report")
    _add_common(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("report", help="dataset factor/ratio arithmetic and tables")
    p.add_argument("kind", choices=["factors", "compare", "instances", "splits"])
    p.add_argument("values", nargs="*", help="factors: BASELINE EXPANDED pairs; compare: BASELINE UPDATED pairs")
    p.add_argument("--manifest", help="manifest for instances/splits tables")
    p.add_argument("--out", help="also write the text report here")
    p.add_argument("--csv", help="write the table as CSV here (instances/splits)")
    _add_common(p)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = _load_config(args)
        return args.func(args, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
