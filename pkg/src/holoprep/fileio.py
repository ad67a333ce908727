"""On-disk formats: label files, dataset manifests, point-pair files, transforms, PNGs.

Label files are plain UTF-8 text, one annotation per line::

    class cx cy w h [conf]

with normalized floats and the class index -1 encoding a class-agnostic
(unknown) label. Manual boxes carry no confidence; detector outputs always do,
so a line's source is inferred as AUTO when it has a confidence field or an
unknown class, and MANUAL otherwise. Pass ``source=`` to override.

Manifests are JSON documents; ``docs/manifest.example.json`` in the repository
is the canonical example.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .model import (
    UNKNOWN_CLASS,
    Annotation,
    BBox,
    DatasetManifest,
    ImageRecord,
    Modality,
    Raster,
    SimilarityTransform,
    Source,
    Space,
    Split,
)

PAIR_FILE_HEADER = "x_src,y_src,x_dst,y_dst"


@dataclass(frozen=True)
class ParsedLabels:
    """Result of parsing a label file: accepted annotations plus per-line rejects."""

    annotations: tuple[Annotation, ...]
    rejects: tuple[tuple[int, str], ...] = ()

    def __iter__(self):
        return iter(self.annotations)

    def __len__(self):
        return len(self.annotations)


def _infer_source(class_id: int, confidence: float | None) -> Source:
    if class_id == UNKNOWN_CLASS or confidence is not None:
        return Source.AUTO
    return Source.MANUAL


def parse_label_file(text: str, space: Space = Space.NORMALIZED, source: Source | None = None) -> ParsedLabels:
    """Parse label-file content into annotations.

    Malformed lines are rejected individually and reported with their 1-based
    line numbers in ``rejects``; an empty file yields an empty result.
    """
    annotations: list[Annotation] = []
    rejects: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) not in (5, 6):
            rejects.append((lineno, f"expected 5 or 6 fields, got {len(fields)}"))
            continue
        try:
            class_id = int(fields[0])
            cx, cy, w, h = (float(v) for v in fields[1:5])
            conf = float(fields[5]) if len(fields) == 6 else None
        except ValueError:
            rejects.append((lineno, "non-numeric field"))
            continue
        if class_id < UNKNOWN_CLASS:
            rejects.append((lineno, f"class index {class_id} below -1"))
            continue
        if space is Space.NORMALIZED and not all(0.0 <= v <= 1.0 for v in (cx, cy, w, h)):
            rejects.append((lineno, "coordinate out of [0,1]"))
            continue
        if w <= 0 or h <= 0:
            rejects.append((lineno, "non-positive box extent"))
            continue
        if conf is not None and not (0.0 <= conf <= 1.0):
            rejects.append((lineno, f"confidence out of [0,1]: {conf}"))
            continue
        src = source if source is not None else _infer_source(class_id, conf)
        if src is Source.MANUAL and class_id == UNKNOWN_CLASS:
            rejects.append((lineno, "manual label with unknown class"))
            continue
        annotations.append(Annotation(BBox(cx, cy, w, h, space), class_id, conf, src))
    return ParsedLabels(tuple(annotations), tuple(rejects))


def emit_label_file(annotations: Sequence[Annotation]) -> str:
    """Render annotations as label-file text with 6-decimal coordinates.

    Raises when a box is not in normalized space, naming the offending index.
    """
    lines = []
    for i, ann in enumerate(annotations):
        b = ann.box
        if b.space is not Space.NORMALIZED:
            raise ValueError(f"annotation {i} is not in normalized coordinates")
        line = f"{ann.class_id} {b.cx:.6f} {b.cy:.6f} {b.w:.6f} {b.h:.6f}"
        if ann.confidence is not None:
            line += f" {ann.confidence:.6f}"
        lines.append(line)
    return "".join(line + "\n" for line in lines)


def load_labels(path: str | Path, space: Space = Space.NORMALIZED, source: Source | None = None) -> ParsedLabels:
    return parse_label_file(Path(path).read_text(encoding="utf-8"), space, source)


def save_labels(annotations: Sequence[Annotation], path: str | Path) -> None:
    Path(path).write_text(emit_label_file(annotations), encoding="utf-8")


# --- manifests ---------------------------------------------------------------


def manifest_to_dict(manifest: DatasetManifest) -> dict:
    doc: dict = {
        "class_names": list(manifest.class_names),
        "records": [
            {
                "path": rec.image_path,
                "modality": rec.modality.value,
                "species_tag": rec.species_tag,
                "label_path": rec.label_path,
                "aligned": rec.aligned,
            }
            for rec in manifest.records
        ],
    }
    if manifest.splits:
        doc["splits"] = {k: v.value for k, v in manifest.splits.items()}
    return doc


def manifest_from_dict(doc: dict) -> DatasetManifest:
    records = []
    for i, rd in enumerate(doc.get("records", [])):
        modality_name = rd.get("modality")
        try:
            modality = Modality(modality_name)
        except ValueError:
            raise ValueError(f"record {i}: unknown modality {modality_name!r}") from None
        records.append(
            ImageRecord(
                image_path=rd["path"],
                modality=modality,
                species_tag=rd.get("species_tag"),
                label_path=rd.get("label_path"),
                aligned=bool(rd.get("aligned", False)),
            )
        )
    splits = {}
    for key, name in doc.get("splits", {}).items():
        try:
            splits[key] = Split(name)
        except ValueError:
            raise ValueError(f"split entry {key!r}: unknown split {name!r}") from None
    return DatasetManifest(tuple(records), tuple(doc["class_names"]), splits)


def load_manifest(path: str | Path) -> DatasetManifest:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"manifest not found: {p}")
    return manifest_from_dict(json.loads(p.read_text(encoding="utf-8")))


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    Path(path).write_text(json.dumps(manifest_to_dict(manifest), indent=2) + "\n", encoding="utf-8")


def load_record_annotations(record: ImageRecord, root: str | Path = ".") -> ImageRecord:
    """Attach the annotations from the record's label file (resolved against root)."""
    if record.label_path is None:
        return record
    parsed = load_labels(Path(root) / record.label_path)
    return record.with_annotations(parsed.annotations)


# --- point pairs and transforms ----------------------------------------------


def load_point_pairs(path: str | Path) -> np.ndarray:
    """Read a point-pair file into an (n, 4) float array of x_src,y_src,x_dst,y_dst."""
    lines = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or lines[0].replace(" ", "") != PAIR_FILE_HEADER:
        raise ValueError(f"point-pair file must start with header '{PAIR_FILE_HEADER}'")
    rows = []
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != 4:
            raise ValueError(f"line {lineno}: expected 4 comma-separated values")
        try:
            rows.append([float(v) for v in parts])
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric value") from None
    return np.array(rows, dtype=np.float64).reshape(-1, 4)


def save_point_pairs(pairs: np.ndarray, path: str | Path) -> None:
    pairs = np.asarray(pairs, dtype=np.float64).reshape(-1, 4)
    # repr round-trips doubles exactly, so noise-free planted pairs stay noise-free
    lines = [PAIR_FILE_HEADER]
    lines += [",".join(repr(float(v)) for v in row) for row in pairs]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def save_transform(t: SimilarityTransform, path: str | Path) -> None:
    """Write a transform as one line of 7 numbers: c r00 r01 r10 r11 tx ty."""
    r, tr = t.rotation, t.translation
    vals = [t.scale, r[0, 0], r[0, 1], r[1, 0], r[1, 1], tr[0], tr[1]]
    Path(path).write_text(" ".join(f"{v:.12g}" for v in vals) + "\n", encoding="utf-8")


def load_transform(path: str | Path) -> SimilarityTransform:
    lines = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if len(lines) != 1:
        raise ValueError(f"transform file must hold exactly one data line, got {len(lines)}")
    vals = [float(v) for v in lines[0].split()]
    if len(vals) != 7:
        raise ValueError(f"transform line must hold 7 numbers, got {len(vals)}")
    c, r00, r01, r10, r11, tx, ty = vals
    rot = np.array([[r00, r01], [r10, r11]], dtype=np.float64)
    # Re-orthonormalize: 12 significant digits of text round-trip leave ~1e-12
    # defects that would otherwise trip the 1e-9 type invariant downstream.
    u, _, vt = np.linalg.svd(rot)
    rot = u @ vt
    return SimilarityTransform(c, rot, np.array([tx, ty], dtype=np.float64))


# --- rasters ------------------------------------------------------------------


def load_raster(path: str | Path) -> Raster:
    """Decode a PNG (or any Pillow-readable image) as an 8-bit 1- or 3-channel raster."""
    with Image.open(path) as img:
        if img.mode in ("L", "RGB"):
            arr = np.asarray(img)
        elif img.mode in ("1", "I", "I;16", "LA", "P") and not _is_color(img):
            arr = np.asarray(img.convert("L"))
        else:
            arr = np.asarray(img.convert("RGB"))
    return Raster(arr.astype(np.uint8, copy=False))


def _is_color(img: Image.Image) -> bool:
    if img.mode == "P":
        return img.palette is not None and img.palette.mode in ("RGB", "RGBA")
    return False


def save_raster(raster: Raster, path: str | Path) -> None:
    arr = raster.pixels[:, :, 0] if raster.channels == 1 else raster.pixels
    Image.fromarray(arr).save(path, format="PNG")
