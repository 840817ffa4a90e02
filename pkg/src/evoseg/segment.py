"""Project an optimised bin assignment back onto the source image.

Labelling factors through colour: a pixel's label is the label of the
voxel its colour falls in, so two pixels with identical RGB always land in
the same cluster. The renderer emits a palette image (every pixel painted
with its cluster's mean colour), one binary mask per cluster, and the run
report as JSON.

Two costs are reported. ``j_bin_centres`` substitutes each pixel's voxel
midpoint for its colour and therefore equals the optimiser's J exactly.
``j_raw_pixels`` measures the same centroids against the raw pixel
colours, which adds the intra-voxel quantisation error that coarse
pre-partitioning hides; it is the honest per-pixel segmentation cost.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .clustering import Assignment, objective_j, weighted_centroids
from .errors import ConsistencyError
from .histogram import BinnedHistogram, PixelGrid

MASK_ON = 255


@dataclass(eq=False)
class LabelImage:
    """Per-pixel cluster indices, row-major, same dimensions as the source."""

    width: int
    height: int
    labels: np.ndarray  # (width*height,) int64
    clusters: int


@dataclass
class SegmentationReport:
    """Summary of one segmentation run; serialized verbatim into report.json."""

    clusters: int
    pixel_counts: tuple[int, ...]
    mean_colours: tuple[tuple[int, int, int] | None, ...]  # None = empty cluster
    j_bin_centres: float
    j_raw_pixels: float
    bin_count: int
    side: int
    chromosome_length: int | None = None
    generations_run: int | None = None
    seed: int | None = None


def assign_pixels(
    grid: PixelGrid, bins: BinnedHistogram, asg: Assignment
) -> LabelImage:
    """Label every pixel with its colour voxel's assigned cluster."""
    if len(asg.labels) != len(bins):
        raise ConsistencyError(
            f"assignment has {len(asg.labels)} labels for {len(bins)} bins"
        )
    side = bins.side
    g = 256 // side
    px = grid.pixels.astype(np.int64)
    voxels = (px[:, 0] // side) * g * g + (px[:, 1] // side) * g + px[:, 2] // side

    lut = np.full(g**3, -1, dtype=np.int64)
    lut[bins.indices] = np.asarray(asg.labels, dtype=np.int64)
    labels = lut[voxels]
    if (labels < 0).any():
        missing = int(voxels[labels < 0][0])
        raise ConsistencyError(
            f"pixel voxel {missing} is not present in the binned histogram; "
            f"bins were built from a different image or side"
        )
    return LabelImage(
        width=grid.width, height=grid.height, labels=labels, clusters=asg.clusters
    )


def _round_half_up(values: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


def build_report(
    grid: PixelGrid,
    bins: BinnedHistogram,
    asg: Assignment,
    label_img: LabelImage,
    chromosome_length: int | None = None,
    generations_run: int | None = None,
    seed: int | None = None,
) -> SegmentationReport:
    """Assemble the per-cluster statistics and both cost figures."""
    cen = weighted_centroids(bins, asg)
    counts = np.bincount(label_img.labels, minlength=asg.clusters)

    mean_colours: list[tuple[int, int, int] | None] = []
    for i in range(asg.clusters):
        if cen.occupancy[i]:
            r, g, b = _round_half_up(cen.centres[i])
            mean_colours.append((int(r), int(g), int(b)))
        else:
            mean_colours.append(None)

    diff = grid.pixels.astype(np.float64) - cen.centres[label_img.labels]
    j_raw = float((diff * diff).sum(axis=1).sum())

    return SegmentationReport(
        clusters=asg.clusters,
        pixel_counts=tuple(int(v) for v in counts),
        mean_colours=tuple(mean_colours),
        j_bin_centres=objective_j(bins, asg, cen),
        j_raw_pixels=j_raw,
        bin_count=len(bins),
        side=bins.side,
        chromosome_length=chromosome_length,
        generations_run=generations_run,
        seed=seed,
    )


def render(
    label_img: LabelImage,
    report: SegmentationReport,
    outdir: str | Path,
    extra: dict | None = None,
) -> dict[str, Path]:
    """Write the palette image, one mask per cluster, and report.json.

    ``extra`` entries are merged into the top level of the JSON document
    (the CLI uses this for baseline/oracle comparison figures). Returns a
    mapping from artifact name to written path.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    h, w = label_img.height, label_img.width
    labels2d = label_img.labels.reshape(h, w)
    written: dict[str, Path] = {}

    palette = np.zeros((report.clusters, 3), dtype=np.uint8)
    for i, colour in enumerate(report.mean_colours):
        if colour is not None:
            palette[i] = colour
    palette_img = palette[labels2d]
    palette_path = outdir / "palette.png"
    Image.fromarray(palette_img, mode="RGB").save(palette_path)
    written["palette"] = palette_path

    for i in range(report.clusters):
        mask = np.where(labels2d == i, MASK_ON, 0).astype(np.uint8)
        mask_path = outdir / f"cluster_{i}.png"
        Image.fromarray(mask, mode="L").save(mask_path)
        written[f"cluster_{i}"] = mask_path

    doc: dict = {
        "clusters": report.clusters,
        "pixel_counts": list(report.pixel_counts),
        "mean_colours": [
            list(c) if c is not None else None for c in report.mean_colours
        ],
        "j_bin_centres": report.j_bin_centres,
        "j_raw_pixels": report.j_raw_pixels,
        "bin_count": report.bin_count,
        "side": report.side,
        "chromosome_length": report.chromosome_length,
        "generations_run": report.generations_run,
        "seed": report.seed,
    }
    if extra:
        doc.update(extra)
    report_path = outdir / "report.json"
    report_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    written["report"] = report_path
    return written
