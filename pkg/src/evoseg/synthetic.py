"""Deterministic synthetic test images with a known ground-truth partition.

Colour groups are placed along the main diagonal of the side-32 voxel
grid, ``separation`` voxels apart, and every group's jitter stays strictly
inside its own voxel. Voxelizing such an image at side 32 therefore yields
exactly one bin per group, and the ground-truth partition has J = 0.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import SynthesisError
from .histogram import PixelGrid, write_ppm

_SIDE = 32
_GRID = 256 // _SIDE

# jitter is confined to [4, side-5] within the voxel so that every sample
# stays inside it with margin
_JITTER_LO = 4
_JITTER_HI = _SIDE - 4  # exclusive


def make_synthetic(
    clusters: int,
    points_per_cluster: int,
    separation: int,
    seed: int,
    path: str | Path | None = None,
) -> PixelGrid:
    """Build a clusters x points image, one colour group per row.

    Group k lives in the diagonal voxel (k*separation, ..) of the side-32
    grid. Raises SynthesisError when the requested groups do not fit in
    the colour cube. When ``path`` is given the grid is also written there
    as binary PPM, byte-deterministically.
    """
    if clusters < 1 or points_per_cluster < 1 or separation < 1:
        raise SynthesisError(
            "clusters, points per cluster and separation must all be >= 1"
        )
    top = (clusters - 1) * separation
    if top >= _GRID:
        raise SynthesisError(
            f"{clusters} groups at separation {separation} need diagonal voxel "
            f"{top}, outside the {_GRID}^3 grid (out of gamut)"
        )

    rng = np.random.default_rng(seed)
    rows = []
    for k in range(clusters):
        low = k * separation * _SIDE
        jitter = rng.integers(
            _JITTER_LO, _JITTER_HI, size=(points_per_cluster, 3)
        )
        rows.append(low + jitter)
    pixels = np.concatenate(rows).astype(np.uint8)
    grid = PixelGrid(width=points_per_cluster, height=clusters, pixels=pixels)
    if path is not None:
        write_ppm(grid, path)
    return grid
