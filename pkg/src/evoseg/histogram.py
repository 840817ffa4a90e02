"""Image ingestion and colour-cube pre-partition.

The pipeline starts here: an image is decoded to a flat grid of RGB
triples, reduced to an exact colour histogram, and then aggregated onto a
coarse voxel grid over the [0,256)^3 colour cube. Each occupied voxel
becomes one sample point for the clustering stage, carrying the voxel
midpoint as its coordinates and the number of pixels that fell into it as
its weight. At the default voxel side of 32 the cube holds at most
8*8*8 = 512 occupied bins, which caps the search-space size no matter how
many distinct colours the source image has.

Conventions (fixed here, relied on everywhere else):

* voxel index linearization is R-major: ``(r//side)*G^2 + (g//side)*G + b//side``
  with ``G = 256//side``;
* a voxel's representative point is its exact midpoint over the integer
  range it covers: ``low + (side-1)/2`` per channel, so side=32 gives the
  familiar 15.5 offsets and side=1 degenerates to the colour itself.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Mapping

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ConfigError, ConsistencyError, DecodeError, EmptyInputError

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"

# Pillow modes we accept for PNG input; everything else is rejected rather
# than silently converted (16-bit and palette images are not 8-bit RGB data).
_SUPPORTED_PNG_MODES = {"L", "LA", "RGB", "RGBA"}


@dataclass(eq=False)
class PixelGrid:
    """A decoded image: row-major RGB triples with 8-bit channels."""

    width: int
    height: int
    pixels: np.ndarray  # shape (width*height, 3), dtype uint8, row-major

    def __post_init__(self) -> None:
        self.pixels = np.asarray(self.pixels, dtype=np.uint8)
        if self.pixels.ndim != 2 or self.pixels.shape[1] != 3:
            raise ConsistencyError(
                f"expected an (n, 3) pixel array, got shape {self.pixels.shape}"
            )
        if self.pixels.shape[0] != self.width * self.height:
            raise ConsistencyError(
                f"pixel count {self.pixels.shape[0]} does not match "
                f"{self.width}x{self.height}"
            )

    def __len__(self) -> int:
        return self.pixels.shape[0]


@dataclass
class ColourHistogram:
    """Exact colour frequencies of an image: distinct RGB triple -> count."""

    entries: dict[tuple[int, int, int], int]
    total: int


@dataclass(frozen=True)
class ColourBin:
    """One occupied voxel: linear index, midpoint coordinates, pixel count."""

    index: int
    centre: tuple[float, float, float]
    frequency: int


@dataclass
class BinnedHistogram:
    """Occupied voxels of the colour cube, sorted by ascending index."""

    bins: list[ColourBin]
    side: int
    total: int

    def __post_init__(self) -> None:
        _check_side(self.side)
        grid = 256 // self.side
        prev = -1
        freq_sum = 0
        for b in self.bins:
            if b.index <= prev:
                raise ConfigError("bin indices must be strictly increasing")
            if not 0 <= b.index < grid**3:
                raise ConfigError(f"bin index {b.index} outside [0, {grid**3})")
            if b.frequency < 1:
                raise ConfigError("bin frequencies must be positive")
            if b.centre != _voxel_centre(b.index, self.side):
                raise ConfigError(
                    f"bin {b.index} centre {b.centre} is not the voxel midpoint"
                )
            prev = b.index
            freq_sum += b.frequency
        if freq_sum != self.total:
            raise ConfigError(
                f"bin frequencies sum to {freq_sum}, expected total {self.total}"
            )

    def __len__(self) -> int:
        return len(self.bins)

    @cached_property
    def centres(self) -> np.ndarray:
        """Bin midpoints as a float64 array of shape (n, 3)."""
        return np.array([b.centre for b in self.bins], dtype=np.float64)

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Bin pixel counts as a float64 array of shape (n,)."""
        return np.array([b.frequency for b in self.bins], dtype=np.float64)

    @cached_property
    def indices(self) -> np.ndarray:
        """Bin voxel indices as an int64 array of shape (n,)."""
        return np.array([b.index for b in self.bins], dtype=np.int64)


def _check_side(side: int) -> None:
    if side < 1 or 256 % side != 0 or side & (side - 1) != 0:
        raise ConfigError(
            f"voxel side must be a power-of-two divisor of 256, got {side}"
        )


def _voxel_centre(index: int, side: int) -> tuple[float, float, float]:
    grid = 256 // side
    r, rem = divmod(index, grid * grid)
    g, b = divmod(rem, grid)
    off = (side - 1) / 2.0
    return (r * side + off, g * side + off, b * side + off)


def load_image(path: str | Path) -> PixelGrid:
    """Decode a PNG or binary PPM (P6) file into a PixelGrid.

    Grayscale images are promoted to RGB by channel replication; an alpha
    channel, if present, is discarded. Anything that is not 8-bit raises
    DecodeError naming the offending property.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DecodeError(f"cannot read {path}: {exc}") from exc

    if data[:2] == b"P6":
        return _decode_ppm(data, path)
    if data[: len(_PNG_MAGIC)] == _PNG_MAGIC:
        return _decode_png(data, path)
    raise DecodeError(f"{path}: not a PNG or binary PPM (P6) file")


def _decode_png(data: bytes, path: Path) -> PixelGrid:
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except UnidentifiedImageError as exc:
        raise DecodeError(f"{path}: unrecognized PNG data") from exc
    except OSError as exc:
        raise DecodeError(f"{path}: corrupt PNG: {exc}") from exc

    if img.mode not in _SUPPORTED_PNG_MODES:
        raise DecodeError(
            f"{path}: unsupported PNG mode {img.mode!r} "
            f"(need 8-bit L, LA, RGB or RGBA)"
        )
    arr = np.asarray(img)
    if arr.ndim == 2:  # grayscale: replicate the single channel
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    elif arr.shape[2] == 2:  # gray + alpha
        arr = np.repeat(arr[:, :, :1], 3, axis=2)
    elif arr.shape[2] == 4:  # drop alpha
        arr = arr[:, :, :3]
    h, w = arr.shape[:2]
    return PixelGrid(width=w, height=h, pixels=arr.reshape(-1, 3))


def _decode_ppm(data: bytes, path: Path) -> PixelGrid:
    """Parse binary PPM (P6). Header tokens may be separated by comments."""
    pos = 2  # past the "P6" magic
    fields: list[int] = []
    while len(fields) < 3:
        # skip whitespace and '#' comment lines
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
            continue
        start = pos
        while pos < len(data) and data[pos : pos + 1].isdigit():
            pos += 1
        if pos == start:
            raise DecodeError(f"{path}: malformed PPM header")
        fields.append(int(data[start:pos]))
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise DecodeError(f"{path}: non-positive PPM dimensions {width}x{height}")
    if maxval != 255:
        raise DecodeError(f"{path}: PPM maxval {maxval} unsupported (need 255, 8-bit)")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise DecodeError(f"{path}: missing whitespace after PPM header")
    pos += 1  # exactly one whitespace byte separates header and payload

    expected = width * height * 3
    payload = data[pos : pos + expected]
    if len(payload) != expected:
        raise DecodeError(
            f"{path}: truncated PPM payload: expected {expected} bytes, "
            f"got {len(payload)}"
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(-1, 3)
    return PixelGrid(width=width, height=height, pixels=pixels.copy())


def write_ppm(grid: PixelGrid, path: str | Path) -> None:
    """Write a PixelGrid as binary PPM (P6), byte-deterministically."""
    header = f"P6\n{grid.width} {grid.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + grid.pixels.tobytes())


def build_histogram(grid: PixelGrid) -> ColourHistogram:
    """Count occurrences of every distinct colour in the grid."""
    if len(grid) == 0:
        raise EmptyInputError("cannot build a histogram of an empty image")
    colours, counts = np.unique(grid.pixels, axis=0, return_counts=True)
    entries = {
        (int(r), int(g), int(b)): int(n)
        for (r, g, b), n in zip(colours, counts)
    }
    return ColourHistogram(entries=entries, total=len(grid))


def voxel_index(colour: tuple[float, float, float], side: int) -> int:
    """Linear index of the voxel containing a colour (R-major order)."""
    grid = 256 // side
    r, g, b = (int(ch // side) for ch in colour)
    return r * grid * grid + g * grid + b


def voxelize(
    hist: ColourHistogram | Mapping[tuple[float, float, float], int],
    side: int = 32,
) -> BinnedHistogram:
    """Aggregate a colour histogram onto the voxel grid of the given side.

    Colours sharing a voxel have their frequencies summed; the voxel's
    midpoint becomes the bin coordinate. ``side`` must be a power-of-two
    divisor of 256. Channel values may be non-integral (bin centres
    re-voxelize to themselves), but must lie in [0, 256).
    """
    _check_side(side)
    entries = hist.entries if isinstance(hist, ColourHistogram) else hist
    total = (
        hist.total if isinstance(hist, ColourHistogram) else sum(entries.values())
    )
    if not entries:
        raise EmptyInputError("cannot voxelize an empty histogram")

    acc: dict[int, int] = {}
    for colour, count in entries.items():
        if any(not 0 <= ch < 256 for ch in colour):
            raise ConfigError(f"colour {colour} outside [0, 256)")
        idx = voxel_index(colour, side)
        acc[idx] = acc.get(idx, 0) + count
    bins = [
        ColourBin(index=i, centre=_voxel_centre(i, side), frequency=acc[i])
        for i in sorted(acc)
    ]
    return BinnedHistogram(bins=bins, side=side, total=total)
