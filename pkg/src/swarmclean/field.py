"""Contamination cue field: a discretized scalar intensity map over the arena.

The field is a regular grid of cells (default 1 cell per cm) holding
intensities in [0, 255]. Robots read it with ground sensors and erode it
with a fixed 9x9 cleaning kernel while they sit in the waiting state.
"""
from __future__ import annotations

import math

import numpy as np

# Cleaning kernel: decrement(p, q) = 8 - sqrt(p^2 + q^2) for cell offsets
# p, q in [-4, 4]. Strongest directly under the robot (8 per application),
# weakest at the corners (8 - sqrt(32) ~ 2.343); every entry is positive.
KERNEL_REACH = 4
_offsets = np.arange(-KERNEL_REACH, KERNEL_REACH + 1, dtype=np.float64)
CLEAN_KERNEL = 8.0 - np.sqrt(_offsets[:, None] ** 2 + _offsets[None, :] ** 2)
del _offsets


class CueField:
    """Scalar contamination intensity over a rectangular arena.

    Cells are stored row-major in a float array of shape (rows, cols);
    row r covers y in [r/res, (r+1)/res) cm and column c covers the same
    band in x. Dimensions are fixed at construction; cell values stay in
    [0, 255] (cleaning clamps at zero, nothing ever raises a cell).
    """

    def __init__(self, width_cm: float, height_cm: float, resolution: int = 1):
        if width_cm <= 0 or height_cm <= 0:
            raise ValueError(f"arena dimensions must be positive, got {width_cm} x {height_cm}")
        if resolution < 1:
            raise ValueError(f"resolution must be >= 1 cell/cm, got {resolution}")
        self._width_cm = float(width_cm)
        self._height_cm = float(height_cm)
        self._resolution = int(resolution)
        cols = int(round(width_cm * resolution))
        rows = int(round(height_cm * resolution))
        self.cells = np.zeros((rows, cols), dtype=np.float64)

    @property
    def width_cm(self) -> float:
        return self._width_cm

    @property
    def height_cm(self) -> float:
        return self._height_cm

    @property
    def resolution(self) -> int:
        return self._resolution

    def copy(self) -> "CueField":
        dup = CueField(self._width_cm, self._height_cm, self._resolution)
        dup.cells = self.cells.copy()
        return dup


def init_circular_gradient(
    width_cm: float,
    height_cm: float,
    center: tuple[float, float],
    radius_cm: float,
    peak: float,
    resolution: int = 1,
) -> CueField:
    """Build a field holding a radially linear cone of intensity.

    A cell whose center sits at distance d from `center` gets the value
    peak * max(0, 1 - d / radius_cm): `peak` at the center, falling
    linearly to zero at the circle edge, zero beyond it.
    """
    if radius_cm <= 0:
        raise ValueError(f"cue radius must be positive, got {radius_cm}")
    if not 0 < peak <= 255:
        raise ValueError(f"peak intensity must be in (0, 255], got {peak}")
    cx, cy = center
    if not (0 <= cx <= width_cm and 0 <= cy <= height_cm):
        raise ValueError(f"cue center {center} lies outside the arena")

    field = CueField(width_cm, height_cm, resolution)
    rows, cols = field.cells.shape
    # distances measured from cell centers
    xs = (np.arange(cols) + 0.5) / resolution
    ys = (np.arange(rows) + 0.5) / resolution
    d = np.hypot(xs[None, :] - cx, ys[:, None] - cy)
    field.cells[:] = peak * np.clip(1.0 - d / radius_cm, 0.0, None)
    return field


def sample(field: CueField, x_cm: float, y_cm: float) -> float:
    """Read the intensity of the cell containing a point; 0 outside the arena.

    Nearest-cell semantics: no interpolation, the raw (possibly fractional)
    cell value is returned. Total over the whole plane.
    """
    res = field.resolution
    col = math.floor(x_cm * res)
    row = math.floor(y_cm * res)
    rows, cols = field.cells.shape
    if 0 <= row < rows and 0 <= col < cols:
        return float(field.cells[row, col])
    return 0.0


def sample_many(field: CueField, xs_cm: np.ndarray, ys_cm: np.ndarray) -> np.ndarray:
    """Vectorized `sample` over arrays of point coordinates."""
    res = field.resolution
    cols_idx = np.floor(xs_cm * res).astype(np.intp)
    rows_idx = np.floor(ys_cm * res).astype(np.intp)
    rows, cols = field.cells.shape
    inside = (rows_idx >= 0) & (rows_idx < rows) & (cols_idx >= 0) & (cols_idx < cols)
    out = np.zeros(len(cols_idx), dtype=np.float64)
    if inside.any():
        out[inside] = field.cells[rows_idx[inside], cols_idx[inside]]
    return out


def apply_cleaning(field: CueField, x_cm: float, y_cm: float) -> None:
    """Erode the field around a robot center with the 9x9 cleaning kernel.

    Each cell at offset (p, q) from the robot's cell drops by
    8 - sqrt(p^2 + q^2), clamped at zero; offsets falling outside the
    arena are skipped. Meant to run once per simulated second for each
    waiting robot.
    """
    res = field.resolution
    col = math.floor(x_cm * res)
    row = math.floor(y_cm * res)
    rows, cols = field.cells.shape
    r0 = max(row - KERNEL_REACH, 0)
    r1 = min(row + KERNEL_REACH + 1, rows)
    c0 = max(col - KERNEL_REACH, 0)
    c1 = min(col + KERNEL_REACH + 1, cols)
    if r0 >= r1 or c0 >= c1:
        return
    kr0 = r0 - (row - KERNEL_REACH)
    kc0 = c0 - (col - KERNEL_REACH)
    window = field.cells[r0:r1, c0:c1]
    np.subtract(window, CLEAN_KERNEL[kr0 : kr0 + (r1 - r0), kc0 : kc0 + (c1 - c0)], out=window)
    np.maximum(window, 0.0, out=window)


def mean_intensity(field: CueField) -> float:
    """Arithmetic mean over every arena cell (zeros outside the cue included)."""
    return float(field.cells.mean())


def to_pgm_bytes(field: CueField) -> bytes:
    """Encode the field as a binary 8-bit grayscale PGM (P5) image.

    One byte per cell, row-major, value = round(intensity) clamped to
    [0, 255]; header is `P5\\n<w> <h>\\n255\\n`.
    """
    rows, cols = field.cells.shape
    header = f"P5\n{cols} {rows}\n255\n".encode("ascii")
    body = np.clip(np.rint(field.cells), 0, 255).astype(np.uint8)
    return header + body.tobytes()


def write_pgm(field: CueField, path) -> None:
    with open(path, "wb") as fh:
        fh.write(to_pgm_bytes(field))


def read_pgm(path) -> CueField:
    """Load a P5 PGM written by `write_pgm` back into a unit-resolution field."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    cols, rows, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise ValueError(f"{path}: expected 8-bit PGM, got maxval {maxval}")
    pos += 1  # single whitespace byte after the header
    raster = np.frombuffer(data, dtype=np.uint8, count=rows * cols, offset=pos)
    field = CueField(cols, rows, resolution=1)
    field.cells[:] = raster.reshape(rows, cols).astype(np.float64)
    return field
