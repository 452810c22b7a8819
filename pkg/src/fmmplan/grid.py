"""Occupancy grids: PGM loading, thresholding, inversion, and neighborhood queries.

A grid partitions the workspace into FREE and OCCUPIED square cells of
uniform physical size. Cell ``(i, j)`` (row ``i``, column ``j``) has its
center at ``x = (j + 0.5) * cell_size``, ``y = (i + 0.5) * cell_size``,
so the physical bounding box is ``[0, width * cell_size] x [0, height *
cell_size]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "OccupancyGrid",
    "PgmError",
    "load_pgm",
    "encode_pgm",
    "invert",
    "boundary_cells",
    "free_neighbors",
    "all_free",
    "from_array",
    "cell_center",
    "point_to_cell",
]

# Neighbor offsets in row-major order, used wherever deterministic
# iteration matters.
OFFSETS_4 = ((-1, 0), (0, -1), (0, 1), (1, 0))
OFFSETS_8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


class PgmError(ValueError):
    """Malformed PGM input. ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class OccupancyGrid:
    """Immutable binary free/occupied raster with a physical cell size.

    ``free`` is a (height, width) boolean array, True where the cell is
    traversable.
    """

    free: np.ndarray
    cell_size: float = 1.0

    def __post_init__(self):
        arr = np.asarray(self.free, dtype=bool)
        if arr.ndim != 2:
            raise ValueError(f"occupancy array must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 2 or arr.shape[1] < 2:
            raise ValueError(f"grid must be at least 2x2, got {arr.shape}")
        if not (self.cell_size > 0):
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "free", arr)

    @property
    def height(self) -> int:
        return self.free.shape[0]

    @property
    def width(self) -> int:
        return self.free.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.free.shape

    def in_bounds(self, cell: tuple[int, int]) -> bool:
        i, j = cell
        return 0 <= i < self.height and 0 <= j < self.width

    def is_free(self, cell: tuple[int, int]) -> bool:
        return bool(self.free[cell])

    def __eq__(self, other) -> bool:
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return self.cell_size == other.cell_size and np.array_equal(self.free, other.free)


def from_array(occupied_or_free, cell_size: float = 1.0, *, free_value=True) -> OccupancyGrid:
    """Build a grid from any 2-D array; cells equal to ``free_value`` are FREE."""
    arr = np.asarray(occupied_or_free)
    return OccupancyGrid(arr == free_value, cell_size)


def all_free(height: int, width: int, cell_size: float = 1.0) -> OccupancyGrid:
    """Obstacle-free grid of the given shape."""
    return OccupancyGrid(np.ones((height, width), dtype=bool), cell_size)


def cell_center(grid: OccupancyGrid, cell: tuple[int, int]) -> tuple[float, float]:
    """Physical (x, y) coordinates of a cell center."""
    i, j = cell
    h = grid.cell_size
    return ((j + 0.5) * h, (i + 0.5) * h)


def point_to_cell(grid: OccupancyGrid, point: tuple[float, float]) -> tuple[int, int]:
    """Cell containing a physical point; clamps points on the outer edge."""
    x, y = point
    h = grid.cell_size
    j = min(max(int(x / h), 0), grid.width - 1)
    i = min(max(int(y / h), 0), grid.height - 1)
    return (i, j)


def invert(grid: OccupancyGrid) -> OccupancyGrid:
    """Swap FREE and OCCUPIED cell-wise. Involutive."""
    return OccupancyGrid(~grid.free, grid.cell_size)


def boundary_cells(grid: OccupancyGrid) -> set[tuple[int, int]]:
    """OCCUPIED cells having at least one 4-connected FREE neighbor."""
    occ = ~grid.free
    near_free = np.zeros_like(occ)
    near_free[1:, :] |= grid.free[:-1, :]
    near_free[:-1, :] |= grid.free[1:, :]
    near_free[:, 1:] |= grid.free[:, :-1]
    near_free[:, :-1] |= grid.free[:, 1:]
    ii, jj = np.nonzero(occ & near_free)
    return {(int(i), int(j)) for i, j in zip(ii, jj)}


def free_neighbors(
    grid: OccupancyGrid, cell: tuple[int, int], connectivity: int = 4
) -> list[tuple[int, int]]:
    """In-bounds FREE neighbors of ``cell`` in deterministic row-major order."""
    if connectivity == 4:
        offsets = OFFSETS_4
    elif connectivity == 8:
        offsets = OFFSETS_8
    else:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    i, j = cell
    if not grid.in_bounds(cell):
        raise ValueError(f"cell {cell} out of bounds for {grid.height}x{grid.width} grid")
    out = []
    for di, dj in offsets:
        ni, nj = i + di, j + dj
        if 0 <= ni < grid.height and 0 <= nj < grid.width and grid.free[ni, nj]:
            out.append((ni, nj))
    return out


class _PgmTokenizer:
    """Whitespace/comment-aware token scanner that remembers byte offsets."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def skip_separators(self) -> None:
        data = self.data
        n = len(data)
        while self.pos < n:
            c = data[self.pos]
            if c in b" \t\r\n\x0b\x0c":
                self.pos += 1
            elif c == ord("#"):
                while self.pos < n and data[self.pos] not in b"\r\n":
                    self.pos += 1
            else:
                return

    def next_token(self, what: str) -> tuple[bytes, int]:
        self.skip_separators()
        start = self.pos
        data = self.data
        n = len(data)
        if start >= n:
            raise PgmError(f"unexpected end of data while reading {what}", start)
        while self.pos < n and data[self.pos] not in b" \t\r\n\x0b\x0c#":
            self.pos += 1
        return data[start : self.pos], start

    def next_int(self, what: str, lo: int, hi: int) -> int:
        token, start = self.next_token(what)
        try:
            value = int(token)
        except ValueError:
            raise PgmError(f"invalid {what} {token!r}", start) from None
        if not (lo <= value <= hi):
            raise PgmError(f"{what} {value} out of range [{lo}, {hi}]", start)
        return value


def load_pgm(data: bytes, threshold: int = 127, cell_size: float = 1.0) -> OccupancyGrid:
    """Parse a P2 or P5 PGM image into an occupancy grid.

    A pixel is FREE iff its gray value is strictly greater than
    ``threshold`` (white means traversable). Maxval above 255 is
    rejected. Parse failures raise :class:`PgmError` naming the byte
    offset.
    """
    if not (0 <= threshold <= 255):
        raise ValueError(f"threshold must be in [0, 255], got {threshold}")
    tok = _PgmTokenizer(data)
    magic, start = tok.next_token("magic number")
    if magic not in (b"P2", b"P5"):
        raise PgmError(f"unsupported magic number {magic!r}", start)
    width = tok.next_int("width", 1, 1 << 30)
    height = tok.next_int("height", 1, 1 << 30)
    maxval = tok.next_int("maxval", 1, 255)
    count = width * height
    if magic == b"P5":
        # exactly one separator byte after maxval, then raw pixels
        if tok.pos >= len(data):
            raise PgmError("missing raster after maxval", tok.pos)
        tok.pos += 1
        raster = data[tok.pos : tok.pos + count]
        if len(raster) < count:
            raise PgmError(
                f"truncated raster: expected {count} bytes, got {len(raster)}",
                tok.pos + len(raster),
            )
        pixels = np.frombuffer(raster, dtype=np.uint8, count=count)
    else:
        values = np.empty(count, dtype=np.uint8)
        for k in range(count):
            values[k] = tok.next_int("pixel value", 0, maxval)
        pixels = values
    if np.any(pixels > maxval):
        raise PgmError(f"pixel value exceeds maxval {maxval}", tok.pos)
    free = (pixels > threshold).reshape(height, width)
    return OccupancyGrid(free, cell_size)


def encode_pgm(grid: OccupancyGrid) -> bytes:
    """Serialize to binary P5: FREE as 255, OCCUPIED as 0, no comments."""
    header = f"P5\n{grid.width} {grid.height}\n255\n".encode("ascii")
    body = np.where(grid.free, 255, 0).astype(np.uint8).tobytes()
    return header + body
