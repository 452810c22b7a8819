"""Fast marching solver for the boundary-value Eikonal problem |grad T| * V = 1.

The solver propagates a front from a set of source cells across the FREE
cells of an occupancy grid, producing the first-arrival-time field T.
OCCUPIED cells (and cells with nonpositive speed, which are treated
exactly like obstacles) are tagged ACCEPTED at initialization and never
updated; unreachable cells keep the UNREACHED sentinel (+inf).

Determinism: the frontier min-heap breaks value ties by flat row-major
cell index, which is exactly (i, j) lexicographic order, so repeated
solves are bit-identical.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .grid import OccupancyGrid

__all__ = [
    "UNREACHED",
    "FAR",
    "CONSIDERED",
    "ACCEPTED",
    "ScalarField",
    "local_update",
    "fmm_solve",
    "interpolate",
    "format_field",
    "parse_field",
]

UNREACHED = math.inf

# Cell tags during a solve. Tags only move FAR -> CONSIDERED -> ACCEPTED.
FAR = 0
CONSIDERED = 1
ACCEPTED = 2


@dataclass(frozen=True)
class ScalarField:
    """Immutable real-valued raster aligned with an occupancy grid.

    Used for arrival times T (seconds), obstacle distances d (meters)
    and speed maps V (meters/second). Finite values are nonnegative;
    UNREACHED cells hold +inf.
    """

    values: np.ndarray
    cell_size: float = 1.0

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if arr.ndim != 2:
            raise ValueError(f"field must be 2-D, got shape {arr.shape}")
        if not (self.cell_size > 0):
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def finite_mask(self) -> np.ndarray:
        return np.isfinite(self.values)

    def __getitem__(self, cell) -> float:
        return float(self.values[cell])


def local_update(a: float, b: float, h: float, f: float) -> float:
    """Solve the upwind discretization for one cell.

    ``a`` and ``b`` are the smaller arrival times of the vertical and
    horizontal neighbor pairs (UNREACHED when a direction has no usable
    neighbor), ``h`` the cell size and ``f`` the slowness 1/V at the
    updated cell. Returns the causal root: one-sided ``min(a, b) + h*f``
    when the difference |a - b| is at least ``h*f``, otherwise the root
    of the two-sided quadratic. The result always exceeds min(a, b).
    """
    if not (h > 0):
        raise ValueError(f"cell size must be positive, got {h}")
    if not (f > 0) or math.isinf(f):
        raise ValueError(f"slowness must be positive and finite, got {f}")
    if a > b:
        a, b = b, a
    if math.isinf(a):
        raise ValueError("at least one neighbor time must be finite")
    hf = h * f
    diff = b - a
    if diff >= hf:
        return a + hf
    return 0.5 * (a + b + math.sqrt(2.0 * hf * hf - diff * diff))


def fmm_solve(
    domain: OccupancyGrid,
    speed: ScalarField,
    sources: Iterable[tuple[int, int]],
    *,
    allow_occupied_sources: bool = False,
    acceptance_trace: list | None = None,
) -> ScalarField:
    """Arrival-time field from ``sources`` over the FREE cells of ``domain``.

    ``speed`` must match the domain's shape; it is sampled at the cell
    being updated. Sources get T = 0. With ``allow_occupied_sources``
    the wave may start on OCCUPIED cells (used by the obstacle-distance
    pass, which seeds the obstacle boundary); those cells still never
    receive updates themselves.

    ``acceptance_trace``, when given a list, receives ``(t, (i, j))``
    for every accepted cell in acceptance order.
    """
    if speed.shape != domain.shape:
        raise ValueError(
            f"speed shape {speed.shape} does not match domain shape {domain.shape}"
        )
    src = list(sources)
    if not src:
        raise ValueError("source set must not be empty")

    height, width = domain.shape
    n = height * width
    h = domain.cell_size
    free_flat = domain.free.ravel()
    speed_flat = speed.values.ravel()

    # Precompute h * slowness per cell; nonpositive-speed cells behave
    # like obstacles.
    open_mask = free_flat & (speed_flat > 0)
    with np.errstate(divide="ignore"):
        hf_arr = np.where(open_mask, h / speed_flat, math.inf)
    hf = hf_arr.tolist()

    T = [UNREACHED] * n
    state = bytearray(n)
    closed = ~open_mask
    for idx in np.nonzero(closed)[0]:
        state[idx] = ACCEPTED

    heap = []
    seen = set()
    for i, j in src:
        if not (0 <= i < height and 0 <= j < width):
            raise ValueError(f"source cell ({i}, {j}) out of bounds")
        if (i, j) in seen:
            continue
        seen.add((i, j))
        idx = i * width + j
        if not free_flat[idx] and not allow_occupied_sources:
            raise ValueError(f"source cell ({i}, {j}) is OCCUPIED")
        if free_flat[idx] and not open_mask[idx] and not allow_occupied_sources:
            raise ValueError(f"source cell ({i}, {j}) has nonpositive speed")
        T[idx] = 0.0
        state[idx] = CONSIDERED
        heap.append((0.0, idx))
    heapq.heapify(heap)

    pop = heapq.heappop
    push = heapq.heappush
    sqrt = math.sqrt
    INF = UNREACHED
    nmax = n - width
    wm1 = width - 1

    while heap:
        t, idx = pop(heap)
        if state[idx] == ACCEPTED:
            continue  # lazy deletion of stale entries
        state[idx] = ACCEPTED
        if acceptance_trace is not None:
            acceptance_trace.append((t, divmod(idx, width)))
        j = idx % width
        for nb in (
            (idx - width) if idx >= width else -1,
            (idx + width) if idx < nmax else -1,
            (idx - 1) if j else -1,
            (idx + 1) if j != wm1 else -1,
        ):
            if nb < 0 or state[nb] == ACCEPTED:
                continue
            # Directional minima over ACCEPTED neighbors only; obstacles
            # are ACCEPTED with +inf and contribute nothing.
            jn = nb % width
            a = INF
            if nb >= width and state[nb - width] == ACCEPTED:
                a = T[nb - width]
            if nb < nmax and state[nb + width] == ACCEPTED:
                v = T[nb + width]
                if v < a:
                    a = v
            b = INF
            if jn and state[nb - 1] == ACCEPTED:
                b = T[nb - 1]
            if jn != wm1 and state[nb + 1] == ACCEPTED:
                v = T[nb + 1]
                if v < b:
                    b = v
            if b < a:
                a, b = b, a
            hfv = hf[nb]
            diff = b - a
            if diff >= hfv:
                tn = a + hfv
            else:
                tn = 0.5 * (a + b + sqrt(2.0 * hfv * hfv - diff * diff))
            if tn < T[nb]:
                T[nb] = tn
                state[nb] = CONSIDERED
                push(heap, (tn, nb))

    out = np.array(T, dtype=np.float64).reshape(height, width)
    return ScalarField(out, h)


def interpolate(field: ScalarField, point: tuple[float, float]) -> float:
    """Bilinear sample of ``field`` at a physical point.

    Interpolates over the 4 surrounding cell centers; UNREACHED corners
    are excluded by renormalizing the weights over the finite ones.
    Raises when the point is outside the physical bounds or all four
    corners are UNREACHED. A point carrying zero total weight on finite
    corners (exactly on an UNREACHED center) yields +inf.
    """
    x, y = point
    h = field.cell_size
    height, width = field.shape
    if not (0 <= x <= width * h and 0 <= y <= height * h):
        raise ValueError(f"point ({x}, {y}) outside field bounds")
    # Clamp into the cell-center lattice; the half-cell margin extends
    # the boundary values outward.
    u = min(max(x / h - 0.5, 0.0), width - 1.0)
    v = min(max(y / h - 0.5, 0.0), height - 1.0)
    j0 = min(int(u), width - 2)
    i0 = min(int(v), height - 2)
    fu = u - j0
    fv = v - i0
    vals = field.values[i0 : i0 + 2, j0 : j0 + 2]
    weights = np.array(
        [
            [(1 - fv) * (1 - fu), (1 - fv) * fu],
            [fv * (1 - fu), fv * fu],
        ]
    )
    finite = np.isfinite(vals)
    if not finite.any():
        raise ValueError(f"all cells surrounding ({x}, {y}) are UNREACHED")
    total = weights[finite].sum()
    if total <= 0.0:
        return UNREACHED
    return float((vals[finite] * weights[finite]).sum() / total)


def format_field(field: ScalarField) -> str:
    """Text form: header ``width height cell_size`` then row-major values.

    UNREACHED renders as ``inf``. Values use shortest round-trip decimal
    form, so parse_field(format_field(f)) reproduces f exactly.
    """
    lines = [f"{field.width} {field.height} {field.cell_size!r}"]
    for row in field.values:
        lines.append(" ".join("inf" if math.isinf(v) else repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def parse_field(text: str) -> ScalarField:
    """Inverse of :func:`format_field`."""
    lines = text.strip().splitlines()
    if not lines:
        raise ValueError("empty field text")
    header = lines[0].split()
    if len(header) != 3:
        raise ValueError(f"bad field header {lines[0]!r}")
    width, height = int(header[0]), int(header[1])
    cell_size = float(header[2])
    if len(lines) - 1 != height:
        raise ValueError(f"expected {height} rows, got {len(lines) - 1}")
    rows = []
    for line in lines[1:]:
        row = [float(tok) for tok in line.split()]
        if len(row) != width:
            raise ValueError(f"expected {width} values per row, got {len(row)}")
        rows.append(row)
    return ScalarField(np.array(rows, dtype=np.float64), cell_size)
