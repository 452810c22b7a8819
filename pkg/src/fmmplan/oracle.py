"""Brute-force verifiers for the fast marching solver.

Dijkstra on dense grid graphs and an exhaustive nearest-obstacle scan.
These are deliberately independent of the solver implementation and are
only meant for small instances (up to about 64x64).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .eikonal import ScalarField, fmm_solve
from .grid import OccupancyGrid

__all__ = [
    "GraphMetric",
    "dijkstra_time",
    "nearest_obstacle_scan",
    "random_speed_map",
    "sandwich_campaign",
    "convergence_campaign",
    "CampaignResult",
]

# Offsets for the two supported graph connectivities. 16-connectivity
# adds the knight moves.
_OFFSETS_8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))
_OFFSETS_16 = _OFFSETS_8 + (
    (-2, -1), (-2, 1), (-1, -2), (-1, 2), (1, -2), (1, 2), (2, -1), (2, 1),
)


@dataclass(frozen=True)
class GraphMetric:
    """Grid graph used by the Dijkstra oracle.

    Edge cost is exact Euclidean center distance divided by the smaller
    of the two endpoint speeds, which makes the oracle a conservative
    (slow) path model.
    """

    connectivity: int = 8

    def __post_init__(self):
        if self.connectivity not in (8, 16):
            raise ValueError(f"connectivity must be 8 or 16, got {self.connectivity}")

    def offsets(self) -> tuple[tuple[int, int], ...]:
        return _OFFSETS_8 if self.connectivity == 8 else _OFFSETS_16


def dijkstra_time(
    domain: OccupancyGrid,
    speed: ScalarField,
    source: tuple[int, int],
    metric: GraphMetric = GraphMetric(8),
) -> ScalarField:
    """Exact shortest-time field on the chosen grid graph.

    Edges join FREE cells with positive speed; each costs
    ``length / min(endpoint speeds)``. Unreachable and OCCUPIED cells
    hold +inf.
    """
    if speed.shape != domain.shape:
        raise ValueError("speed shape does not match domain shape")
    height, width = domain.shape
    si, sj = source
    if not (0 <= si < height and 0 <= sj < width):
        raise ValueError(f"source {source} out of bounds")
    if not domain.free[si, sj]:
        raise ValueError(f"source {source} is OCCUPIED")
    h = domain.cell_size
    offs = [(di, dj, math.hypot(di, dj) * h) for di, dj in metric.offsets()]
    free = domain.free
    spd = speed.values
    dist = np.full((height, width), math.inf)
    done = np.zeros((height, width), dtype=bool)
    dist[si, sj] = 0.0
    heap = [(0.0, si, sj)]
    while heap:
        d, i, j = heapq.heappop(heap)
        if done[i, j]:
            continue
        done[i, j] = True
        vi = spd[i, j]
        for di, dj, length in offs:
            ni, nj = i + di, j + dj
            if 0 <= ni < height and 0 <= nj < width and free[ni, nj] and not done[ni, nj]:
                vn = spd[ni, nj]
                if vn <= 0:
                    continue
                c = d + length / min(vi, vn)
                if c < dist[ni, nj]:
                    dist[ni, nj] = c
                    heapq.heappush(heap, (c, ni, nj))
    return ScalarField(dist, h)


def nearest_obstacle_scan(domain: OccupancyGrid) -> ScalarField:
    """Exact Euclidean distance from every cell center to the nearest
    OCCUPIED cell center, by exhaustive scan. OCCUPIED cells hold 0."""
    occ_i, occ_j = np.nonzero(~domain.free)
    if occ_i.size == 0:
        raise ValueError("domain has no OCCUPIED cells")
    height, width = domain.shape
    ii, jj = np.mgrid[0:height, 0:width]
    # pairwise squared distances, chunked over rows to bound memory
    out = np.empty((height, width))
    for r in range(height):
        d2 = (r - occ_i.astype(np.float64)) ** 2 + (
            jj[r][:, None] - occ_j.astype(np.float64)
        ) ** 2
        out[r] = np.sqrt(d2.min(axis=1))
    out[~domain.free] = 0.0
    return ScalarField(out * domain.cell_size, domain.cell_size)


def random_speed_map(
    rng: np.random.Generator, height: int, width: int, cell_size: float = 1.0,
    lo: float = 0.5, hi: float = 1.0,
) -> ScalarField:
    """Cell speeds drawn uniformly from [lo, hi]."""
    return ScalarField(rng.uniform(lo, hi, size=(height, width)), cell_size)


def random_map(
    rng: np.random.Generator, size: int = 32, cell_size: float = 1.0
) -> tuple[OccupancyGrid, ScalarField, tuple[int, int]]:
    """Random obstacle layout, random speeds in [0.5, 1], and a free source."""
    free = np.ones((size, size), dtype=bool)
    n_obstacles = int(rng.integers(0, 61))
    for _ in range(n_obstacles):
        free[int(rng.integers(size)), int(rng.integers(size))] = False
    # keep at least two free cells so a valid grid+source always exists
    free[0, 0] = True
    free[size - 1, size - 1] = True
    grid = OccupancyGrid(free, cell_size)
    speed = random_speed_map(rng, size, size, cell_size)
    while True:
        i, j = int(rng.integers(size)), int(rng.integers(size))
        if free[i, j]:
            return grid, speed, (i, j)


@dataclass
class CampaignResult:
    """Outcome of a verification campaign over seeded random maps."""

    name: str
    trials: int
    passed: bool
    failures: list = field(default_factory=list)  # (seed, cell, detail) tuples

    def summary(self) -> str:
        status = "pass" if self.passed else "FAIL"
        msg = f"{self.name}: {status} ({self.trials} trials"
        if self.failures:
            seed, cell, detail = self.failures[0]
            msg += f"; first failure seed={seed} cell={cell} {detail}"
        return msg + ")"


def sandwich_campaign(
    trials: int = 100,
    seed: int = 0,
    size: int = 32,
    solver=fmm_solve,
) -> list[CampaignResult]:
    """Compare the fast marching solution against the Dijkstra oracles
    on seeded random maps.

    Checks, cell-wise over reachable cells:

    * upper-8:  T_fmm <= T_dijkstra(8-connected) + 1e-9
    * lower-16: T_dijkstra(16-connected) <= T_fmm * (1 + 0.6*h/r + 0.03)
      with r the Euclidean distance from the source
    * dominance: T_dijkstra(16) <= T_dijkstra(8) + 1e-9
    """
    upper = CampaignResult("sandwich-upper-8", trials, True)
    lower = CampaignResult("sandwich-lower-16", trials, True)
    dom = CampaignResult("dijkstra-16-le-8", trials, True)
    for k in range(trials):
        rng = np.random.default_rng(seed + k)
        grid, speed, source = random_map(rng, size)
        t_fmm = solver(grid, speed, [source]).values
        d8 = dijkstra_time(grid, speed, source, GraphMetric(8)).values
        d16 = dijkstra_time(grid, speed, source, GraphMetric(16)).values
        h = grid.cell_size
        si, sj = source
        ii, jj = np.mgrid[0 : grid.height, 0 : grid.width]
        r = np.hypot(ii - si, jj - sj) * h

        both = np.isfinite(t_fmm) & np.isfinite(d8)
        bad = both & (t_fmm > d8 + 1e-9)
        if bad.any():
            upper.passed = False
            ci = np.unravel_index(np.argmax(np.where(bad, t_fmm - d8, -np.inf)), bad.shape)
            upper.failures.append(
                (seed + k, (int(ci[0]), int(ci[1])),
                 f"T_fmm={t_fmm[ci]:.6f} > D8={d8[ci]:.6f}")
            )

        both = np.isfinite(t_fmm) & np.isfinite(d16) & (r > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            envelope = t_fmm * (1.0 + 0.6 * h / np.where(r > 0, r, np.inf) + 0.03)
        bad = both & (d16 > envelope)
        if bad.any():
            lower.passed = False
            ci = np.unravel_index(np.argmax(np.where(bad, d16 - envelope, -np.inf)), bad.shape)
            lower.failures.append(
                (seed + k, (int(ci[0]), int(ci[1])),
                 f"D16={d16[ci]:.6f} > envelope={envelope[ci]:.6f}")
            )

        both = np.isfinite(d8) & np.isfinite(d16)
        bad = both & (d16 > d8 + 1e-9)
        if bad.any():
            dom.passed = False
            ci = np.unravel_index(np.argmax(np.where(bad, d16 - d8, -np.inf)), bad.shape)
            dom.failures.append((seed + k, (int(ci[0]), int(ci[1])), "D16 > D8"))
    return [upper, lower, dom]


def convergence_campaign(size: int = 33, solver=fmm_solve) -> list[CampaignResult]:
    """First-order consistency on the analytic cone.

    Solves the unit-speed problem from the center of an obstacle-free
    grid at spacing h and h/2 over the same physical extent, and checks
    that the max error against the Euclidean cone shrinks by a factor
    in [1.5, 2.5].
    """
    if size % 2 == 0:
        size += 1
    errors = []
    for grid_pts in (size, 2 * size - 1):
        h = (size - 1) / (grid_pts - 1)
        grid = OccupancyGrid(np.ones((grid_pts, grid_pts), dtype=bool), h)
        speed = ScalarField(np.ones((grid_pts, grid_pts)), h)
        c = grid_pts // 2
        t = solver(grid, speed, [(c, c)]).values
        ii, jj = np.mgrid[0:grid_pts, 0:grid_pts]
        exact = np.hypot(ii - c, jj - c) * h
        errors.append(float(np.abs(t - exact).max()))
    ratio = errors[0] / errors[1] if errors[1] > 0 else math.inf
    res = CampaignResult("convergence-first-order", 2, 1.5 <= ratio <= 2.5)
    if not res.passed:
        res.failures.append((0, (size // 2, size // 2), f"error ratio {ratio:.3f}"))
    return [res]
