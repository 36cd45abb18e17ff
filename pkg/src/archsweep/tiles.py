"""Per-instance tile-size optimization by bounded exhaustive search.

For a fixed (kernel, problem size, hardware point) the optimizer minimizes
the execution-time model over a bounded grid of tile shapes and residency
degrees.  The grid is small enough (~1e4..1e5 points per instance) that
enumeration with cheap pruning is exactly optimal and much faster at desk
scale than handing the mixed-integer program to an external solver.

Two equivalent engines are provided: :func:`scan_optimize`, a plain loop that
works with any execution-time model and supports disabling its pruning, and
:func:`solve_grid`, a vectorized evaluator for the reference model that
solves one kernel for many problem sizes and hardware points at once.  Both
iterate candidates in the same order and perform identical float operations,
so results, including tie-breaks, agree bitwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .area import HardwareConfig
from .timemodel import (
    ExecutionTimeModel,
    MachineConstants,
    ReferenceTimeModel,
    TileConfig,
    _valid_shared_kb,
    constraint_violation,
    tile_footprint_bytes,
)
from .workload import ProblemSize, StencilKernel

__all__ = [
    "TileSearchBounds",
    "TileSolution",
    "SolveStats",
    "is_feasible",
    "max_k",
    "optimize_tiles",
    "scan_optimize",
    "solve_grid",
]

_REFERENCE_MODEL = ReferenceTimeModel()


def _ceil_div(a, b):
    return -(-a // b)


@dataclass
class SolveStats:
    """Counts tile optimizations actually performed (cache hits do not count)."""

    solves: int = 0


@dataclass(frozen=True)
class TileSearchBounds:
    """Inclusive (lo, hi, step) ranges for each tile dimension.

    ``space2`` values must be multiples of 32 (warp alignment) and ``time``
    values even (space-time tile shape), so those ranges must start on and
    step by conforming values.  ``space3`` only applies to 3D kernels.
    """

    space1: tuple[int, int, int] = (1, 512, 1)
    space2: tuple[int, int, int] = (32, 1024, 32)
    space3: tuple[int, int, int] = (1, 64, 1)
    time: tuple[int, int, int] = (2, 64, 2)

    def __post_init__(self) -> None:
        for name in ("space1", "space2", "space3", "time"):
            lo, hi, step = getattr(self, name)
            if lo < 1 or step < 1 or hi < lo:
                raise ValueError(f"{name}: bad range ({lo}, {hi}, {step})")
        if self.space2[0] % 32 != 0 or self.space2[2] % 32 != 0:
            raise ValueError("space2 range must start on and step by multiples of 32")
        if self.time[0] % 2 != 0 or self.time[2] % 2 != 0:
            raise ValueError("time range must start on and step by even values")

    def space1_values(self) -> range:
        return range(self.space1[0], self.space1[1] + 1, self.space1[2])

    def space2_values(self) -> range:
        return range(self.space2[0], self.space2[1] + 1, self.space2[2])

    def space3_values(self) -> range:
        return range(self.space3[0], self.space3[1] + 1, self.space3[2])

    def time_values(self) -> range:
        return range(self.time[0], self.time[1] + 1, self.time[2])

    def grid_points(self, dims: int) -> int:
        """Number of tile shapes in the grid (residency degrees excluded)."""
        n = len(self.space1_values()) * len(self.space2_values()) * len(self.time_values())
        if dims == 3:
            n *= len(self.space3_values())
        return n

    def to_dict(self) -> dict:
        return {
            "space1": list(self.space1),
            "space2": list(self.space2),
            "space3": list(self.space3),
            "time": list(self.time),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TileSearchBounds":
        kwargs = {k: tuple(v) for k, v in d.items()}
        return cls(**kwargs)


@dataclass(frozen=True)
class TileSolution:
    """Outcome of one per-instance optimization.

    An infeasible instance (no tile satisfies the residency constraints) is a
    regular value, not an error, so the explorer can skip the hardware point.
    """

    tile: TileConfig | None
    time_s: float | None
    feasible: bool


def is_feasible(
    kern: StencilKernel,
    hw: HardwareConfig,
    mc: MachineConstants,
    tile: TileConfig,
) -> bool:
    """Whether ``tile`` satisfies all residency and shape constraints."""
    return constraint_violation(kern, hw, mc, tile) is None


def max_k(
    kern: StencilKernel,
    hw: HardwareConfig,
    mc: MachineConstants,
    tile: TileConfig,
) -> int:
    """Largest residency degree the shared memory admits for this tile shape.

    0 means the tile cannot be resident at all.
    """
    mtile = tile_footprint_bytes(kern, tile)
    return min(mc.mtb_sm, math.floor(hw.shared_kb * 1024) // mtile)


def _hw_usable(hw: HardwareConfig) -> bool:
    return hw.vector_units >= 32 and _valid_shared_kb(hw.shared_kb)


def scan_optimize(
    kern: StencilKernel,
    size: ProblemSize,
    hw: HardwareConfig,
    mc: MachineConstants,
    bounds: TileSearchBounds,
    model: ExecutionTimeModel | None = None,
    *,
    prune: bool = True,
    stats: SolveStats | None = None,
) -> TileSolution:
    """Reference search: loop over the full candidate grid.

    Candidates are visited in lexicographic (time, space1, space2, space3,
    blocks) order and the first strict minimum is kept, so ties resolve to the
    lexicographically smallest candidate.  ``prune=False`` disables the
    shortcuts (oversized footprints, space2 beyond the problem extent,
    residency degrees past the capacity limit) and filters every candidate
    through :func:`is_feasible` instead; the result is identical.
    """
    if size.dims != kern.dims:
        raise ValueError(f"{size.dims}D size for {kern.dims}D kernel {kern.name!r}")
    if model is None:
        model = _REFERENCE_MODEL
    if stats is not None:
        stats.solves += 1
    if not _hw_usable(hw):
        return TileSolution(tile=None, time_s=None, feasible=False)

    block_cap = mc.block_shmem_kb * 1024
    s2_cap = _ceil_div(size.s2, 32) * 32  # beyond this a wider tile only adds halo
    s3_values: tuple[int | None, ...] | range
    s3_values = bounds.space3_values() if kern.dims == 3 else (None,)

    best_time: float | None = None
    best_tile: TileConfig | None = None
    for tt in bounds.time_values():
        for s1 in bounds.space1_values():
            for s2 in bounds.space2_values():
                if prune and s2 > s2_cap:
                    continue
                for s3 in s3_values:
                    base = TileConfig(space1=s1, space2=s2, time=tt, blocks=1, space3=s3)
                    mtile = tile_footprint_bytes(kern, base)
                    if prune:
                        if mtile > block_cap:
                            continue
                        ks = range(1, max_k(kern, hw, mc, base) + 1)
                    else:
                        ks = range(1, mc.mtb_sm + 1)
                    for k in ks:
                        tile = TileConfig(space1=s1, space2=s2, time=tt, blocks=k, space3=s3)
                        if not prune and not is_feasible(kern, hw, mc, tile):
                            continue
                        t = model(kern, size, hw, mc, tile)
                        if best_time is None or t < best_time:
                            best_time, best_tile = t, tile
    if best_tile is None:
        return TileSolution(tile=None, time_s=None, feasible=False)
    return TileSolution(tile=best_tile, time_s=best_time, feasible=True)


class _CandidateSet:
    """Flat arrays of all (tile shape, residency) candidates for one kernel.

    Order is lexicographic (time, space1, space2, space3, blocks), matching
    :func:`scan_optimize`, so "first index of the minimum" implements the same
    tie-break.
    """

    __slots__ = ("s1", "s2", "s3", "tt", "k", "mtile", "req", "cbase", "wthreads", "is3d")

    def __init__(self, kern: StencilKernel, mc: MachineConstants, bounds: TileSearchBounds,
                 max_shared_kb: float):
        r = kern.order
        unit = kern.n_arrays * kern.bytes_per_elem
        block_cap = mc.block_shmem_kb * 1024
        is3d = kern.dims == 3

        def axis(spec):
            lo, hi, step = spec
            return np.arange(lo, hi + 1, step, dtype=np.int64)

        s1v, s2v, ttv = axis(bounds.space1), axis(bounds.space2), axis(bounds.time)
        s3v = axis(bounds.space3) if is3d else None

        def fp(s1, s2, tt, s3):
            v = unit * (s1 + 2 * r * tt) * (s2 + 2 * r)
            if is3d:
                v = v * (s3 + 2 * r)
            return v

        # Per-axis caps with every other axis at its minimum; sound because the
        # footprint is monotone in each extent.
        s3_lo = int(s3v[0]) if is3d else None
        s1v = s1v[fp(s1v, int(s2v[0]), int(ttv[0]), s3_lo) <= block_cap]
        if s1v.size:
            s2v = s2v[fp(int(s1v[0]), s2v, int(ttv[0]), s3_lo) <= block_cap]
        if s1v.size and s2v.size:
            ttv = ttv[fp(int(s1v[0]), int(s2v[0]), ttv, s3_lo) <= block_cap]
        if is3d and s1v.size and s2v.size and ttv.size:
            s3v = s3v[fp(int(s1v[0]), int(s2v[0]), int(ttv[0]), s3v) <= block_cap]

        axes = (ttv, s1v, s2v, s3v) if is3d else (ttv, s1v, s2v)
        if any(a.size == 0 for a in axes):
            self.s1 = np.empty(0, dtype=np.int64)
            self.is3d = is3d
            return
        mesh = np.meshgrid(*axes, indexing="ij")
        tt = mesh[0].ravel()
        s1 = mesh[1].ravel()
        s2 = mesh[2].ravel()
        s3 = mesh[3].ravel() if is3d else None

        mtile = fp(s1, s2, tt, s3)
        keep = mtile <= block_cap
        tt, s1, s2, mtile = tt[keep], s1[keep], s2[keep], mtile[keep]
        if is3d:
            s3 = s3[keep]

        max_shared_bytes = math.floor(max_shared_kb * 1024)
        kmax = np.minimum(np.int64(mc.mtb_sm), max_shared_bytes // mtile)
        keep = kmax >= 1
        tt, s1, s2, mtile, kmax = tt[keep], s1[keep], s2[keep], mtile[keep], kmax[keep]
        if is3d:
            s3 = s3[keep]
        if tt.size == 0:
            self.s1 = np.empty(0, dtype=np.int64)
            self.is3d = is3d
            return

        # Expand residency degrees: each tile shape repeats for k = 1..kmax,
        # keeping k contiguous and ascending so global order stays lexicographic.
        idx = np.repeat(np.arange(tt.size), kmax)
        starts = np.concatenate(([0], np.cumsum(kmax)[:-1]))
        k = np.arange(idx.size, dtype=np.int64) - starts[idx] + 1

        self.is3d = is3d
        self.tt = tt[idx]
        self.s1 = s1[idx]
        self.s2 = s2[idx]
        self.s3 = s3[idx] if is3d else None
        self.k = k
        self.mtile = mtile[idx]
        self.req = self.k * self.mtile
        threads = self.s2 * self.s3 if is3d else self.s2
        warps = _ceil_div(self.k * threads, np.int64(mc.warp_size))
        self.wthreads = warps * np.int64(mc.warp_size)
        self.cbase = (kern.c_iter * self.s1) * self.tt

    def __len__(self) -> int:
        return int(self.s1.size)

    def tile_at(self, i: int) -> TileConfig:
        return TileConfig(
            space1=int(self.s1[i]),
            space2=int(self.s2[i]),
            time=int(self.tt[i]),
            blocks=int(self.k[i]),
            space3=int(self.s3[i]) if self.is3d else None,
        )


def solve_grid(
    kern: StencilKernel,
    sizes: list[ProblemSize],
    hw_list: list[HardwareConfig],
    mc: MachineConstants,
    bounds: TileSearchBounds,
    *,
    stats: SolveStats | None = None,
) -> dict[tuple[ProblemSize, HardwareConfig], TileSolution]:
    """Optimal tiles for one kernel over many sizes and hardware points.

    Vectorized evaluation of the reference model; bitwise-equal to running
    :func:`scan_optimize` per (size, hardware) pair.
    """
    for sz in sizes:
        if sz.dims != kern.dims:
            raise ValueError(f"{sz.dims}D size for {kern.dims}D kernel {kern.name!r}")
    out: dict[tuple[ProblemSize, HardwareConfig], TileSolution] = {}
    if not sizes or not hw_list:
        return out
    if stats is not None:
        stats.solves += len(sizes) * len(hw_list)

    infeasible = TileSolution(tile=None, time_s=None, feasible=False)
    usable = []
    for h in hw_list:
        if _hw_usable(h):
            usable.append(h)
        else:
            for sz in sizes:
                out[(sz, h)] = infeasible
    if not usable:
        return out

    cand = _CandidateSet(kern, mc, bounds, max(h.shared_kb for h in usable))
    if len(cand) == 0:
        for sz in sizes:
            for h in usable:
                out[(sz, h)] = infeasible
        return out

    den = mc.bandwidth_gbps * 1e9
    by_sm: dict[int, dict[int, list[HardwareConfig]]] = {}
    for h in usable:
        by_sm.setdefault(h.sm_count, {}).setdefault(h.vector_units, []).append(h)
    feas_masks = {}
    for h in usable:
        if h.shared_kb not in feas_masks:
            feas_masks[h.shared_kb] = cand.req <= h.shared_kb * 1024

    tcomp_by_nv: dict[int, np.ndarray] = {}
    tmem_by_sm: dict[int, np.ndarray] = {}
    sk_by_sm: dict[int, np.ndarray] = {}
    for sz in sizes:
        space_tiles = _ceil_div(np.int64(sz.s1), cand.s1) * _ceil_div(np.int64(sz.s2), cand.s2)
        if cand.is3d:
            space_tiles = space_tiles * _ceil_div(np.int64(sz.s3), cand.s3)
        bands = _ceil_div(np.int64(sz.t), cand.tt)
        for sm, nv_map in by_sm.items():
            sk = sk_by_sm.get(sm)
            if sk is None:
                sk = sm * cand.k
                sk_by_sm[sm] = sk
                tmem_by_sm[sm] = (sk * cand.mtile) / den
            waves = bands * _ceil_div(space_tiles, sk)
            tmem = tmem_by_sm[sm]
            for nv, hws in nv_map.items():
                tcomp = tcomp_by_nv.get(nv)
                if tcomp is None:
                    oversub = _ceil_div(cand.wthreads, np.int64(nv))
                    tcomp = cand.cbase * oversub
                    tcomp_by_nv[nv] = tcomp
                times = waves * np.maximum(tcomp, tmem)
                for h in hws:
                    masked = np.where(feas_masks[h.shared_kb], times, np.inf)
                    i = int(masked.argmin())
                    if not np.isfinite(masked[i]):
                        out[(sz, h)] = infeasible
                    else:
                        out[(sz, h)] = TileSolution(
                            tile=cand.tile_at(i), time_s=float(times[i]), feasible=True
                        )
    return out


def optimize_tiles(
    kern: StencilKernel,
    size: ProblemSize,
    hw: HardwareConfig,
    mc: MachineConstants | None = None,
    bounds: TileSearchBounds | None = None,
    model: ExecutionTimeModel | None = None,
    *,
    stats: SolveStats | None = None,
) -> TileSolution:
    """Optimal tile and residency degree for one (kernel, size, hardware).

    Ties are broken toward the lexicographically smallest (time, space1,
    space2, space3, blocks) candidate.  With the reference time model this
    dispatches to the vectorized engine; custom models run the plain scan.
    """
    if mc is None:
        mc = MachineConstants()
    if bounds is None:
        bounds = TileSearchBounds()
    if model is None or isinstance(model, ReferenceTimeModel):
        return solve_grid(kern, [size], [hw], mc, bounds, stats=stats)[(size, hw)]
    return scan_optimize(kern, size, hw, mc, bounds, model, stats=stats)
