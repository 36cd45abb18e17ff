"""Outer codesign loop: enumerate hardware, optimize tiles per instance,
aggregate frequency-weighted performance, and extract Pareto-optimal designs.

The joint minimization over hardware and tile parameters decomposes: for a
fixed hardware point the workload objective is a weighted sum of per-instance
minima, so each (kernel, size) instance is tile-optimized independently and
the results are reused across hardware-weighting scenarios.  Per-instance
solutions persist in a :class:`~archsweep.store.ResultsStore`, which makes
re-weighting analyses (e.g. single-kernel sensitivity) pure aggregation with
zero new solves.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .area import (
    GTX980,
    MAXWELL,
    TITAN_X,
    AreaCoefficients,
    HardwareConfig,
    area_breakdown,
    cacheless_area,
    total_area,
)
from .store import InstanceRecord, ResultsStore, instance_key
from .timemodel import ExecutionTimeModel, MachineConstants, ReferenceTimeModel
from .tiles import SolveStats, TileSearchBounds, TileSolution, scan_optimize, solve_grid
from .workload import ProblemSize, StencilKernel, WorkloadSpec, instance_flops

__all__ = [
    "HardwareSpace",
    "DesignPoint",
    "ExplorationResult",
    "MissingCacheEntriesError",
    "enumerate_hardware",
    "evaluate_design",
    "explore",
    "pareto_frontier",
    "points_from_store",
    "sensitivity",
    "resource_allocation",
    "baseline_designs",
]

_REFERENCE_MODEL = ReferenceTimeModel()

#: Shared-memory sizes that are manufactured: three small configurations plus
#: multiples of 48 kB up to 480 kB.
DEFAULT_SHARED_KB = (12, 24, 36) + tuple(range(48, 481, 48))


class MissingCacheEntriesError(LookupError):
    """The results store lacks solutions required for a reaggregation."""


@dataclass(frozen=True)
class HardwareSpace:
    """The grid of hardware points the explorer enumerates.

    Only SM count, lanes per SM and shared memory vary; register file size is
    fixed during exploration and caches default to absent, since the target
    code generator stages all transfers through shared memory explicitly.
    """

    sm_counts: tuple[int, ...] = tuple(range(2, 33, 2))
    vector_units: tuple[int, ...] = tuple(range(32, 2049, 32))
    shared_kb: tuple[float, ...] = DEFAULT_SHARED_KB
    regfile_kb: float = 2.0
    l1_kb: float = 0.0
    l2_kb: float = 0.0
    budget: tuple[float, float] = (200.0, 650.0)

    def __post_init__(self) -> None:
        for name in ("sm_counts", "vector_units", "shared_kb"):
            vals = getattr(self, name)
            if not vals:
                raise ValueError(f"{name} must be non-empty")
            if list(vals) != sorted(vals):
                raise ValueError(f"{name} must be sorted ascending")
        lo, hi = self.budget
        if lo > hi:
            raise ValueError(f"budget lo must be <= hi, got {self.budget}")

    def grid_size(self) -> int:
        return len(self.sm_counts) * len(self.vector_units) * len(self.shared_kb)

    def grid(self) -> Iterator[HardwareConfig]:
        """All grid points, before any area filtering."""
        for sm in self.sm_counts:
            for nv in self.vector_units:
                for m in self.shared_kb:
                    yield HardwareConfig(
                        sm_count=sm,
                        vector_units=nv,
                        shared_kb=m,
                        regfile_kb=self.regfile_kb,
                        l1_kb=self.l1_kb,
                        l2_kb=self.l2_kb,
                    )

    def to_dict(self) -> dict:
        return {
            "sm_counts": list(self.sm_counts),
            "vector_units": list(self.vector_units),
            "shared_kb": list(self.shared_kb),
            "regfile_kb": self.regfile_kb,
            "l1_kb": self.l1_kb,
            "l2_kb": self.l2_kb,
            "budget": list(self.budget),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HardwareSpace":
        kwargs = {}
        for name in ("sm_counts", "vector_units", "shared_kb", "budget"):
            if name in d:
                kwargs[name] = tuple(d[name])
        for name in ("regfile_kb", "l1_kb", "l2_kb"):
            if name in d:
                kwargs[name] = float(d[name])
        return cls(**kwargs)


@dataclass(frozen=True)
class DesignPoint:
    """One evaluated hardware point under a fixed workload."""

    hw: HardwareConfig
    area_mm2: float
    weighted_time_s: float
    gflops: float
    feasible: bool
    solutions: Mapping[tuple[str, ProblemSize], TileSolution] = field(repr=False)


@dataclass
class ExplorationResult:
    points: list[DesignPoint]        # all in-budget designs, area ascending
    frontier: list[DesignPoint]      # Pareto-optimal subset
    new_solves: int                  # tile optimizations actually run
    cache_hits: int                  # instances served from the store


def enumerate_hardware(
    space: HardwareSpace, coeffs: AreaCoefficients = MAXWELL
) -> list[tuple[HardwareConfig, float]]:
    """Grid points whose total area falls inside the budget, area ascending."""
    lo, hi = space.budget
    kept = []
    for hw in space.grid():
        a = total_area(hw, coeffs)
        if lo <= a <= hi:
            kept.append((hw, a))
    kept.sort(key=lambda pair: pair[1])
    return kept


def _aggregate(
    workload: WorkloadSpec,
    lookup: Mapping[tuple[str, ProblemSize], TileSolution],
) -> tuple[float, float, bool]:
    """Frequency-weighted (time, flops, feasible) in canonical instance order."""
    weighted_time = 0.0
    weighted_flops = 0.0
    feasible = True
    for kern, size, w in workload.instances():
        sol = lookup[(kern.name, size)]
        if not sol.feasible:
            if w > 0:
                feasible = False
            continue
        weighted_time += w * sol.time_s
        weighted_flops += w * instance_flops(kern, size)
    return weighted_time, weighted_flops, feasible


def _design_point(
    hw: HardwareConfig,
    area: float,
    workload: WorkloadSpec,
    solutions: Mapping[tuple[str, ProblemSize], TileSolution],
) -> DesignPoint:
    weighted_time, weighted_flops, feasible = _aggregate(workload, solutions)
    if feasible and weighted_time > 0.0:
        gf = weighted_flops / weighted_time / 1e9
    else:
        gf = 0.0
        feasible = False
        weighted_time = math.inf
    return DesignPoint(
        hw=hw,
        area_mm2=area,
        weighted_time_s=weighted_time,
        gflops=gf,
        feasible=feasible,
        solutions=solutions,
    )


def evaluate_design(
    hw: HardwareConfig,
    workload: WorkloadSpec,
    *,
    coeffs: AreaCoefficients = MAXWELL,
    mc: MachineConstants | None = None,
    bounds: TileSearchBounds | None = None,
    model: ExecutionTimeModel | None = None,
    stats: SolveStats | None = None,
) -> DesignPoint:
    """Tile-optimize every workload instance on ``hw`` and aggregate."""
    mc = mc if mc is not None else MachineConstants()
    bounds = bounds if bounds is not None else TileSearchBounds()
    model = model if model is not None else _REFERENCE_MODEL
    solutions: dict[tuple[str, ProblemSize], TileSolution] = {}
    for kern in workload.kernels:
        sizes = list(workload.sizes[kern.name])
        if isinstance(model, ReferenceTimeModel):
            solved = solve_grid(kern, sizes, [hw], mc, bounds, stats=stats)
            for sz in sizes:
                solutions[(kern.name, sz)] = solved[(sz, hw)]
        else:
            for sz in sizes:
                solutions[(kern.name, sz)] = scan_optimize(
                    kern, sz, hw, mc, bounds, model, stats=stats
                )
    return _design_point(hw, total_area(hw, coeffs), workload, solutions)


def _solve_task(args):
    kern, sizes, hw_list, mc, bounds = args
    return solve_grid(kern, list(sizes), list(hw_list), mc, bounds)


def solve_workload_on(
    hw_list: Sequence[HardwareConfig],
    workload: WorkloadSpec,
    *,
    mc: MachineConstants,
    bounds: TileSearchBounds,
    model: ExecutionTimeModel,
    store: ResultsStore | None = None,
    jobs: int = 1,
) -> tuple[dict[tuple[str, ProblemSize, HardwareConfig], TileSolution], int, int]:
    """Tile-optimize all workload instances on the given hardware points.

    Consults and extends ``store`` when given.  Returns the solution lookup
    plus (new solve, cache hit) counts.
    """
    cached = store.load() if store is not None else {}
    keys: dict[tuple[str, ProblemSize, HardwareConfig], str] = {}
    lookup: dict[tuple[str, ProblemSize, HardwareConfig], TileSolution] = {}
    cache_hits = 0
    tasks = []
    for kern in workload.kernels:
        missing_by_size: dict[ProblemSize, list[HardwareConfig]] = {}
        for size in workload.sizes[kern.name]:
            missing: list[HardwareConfig] = []
            for hw in hw_list:
                if store is not None:
                    key = instance_key(kern, size, hw, mc, bounds, model.model_id)
                    keys[(kern.name, size, hw)] = key
                    rec = cached.get(key)
                    if rec is not None:
                        lookup[(kern.name, size, hw)] = rec.solution
                        cache_hits += 1
                        continue
                missing.append(hw)
            if missing:
                missing_by_size[size] = missing
        # Batch sizes that miss the same hardware subset into one task.
        by_subset: dict[tuple[HardwareConfig, ...], list[ProblemSize]] = {}
        for size, missing in missing_by_size.items():
            by_subset.setdefault(tuple(missing), []).append(size)
        for subset, sizes in by_subset.items():
            if jobs > 1 and len(sizes) > 1:
                chunk = max(1, -(-len(sizes) // jobs))
                for i in range(0, len(sizes), chunk):
                    tasks.append((kern, tuple(sizes[i : i + chunk]), subset, mc, bounds))
            else:
                tasks.append((kern, tuple(sizes), subset, mc, bounds))

    stats = SolveStats()
    if isinstance(model, ReferenceTimeModel):
        if jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_solve_task, tasks))
        else:
            results = [_solve_task(t) for t in tasks]
        solved_pairs: list[tuple[StencilKernel, dict]] = []
        for task, res in zip(tasks, results):
            solved_pairs.append((task[0], res))
            stats.solves += len(res)
    else:
        solved_pairs = []
        for kern, sizes, subset, _, _ in tasks:
            res = {}
            for sz in sizes:
                for hw in subset:
                    res[(sz, hw)] = scan_optimize(kern, sz, hw, mc, bounds, model, stats=stats)
            solved_pairs.append((kern, res))

    new_records = []
    for kern, res in solved_pairs:
        for (size, hw), sol in res.items():
            lookup[(kern.name, size, hw)] = sol
            if store is not None:
                new_records.append(
                    InstanceRecord(
                        key=keys[(kern.name, size, hw)],
                        kernel=kern.name,
                        size=size,
                        hw=hw,
                        solution=sol,
                    )
                )
    if store is not None and new_records:
        store.append(new_records)
    return lookup, stats.solves, cache_hits


def explore(
    space: HardwareSpace,
    workload: WorkloadSpec,
    *,
    coeffs: AreaCoefficients = MAXWELL,
    mc: MachineConstants | None = None,
    bounds: TileSearchBounds | None = None,
    model: ExecutionTimeModel | None = None,
    store: ResultsStore | None = None,
    jobs: int = 1,
) -> ExplorationResult:
    """Evaluate every in-budget hardware point of ``space`` under ``workload``.

    With a store attached, already-solved instances are reused and new
    solutions appended, so interrupted or repeated runs only pay for what is
    missing.  Reports are deterministic regardless of ``jobs``.
    """
    mc = mc if mc is not None else MachineConstants()
    bounds = bounds if bounds is not None else TileSearchBounds()
    model = model if model is not None else _REFERENCE_MODEL
    hw_areas = enumerate_hardware(space, coeffs)
    hw_list = [hw for hw, _ in hw_areas]
    lookup, new_solves, cache_hits = solve_workload_on(
        hw_list, workload, mc=mc, bounds=bounds, model=model, store=store, jobs=jobs
    )
    points = []
    for hw, area in hw_areas:
        solutions = {
            (kern.name, size): lookup[(kern.name, size, hw)]
            for kern in workload.kernels
            for size in workload.sizes[kern.name]
        }
        points.append(_design_point(hw, area, workload, solutions))
    return ExplorationResult(
        points=points,
        frontier=pareto_frontier(points),
        new_solves=new_solves,
        cache_hits=cache_hits,
    )


def pareto_frontier(points: Sequence[DesignPoint]) -> list[DesignPoint]:
    """Non-dominated designs in the (area, performance) plane.

    A design dominates another when its area is no larger and its throughput
    no smaller, with at least one strict.  Infeasible points never enter the
    frontier; exact (area, gflops) duplicates keep their first occurrence.
    Output is area-ascending with strictly increasing throughput.
    """
    indexed = [
        (p.area_mm2, -p.gflops, i, p) for i, p in enumerate(points) if p.feasible
    ]
    indexed.sort(key=lambda t: (t[0], t[1], t[2]))
    frontier = []
    best_gflops = -math.inf
    for _, _, _, p in indexed:
        if p.gflops > best_gflops:
            frontier.append(p)
            best_gflops = p.gflops
    return frontier


def points_from_store(
    records: Iterable[InstanceRecord] | ResultsStore,
    workload: WorkloadSpec,
    *,
    coeffs: AreaCoefficients = MAXWELL,
    mc: MachineConstants | None = None,
    bounds: TileSearchBounds | None = None,
    model_id: str = ReferenceTimeModel.model_id,
    space: HardwareSpace | None = None,
) -> list[DesignPoint]:
    """Rebuild design points from cached solutions, issuing zero solves.

    Only records whose key matches the given workload/machine/bounds context
    are considered.  Without ``space``, every hardware point seen in the store
    becomes a design point; with it, exactly the in-budget grid points do (so
    cached off-grid entries such as reference chips are left out).  A hardware
    point lacking any required instance raises
    :class:`MissingCacheEntriesError`.
    """
    mc = mc if mc is not None else MachineConstants()
    bounds = bounds if bounds is not None else TileSearchBounds()
    if isinstance(records, ResultsStore):
        records = records.load().values()
    kern_by_name = {k.name: k for k in workload.kernels}

    allowed: set[HardwareConfig] | None = None
    if space is not None:
        allowed = {hw for hw, _ in enumerate_hardware(space, coeffs)}

    solutions_by_hw: dict[HardwareConfig, dict[tuple[str, ProblemSize], TileSolution]] = {}
    for rec in records:
        kern = kern_by_name.get(rec.kernel)
        if kern is None:
            continue
        if allowed is not None and rec.hw not in allowed:
            continue
        expected = instance_key(kern, rec.size, rec.hw, mc, bounds, model_id)
        if expected != rec.key:
            continue
        solutions_by_hw.setdefault(rec.hw, {})[(rec.kernel, rec.size)] = rec.solution

    if allowed is not None:
        absent = allowed - set(solutions_by_hw)
        if absent:
            raise MissingCacheEntriesError(
                f"store has no entries for {len(absent)} in-budget hardware point(s)"
            )

    wanted = [(k.name, size) for k in workload.kernels for size in workload.sizes[k.name]]
    points = []
    for hw in sorted(
        solutions_by_hw,
        key=lambda h: (total_area(h, coeffs), h.sm_count, h.vector_units, h.shared_kb),
    ):
        sols = solutions_by_hw[hw]
        missing = [w for w in wanted if w not in sols]
        if missing:
            raise MissingCacheEntriesError(
                f"store lacks {len(missing)} instance(s) for {hw}, first: {missing[0]}"
            )
        points.append(_design_point(hw, total_area(hw, coeffs), workload, sols))
    return points


def sensitivity(
    records: Iterable[InstanceRecord] | ResultsStore,
    workload: WorkloadSpec,
    kernel_name: str,
    *,
    coeffs: AreaCoefficients = MAXWELL,
    mc: MachineConstants | None = None,
    bounds: TileSearchBounds | None = None,
    model_id: str = ReferenceTimeModel.model_id,
    space: HardwareSpace | None = None,
) -> DesignPoint:
    """Best cached design when all kernel weight shifts to ``kernel_name``.

    Pure reweighting of stored per-instance times; no tile optimization runs.
    """
    degenerate = workload.degenerate(kernel_name)
    points = points_from_store(
        records, degenerate, coeffs=coeffs, mc=mc, bounds=bounds, model_id=model_id,
        space=space,
    )
    feasible = [p for p in points if p.feasible]
    if not feasible:
        raise MissingCacheEntriesError(
            f"no feasible cached design for kernel {kernel_name!r}"
        )
    return min(feasible, key=lambda p: (p.weighted_time_s, p.area_mm2))


def resource_allocation(
    points: Sequence[DesignPoint], coeffs: AreaCoefficients = MAXWELL
) -> list[dict[str, float]]:
    """Fractions of each design's die devoted to memory, lanes, and overhead."""
    rows = []
    for p in points:
        parts = area_breakdown(p.hw, coeffs)
        total = p.area_mm2
        memory = parts["registers"] + parts["shared"] + parts["l1"] + parts["l2"]
        rows.append(
            {
                "memory_share": memory / total,
                "vector_share": parts["vector_logic"] / total,
                "overhead_share": parts["overhead"] / total,
            }
        )
    return rows


def baseline_designs(
    workload: WorkloadSpec,
    *,
    coeffs: AreaCoefficients = MAXWELL,
    mc: MachineConstants | None = None,
    bounds: TileSearchBounds | None = None,
    model: ExecutionTimeModel | None = None,
    store: ResultsStore | None = None,
) -> tuple[list[tuple[str, float, DesignPoint]], int, int]:
    """Reference chips evaluated under ``workload``, with cache-less variants.

    Returns ((name, area, point) rows, new solves, cache hits).  The
    cache-less variant removes the L1 and L2 blocks outright (including their
    fixed costs); its performance equals the cached chip's because the time
    model never relies on caches.
    """
    mc = mc if mc is not None else MachineConstants()
    bounds = bounds if bounds is not None else TileSearchBounds()
    model = model if model is not None else _REFERENCE_MODEL
    chips = (("GTX980", GTX980), ("TitanX", TITAN_X))
    lookup, new_solves, cache_hits = solve_workload_on(
        [hw for _, hw in chips], workload, mc=mc, bounds=bounds, model=model, store=store
    )
    rows = []
    for name, hw in chips:
        solutions = {
            (kern.name, size): lookup[(kern.name, size, hw)]
            for kern in workload.kernels
            for size in workload.sizes[kern.name]
        }
        point = _design_point(hw, total_area(hw, coeffs), workload, solutions)
        rows.append((name, point.area_mm2, point))
        rows.append((name + "-cacheless", cacheless_area(hw, coeffs), point))
    return rows, new_solves, cache_hits
