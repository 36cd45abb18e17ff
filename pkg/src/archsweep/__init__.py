"""archsweep: joint hardware/compiler design-space exploration for stencil
accelerators under a silicon-area budget.

The pipeline: a calibrated linear area model prices candidate chips, an
analytical time model prices tiled stencil executions on them, a bounded
exhaustive search picks optimal tile shapes per (kernel, problem size,
hardware) instance, and the explorer sweeps the hardware grid, aggregates
frequency-weighted workload performance, and extracts the Pareto frontier in
the (area, throughput) plane.
"""

from .area import (
    GTX980,
    MAXWELL,
    TITAN_X,
    AreaCoefficients,
    HardwareConfig,
    area_breakdown,
    cacheless_area,
    load_coefficients,
    sm_area,
    total_area,
)
from .calibration import (
    AreaSample,
    DegenerateSamplesError,
    LinearFit,
    fit_linear,
    predict_block_area,
    read_samples_csv,
)
from .explorer import (
    DesignPoint,
    ExplorationResult,
    HardwareSpace,
    MissingCacheEntriesError,
    baseline_designs,
    enumerate_hardware,
    evaluate_design,
    explore,
    pareto_frontier,
    points_from_store,
    resource_allocation,
    sensitivity,
)
from .store import InstanceRecord, ResultsStore, instance_key
from .timemodel import (
    ExecutionTimeModel,
    InfeasibleTileError,
    MachineConstants,
    ReferenceTimeModel,
    TileConfig,
    footprint_bytes,
    gflops,
    t_alg,
    tile_footprint_bytes,
)
from .tiles import (
    SolveStats,
    TileSearchBounds,
    TileSolution,
    is_feasible,
    max_k,
    optimize_tiles,
    scan_optimize,
    solve_grid,
)
from .workload import (
    ProblemSize,
    StencilKernel,
    WorkloadSpec,
    default_size_set,
    default_workload,
    instance_flops,
    load_workload,
)

__version__ = "0.1.0"

__all__ = [
    "AreaCoefficients",
    "AreaSample",
    "DegenerateSamplesError",
    "DesignPoint",
    "ExecutionTimeModel",
    "ExplorationResult",
    "GTX980",
    "HardwareConfig",
    "HardwareSpace",
    "InfeasibleTileError",
    "InstanceRecord",
    "LinearFit",
    "MAXWELL",
    "MachineConstants",
    "MissingCacheEntriesError",
    "ProblemSize",
    "ReferenceTimeModel",
    "ResultsStore",
    "SolveStats",
    "StencilKernel",
    "TITAN_X",
    "TileConfig",
    "TileSearchBounds",
    "TileSolution",
    "WorkloadSpec",
    "area_breakdown",
    "baseline_designs",
    "cacheless_area",
    "default_size_set",
    "default_workload",
    "enumerate_hardware",
    "evaluate_design",
    "explore",
    "fit_linear",
    "footprint_bytes",
    "gflops",
    "instance_flops",
    "instance_key",
    "is_feasible",
    "load_coefficients",
    "load_workload",
    "max_k",
    "optimize_tiles",
    "pareto_frontier",
    "points_from_store",
    "predict_block_area",
    "read_samples_csv",
    "resource_allocation",
    "scan_optimize",
    "sensitivity",
    "sm_area",
    "solve_grid",
    "t_alg",
    "tile_footprint_bytes",
    "total_area",
]
