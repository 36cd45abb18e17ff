"""Analytical execution-time model for space-time tiled stencils.

The model predicts the runtime of a hexagonally tiled stencil sweep on a
parameterized accelerator.  It is deliberately simple and fully specified so
it can serve as a reference objective for the tile optimizer and the design
explorer; both treat the model as a black box behind
:class:`ExecutionTimeModel`, so a measured or more detailed model can be
swapped in without touching the search layers.

Reference model
---------------
A tile covers ``space1 x space2 (x space3)`` grid points and ``time`` time
steps; its shared-memory footprint includes halo regions, with the halo along
the first space axis growing with the time extent (the tile is skewed in the
space-time plane).  Tiles within one time band are independent and are issued
in waves of ``sm_count * blocks`` concurrent tiles; consecutive time bands are
data-dependent and execute sequentially.  Per wave, computation
(``c_iter * space1 * time``, scaled by lane oversubscription) overlaps with
the wave's global-memory traffic (``sm_count * blocks * footprint`` bytes at
the flat machine bandwidth); the wave costs the larger of the two.  Partial
waves are charged as full waves.
"""

from __future__ import annotations

from dataclasses import dataclass

from .area import HardwareConfig
from .workload import ProblemSize, StencilKernel, instance_flops

__all__ = [
    "TileConfig",
    "MachineConstants",
    "InfeasibleTileError",
    "ExecutionTimeModel",
    "ReferenceTimeModel",
    "footprint_bytes",
    "tile_footprint_bytes",
    "t_alg",
    "gflops",
    "constraint_violation",
]

#: Values of shared memory per SM (kB) that enumeration and feasibility
#: checking accept: the small sizes actually shipped plus multiples of 48.
SHARED_KB_EXTRAS = (12, 24, 36)


def _ceil_div(a, b):
    return -(-a // b)


class InfeasibleTileError(ValueError):
    """A tile violates the residency constraints it is being evaluated under."""


@dataclass(frozen=True)
class TileConfig:
    """Tile extents plus the hyperthreading degree.

    ``blocks`` is the number of tiles kept resident per SM.  Construction only
    enforces structural validity (positive integers, ``space3`` for 3D tiles);
    the warp-alignment and parity rules are optimization constraints, checked
    by :func:`constraint_violation` so that non-conforming candidates can be
    represented and rejected rather than being unconstructable.
    """

    space1: int
    space2: int
    time: int
    blocks: int = 1
    space3: int | None = None

    def __post_init__(self) -> None:
        for name in ("space1", "space2", "time", "blocks"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.space3 is not None and (not isinstance(self.space3, int) or self.space3 < 1):
            raise ValueError(f"space3 must be a positive integer, got {self.space3!r}")

    @property
    def dims(self) -> int:
        return 2 if self.space3 is None else 3

    def to_dict(self) -> dict:
        return {
            "space1": self.space1,
            "space2": self.space2,
            "space3": self.space3,
            "time": self.time,
        }

    @classmethod
    def from_dict(cls, d: dict, blocks: int = 1) -> "TileConfig":
        return cls(
            space1=d["space1"], space2=d["space2"], time=d["time"],
            blocks=blocks, space3=d.get("space3"),
        )


@dataclass(frozen=True)
class MachineConstants:
    """Fixed machine properties that are not codesign variables."""

    warp_size: int = 32
    mtb_sm: int = 32            # max threadblocks resident on one SM
    block_shmem_kb: float = 48.0  # shared memory one threadblock may claim
    bandwidth_gbps: float = 224.0  # global memory bandwidth; inf = ignore memory

    def __post_init__(self) -> None:
        if self.warp_size < 1 or self.mtb_sm < 1:
            raise ValueError("warp_size and mtb_sm must be >= 1")
        if not self.block_shmem_kb > 0 or not self.bandwidth_gbps > 0:
            raise ValueError("block_shmem_kb and bandwidth_gbps must be > 0")
        object.__setattr__(self, "block_shmem_kb", float(self.block_shmem_kb))
        object.__setattr__(self, "bandwidth_gbps", float(self.bandwidth_gbps))

    def to_dict(self) -> dict:
        return {
            "warp_size": self.warp_size,
            "mtb_sm": self.mtb_sm,
            "block_shmem_kb": self.block_shmem_kb,
            "bandwidth_gbps": self.bandwidth_gbps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MachineConstants":
        return cls(**d)


def footprint_bytes(
    n_arrays: int,
    bytes_per_elem: int,
    order: int,
    space1: int,
    space2: int,
    time: int,
    space3: int | None = None,
) -> int:
    """Shared-memory bytes of a rectangular tile with halo.

    The halo along the first space axis is ``2*order*time`` (the tile leans
    over by one stencil radius per time step on each side); the remaining
    space axes carry the plain ``2*order`` halo.
    """
    fp = n_arrays * bytes_per_elem * (space1 + 2 * order * time) * (space2 + 2 * order)
    if space3 is not None:
        fp *= space3 + 2 * order
    return fp


def tile_footprint_bytes(kern: StencilKernel, tile: TileConfig) -> int:
    """Shared-memory footprint of one tile of ``kern``, halo included."""
    if tile.dims != kern.dims:
        raise InfeasibleTileError(
            f"{tile.dims}D tile for {kern.dims}D kernel {kern.name!r}"
        )
    return footprint_bytes(
        kern.n_arrays, kern.bytes_per_elem, kern.order,
        tile.space1, tile.space2, tile.time, tile.space3,
    )


def _valid_shared_kb(shared_kb: float) -> bool:
    return shared_kb in SHARED_KB_EXTRAS or (shared_kb > 0 and shared_kb % 48 == 0)


def constraint_violation(
    kern: StencilKernel,
    hw: HardwareConfig,
    mc: MachineConstants,
    tile: TileConfig,
) -> str | None:
    """First violated residency/shape constraint, or None when feasible.

    Checks, in order: tile/kernel dimensionality, warp alignment of the
    second space axis, even time extent (required for hexagonal space-time
    tiles), hardware shape rules (even SM count, warp-multiple lane count,
    supported shared-memory size), the per-threadblock shared-memory cap, the
    residency cap, and total shared-memory occupancy.
    """
    if tile.dims != kern.dims:
        return f"{tile.dims}D tile for {kern.dims}D kernel"
    if tile.space2 < 32 or tile.space2 % 32 != 0:
        return f"space2 must be a positive multiple of 32, got {tile.space2}"
    if tile.time < 2 or tile.time % 2 != 0:
        return f"time extent must be even and >= 2, got {tile.time}"
    if hw.vector_units < 32:
        return f"need at least one warp of lanes, got {hw.vector_units}"
    if not _valid_shared_kb(hw.shared_kb):
        return f"unsupported shared memory size {hw.shared_kb} kB"
    mtile = tile_footprint_bytes(kern, tile)
    if mtile > mc.block_shmem_kb * 1024:
        return f"tile footprint {mtile} B exceeds per-block cap {mc.block_shmem_kb} kB"
    if tile.blocks > mc.mtb_sm:
        return f"blocks {tile.blocks} exceeds residency cap {mc.mtb_sm}"
    if tile.blocks * mtile > hw.shared_kb * 1024:
        return (
            f"{tile.blocks} resident tiles need {tile.blocks * mtile} B, "
            f"only {hw.shared_kb} kB available"
        )
    return None


class ExecutionTimeModel:
    """Interface for pluggable execution-time models.

    A model is a callable ``model(kern, size, hw, mc, tile) -> seconds`` with
    a stable ``model_id`` used to key cached results.
    """

    model_id = "abstract"

    def __call__(
        self,
        kern: StencilKernel,
        size: ProblemSize,
        hw: HardwareConfig,
        mc: MachineConstants,
        tile: TileConfig,
    ) -> float:
        raise NotImplementedError


class ReferenceTimeModel(ExecutionTimeModel):
    """The banded wave-schedule model described in the module docstring."""

    model_id = "banded-waves-v1"

    def __call__(self, kern, size, hw, mc, tile):
        return t_alg(kern, size, hw, mc, tile)


def t_alg(
    kern: StencilKernel,
    size: ProblemSize,
    hw: HardwareConfig,
    mc: MachineConstants,
    tile: TileConfig,
) -> float:
    """Predicted runtime in seconds of one (kernel, size) instance.

    Raises :class:`InfeasibleTileError` when the tile cannot actually run on
    the given hardware.
    """
    if size.dims != kern.dims:
        raise InfeasibleTileError(
            f"{size.dims}D size for {kern.dims}D kernel {kern.name!r}"
        )
    violation = constraint_violation(kern, hw, mc, tile)
    if violation is not None:
        raise InfeasibleTileError(violation)
    mtile = tile_footprint_bytes(kern, tile)

    space_tiles = _ceil_div(size.s1, tile.space1) * _ceil_div(size.s2, tile.space2)
    if size.s3 is not None:
        space_tiles *= _ceil_div(size.s3, tile.space3)
    bands = _ceil_div(size.t, tile.time)
    waves = bands * _ceil_div(space_tiles, hw.sm_count * tile.blocks)

    threads = tile.space2 if tile.space3 is None else tile.space2 * tile.space3
    warps = _ceil_div(tile.blocks * threads, mc.warp_size)
    oversub = _ceil_div(warps * mc.warp_size, hw.vector_units)

    t_comp = ((kern.c_iter * tile.space1) * tile.time) * oversub
    t_mem = (hw.sm_count * tile.blocks * mtile) / (mc.bandwidth_gbps * 1e9)
    return waves * max(t_comp, t_mem)


def gflops(kern: StencilKernel, size: ProblemSize, time_s: float) -> float:
    """Sustained GFLOP/s of one instance finishing in ``time_s`` seconds."""
    if not time_s > 0:
        raise ValueError(f"time_s must be > 0, got {time_s}")
    return instance_flops(kern, size) / time_s / 1e9
