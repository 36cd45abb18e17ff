"""Stencil workload characterization: kernels, problem sizes, frequency weights.

A workload file is a JSON document::

    {
      "kernels": [
        {"name": "Jacobi-2D", "dims": 2, "order": 1, "n_arrays": 2,
         "flops_per_point": 5, "bytes_per_elem": 4, "c_iter": 1e-9},
        ...
      ],
      "sizes": "default",            # or a list, or {kernel-name: list}
      "frequencies": "uniform"       # or {"kernel": {...}, "size": {...}}
    }

Explicit size entries are either cubic, ``{"s": 4096, "t": 1024}`` (adapts to
the kernel's dimensionality), or fully spelled out with ``s1``, ``s2``,
optional ``s3`` and ``t``.  Explicit size frequencies are lists aligned with
the kernel's size list.  Frequencies are weights obtained from profiling; they
are inputs, never computed here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Mapping, Sequence

__all__ = [
    "StencilKernel",
    "ProblemSize",
    "WorkloadSpec",
    "default_size_set",
    "instance_flops",
    "default_workload",
    "load_workload",
    "DEFAULT_SPACE_EXTENTS",
    "DEFAULT_TIME_EXTENTS",
    "DEFAULT_KERNEL_TABLE",
]

#: Default problem-size grids (points per spatial dim, time steps).
DEFAULT_SPACE_EXTENTS = (4096, 8192, 12228, 16384)
DEFAULT_TIME_EXTENTS = (1024, 2048, 4096, 8192, 16384)

#: name -> (dims, flops_per_point) for the six bundled first-order kernels.
#: The flop counts follow the standard kernel definitions and are meant to be
#: overridden from the workload file when measured values are available.
DEFAULT_KERNEL_TABLE = {
    "Jacobi-2D": (2, 5),
    "Heat-2D": (2, 10),
    "Laplacian-2D": (2, 6),
    "Gradient-2D": (2, 6),
    "Heat-3D": (3, 14),
    "Laplacian-3D": (3, 8),
}

_FREQ_TOL = 1e-9


@dataclass(frozen=True)
class StencilKernel:
    """Static characterization of one stencil benchmark."""

    name: str
    dims: int             # spatial dimensionality, 2 or 3
    order: int            # stencil radius in grid points
    n_arrays: int         # live grid arrays (2 = double buffering)
    flops_per_point: int  # floating-point ops per stencil update
    bytes_per_elem: int
    c_iter: float         # seconds: one stencil update on one thread

    def __post_init__(self) -> None:
        if self.dims not in (2, 3):
            raise ValueError(f"dims must be 2 or 3, got {self.dims}")
        if self.order < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")
        if self.n_arrays < 1:
            raise ValueError(f"n_arrays must be >= 1, got {self.n_arrays}")
        if self.flops_per_point < 1:
            raise ValueError(f"flops_per_point must be >= 1, got {self.flops_per_point}")
        if self.bytes_per_elem < 1:
            raise ValueError(f"bytes_per_elem must be >= 1, got {self.bytes_per_elem}")
        if not self.c_iter > 0:
            raise ValueError(f"c_iter must be > 0, got {self.c_iter}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dims": self.dims,
            "order": self.order,
            "n_arrays": self.n_arrays,
            "flops_per_point": self.flops_per_point,
            "bytes_per_elem": self.bytes_per_elem,
            "c_iter": self.c_iter,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StencilKernel":
        return cls(**d)


@dataclass(frozen=True)
class ProblemSize:
    """Spatial extents (points) and time steps of one problem instance.

    ``s3`` is present exactly for 3D problems.  No more time steps than
    points along the first axis are allowed (iterative stencils converge
    well before that).
    """

    s1: int
    s2: int
    t: int
    s3: int | None = None

    def __post_init__(self) -> None:
        for name in ("s1", "s2", "t"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.s3 is not None and self.s3 <= 0:
            raise ValueError("s3 must be > 0 when present")
        if self.t > self.s1:
            raise ValueError(f"t must be <= s1, got t={self.t}, s1={self.s1}")

    @property
    def dims(self) -> int:
        return 2 if self.s3 is None else 3

    def to_dict(self) -> dict:
        return {"s1": self.s1, "s2": self.s2, "s3": self.s3, "t": self.t}

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemSize":
        return cls(s1=d["s1"], s2=d["s2"], t=d["t"], s3=d.get("s3"))


def default_size_set(
    dims: int = 2,
    space_extents: Sequence[int] = DEFAULT_SPACE_EXTENTS,
    time_extents: Sequence[int] = DEFAULT_TIME_EXTENTS,
) -> list[ProblemSize]:
    """Cubic sizes from the default grids, keeping pairs with t <= s.

    Deterministic: sorted by space extent, then time extent.
    """
    if dims not in (2, 3):
        raise ValueError(f"dims must be 2 or 3, got {dims}")
    out = []
    for s in sorted(space_extents):
        for t in sorted(time_extents):
            if t <= s:
                out.append(ProblemSize(s1=s, s2=s, t=t, s3=s if dims == 3 else None))
    return out


def instance_flops(kern: StencilKernel, size: ProblemSize) -> int:
    """Total floating-point operations of one (kernel, size) instance."""
    if size.dims != kern.dims:
        raise ValueError(
            f"size is {size.dims}D but kernel {kern.name!r} is {kern.dims}D"
        )
    flops = kern.flops_per_point * size.s1 * size.s2 * size.t
    if size.s3 is not None:
        flops *= size.s3
    return flops


@dataclass(frozen=True)
class WorkloadSpec:
    """Kernels with per-kernel size lists and frequency weights.

    ``fr_kernel`` sums to 1 over kernels and each ``fr_size`` list sums to 1
    over that kernel's sizes (both within 1e-9).  Iteration order is the
    kernel list order, then the size list order; aggregations elsewhere rely
    on that order being stable.
    """

    kernels: tuple[StencilKernel, ...]
    sizes: Mapping[str, tuple[ProblemSize, ...]]
    fr_kernel: Mapping[str, float]
    fr_size: Mapping[str, tuple[float, ...]]

    def __post_init__(self) -> None:
        if not self.kernels:
            raise ValueError("workload needs at least one kernel")
        names = [k.name for k in self.kernels]
        if len(set(names)) != len(names):
            raise ValueError("kernel names must be unique")
        for k in self.kernels:
            if k.name not in self.sizes or not self.sizes[k.name]:
                raise ValueError(f"no sizes for kernel {k.name!r}")
            for sz in self.sizes[k.name]:
                if sz.dims != k.dims:
                    raise ValueError(f"size {sz} does not match {k.dims}D kernel {k.name!r}")
            if k.name not in self.fr_kernel:
                raise ValueError(f"no kernel frequency for {k.name!r}")
            ws = self.fr_size.get(k.name)
            if ws is None or len(ws) != len(self.sizes[k.name]):
                raise ValueError(f"size frequencies for {k.name!r} misaligned with its sizes")
            if any(w < 0 for w in ws):
                raise ValueError("size frequencies must be >= 0")
            if abs(sum(ws) - 1.0) > _FREQ_TOL:
                raise ValueError(f"size frequencies for {k.name!r} must sum to 1")
        if any(w < 0 for w in self.fr_kernel.values()):
            raise ValueError("kernel frequencies must be >= 0")
        total = sum(self.fr_kernel[n] for n in names)
        if abs(total - 1.0) > _FREQ_TOL:
            raise ValueError(f"kernel frequencies must sum to 1, got {total}")

    @classmethod
    def uniform(
        cls,
        kernels: Sequence[StencilKernel],
        sizes: Mapping[str, Sequence[ProblemSize]] | None = None,
    ) -> "WorkloadSpec":
        """Equal weight for every kernel and, within a kernel, every size."""
        kernels = tuple(kernels)
        if sizes is None:
            sizes = {k.name: default_size_set(k.dims) for k in kernels}
        size_map = {name: tuple(v) for name, v in sizes.items()}
        fr_kernel = {k.name: 1.0 / len(kernels) for k in kernels}
        fr_size = {
            name: tuple(1.0 / len(v) for _ in v) for name, v in size_map.items()
        }
        return cls(kernels=kernels, sizes=size_map, fr_kernel=fr_kernel, fr_size=fr_size)

    def with_kernel_weights(self, fr_kernel: Mapping[str, float]) -> "WorkloadSpec":
        """Same workload with replaced kernel-level weights."""
        return WorkloadSpec(
            kernels=self.kernels,
            sizes=self.sizes,
            fr_kernel=dict(fr_kernel),
            fr_size=self.fr_size,
        )

    def degenerate(self, kernel_name: str) -> "WorkloadSpec":
        """All kernel weight on ``kernel_name``, size weights unchanged."""
        if kernel_name not in {k.name for k in self.kernels}:
            raise KeyError(kernel_name)
        return self.with_kernel_weights(
            {k.name: (1.0 if k.name == kernel_name else 0.0) for k in self.kernels}
        )

    def instances(self) -> Iterator[tuple[StencilKernel, ProblemSize, float]]:
        """Yield (kernel, size, combined weight) in canonical order."""
        for k in self.kernels:
            fk = self.fr_kernel[k.name]
            for sz, fs in zip(self.sizes[k.name], self.fr_size[k.name]):
                yield k, sz, fk * fs


def default_workload(
    c_iter: float | Mapping[str, float] | None = None,
    flops_overrides: Mapping[str, int] | None = None,
) -> WorkloadSpec:
    """The six bundled kernels with uniform weights over the default sizes.

    Without an explicit ``c_iter``, each kernel gets 0.2 ns per flop, i.e.
    ``c_iter = 2e-10 * flops_per_point`` seconds; real deployments should
    measure this per kernel and pass it in.
    """
    kernels = []
    for name, (dims, fpp) in DEFAULT_KERNEL_TABLE.items():
        if flops_overrides and name in flops_overrides:
            fpp = flops_overrides[name]
        if c_iter is None:
            ci = 2e-10 * fpp
        elif isinstance(c_iter, Mapping):
            ci = c_iter[name]
        else:
            ci = float(c_iter)
        kernels.append(
            StencilKernel(
                name=name, dims=dims, order=1, n_arrays=2,
                flops_per_point=fpp, bytes_per_elem=4, c_iter=ci,
            )
        )
    return WorkloadSpec.uniform(kernels)


def _parse_size_entry(entry: dict, dims: int, where: str) -> ProblemSize:
    if "s" in entry:
        s = int(entry["s"])
        t = int(entry["t"])
        return ProblemSize(s1=s, s2=s, t=t, s3=s if dims == 3 else None)
    try:
        s1, s2, t = int(entry["s1"]), int(entry["s2"]), int(entry["t"])
    except KeyError as exc:
        raise ValueError(f"{where}: size entry needs 's' or 's1'/'s2'/'t', got {entry!r}") from exc
    s3 = entry.get("s3")
    if dims == 3:
        if s3 is None:
            raise ValueError(f"{where}: 3D kernel needs 's3' in explicit size {entry!r}")
        s3 = int(s3)
    elif s3 is not None:
        raise ValueError(f"{where}: 2D kernel cannot take 's3' in size {entry!r}")
    return ProblemSize(s1=s1, s2=s2, t=t, s3=s3)


def load_workload(source: str | Path | dict) -> WorkloadSpec:
    """Parse a workload document (path, or an already-decoded dict)."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    else:
        doc = source
    if not isinstance(doc, dict) or "kernels" not in doc:
        raise ValueError("workload document must be an object with a 'kernels' list")

    kernels = tuple(StencilKernel.from_dict(d) for d in doc["kernels"])

    sizes_doc = doc.get("sizes", "default")
    size_map: dict[str, tuple[ProblemSize, ...]] = {}
    for k in kernels:
        if sizes_doc == "default":
            size_map[k.name] = tuple(default_size_set(k.dims))
        elif isinstance(sizes_doc, list):
            size_map[k.name] = tuple(
                _parse_size_entry(e, k.dims, f"sizes[{i}]") for i, e in enumerate(sizes_doc)
            )
        elif isinstance(sizes_doc, dict):
            if k.name not in sizes_doc:
                raise ValueError(f"sizes: no entry for kernel {k.name!r}")
            size_map[k.name] = tuple(
                _parse_size_entry(e, k.dims, f"sizes[{k.name!r}][{i}]")
                for i, e in enumerate(sizes_doc[k.name])
            )
        else:
            raise ValueError("'sizes' must be 'default', a list, or a per-kernel object")

    freq_doc = doc.get("frequencies", "uniform")
    if freq_doc == "uniform":
        return WorkloadSpec.uniform(kernels, size_map)
    if not isinstance(freq_doc, dict):
        raise ValueError("'frequencies' must be 'uniform' or an object")
    fr_kernel = {str(n): float(w) for n, w in freq_doc.get("kernel", {}).items()}
    if not fr_kernel:
        fr_kernel = {k.name: 1.0 / len(kernels) for k in kernels}
    size_freq_doc = freq_doc.get("size", {})
    fr_size = {}
    for k in kernels:
        if k.name in size_freq_doc:
            fr_size[k.name] = tuple(float(w) for w in size_freq_doc[k.name])
        else:
            n = len(size_map[k.name])
            fr_size[k.name] = tuple(1.0 / n for _ in range(n))
    return WorkloadSpec(kernels=kernels, sizes=size_map, fr_kernel=fr_kernel, fr_size=fr_size)
