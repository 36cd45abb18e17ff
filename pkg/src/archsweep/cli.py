"""Command-line front end.

Subcommands: ``calibrate``, ``area``, ``optimize-tiles``, ``explore``,
``pareto``, ``sensitivity``, ``resources``.  Exploration runs are described
by a JSON config file::

    {
      "workload": "default",        // or a workload-file path
      "space": { ... },             // HardwareSpace overrides, incl. "budget"
      "machine": { ... },           // MachineConstants overrides
      "bounds": { ... },            // TileSearchBounds overrides
      "coefficients": null,         // path to a coefficient JSON, default embedded
      "output_dir": "out",
      "store": "store.ndjson",      // relative to output_dir; null disables caching
      "jobs": 1,
      "seed": 0
    }

Relative paths are resolved against the config file's directory.  The default
output directory may also be set via the ``ARCHSWEEP_OUTPUT_DIR`` environment
variable.  All numeric report output is fixed at 6 significant digits so that
repeated runs produce byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .area import (
    MAXWELL,
    AreaCoefficients,
    HardwareConfig,
    area_breakdown,
    load_coefficients,
    total_area,
)
from .calibration import DegenerateSamplesError, fit_linear, read_samples_csv
from .explorer import (
    DesignPoint,
    HardwareSpace,
    baseline_designs,
    explore,
    pareto_frontier,
    points_from_store,
    resource_allocation,
    sensitivity,
)
from .store import ResultsStore
from .timemodel import MachineConstants
from .tiles import TileSearchBounds, optimize_tiles
from .workload import ProblemSize, WorkloadSpec, default_workload, load_workload

OUTPUT_DIR_ENV = "ARCHSWEEP_OUTPUT_DIR"

POINT_COLUMNS = ("area_mm2", "gflops", "n_SM", "n_V", "M_SM", "pareto_flag")


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


@dataclass
class RunConfig:
    workload: WorkloadSpec
    space: HardwareSpace
    machine: MachineConstants
    bounds: TileSearchBounds
    coeffs: AreaCoefficients
    output_dir: Path
    store_path: Path | None
    jobs: int
    seed: int


def load_run_config(path: str | Path, *, output_dir: str | None = None,
                    jobs: int | None = None) -> RunConfig:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    base = path.parent

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    wl = doc.get("workload", "default")
    workload = default_workload() if wl == "default" else load_workload(resolve(wl))

    space = HardwareSpace.from_dict(doc.get("space", {}))
    machine = MachineConstants.from_dict(doc.get("machine", {})) if doc.get("machine") else MachineConstants()
    bounds = TileSearchBounds.from_dict(doc.get("bounds", {})) if doc.get("bounds") else TileSearchBounds()
    coeffs = load_coefficients(resolve(doc["coefficients"])) if doc.get("coefficients") else MAXWELL

    out = output_dir or doc.get("output_dir") or os.environ.get(OUTPUT_DIR_ENV) or "out"
    out_path = Path(out) if Path(out).is_absolute() else resolve(out)

    store_doc = doc.get("store", "store.ndjson")
    if store_doc is None:
        store_path = None
    else:
        sp = Path(store_doc)
        store_path = sp if sp.is_absolute() else out_path / sp

    effective_jobs = jobs if jobs is not None else int(doc.get("jobs", 1))
    if effective_jobs < 1:
        raise ValueError("jobs must be >= 1")
    return RunConfig(
        workload=workload,
        space=space,
        machine=machine,
        bounds=bounds,
        coeffs=coeffs,
        output_dir=out_path,
        store_path=store_path,
        jobs=effective_jobs,
        seed=int(doc.get("seed", 0)),
    )


def _write_csv(path: Path, header: tuple[str, ...], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(c) for c in row])


def _point_rows(points: list[DesignPoint], frontier: list[DesignPoint]):
    frontier_hw = {p.hw for p in frontier}
    for p in points:
        if not p.feasible:
            continue
        yield (
            p.area_mm2,
            p.gflops,
            p.hw.sm_count,
            p.hw.vector_units,
            p.hw.shared_kb,
            1 if p.hw in frontier_hw else 0,
        )


def cmd_calibrate(args) -> int:
    try:
        samples = read_samples_csv(args.input)
        fit = fit_linear(samples)
    except DegenerateSamplesError as exc:
        print(f"error: degenerate samples: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    doc = {"memory_type": args.memory_type, **fit.to_dict()}
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def cmd_area(args) -> int:
    try:
        coeffs = load_coefficients(args.coeffs) if args.coeffs else MAXWELL
        hw = HardwareConfig(
            sm_count=args.n_sm,
            vector_units=args.n_v,
            shared_kb=args.m_sm,
            regfile_kb=args.r_vu,
            l1_kb=args.l1,
            l2_kb=args.l2,
        )
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    total = total_area(hw, coeffs)
    print(f"total_area_mm2: {_fmt(total)}")
    for name, value in area_breakdown(hw, coeffs).items():
        print(f"{name}: {_fmt(value)}")
    return 0


def _parse_size(spec: str, dims: int) -> ProblemSize:
    parts = [int(p) for p in spec.split(",")]
    if len(parts) == 2:
        s, t = parts
        return ProblemSize(s1=s, s2=s, t=t, s3=s if dims == 3 else None)
    if len(parts) == 3:
        if dims != 2:
            raise ValueError("3D kernel needs 'S,T' or 'S1,S2,S3,T'")
        return ProblemSize(s1=parts[0], s2=parts[1], t=parts[2])
    if len(parts) == 4:
        if dims != 3:
            raise ValueError("2D kernel takes 'S,T' or 'S1,S2,T'")
        return ProblemSize(s1=parts[0], s2=parts[1], s3=parts[2], t=parts[3])
    raise ValueError(f"cannot parse size {spec!r}")


def _parse_range(spec: str) -> tuple[int, int, int]:
    parts = [int(p) for p in spec.split(":")]
    if len(parts) != 3:
        raise ValueError(f"range must be lo:hi:step, got {spec!r}")
    return tuple(parts)  # type: ignore[return-value]


def cmd_optimize_tiles(args) -> int:
    try:
        workload = (
            default_workload() if args.workload == "default" else load_workload(args.workload)
        )
        kern = next((k for k in workload.kernels if k.name == args.kernel), None)
        if kern is None:
            raise ValueError(
                f"kernel {args.kernel!r} not in workload "
                f"({', '.join(k.name for k in workload.kernels)})"
            )
        size = _parse_size(args.size, kern.dims)
        hw = HardwareConfig(
            sm_count=args.n_sm,
            vector_units=args.n_v,
            shared_kb=args.m_sm,
            regfile_kb=args.r_vu,
        )
        mc = MachineConstants(
            warp_size=args.warp_size,
            mtb_sm=args.mtb_sm,
            block_shmem_kb=args.block_shmem_kb,
            bandwidth_gbps=args.bandwidth_gbps,
        )
        b = TileSearchBounds()
        overrides = {}
        for field_name, flag in (
            ("space1", args.tile_s1), ("space2", args.tile_s2),
            ("space3", args.tile_s3), ("time", args.tile_time),
        ):
            if flag:
                overrides[field_name] = _parse_range(flag)
        if overrides:
            b = TileSearchBounds(**{**b.to_dict(), **overrides})  # type: ignore[arg-type]
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    sol = optimize_tiles(kern, size, hw, mc, b)
    doc = {
        "kernel": kern.name,
        "size": size.to_dict(),
        "hw": hw.to_dict(),
        "feasible": sol.feasible,
        "tile": sol.tile.to_dict() if sol.tile else None,
        "k": sol.tile.blocks if sol.tile else None,
        "time_s": sol.time_s,
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def cmd_explore(args) -> int:
    try:
        cfg = load_run_config(args.config, output_dir=args.output_dir, jobs=args.jobs)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: bad config: {exc}", file=sys.stderr)
        return 1
    store = ResultsStore(cfg.store_path) if cfg.store_path else None
    result = explore(
        cfg.space,
        cfg.workload,
        coeffs=cfg.coeffs,
        mc=cfg.machine,
        bounds=cfg.bounds,
        store=store,
        jobs=cfg.jobs,
    )
    base_rows, base_solves, base_hits = baseline_designs(
        cfg.workload, coeffs=cfg.coeffs, mc=cfg.machine, bounds=cfg.bounds, store=store
    )
    out = cfg.output_dir
    _write_csv(out / "points.csv", POINT_COLUMNS, _point_rows(result.points, result.frontier))
    _write_csv(
        out / "frontier.csv", POINT_COLUMNS, _point_rows(result.frontier, result.frontier)
    )
    _write_csv(
        out / "baselines.csv",
        ("name", "area_mm2", "gflops", "n_SM", "n_V", "M_SM", "L1_kB", "L2_kB"),
        (
            (
                name,
                area,
                p.gflops,
                p.hw.sm_count,
                p.hw.vector_units,
                p.hw.shared_kb,
                p.hw.l1_kb if not name.endswith("-cacheless") else 0,
                p.hw.l2_kb if not name.endswith("-cacheless") else 0,
            )
            for name, area, p in base_rows
        ),
    )
    print(f"hardware grid: {cfg.space.grid_size()} points, {len(result.points)} in budget")
    print(f"frontier size: {len(result.frontier)}")
    print(f"new solves: {result.new_solves + base_solves}")
    print(f"cache hits: {result.cache_hits + base_hits}")
    print(f"reports written to {out}")
    return 0


def _rebuild_points(cfg: RunConfig):
    if cfg.store_path is None:
        raise ValueError("this command reads the results store, but the config disables it")
    store = ResultsStore(cfg.store_path)
    if not store.exists():
        raise ValueError(f"results store {cfg.store_path} does not exist; run 'explore' first")
    return points_from_store(
        store, cfg.workload, coeffs=cfg.coeffs, mc=cfg.machine, bounds=cfg.bounds,
        space=cfg.space,
    )


def cmd_pareto(args) -> int:
    try:
        cfg = load_run_config(args.config, output_dir=args.output_dir)
        points = _rebuild_points(cfg)
    except (OSError, ValueError, KeyError, LookupError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    frontier = pareto_frontier(points)
    _write_csv(
        cfg.output_dir / "frontier.csv", POINT_COLUMNS, _point_rows(frontier, frontier)
    )
    print(f"frontier size: {len(frontier)} (from {len(points)} cached designs, 0 new solves)")
    return 0


def cmd_sensitivity(args) -> int:
    try:
        cfg = load_run_config(args.config, output_dir=args.output_dir)
        if cfg.store_path is None:
            raise ValueError("sensitivity reads the results store, but the config disables it")
        store = ResultsStore(cfg.store_path)
        records = list(store.iter_records())
        kernel_names = (
            [args.kernel] if args.kernel else [k.name for k in cfg.workload.kernels]
        )
        rows = []
        for name in kernel_names:
            best = sensitivity(
                records, cfg.workload, name,
                coeffs=cfg.coeffs, mc=cfg.machine, bounds=cfg.bounds, space=cfg.space,
            )
            rows.append(
                (
                    name,
                    best.area_mm2,
                    best.gflops,
                    best.hw.sm_count,
                    best.hw.vector_units,
                    best.hw.shared_kb,
                    best.weighted_time_s,
                )
            )
    except (OSError, ValueError, KeyError, LookupError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    header = ("kernel", "area_mm2", "gflops", "n_SM", "n_V", "M_SM", "weighted_time_s")
    _write_csv(cfg.output_dir / "sensitivity.csv", header, rows)
    print(",".join(header))
    for row in rows:
        print(",".join(_fmt(c) for c in row))
    return 0


def cmd_resources(args) -> int:
    try:
        cfg = load_run_config(args.config, output_dir=args.output_dir)
        points = _rebuild_points(cfg)
    except (OSError, ValueError, KeyError, LookupError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    frontier = pareto_frontier(points)
    frontier_hw = {p.hw for p in frontier}
    shares = resource_allocation(points, cfg.coeffs)
    rows = [
        (
            p.area_mm2,
            p.hw.sm_count,
            p.hw.vector_units,
            p.hw.shared_kb,
            s["memory_share"],
            s["vector_share"],
            s["overhead_share"],
            1 if p.hw in frontier_hw else 0,
        )
        for p, s in zip(points, shares)
        if p.feasible
    ]
    header = (
        "area_mm2", "n_SM", "n_V", "M_SM",
        "memory_share", "vector_share", "overhead_share", "pareto_flag",
    )
    _write_csv(cfg.output_dir / "resources.csv", header, rows)
    print(f"resource shares for {len(rows)} designs written")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="archsweep",
        description="Design-space exploration for stencil accelerators under an area budget.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="fit a linear area model to (size, area) samples")
    p.add_argument("--memory-type", required=True, choices=("reg", "shared", "l1", "l2"))
    p.add_argument("--input", required=True, help="CSV with header size_kB,area_mm2")
    p.add_argument("--output", help="also write the fit JSON here")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("area", help="evaluate the area model for one hardware point")
    p.add_argument("--n-sm", type=int, required=True)
    p.add_argument("--n-v", type=int, required=True)
    p.add_argument("--r-vu", type=float, default=0.0, help="register file kB per vector unit")
    p.add_argument("--m-sm", type=float, default=0.0, help="shared memory kB per SM")
    p.add_argument("--l1", type=float, default=0.0, help="L1 kB per SM pair")
    p.add_argument("--l2", type=float, default=0.0, help="total L2 kB")
    p.add_argument("--coeffs", help="coefficient JSON (default: embedded set)")
    p.set_defaults(func=cmd_area)

    p = sub.add_parser("optimize-tiles", help="optimal tile for one instance")
    p.add_argument("--workload", default="default")
    p.add_argument("--kernel", required=True)
    p.add_argument("--size", required=True, help="'S,T', 'S1,S2,T' or 'S1,S2,S3,T'")
    p.add_argument("--n-sm", type=int, required=True)
    p.add_argument("--n-v", type=int, required=True)
    p.add_argument("--m-sm", type=float, required=True)
    p.add_argument("--r-vu", type=float, default=2.0)
    p.add_argument("--warp-size", type=int, default=32)
    p.add_argument("--mtb-sm", type=int, default=32)
    p.add_argument("--block-shmem-kb", type=float, default=48.0)
    p.add_argument("--bandwidth-gbps", type=float, default=224.0)
    p.add_argument("--tile-s1", help="search range lo:hi:step")
    p.add_argument("--tile-s2", help="search range lo:hi:step")
    p.add_argument("--tile-s3", help="search range lo:hi:step")
    p.add_argument("--tile-time", help="search range lo:hi:step")
    p.set_defaults(func=cmd_optimize_tiles)

    for name, fn, help_text in (
        ("explore", cmd_explore, "run the full design-space exploration"),
        ("pareto", cmd_pareto, "recompute the frontier from the results store"),
        ("sensitivity", cmd_sensitivity, "best cached design per single-kernel workload"),
        ("resources", cmd_resources, "area-share report for all cached designs"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True)
        p.add_argument("--output-dir", help=f"overrides config and ${OUTPUT_DIR_ENV}")
        if name == "explore":
            p.add_argument("--jobs", type=int, help="parallel workers (default from config)")
        if name == "sensitivity":
            p.add_argument("--kernel", help="restrict to one kernel (default: all)")
        p.set_defaults(func=fn)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
