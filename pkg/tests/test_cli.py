import json
from pathlib import Path

import pytest

from archsweep.cli import main

SMALL_WORKLOAD = {
    "kernels": [
        {"name": "Jacobi-2D", "dims": 2, "order": 1, "n_arrays": 2,
         "flops_per_point": 5, "bytes_per_elem": 4, "c_iter": 1e-9},
        {"name": "Heat-3D", "dims": 3, "order": 1, "n_arrays": 2,
         "flops_per_point": 14, "bytes_per_elem": 4, "c_iter": 2.8e-9},
    ],
    "sizes": [{"s": 64, "t": 8}, {"s": 128, "t": 16}],
    "frequencies": "uniform",
}


def _small_config(tmp_path, **overrides):
    (tmp_path / "wl.json").write_text(json.dumps(SMALL_WORKLOAD))
    cfg = {
        "workload": "wl.json",
        "space": {
            "sm_counts": [2, 4],
            "vector_units": [32, 64],
            "shared_kb": [24, 48],
            "budget": [0, 10000],
        },
        "bounds": {
            "space1": [2, 16, 2],
            "space2": [32, 64, 32],
            "space3": [1, 8, 1],
            "time": [2, 8, 2],
        },
        "output_dir": "out",
        "jobs": 1,
    }
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def test_calibrate_collinear_csv(tmp_path, capsys):
    csv_path = tmp_path / "shared.csv"
    rows = [(s, 0.01565 * s + 0.09281) for s in (24, 48, 96, 192, 384)]
    csv_path.write_text("size_kB,area_mm2\n" + "\n".join(f"{s},{a}" for s, a in rows) + "\n")
    out_json = tmp_path / "fit.json"
    rc = main(["calibrate", "--memory-type", "shared", "--input", str(csv_path),
               "--output", str(out_json)])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["memory_type"] == "shared"
    assert doc["beta"] == pytest.approx(0.01565, rel=1e-9)
    assert doc["alpha"] == pytest.approx(0.09281, rel=1e-9)
    assert doc["r_squared"] == pytest.approx(1.0, abs=1e-12)
    assert json.loads(out_json.read_text()) == doc


def test_calibrate_degenerate_exits_2(tmp_path, capsys):
    csv_path = tmp_path / "one.csv"
    csv_path.write_text("size_kB,area_mm2\n24,0.5\n")
    rc = main(["calibrate", "--memory-type", "reg", "--input", str(csv_path)])
    assert rc == 2
    assert "degenerate" in capsys.readouterr().err.lower()


def test_calibrate_missing_file_exits_1(tmp_path, capsys):
    rc = main(["calibrate", "--memory-type", "l1", "--input", str(tmp_path / "nope.csv")])
    assert rc == 1
    assert "error" in capsys.readouterr().err.lower()


def test_area_reference_chip(capsys):
    rc = main(["area", "--n-sm", "16", "--n-v", "128", "--r-vu", "2",
               "--m-sm", "96", "--l1", "48", "--l2", "2048"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "total_area_mm2: 397.99" in out
    assert "l2: 85.9546" in out


def test_area_zero_memories(capsys):
    rc = main(["area", "--n-sm", "2", "--n-v", "32"])
    assert rc == 0
    # exact value 17.500948 at six significant digits
    assert "total_area_mm2: 17.5009" in capsys.readouterr().out


def test_area_titanx(capsys):
    rc = main(["area", "--n-sm", "24", "--n-v", "128", "--r-vu", "2",
               "--m-sm", "96", "--l1", "48", "--l2", "3072"])
    assert rc == 0
    assert "total_area_mm2: 596.984" in capsys.readouterr().out


def test_area_invalid_config_exits_1(capsys):
    rc = main(["area", "--n-sm", "3", "--n-v", "128"])
    assert rc == 1


def test_optimize_tiles_json_output(capsys):
    rc = main([
        "optimize-tiles", "--kernel", "Jacobi-2D", "--size", "64,8",
        "--n-sm", "2", "--n-v", "32", "--m-sm", "48",
        "--tile-s1", "2:16:2", "--tile-s2", "32:64:32", "--tile-time", "2:8:2",
    ])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["feasible"] is True
    assert doc["tile"]["space2"] % 32 == 0
    assert doc["time_s"] > 0
    assert doc["k"] >= 1


def test_optimize_tiles_unknown_kernel(capsys):
    rc = main(["optimize-tiles", "--kernel", "nope", "--size", "64,8",
               "--n-sm", "2", "--n-v", "32", "--m-sm", "48"])
    assert rc == 1


def test_explore_writes_reports_and_is_idempotent(tmp_path, capsys):
    cfg = _small_config(tmp_path)
    rc = main(["explore", "--config", str(cfg)])
    assert rc == 0
    first_out = capsys.readouterr().out
    assert "new solves: 40" in first_out  # (8 grid + 2 baselines) x 4 instances
    out_dir = tmp_path / "out"
    points = (out_dir / "points.csv").read_text()
    frontier = (out_dir / "frontier.csv").read_text()
    baselines = (out_dir / "baselines.csv").read_text()
    assert points.splitlines()[0] == "area_mm2,gflops,n_SM,n_V,M_SM,pareto_flag"
    assert len(points.splitlines()) == 9  # header + 8 designs
    assert len(frontier.splitlines()) >= 2
    assert len(baselines.splitlines()) == 5  # header + 4 rows
    assert "GTX980-cacheless" in baselines

    rc = main(["explore", "--config", str(cfg)])
    assert rc == 0
    second_out = capsys.readouterr().out
    assert "new solves: 0" in second_out
    # byte-stable reports on identical inputs
    assert (out_dir / "points.csv").read_text() == points
    assert (out_dir / "frontier.csv").read_text() == frontier
    assert (out_dir / "baselines.csv").read_text() == baselines


def test_explore_frontier_matches_joint_brute_force(tmp_path, capsys):
    cfg = _small_config(tmp_path)
    assert main(["explore", "--config", str(cfg)]) == 0
    capsys.readouterr()
    frontier_rows = (tmp_path / "out" / "frontier.csv").read_text().strip().splitlines()[1:]

    from archsweep import (
        MAXWELL,
        HardwareSpace,
        MachineConstants,
        TileSearchBounds,
        instance_flops,
        load_workload,
    )
    from archsweep.explorer import enumerate_hardware
    from oracles import exhaustive_best, pareto_naive

    workload = load_workload(tmp_path / "wl.json")
    space = HardwareSpace(
        sm_counts=(2, 4), vector_units=(32, 64), shared_kb=(24, 48),
        budget=(0.0, 10_000.0),
    )
    bounds = TileSearchBounds(space1=(2, 16, 2), space2=(32, 64, 32),
                              space3=(1, 8, 1), time=(2, 8, 2))
    mc = MachineConstants()
    evaluated = []
    for hw, area in enumerate_hardware(space, MAXWELL):
        wt, wf = 0.0, 0.0
        for kern, size, w in workload.instances():
            best = exhaustive_best(kern, size, hw, mc, bounds)
            wt += w * best[0]
            wf += w * instance_flops(kern, size)
        evaluated.append((hw, area, wf / wt / 1e9))
    oracle_front = pareto_naive([(area, gf) for _, area, gf in evaluated])
    by_pair = {(area, gf): hw for hw, area, gf in evaluated}

    assert len(frontier_rows) == len(oracle_front)
    for row, pair in zip(frontier_rows, oracle_front):
        hw = by_pair[pair]
        expected = ",".join([
            f"{pair[0]:.6g}", f"{pair[1]:.6g}",
            str(hw.sm_count), str(hw.vector_units), f"{hw.shared_kb:.6g}", "1",
        ])
        assert row == expected


def test_explore_empty_budget_writes_headers(tmp_path, capsys):
    cfg = _small_config(tmp_path, space={"sm_counts": [2], "vector_units": [32],
                                         "shared_kb": [24], "budget": [0, 0]})
    rc = main(["explore", "--config", str(cfg)])
    assert rc == 0
    frontier = (tmp_path / "out" / "frontier.csv").read_text()
    assert frontier == "area_mm2,gflops,n_SM,n_V,M_SM,pareto_flag\n"


def test_explore_bad_config_exits_1(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{\"space\": {\"budget\": [5, 1]}}")
    rc = main(["explore", "--config", str(path)])
    assert rc == 1
    assert "bad config" in capsys.readouterr().err


def test_pareto_sensitivity_resources_read_store_only(tmp_path, capsys):
    cfg = _small_config(tmp_path)
    assert main(["explore", "--config", str(cfg)]) == 0
    capsys.readouterr()

    frontier_before = (tmp_path / "out" / "frontier.csv").read_text()
    store_before = (tmp_path / "out" / "store.ndjson").read_text()

    assert main(["pareto", "--config", str(cfg)]) == 0
    assert "0 new solves" in capsys.readouterr().out
    assert (tmp_path / "out" / "frontier.csv").read_text() == frontier_before

    assert main(["sensitivity", "--config", str(cfg)]) == 0
    sens = (tmp_path / "out" / "sensitivity.csv").read_text()
    assert sens.splitlines()[0] == "kernel,area_mm2,gflops,n_SM,n_V,M_SM,weighted_time_s"
    assert len(sens.splitlines()) == 3  # header + one row per kernel

    assert main(["resources", "--config", str(cfg)]) == 0
    res = (tmp_path / "out" / "resources.csv").read_text()
    assert res.splitlines()[0] == (
        "area_mm2,n_SM,n_V,M_SM,memory_share,vector_share,overhead_share,pareto_flag"
    )
    assert len(res.splitlines()) == 9

    # none of the read-only commands touched the store
    assert (tmp_path / "out" / "store.ndjson").read_text() == store_before


def test_sensitivity_single_kernel_flag(tmp_path, capsys):
    cfg = _small_config(tmp_path)
    assert main(["explore", "--config", str(cfg)]) == 0
    capsys.readouterr()
    assert main(["sensitivity", "--config", str(cfg), "--kernel", "Heat-3D"]) == 0
    out = capsys.readouterr().out
    assert "Heat-3D" in out and "Jacobi-2D" not in out


def test_pareto_without_store_exits_1(tmp_path, capsys):
    cfg = _small_config(tmp_path, store=None)
    rc = main(["pareto", "--config", str(cfg)])
    assert rc == 1


def test_output_dir_env_var(tmp_path, monkeypatch, capsys):
    cfg_doc = {
        "workload": "wl.json",
        "space": {"sm_counts": [2], "vector_units": [32], "shared_kb": [24],
                  "budget": [0, 10000]},
        "bounds": {"space1": [2, 8, 2], "space2": [32, 32, 32],
                   "space3": [1, 4, 1], "time": [2, 4, 2]},
    }
    (tmp_path / "wl.json").write_text(json.dumps(SMALL_WORKLOAD))
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(cfg_doc))
    env_out = tmp_path / "env-out"
    monkeypatch.setenv("ARCHSWEEP_OUTPUT_DIR", str(env_out))
    assert main(["explore", "--config", str(cfg)]) == 0
    assert (env_out / "points.csv").exists()
