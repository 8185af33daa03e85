"""Command-line interface tests.

Every run is exercised in process through main(argv) with an --out directory
under tmp_path. Checks cover exit codes (0 success, 2 usage, 3 numeric),
output file schemas, manifest provenance, and byte-level determinism of the
data files across reruns of the same config and seed.
"""

from __future__ import annotations

import csv
import json
import re
from pathlib import Path

import numpy as np
import pytest

import vrjp
from vrjp import WeightedGraph, save_graph
from vrjp.cli import NUMERIC_EXIT, USAGE_EXIT, main


def read_csv(path: Path) -> list[dict]:
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def read_json(path: Path) -> dict:
    return json.loads(path.read_text())


@pytest.fixture
def graph_file(tmp_path) -> Path:
    g = WeightedGraph(n=3, edges=((0, 1, 1.0), (1, 2, 1.5), (0, 2, 0.5)))
    path = tmp_path / "triangle.json"
    save_graph(g, str(path))
    return path


class TestSampleBeta:
    def test_box_run_writes_positive_samples(self, tmp_path):
        out = tmp_path / "run"
        rc = main(
            ["sample-beta", "--dim", "1", "--radius", "1", "--n", "50",
             "--seed", "5", "--out", str(out)]
        )
        assert rc == 0
        rows = read_csv(out / "beta.csv")
        assert len(rows) == 50
        assert list(rows[0]) == ["beta_0", "beta_1", "beta_2"]
        values = np.array([[float(v) for v in r.values()] for r in rows])
        assert np.all(values > 0)

    def test_graph_file_run(self, tmp_path, graph_file):
        out = tmp_path / "run"
        rc = main(
            ["sample-beta", "--graph", str(graph_file), "--n", "10",
             "--eta", "1.0", "--seed", "2", "--out", str(out)]
        )
        assert rc == 0
        rows = read_csv(out / "beta.csv")
        assert len(rows) == 10
        assert list(rows[0]) == ["beta_0", "beta_1", "beta_2"]

    def test_rerun_is_byte_identical(self, tmp_path):
        args = ["sample-beta", "--dim", "2", "--radius", "1", "--n", "20",
                "--seed", "11"]
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert (out1 / "beta.csv").read_bytes() == (out2 / "beta.csv").read_bytes()

    def test_needs_graph_or_box(self, tmp_path):
        rc = main(["sample-beta", "--n", "5", "--out", str(tmp_path / "x")])
        assert rc == USAGE_EXIT


class TestGreen:
    def test_default_box_outputs(self, tmp_path):
        out = tmp_path / "run"
        rc = main(["green", "--seed", "3", "--out", str(out)])
        assert rc == 0
        rows = read_csv(out / "green.csv")
        # dim 2, radius 1: nine retained vertices plus the boundary state
        assert len(rows) == 10
        assert rows[-1]["vertex"] == "delta"
        assert list(rows[0]) == ["vertex", "beta", "psi", "u", "green_root_row"]
        psis = np.array([float(r["psi"]) for r in rows])
        assert np.all(psis > 0)
        assert float(rows[-1]["psi"]) == 1.0

    def test_summary_reports_bundle_and_residuals(self, tmp_path):
        out = tmp_path / "run"
        assert main(["green", "--seed", "3", "--out", str(out)]) == 0
        summary = read_json(out / "summary.json")
        assert summary["command"] == "green"
        assert summary["gamma"] > 0
        assert len(summary["psi"]) == 9
        assert len(summary["hat_g_diagonal"]) == 9
        assert summary["max_residual"] < 1e-9
        assert set(summary["residuals"]) == {
            "hg_block", "full_inverse", "harmonic", "beta_reconstruction",
            "cauchy_schwarz", "gcheck_min_violation", "telescoping",
        }

    def test_root_must_be_retained(self, tmp_path):
        rc = main(
            ["green", "--i0", "1000000", "--seed", "3",
             "--out", str(tmp_path / "x")]
        )
        assert rc == USAGE_EXIT


class TestSimulateVrjp:
    def test_trajectory_schema(self, tmp_path, graph_file):
        out = tmp_path / "run"
        rc = main(
            ["simulate", "--process", "vrjp", "--graph", str(graph_file),
             "--horizon", "10", "--seed", "1", "--out", str(out)]
        )
        assert rc == 0
        rows = read_csv(out / "trajectory.csv")
        assert list(rows[0]) == ["step", "vertex", "entry_time",
                                 "transformed_time"]
        assert rows[0]["vertex"] == "0"
        assert float(rows[0]["entry_time"]) == 0.0
        entry = np.array([float(r["entry_time"]) for r in rows])
        trans = np.array([float(r["transformed_time"]) for r in rows])
        assert np.all(np.diff(entry) > 0)
        assert np.all(np.diff(trans) > 0)
        # transformed clocks run strictly ahead once local time accrues
        assert np.all(trans[1:] > entry[1:])

    def test_rerun_is_byte_identical(self, tmp_path, graph_file):
        args = ["simulate", "--process", "vrjp", "--graph", str(graph_file),
                "--horizon", "10", "--seed", "1"]
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert (out1 / "trajectory.csv").read_bytes() == (
            out2 / "trajectory.csv"
        ).read_bytes()

    def test_seed_changes_trajectory(self, tmp_path, graph_file):
        outs = []
        for seed in ("1", "2"):
            out = tmp_path / seed
            rc = main(
                ["simulate", "--process", "vrjp", "--graph", str(graph_file),
                 "--horizon", "10", "--seed", seed, "--out", str(out)]
            )
            assert rc == 0
            outs.append((out / "trajectory.csv").read_bytes())
        assert outs[0] != outs[1]

    def test_horizon_required(self, tmp_path, graph_file):
        rc = main(
            ["simulate", "--process", "vrjp", "--graph", str(graph_file),
             "--out", str(tmp_path / "x")]
        )
        assert rc == USAGE_EXIT


class TestSimulateErrw:
    def test_trajectory_schema(self, tmp_path, graph_file):
        out = tmp_path / "run"
        rc = main(
            ["simulate", "--process", "errw", "--graph", str(graph_file),
             "--steps", "25", "--a", "2.0", "--seed", "4", "--out", str(out)]
        )
        assert rc == 0
        rows = read_csv(out / "trajectory.csv")
        assert len(rows) == 26
        assert list(rows[0]) == ["step", "vertex", "entry_time"]
        assert all(r["entry_time"] == "" for r in rows)
        verts = [int(r["vertex"]) for r in rows]
        assert verts[0] == 0
        assert all(0 <= v <= 2 for v in verts)

    def test_steps_required(self, tmp_path, graph_file):
        rc = main(
            ["simulate", "--process", "errw", "--graph", str(graph_file),
             "--out", str(tmp_path / "x")]
        )
        assert rc == USAGE_EXIT


class TestSimulateQuenched:
    def test_wired_box_trajectory(self, tmp_path):
        out = tmp_path / "run"
        rc = main(
            ["simulate", "--process", "quenched", "--dim", "1", "--radius",
             "1", "--steps", "40", "--seed", "2", "--out", str(out)]
        )
        assert rc == 0
        rows = read_csv(out / "trajectory.csv")
        assert len(rows) == 41
        assert list(rows[0]) == ["step", "vertex", "entry_time"]
        assert all(r["entry_time"] == "" for r in rows)
        labels = {r["vertex"] for r in rows}
        assert labels <= {"0", "1", "2", "3", "4", "delta"}

    def test_rejects_graph_file(self, tmp_path, graph_file):
        rc = main(
            ["simulate", "--process", "quenched", "--graph", str(graph_file),
             "--steps", "10", "--out", str(tmp_path / "x")]
        )
        assert rc == USAGE_EXIT

    def test_steps_required(self, tmp_path):
        rc = main(
            ["simulate", "--process", "quenched", "--dim", "1", "--radius",
             "1", "--out", str(tmp_path / "x")]
        )
        assert rc == USAGE_EXIT


@pytest.fixture(scope="module")
def quick_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("verify")
    rc = main(["verify", "--quick", "--seed", "7", "--out", str(out)])
    return rc, out


class TestVerifyCommand:
    def test_quick_tier_passes(self, quick_run):
        rc, out = quick_run
        assert rc == 0
        rows = read_csv(out / "verify.csv")
        assert len(rows) == 13
        assert [int(r["criterion"]) for r in rows] == list(range(1, 14))
        assert all(r["status"] in ("PASS", "DIAG") for r in rows)

    def test_identity_residuals_listed(self, quick_run):
        _, out = quick_run
        detail = read_csv(out / "verify.csv")[0]["detail"]
        residuals = re.findall(r"(\w+) (\d\.\d{2}e[+-]\d{2})", detail)
        assert {name for name, _ in residuals} == {
            "hg_block", "full_inverse", "harmonic", "beta_reconstruction",
            "cauchy_schwarz", "gcheck_min_violation", "telescoping",
        }
        assert all(float(v) <= 1e-9 for _, v in residuals)

    def test_summary_and_manifest(self, quick_run):
        rc, out = quick_run
        summary = read_json(out / "summary.json")
        assert summary["command"] == "verify"
        assert summary["tier"] == "quick"
        assert len(summary["rows"]) == 13
        manifest = read_json(out / "manifest.json")
        assert manifest["command"] == "verify"
        assert manifest["seed"] == 7
        assert sorted(manifest["outputs"]) == ["summary.json", "verify.csv"]

    def test_only_subset(self, tmp_path):
        out = tmp_path / "run"
        rc = main(
            ["verify", "--only", "1,4", "--seed", "7", "--out", str(out)]
        )
        assert rc == 0
        rows = read_csv(out / "verify.csv")
        assert [int(r["criterion"]) for r in rows] == [1, 4]

    def test_only_rerun_is_byte_identical(self, tmp_path):
        args = ["verify", "--only", "1", "--seed", "7"]
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert (out1 / "verify.csv").read_bytes() == (
            out2 / "verify.csv"
        ).read_bytes()

    def test_unknown_criterion_id(self, tmp_path):
        rc = main(["verify", "--only", "99", "--out", str(tmp_path / "x")])
        assert rc == USAGE_EXIT


class TestExperimentCommand:
    def test_named_experiment(self, tmp_path):
        out = tmp_path / "run"
        rc = main(
            ["experiment", "--name", "conductance-ratio", "--seed", "6",
             "--out", str(out)]
        )
        assert rc == 0
        rows = read_csv(out / "experiment.csv")
        assert list(rows[0]) == ["ell", "mean", "stderr", "n"]
        summary = read_json(out / "summary.json")
        assert summary["command"] == "experiment"
        assert summary["config"]["experiment"] == "conductance-ratio"

    def test_config_file_run(self, tmp_path):
        cfg = {"experiment": "psi-decay", "dim": 2, "w": 0.2,
               "radii": [2, 3], "n_samples": 8, "seed": 9}
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        out = tmp_path / "run"
        rc = main(
            ["experiment", "--config", str(cfg_path), "--out", str(out)]
        )
        assert rc == 0
        rows = read_csv(out / "experiment.csv")
        assert [int(r["radius"]) for r in rows] == [2, 3]
        med = [float(r["median"]) for r in rows]
        assert med[1] < med[0]

    def test_unknown_config_key(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"experiment": "psi-decay", "bogus": 1}))
        rc = main(
            ["experiment", "--config", str(cfg_path),
             "--out", str(tmp_path / "x")]
        )
        assert rc == USAGE_EXIT

    def test_unknown_name_rejected_by_parser(self, tmp_path):
        rc = main(
            ["experiment", "--name", "nope", "--out", str(tmp_path / "x")]
        )
        assert rc == USAGE_EXIT

    def test_needs_config_or_name(self, tmp_path):
        rc = main(["experiment", "--out", str(tmp_path / "x")])
        assert rc == USAGE_EXIT


class TestManifest:
    def test_fields_and_hash_stability(self, tmp_path, graph_file):
        args = ["simulate", "--process", "errw", "--graph", str(graph_file),
                "--steps", "5", "--seed", "3"]
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        m1, m2 = read_json(out1 / "manifest.json"), read_json(out2 / "manifest.json")
        assert m1["command"] == "simulate"
        assert m1["version"] == vrjp.__version__
        assert m1["seed"] == 3
        assert m1["outputs"] == ["trajectory.csv"]
        assert len(m1["content_hash"]) == 64
        assert int(m1["content_hash"], 16) >= 0
        # timestamps are the only varying fields across reruns
        for key in ("started", "finished"):
            m1.pop(key), m2.pop(key)
        assert m1 == m2

    def test_hash_tracks_input_file_bytes(self, tmp_path):
        g1 = WeightedGraph(n=2, edges=((0, 1, 1.0),))
        g2 = WeightedGraph(n=2, edges=((0, 1, 2.0),))
        hashes = []
        for k, g in enumerate((g1, g2)):
            path = tmp_path / f"g{k}" / "pair.json"
            path.parent.mkdir()
            save_graph(g, str(path))
            out = tmp_path / f"out{k}"
            # identical config dicts except for the referenced file's bytes
            rc = main(
                ["simulate", "--process", "errw", "--graph",
                 str(path.parent / "pair.json"), "--steps", "4",
                 "--seed", "1", "--out", str(out)]
            )
            assert rc == 0
            hashes.append(read_json(out / "manifest.json")["content_hash"])
        assert hashes[0] != hashes[1]

    def test_hash_tracks_seed(self, tmp_path):
        hashes = []
        for seed in ("1", "2"):
            out = tmp_path / seed
            assert main(
                ["sample-beta", "--dim", "1", "--radius", "1", "--n", "5",
                 "--seed", seed, "--out", str(out)]
            ) == 0
            hashes.append(read_json(out / "manifest.json")["content_hash"])
        assert hashes[0] != hashes[1]


class TestExitCodes:
    def test_no_arguments_is_usage_error(self):
        assert main([]) == USAGE_EXIT

    def test_help_exits_zero(self):
        assert main(["--help"]) == 0

    def test_version_exits_zero(self):
        assert main(["--version"]) == 0

    def test_missing_graph_file(self, tmp_path):
        rc = main(
            ["simulate", "--process", "errw", "--graph",
             str(tmp_path / "absent.json"), "--steps", "5",
             "--out", str(tmp_path / "x")]
        )
        assert rc == USAGE_EXIT

    def test_malformed_graph_file(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("not json at all")
        rc = main(
            ["simulate", "--process", "errw", "--graph", str(bad),
             "--steps", "5", "--out", str(tmp_path / "x")]
        )
        assert rc == USAGE_EXIT

    def test_unknown_process_rejected_by_parser(self, tmp_path):
        rc = main(
            ["simulate", "--process", "walk", "--out", str(tmp_path / "x")]
        )
        assert rc == USAGE_EXIT

    def test_numeric_exit_is_distinct(self):
        assert NUMERIC_EXIT == 3
        assert USAGE_EXIT == 2


class TestOutputDirectory:
    def test_env_var_fallback(self, tmp_path, monkeypatch):
        target = tmp_path / "from-env"
        monkeypatch.setenv("VRJP_OUT", str(target))
        rc = main(
            ["sample-beta", "--dim", "1", "--radius", "1", "--n", "3",
             "--seed", "1"]
        )
        assert rc == 0
        assert (target / "beta.csv").exists()

    def test_flag_beats_env_var(self, tmp_path, monkeypatch):
        monkeypatch.setenv("VRJP_OUT", str(tmp_path / "ignored"))
        out = tmp_path / "explicit"
        rc = main(
            ["sample-beta", "--dim", "1", "--radius", "1", "--n", "3",
             "--seed", "1", "--out", str(out)]
        )
        assert rc == 0
        assert (out / "beta.csv").exists()
        assert not (tmp_path / "ignored").exists()

    def test_default_directory(self, tmp_path, monkeypatch):
        monkeypatch.delenv("VRJP_OUT", raising=False)
        monkeypatch.chdir(tmp_path)
        rc = main(
            ["sample-beta", "--dim", "1", "--radius", "1", "--n", "3",
             "--seed", "1"]
        )
        assert rc == 0
        assert (tmp_path / "vrjp-out" / "beta.csv").exists()
