import json
import subprocess
import sys
from fractions import Fraction

import pytest

from semkit.embed_io import read_matrix, write_dataset, write_embeddings
from semkit.filtering import FilterConfig, greedy_filter
from semkit.matan import pca as pca_lib

from conftest import planted_dataset, twelve_item_fixture


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "semkit", *map(str, args)],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


@pytest.fixture
def workspace(tmp_path):
    items, table, _ = twelve_item_fixture()
    dataset = tmp_path / "data.jsonl"
    embeddings = tmp_path / "emb.semb"
    write_dataset(items, dataset)
    write_embeddings(table, embeddings)
    return tmp_path, dataset, embeddings


@pytest.fixture
def near_workspace(tmp_path):
    """All pre-tune distances inside [0, 1], so reweighting is defined."""
    specs = [(f"k{i}", Fraction(i, 8), Fraction(1, 2)) for i in range(1, 9)]
    items, table = planted_dataset(specs)
    dataset = tmp_path / "near.jsonl"
    embeddings = tmp_path / "near.semb"
    write_dataset(items, dataset)
    write_embeddings(table, embeddings)
    return tmp_path, dataset, embeddings


class TestValidate:
    def test_well_formed_pair_exits_zero(self, workspace):
        tmp, dataset, embeddings = workspace
        proc = run_cli("validate", "--dataset", dataset, "--embeddings", embeddings)
        assert proc.returncode == 0
        doc = json.loads(proc.stdout)
        assert doc["summary"]["n_items"] == 12
        assert doc["summary"]["n_embedding_records"] == 36

    def test_missing_reference_exits_one(self, workspace):
        tmp, dataset, embeddings = workspace
        items, table, _ = twelve_item_fixture()
        del table.records["i07#new"]
        broken = tmp / "broken.semb"
        write_embeddings(table, broken)
        proc = run_cli("validate", "--dataset", dataset, "--embeddings", broken)
        assert proc.returncode == 1
        err = json.loads(proc.stderr)
        assert err["error_kind"] == "MissingEmbedding"
        assert "i07#new" in err["detail"]

    def test_corrupt_magic_reports_typed_error(self, workspace):
        tmp, dataset, embeddings = workspace
        corrupt = tmp / "corrupt.semb"
        corrupt.write_bytes(b"XXXX" + embeddings.read_bytes()[4:])
        proc = run_cli("validate", "--embeddings", corrupt)
        assert proc.returncode == 1
        assert json.loads(proc.stderr)["error_kind"] == "MagicMismatch"


class TestUsageErrors:
    def test_no_subcommand_is_usage_error(self):
        assert run_cli().returncode == 2

    def test_unknown_subcommand(self):
        assert run_cli("frobnicate").returncode == 2


class TestReweightCommand:
    def test_gamma_zero_gives_unit_weights(self, near_workspace):
        tmp, dataset, embeddings = near_workspace
        out = tmp / "out"
        proc = run_cli(
            "reweight", "--dataset", dataset, "--embeddings", embeddings,
            "--gamma", "0", "--out-dir", out,
        )
        assert proc.returncode == 0, proc.stderr
        lines = (out / "weights.jsonl").read_text().splitlines()
        assert len(lines) == 8
        assert all(json.loads(line)["weight"] == 1.0 for line in lines)

    def test_out_of_range_distance_is_typed(self, tmp_path):
        items, table = planted_dataset([("a", Fraction(-1, 2), None)])
        dataset, embeddings = tmp_path / "d.jsonl", tmp_path / "e.semb"
        write_dataset(items, dataset)
        write_embeddings(table, embeddings)
        proc = run_cli("reweight", "--dataset", dataset, "--embeddings", embeddings)
        assert proc.returncode == 1
        assert json.loads(proc.stderr)["error_kind"] == "DistanceOutOfRange"


class TestFilterCommand:
    def test_cli_matches_library(self, tmp_path, rng):
        specs = []
        for i in range(16):
            q = int(rng.integers(2, 16))
            p = int(rng.integers(-q + 1, q))
            specs.append((f"{'w' if i < 6 else 'p'}{i:03d}", Fraction(p, q), Fraction(1, 2)))
        items, table = planted_dataset(specs)
        working, pool = items[:6], items[6:]

        d_work, d_pool, emb = (tmp_path / n for n in ("w.jsonl", "p.jsonl", "e.semb"))
        write_dataset(working, d_work)
        write_dataset(pool, d_pool)
        write_embeddings(table, emb)

        cfg = FilterConfig(
            lambda_weight=0.5, mean_min=0.0, mean_max=2.0,
            replace_fraction=1 / 3, seed=0,
        )
        expected = greedy_filter(working, pool, table, cfg)

        out = tmp_path / "out"
        proc = run_cli(
            "filter", "--dataset", d_work, "--pool", d_pool, "--embeddings", emb,
            "--lambda", "0.5", "--mean-min", "0", "--mean-max", "2",
            "--replace-fraction", str(1 / 3), "--out-dir", out,
        )
        assert proc.returncode == 0, proc.stderr
        doc = json.loads((out / "filter_result.json").read_text())
        assert doc["algorithm"] == "greedy"
        assert doc["result"] == expected.to_json_dict()

        filtered_ids = [
            json.loads(line)["id"]
            for line in (out / "filtered.jsonl").read_text().splitlines()
        ]
        assert filtered_ids == expected.final_set

    def test_random_baseline_mode(self, tmp_path):
        specs = [(f"w{i}", Fraction(1, 2), Fraction(1, 2)) for i in range(4)]
        specs += [(f"p{i}", Fraction(3, 4), Fraction(1, 2)) for i in range(4)]
        items, table = planted_dataset(specs)
        d_work, d_pool, emb = (tmp_path / n for n in ("w.jsonl", "p.jsonl", "e.semb"))
        write_dataset(items[:4], d_work)
        write_dataset(items[4:], d_pool)
        write_embeddings(table, emb)
        proc = run_cli(
            "filter", "--dataset", d_work, "--pool", d_pool, "--embeddings", emb,
            "--baseline", "random", "--seed", "7",
        )
        assert proc.returncode == 0, proc.stderr
        doc = json.loads(proc.stdout)
        assert doc["algorithm"] == "random"
        assert len(doc["result"]["swaps"]) == 3


class TestConfigFile:
    def test_config_supplies_values_and_flags_override(self, near_workspace):
        tmp, dataset, embeddings = near_workspace
        config = tmp / "run.json"
        config.write_text(
            json.dumps(
                {
                    "paths": {"dataset": str(dataset), "embeddings": str(embeddings)},
                    "reweight": {"gamma": 2.0},
                }
            )
        )
        proc = run_cli("reweight", "--config", config)
        assert proc.returncode == 0, proc.stderr
        first = json.loads(proc.stdout.splitlines()[0])
        assert first["gamma"] == 2.0

        proc = run_cli("reweight", "--config", config, "--gamma", "3.0")
        first = json.loads(proc.stdout.splitlines()[0])
        assert first["gamma"] == 3.0

    def test_unknown_config_key_rejected(self, workspace):
        tmp, dataset, embeddings = workspace
        config = tmp / "bad.json"
        config.write_text(json.dumps({"reweight": {"gamma": 1.0}, "typo": {}}))
        proc = run_cli("reweight", "--config", config)
        assert proc.returncode == 1
        assert json.loads(proc.stderr)["error_kind"] == "InvalidConfig"

    def test_resolved_config_echoed(self, workspace):
        tmp, dataset, embeddings = workspace
        out = tmp / "out"
        proc = run_cli(
            "score", "--dataset", dataset, "--out-dir", out, "--seed", "5"
        )
        assert proc.returncode == 0
        echoed = json.loads((out / "run_config.json").read_text())
        assert echoed["subcommand"] == "score"
        assert echoed["seed"] == 5
        doc = json.loads((out / "scores.json").read_text())
        assert doc["config"] == echoed


class TestAnalysisCommands:
    def test_score_values(self, workspace):
        tmp, dataset, embeddings = workspace
        proc = run_cli("score", "--dataset", dataset)
        doc = json.loads(proc.stdout)
        assert doc["scores"]["accuracy"] == 5 / 12
        assert doc["scores"]["generality"] == 6 / 9
        assert doc["scores"]["locality"] == 4 / 7

    def test_deviation_summary(self, workspace):
        tmp, dataset, embeddings = workspace
        proc = run_cli("deviation", "--dataset", dataset, "--embeddings", embeddings)
        doc = json.loads(proc.stdout)
        assert doc["summary"]["proportion_all"] == 5 / 12
        assert doc["summary"]["proportion_bad_cases"] == 0.5
        assert len(doc["records"]) == 12

    def test_bin_report_counts(self, workspace):
        tmp, dataset, embeddings = workspace
        proc = run_cli(
            "bin-report", "--dataset", dataset, "--embeddings", embeddings,
            "--bin-width", "0.5",
        )
        doc = json.loads(proc.stdout)
        assert sum(b["n_items"] for b in doc["report"]["bins"]) == 12

    def test_distance_rejects_unknown_pair_from_config(self, workspace):
        tmp, dataset, embeddings = workspace
        config = tmp / "pair.json"
        config.write_text(json.dumps({"distance": {"pair": "bogus"}}))
        proc = run_cli(
            "distance", "--dataset", dataset, "--embeddings", embeddings,
            "--config", config,
        )
        assert proc.returncode == 1
        assert json.loads(proc.stderr)["error_kind"] == "InvalidConfig"

    def test_distance_pairs(self, workspace):
        tmp, dataset, embeddings = workspace
        proc = run_cli(
            "distance", "--dataset", dataset, "--embeddings", embeddings,
            "--pair", "both",
        )
        doc = json.loads(proc.stdout)
        assert len(doc["distances"]) == 12
        assert all(
            "dist_old_target" in d and "dist_new_target" in d
            for d in doc["distances"]
        )


class TestMatrixCommands:
    @pytest.fixture
    def matrices(self, tmp_path, rng):
        import numpy as np

        from semkit.embed_io import DenseMatrix, write_matrix

        w = rng.standard_normal((16, 12)).astype(np.float32)
        dw = (0.1 * rng.standard_normal((16, 12))).astype(np.float32)
        feats = rng.standard_normal((30, 6)).astype(np.float32)
        paths = {}
        for name, values in [("w", w), ("dw", dw), ("feats", feats)]:
            paths[name] = tmp_path / f"{name}.smat"
            write_matrix(DenseMatrix(values), paths[name])
        return tmp_path, paths

    def test_svd_project_matches_library(self, matrices):
        from semkit.matan import subspace_report

        tmp, paths = matrices
        proc = run_cli(
            "svd-project", "--w", paths["w"], "--dw", paths["dw"],
            "--rank", "4", "--seed", "11",
        )
        assert proc.returncode == 0, proc.stderr
        doc = json.loads(proc.stdout)
        expected = subspace_report(
            read_matrix(paths["w"]), read_matrix(paths["dw"]), 4, seed=11
        )
        assert doc["report"] == expected.to_json_dict()

    def test_pca_outputs_and_projections(self, matrices):
        import numpy as np

        tmp, paths = matrices
        out = tmp / "out"
        proc = run_cli(
            "pca", "--features", paths["feats"], "--components", "3",
            "--out-dir", out, "--emit-projections",
        )
        assert proc.returncode == 0, proc.stderr
        doc = json.loads((out / "pca.json").read_text())
        assert doc["result"]["n_components"] == 3
        expected = pca_lib(read_matrix(paths["feats"]), 3)
        stored = read_matrix(out / "projections.smat")
        np.testing.assert_allclose(
            stored.values, expected.projections.astype(np.float32), rtol=0, atol=0
        )

    def test_rank_out_of_range_is_typed(self, matrices):
        tmp, paths = matrices
        proc = run_cli(
            "svd-project", "--w", paths["w"], "--dw", paths["dw"], "--rank", "99"
        )
        assert proc.returncode == 1
        assert json.loads(proc.stderr)["error_kind"] == "RankOutOfRange"


class TestDeterminism:
    def test_repeated_run_byte_identical(self, workspace):
        import shutil

        tmp, dataset, embeddings = workspace
        out = tmp / "run"
        outputs = []
        for _ in range(2):
            if out.exists():
                shutil.rmtree(out)
            proc = run_cli(
                "deviation", "--dataset", dataset, "--embeddings", embeddings,
                "--out-dir", out,
            )
            assert proc.returncode == 0
            outputs.append(
                (proc.stdout, sorted((p.name, p.read_bytes()) for p in out.iterdir()))
            )
        assert outputs[0] == outputs[1]
