"""CLI behavior: exit codes, output files, manifests, reproducibility."""

import json
from pathlib import Path

import numpy as np
import pytest

from ergmpool import (
    ChainConfig,
    EdgesTerm,
    Graph,
    GraphSet,
    ModelSpec,
    NodemixTerm,
    CovariateSet,
    TrianglesTerm,
    sample_ergm,
    write_graph_set,
)
from ergmpool.cli import main

MODEL_TEXT = "edges\ntriangles\n"


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """A small on-disk dataset shared by the CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    model = ModelSpec([EdgesTerm(), TrianglesTerm()])
    batch = sample_ergm(
        model, [-0.3, 0.1], n=6,
        cfg=ChainConfig(burn_in=8000, thin=300, n_draws=4, seed=1),
        record_graphs=True,
    )
    write_graph_set(root / "data", GraphSet(batch.graphs))
    (root / "model.txt").write_text(MODEL_TEXT)
    return root


CHAIN_FLAGS = ["--burn-in", "4000", "--thin", "60", "--draws", "512", "--seed", "9"]


class TestFit:
    def test_pooled_fit_happy_path(self, workdir, tmp_path):
        rc = main(
            ["fit", "--data", str(workdir / "data"), "--model", str(workdir / "model.txt"),
             "--pooled", "--out", str(tmp_path / "out")] + CHAIN_FLAGS
        )
        assert rc == 0
        payload = json.loads((tmp_path / "out" / "fit.json").read_text())
        assert payload["estimate_kind"] == "pooled-mle"
        assert payload["weight"] == 4
        assert len(payload["theta"]) == 2
        assert len(payload["wald_ci"]) == 2
        assert (tmp_path / "out" / "manifest.json").exists()

    def test_reproducible_outputs(self, workdir, tmp_path):
        args = ["fit", "--data", str(workdir / "data"), "--model", str(workdir / "model.txt"),
                "--out", None] + CHAIN_FLAGS
        args_a = list(args)
        args_a[args_a.index(None)] = str(tmp_path / "a")
        args_b = list(args)
        args_b[args_b.index(None)] = str(tmp_path / "b")
        assert main(args_a) == 0
        assert main(args_b) == 0
        assert (tmp_path / "a" / "fit.json").read_text() == (tmp_path / "b" / "fit.json").read_text()

    def test_hull_failure_exit_code(self, tmp_path):
        # a dataset with a zero nodemix count has no pooled MLE
        n = 8
        groups = np.array(["A"] * 4 + ["B"] * 4, dtype=object)
        g = Graph(n, edges=[(0, 1), (1, 2), (4, 5), (5, 6)])  # no A-B edges
        gs = GraphSet([g], CovariateSet(n=n, nodal={"grp": groups}))
        write_graph_set(tmp_path / "data", gs)
        (tmp_path / "model.txt").write_text("edges\nnodemix grp A B\n")
        rc = main(
            ["fit", "--data", str(tmp_path / "data"), "--model", str(tmp_path / "model.txt"),
             "--out", str(tmp_path / "out")] + CHAIN_FLAGS
        )
        assert rc == 2

    def test_io_error_exit_code(self, workdir, tmp_path):
        rc = main(
            ["fit", "--data", str(tmp_path / "missing"), "--model", str(workdir / "model.txt"),
             "--out", str(tmp_path / "out")]
        )
        assert rc == 3

    def test_usage_error_exit_code(self):
        assert main(["fit", "--data", "somewhere"]) == 1
        assert main(["frobnicate"]) == 1

    def test_map_requires_prior(self, workdir, tmp_path):
        rc = main(
            ["fit", "--data", str(workdir / "data"), "--model", str(workdir / "model.txt"),
             "--map", "--out", str(tmp_path / "out")]
        )
        assert rc == 1


class TestPriorAndMap:
    def test_prior_then_map(self, workdir, tmp_path):
        prior_file = tmp_path / "bern.prior"
        rc = main(
            ["prior", "bernoulli", "--model", str(workdir / "model.txt"), "--n", "6",
             "--mean-degree", "2.0", "--n0", "0.05", "--sims", "300", "--seed", "3",
             "--out", str(prior_file)]
        )
        assert rc == 0
        payload = json.loads(prior_file.read_text())
        assert payload["n0"] == 0.05
        assert len(payload["tau_bar"]) == 2

        rc = main(
            ["fit", "--data", str(workdir / "data"), "--model", str(workdir / "model.txt"),
             "--map", "--prior", str(prior_file), "--out", str(tmp_path / "map")] + CHAIN_FLAGS
        )
        assert rc == 0
        fit = json.loads((tmp_path / "map" / "fit.json").read_text())
        assert fit["estimate_kind"] == "conjugate-map"
        assert fit["delta"] == pytest.approx(0.05 / 4.05)
        assert "credible_interval" in fit

    def test_prior_fingerprint_mismatch(self, workdir, tmp_path):
        prior_file = tmp_path / "wrong.prior"
        (tmp_path / "other_model.txt").write_text("edges\ngwesp 0.5\n")
        rc = main(
            ["prior", "bernoulli", "--model", str(tmp_path / "other_model.txt"), "--n", "6",
             "--mean-degree", "2.0", "--n0", "0.05", "--sims", "100", "--out", str(prior_file)]
        )
        assert rc == 0
        rc = main(
            ["fit", "--data", str(workdir / "data"), "--model", str(workdir / "model.txt"),
             "--map", "--prior", str(prior_file), "--out", str(tmp_path / "map")] + CHAIN_FLAGS
        )
        assert rc == 2

    def test_prior_protein(self, capsys):
        rc = main(["prior", "protein", "--mass-kda", "14.3"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "8.14" in out or "8.15" in out


class TestOtherSubcommands:
    def test_simulate_writes_stats_and_graphs(self, workdir, tmp_path):
        rc = main(
            ["simulate", "--model", str(workdir / "model.txt"), "--theta=-0.3,0.1",
             "--n", "6", "--out", str(tmp_path / "sim"), "--save-graphs",
             "--burn-in", "2000", "--thin", "50", "--draws", "20", "--seed", "2"]
        )
        assert rc == 0
        stats = (tmp_path / "sim" / "stats.csv").read_text().strip().splitlines()
        assert stats[0] == "edges,triangles"
        assert len(stats) == 21
        assert (tmp_path / "sim" / "graphs").is_dir()

    def test_oracle_outputs(self, workdir, tmp_path):
        rc = main(
            ["oracle", "--model", str(workdir / "model.txt"), "--n", "5",
             "--theta=-0.5,0.2", "--out", str(tmp_path / "oracle")]
        )
        assert rc == 0
        payload = json.loads((tmp_path / "oracle" / "oracle.json").read_text())
        assert payload["count"] == 1024
        assert "psi" in payload and "mean" in payload

    def test_gof_and_gli(self, workdir, tmp_path):
        assert main(
            ["fit", "--data", str(workdir / "data"), "--model", str(workdir / "model.txt"),
             "--out", str(tmp_path / "fit")] + CHAIN_FLAGS
        ) == 0
        rc = main(
            ["gof", "--data", str(workdir / "data"), "--model", str(workdir / "model.txt"),
             "--fit", str(tmp_path / "fit" / "fit.json"), "--out", str(tmp_path / "gof"),
             "--burn-in", "1000", "--thin", "40", "--draws", "40", "--seed", "5"]
        )
        assert rc == 0
        for fam in ("degree", "esp", "geodesic", "triad"):
            lines = (tmp_path / "gof" / f"gof_{fam}.csv").read_text().splitlines()
            assert lines[0] == "bin,observed_mean,q025,q25,q50,q75,q975"
            assert len(lines) > 1
        rc = main(
            ["gli", "--data", str(workdir / "data"), "--out", str(tmp_path / "gli")]
        )
        assert rc == 0
        lines = (tmp_path / "gli" / "gli.csv").read_text().splitlines()
        assert lines[0] == "graph,transitivity,sd_degree,sd_core,sd_m_eccentricity"
        assert len(lines) == 5

    def test_cv_delta(self, workdir, tmp_path):
        prior_file = tmp_path / "cv.prior"
        assert main(
            ["prior", "bernoulli", "--model", str(workdir / "model.txt"), "--n", "6",
             "--mean-degree", "2.0", "--n0", "0.05", "--sims", "200", "--out", str(prior_file)]
        ) == 0
        rc = main(
            ["cv-delta", "--data", str(workdir / "data"), "--model", str(workdir / "model.txt"),
             "--prior", str(prior_file), "--n0-grid", "0,0.5", "--sim-draws", "40",
             "--out", str(tmp_path / "cv"), "--burn-in", "1500", "--thin", "40",
             "--draws", "256", "--seed", "3", "--t-ratio", "0.15"]
        )
        assert rc == 0
        lines = (tmp_path / "cv" / "cv.csv").read_text().splitlines()
        assert lines[0] == "n0,delta,cv_error,failed_folds"
        assert len(lines) == 3

    def test_study_coverage_smoke(self, workdir, tmp_path):
        rc = main(
            ["study", "coverage", "--model", str(workdir / "model.txt"), "--theta=-0.3,0.1",
             "--n", "6", "--m-grid", "1", "--replicates", "4", "--threads", "1",
             "--out", str(tmp_path / "study"), "--burn-in", "2000", "--thin", "50",
             "--draws", "256", "--seed", "8", "--t-ratio", "0.2"]
        )
        assert rc == 0
        lines = (tmp_path / "study" / "coverage.csv").read_text().splitlines()
        assert len(lines) == 3  # header + 2 coordinates

    def test_manifest_contains_resolved_config(self, workdir, tmp_path):
        main(
            ["fit", "--data", str(workdir / "data"), "--model", str(workdir / "model.txt"),
             "--out", str(tmp_path / "m")] + CHAIN_FLAGS
        )
        manifest = json.loads((tmp_path / "m" / "manifest.json").read_text())
        assert manifest["subcommand"] == "fit"
        assert manifest["seed"] == 9
        assert manifest["config"]["draws"] == 512
        assert "version" in manifest
