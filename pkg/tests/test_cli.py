import json

import numpy as np
import pytest

from consensuslab.cli import main
from consensuslab.selfcheck import PROPERTIES, run_selfcheck

GOSSIP_CONFIG = {
    "n": 3,
    "distribution": {"type": "generator", "name": "pairwise_gossip", "params": {"n": 3}},
    "simulation": {"paths": 10, "horizon": 50, "eps": 0.001, "seed": 7},
}

IDENTITY_CONFIG = {
    "n": 2,
    "distribution": {"type": "dirac", "matrix": [[1.0, 0.0], [0.0, 1.0]]},
}

MIXTURE_CONFIG = {
    "n": 2,
    "distribution": {
        "type": "finite",
        "atoms": [
            {"prob": 0.5, "matrix": [[1.0, 0.0], [0.0, 1.0]]},
            {"prob": 0.5, "matrix": [[0.0, 1.0], [1.0, 0.0]]},
        ],
    },
    "simulation": {"paths": 50, "horizon": 50, "seed": 3, "x0": [1.0, 0.0]},
}


@pytest.fixture
def gossip_config(tmp_path):
    path = tmp_path / "gossip.json"
    path.write_text(json.dumps(GOSSIP_CONFIG))
    return str(path)


@pytest.fixture
def identity_config(tmp_path):
    path = tmp_path / "identity.json"
    path.write_text(json.dumps(IDENTITY_CONFIG))
    return str(path)


@pytest.fixture
def mixture_config(tmp_path):
    path = tmp_path / "mixture.json"
    path.write_text(json.dumps(MIXTURE_CONFIG))
    return str(path)


class TestVerdictCommand:
    def test_gossip_consensus(self, gossip_config, capsys):
        assert main(["verdict", "--config", gossip_config, "--mc-samples", "3000"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["decision"] == "consensus"
        assert abs(doc["lambda2_modulus"] - 0.5) < 0.1
        assert doc["positive_diagonal_support"] is True

    def test_identity_marginal(self, identity_config, capsys):
        assert main(["verdict", "--config", identity_config]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["decision"] == "marginal"
        assert doc["lambda2_modulus"] == pytest.approx(1.0)

    def test_malformed_config_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"distribution": {"type": "finite", "atoms": ['
                       '{"prob": 0.7, "matrix": [[1,0],[0,1]]},'
                       '{"prob": 0.4, "matrix": [[1,0],[0,1]]}]}}')
        assert main(["verdict", "--config", str(bad)]) == 2
        assert "config error" in capsys.readouterr().err

    def test_writes_report_and_manifest(self, gossip_config, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["verdict", "--config", gossip_config, "--out", str(out),
                     "--mc-samples", "1500"]) == 0
        assert (out / "verdict.json").exists()
        manifest = json.loads((out / "verdict_manifest.json").read_text())
        assert manifest["command"] == "verdict"
        assert manifest["parameters"]["seed"] == 7
        assert len(manifest["config_digest"]) == 64


class TestDeterministicCommand:
    def test_dirac_required(self, mixture_config, capsys):
        assert main(["deterministic", "--config", mixture_config]) == 2

    def test_identity(self, identity_config, capsys):
        assert main(["deterministic", "--config", identity_config]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["decision"] == "marginal"


class TestSimulateCommand:
    def test_row_counts(self, gossip_config, tmp_path, capsys):
        out = tmp_path / "sim"
        assert main(["simulate", "--config", gossip_config, "--out", str(out)]) == 0
        paths = (out / "paths.csv").read_text().splitlines()
        agg = (out / "aggregate.csv").read_text().splitlines()
        assert len(paths) == 1 + 10 * 51
        assert len(agg) == 1 + 51
        assert (out / "simulate_manifest.json").exists()

    def test_seed_reproducibility_byte_identical(self, gossip_config, tmp_path, capsys):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            assert main(["simulate", "--config", gossip_config, "--seed", "7",
                         "--out", str(out)]) == 0
        assert (out1 / "paths.csv").read_bytes() == (out2 / "paths.csv").read_bytes()
        assert (out1 / "aggregate.csv").read_bytes() == (out2 / "aggregate.csv").read_bytes()

    def test_explicit_and_uniform_x0_both_accepted(self, gossip_config, tmp_path, capsys):
        for label, x0 in (("u", "uniform01"), ("e", "0.5,0.25,0.75")):
            assert main(["simulate", "--config", gossip_config, "--x0", x0,
                         "--out", str(tmp_path / label)]) == 0

    def test_json_format(self, gossip_config, tmp_path, capsys):
        out = tmp_path / "j"
        assert main(["simulate", "--config", gossip_config, "--format", "json",
                     "--out", str(out)]) == 0
        payload = json.loads((out / "paths.json").read_text())
        assert len(payload) == 10

    def test_unwritable_out_exit_4(self, gossip_config, tmp_path, capsys):
        blocker = tmp_path / "blocked"
        blocker.write_text("file, not a dir")
        assert main(["simulate", "--config", gossip_config, "--out", str(blocker)]) == 4


class TestModesCommand:
    def test_gossip_all_converged(self, gossip_config, capsys):
        assert main(["modes", "--config", gossip_config, "--paths", "100",
                     "--horizon", "300", "--mc-samples", "1500"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["as_converged"] and doc["prob_converged"] and doc["lp_converged"]
        assert doc["agreement"] is True
        assert doc["verdict"]["discrepancy"] is None

    def test_identity_none_converged(self, identity_config, capsys):
        assert main(["modes", "--config", identity_config, "--paths", "50",
                     "--horizon", "20", "--x0", "1,0"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert not (doc["as_converged"] or doc["prob_converged"] or doc["lp_converged"])
        assert doc["agreement"] is True

    def test_mixture_discrepancy_reported(self, mixture_config, capsys):
        assert main(["modes", "--config", mixture_config]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["agreement"] is True
        assert not doc["as_converged"]
        assert doc["verdict"]["decision"] == "consensus"
        assert doc["verdict"]["discrepancy"] is not None


class TestLiftCommand:
    def test_two_diracs(self, identity_config, tmp_path, capsys):
        out = tmp_path / "lifted.json"
        assert main(["lift", "--config-a", identity_config, "--config-b", identity_config,
                     "--alpha", "0.5", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["n"] == 4
        assert doc["distribution"]["type"] == "dirac"
        # the lifted config is itself consumable
        assert main(["verdict", "--config", str(out)]) == 0

    def test_bad_alpha_exit_2(self, identity_config, capsys):
        assert main(["lift", "--config-a", identity_config, "--config-b", identity_config,
                     "--alpha", "1.2", "--beta", "0.3"]) == 2

    def test_finite_product_atom_count(self, mixture_config, tmp_path, capsys):
        out = tmp_path / "lifted.json"
        assert main(["lift", "--config-a", mixture_config, "--config-b", mixture_config,
                     "--alpha", "0.4", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert len(doc["distribution"]["atoms"]) == 4


class TestSelfcheckCommand:
    def test_defaults_pass(self, capsys):
        assert main(["selfcheck", "--trials", "10", "--n-max", "5"]) == 0
        out = capsys.readouterr().out
        for name in PROPERTIES:
            assert f"{name}: ok" in out

    def test_zero_trials_exit_2(self, capsys):
        assert main(["selfcheck", "--trials", "0"]) == 2

    def test_injected_row_sum_bug_exit_5(self, monkeypatch, capsys):
        from consensuslab import core

        broken = dict(core._GENERATORS)

        def bad_gossip(params):
            n, draw = core._GENERATORS["pairwise_gossip"](params)

            def bad_draw(rng):
                m = draw(rng).copy()
                m[0, 0] += 0.5  # row sum bug
                return m

            return n, bad_draw

        broken["pairwise_gossip"] = bad_gossip
        monkeypatch.setattr(core, "_GENERATORS", broken)
        assert main(["selfcheck", "--trials", "5", "--n-max", "4"]) == 5
        out = capsys.readouterr().out
        assert "matrix_validation: FAIL" in out
        assert "seed 0" in out


class TestSelfcheckRunner:
    def test_failure_names_property_and_seed(self, monkeypatch):
        from consensuslab import selfcheck

        def always_fails(trials, n_max, seed):
            raise selfcheck.PropertyFailure("boom")

        monkeypatch.setitem(selfcheck.PROPERTIES, "spectral_identity", always_fails)
        results = run_selfcheck(n_max=4, trials=2, seed=31)
        failed = {r.name: r for r in results if not r.passed}
        assert "spectral_identity" in failed
        assert "seed 31" in failed["spectral_identity"].error
