import json

import numpy as np
import pytest

from qkge.checkpoint import load_checkpoint, save_checkpoint
from qkge.cli import (
    CHECKPOINT_NAME,
    EXIT_DATA,
    EXIT_OK,
    EXIT_USAGE,
    MANIFEST_NAME,
    TRAINING_LOG_NAME,
    dataset_digest,
    main,
)
from qkge.data import save_dataset
from qkge.model import initialize_params
from tests.conftest import random_dataset

TRAIN_ARGS = ["--dim", "4", "--epochs", "3", "--nbatches", "4", "--neg", "2",
              "--validation-interval", "2", "--seed", "3"]


@pytest.fixture(scope="module")
def ds_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli-data")
    ds = random_dataset(np.random.default_rng(42), n_entities=15,
                        n_relations=3, n_train=40, n_valid=8, n_test=8)
    save_dataset(ds, root)
    return root


@pytest.fixture(scope="module")
def trained(tmp_path_factory, ds_dir):
    out = tmp_path_factory.mktemp("cli-run")
    code = main(["--quiet", "train", "--data", str(ds_dir), "--out", str(out)]
                + TRAIN_ARGS)
    assert code == EXIT_OK
    return out


class TestTrainCommand:
    def test_writes_all_artifacts(self, trained):
        for name in (CHECKPOINT_NAME, MANIFEST_NAME, TRAINING_LOG_NAME):
            assert (trained / name).exists()

    def test_manifest_contents(self, trained, ds_dir):
        manifest = json.loads((trained / MANIFEST_NAME).read_text())
        assert manifest["command"] == "train"
        assert manifest["config"]["dim"] == 4
        assert manifest["config"]["epochs"] == 3
        assert manifest["dataset"]["n_entities"] == 15
        assert manifest["dataset"]["n_train"] == 40
        assert manifest["dataset"]["sha256"] == dataset_digest(ds_dir)
        assert manifest["best_epoch"] is not None
        assert manifest["finished"] >= manifest["started"]

    def test_training_log_rows(self, trained):
        lines = (trained / TRAINING_LOG_NAME).read_text().strip().split("\n")
        assert lines[0] == "epoch\tloss\tvalid_mrr\tvalid_hit10"
        assert len(lines) == 1 + 3  # header + one row per epoch
        # validation columns filled exactly on validated epochs
        filled = [ln.split("\t")[2] != "" for ln in lines[1:]]
        assert filled == [False, True, True]

    def test_checkpoint_loads(self, trained):
        params, variant = load_checkpoint(trained / CHECKPOINT_NAME)
        assert variant == "quatde"
        assert params.k == 4
        assert params.n_entities == 15

    def test_zero_epochs_saves_initial_params(self, ds_dir, tmp_path):
        out = tmp_path / "run0"
        code = main(["--quiet", "train", "--data", str(ds_dir),
                     "--out", str(out), "--dim", "4", "--epochs", "0",
                     "--seed", "3"])
        assert code == EXIT_OK
        params, _ = load_checkpoint(out / CHECKPOINT_NAME)
        expect = initialize_params(15, 3, 4, np.random.default_rng(3))
        assert params.equals(expect)
        manifest = json.loads((out / MANIFEST_NAME).read_text())
        assert manifest["final_loss"] is None

    def test_same_seed_gives_identical_checkpoints(self, ds_dir, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            code = main(["--quiet", "train", "--data", str(ds_dir),
                         "--out", str(out)] + TRAIN_ARGS)
            assert code == EXIT_OK
            outs.append((out / CHECKPOINT_NAME).read_bytes())
        assert outs[0] == outs[1]

    def test_missing_dataset_dir_is_data_error(self, tmp_path, capsys):
        code = main(["--quiet", "train", "--data", str(tmp_path / "nope"),
                     "--out", str(tmp_path / "out")] + TRAIN_ARGS)
        assert code == EXIT_DATA
        assert "data error" in capsys.readouterr().err


class TestEvalCommand:
    def test_json_output(self, ds_dir, trained, capsys):
        code = main(["--quiet", "eval", "--data", str(ds_dir),
                     "--checkpoint", str(trained / CHECKPOINT_NAME)])
        assert code == EXIT_OK
        out = json.loads(capsys.readouterr().out)
        assert set(out) == {"overall", "per_relation"}
        for side in ("both", "head", "tail"):
            metrics = out["overall"][side]
            assert set(metrics) == {"mr", "mrr", "hit1", "hit3", "hit10"}
            assert 0.0 < metrics["mrr"] <= 1.0

    def test_split_and_tie_policy_flags(self, ds_dir, trained, capsys):
        base = ["--quiet", "eval", "--data", str(ds_dir),
                "--checkpoint", str(trained / CHECKPOINT_NAME),
                "--split", "valid"]
        assert main(base + ["--tie-policy", "optimistic"]) == EXIT_OK
        opt = json.loads(capsys.readouterr().out)
        assert main(base + ["--tie-policy", "pessimistic"]) == EXIT_OK
        pes = json.loads(capsys.readouterr().out)
        assert opt["overall"]["both"]["mr"] <= pes["overall"]["both"]["mr"]

    def test_category_breakdown_tsv(self, ds_dir, trained, capsys):
        code = main(["--quiet", "eval", "--data", str(ds_dir),
                     "--checkpoint", str(trained / CHECKPOINT_NAME),
                     "--breakdown", "category", "--format", "tsv"])
        assert code == EXIT_OK
        lines = capsys.readouterr().out.strip().split("\n")
        assert lines[0].startswith("group\tside")
        groups = {ln.split("\t")[0] for ln in lines[1:]}
        assert "overall" in groups
        assert any(g.startswith("category:") for g in groups)
        assert not any(g.startswith("relation:") for g in groups)

    def test_relation_breakdown_uses_names(self, ds_dir, trained, capsys):
        code = main(["--quiet", "eval", "--data", str(ds_dir),
                     "--checkpoint", str(trained / CHECKPOINT_NAME),
                     "--breakdown", "relation"])
        assert code == EXIT_OK
        out = json.loads(capsys.readouterr().out)
        assert len(out["per_relation"]) >= 1
        assert all(name.startswith("r") for name in out["per_relation"])

    def test_vocabulary_mismatch_is_data_error(self, trained, tmp_path, capsys):
        other = tmp_path / "other-data"
        save_dataset(random_dataset(np.random.default_rng(1), n_entities=9,
                                    n_relations=2), other)
        code = main(["--quiet", "eval", "--data", str(other),
                     "--checkpoint", str(trained / CHECKPOINT_NAME)])
        assert code == EXIT_DATA
        assert "data error" in capsys.readouterr().err

    def test_corrupt_checkpoint_is_data_error(self, ds_dir, tmp_path, capsys):
        bad = tmp_path / "bad.ckpt"
        bad.write_bytes(b"not a checkpoint at all")
        code = main(["--quiet", "eval", "--data", str(ds_dir),
                     "--checkpoint", str(bad)])
        assert code == EXIT_DATA
        assert "data error" in capsys.readouterr().err


class TestClassifyCommand:
    def test_reports_accuracies(self, ds_dir, trained, capsys):
        code = main(["--quiet", "classify", "--data", str(ds_dir),
                     "--checkpoint", str(trained / CHECKPOINT_NAME),
                     "--seed", "5"])
        assert code == EXIT_OK
        out = json.loads(capsys.readouterr().out)
        assert set(out) == {"valid_accuracy", "test_accuracy",
                            "n_valid", "n_test"}
        assert out["n_valid"] == 16  # positives plus matched negatives
        assert out["n_test"] == 16
        assert 0.0 <= out["test_accuracy"] <= 1.0
        assert out["valid_accuracy"] >= 0.5  # thresholds fit on valid

    def test_deterministic_under_seed(self, ds_dir, trained, capsys):
        args = ["--quiet", "classify", "--data", str(ds_dir),
                "--checkpoint", str(trained / CHECKPOINT_NAME), "--seed", "5"]
        assert main(args) == EXIT_OK
        first = capsys.readouterr().out
        assert main(args) == EXIT_OK
        assert capsys.readouterr().out == first


class TestSweepCommand:
    def test_runs_each_dimension(self, ds_dir, tmp_path, capsys):
        out = tmp_path / "sweep"
        code = main(["--quiet", "sweep", "--data", str(ds_dir),
                     "--out", str(out), "--dims", "2,3",
                     "--epochs", "2", "--nbatches", "4", "--neg", "2",
                     "--seed", "3"])
        assert code == EXIT_OK
        lines = (out / "sweep.tsv").read_text().strip().split("\n")
        assert lines[0] == "dim\tvalid_mrr\tvalid_hit10\tstatus"
        assert [ln.split("\t")[0] for ln in lines[1:]] == ["2", "3"]
        assert all(ln.split("\t")[3] == "ok" for ln in lines[1:])
        for dim in (2, 3):
            assert (out / f"dim-{dim}" / CHECKPOINT_NAME).exists()
        assert capsys.readouterr().out.startswith("dim\t")

    def test_bad_dimension_does_not_kill_sweep(self, ds_dir, tmp_path):
        out = tmp_path / "sweep"
        code = main(["--quiet", "sweep", "--data", str(ds_dir),
                     "--out", str(out), "--dims", "0,2",
                     "--epochs", "1", "--nbatches", "4", "--neg", "1",
                     "--seed", "3"])
        assert code == EXIT_OK
        rows = [ln.split("\t") for ln in
                (out / "sweep.tsv").read_text().strip().split("\n")[1:]]
        assert rows[0][0] == "0" and rows[0][3].startswith("error:")
        assert rows[1][0] == "2" and rows[1][3] == "ok"

    def test_malformed_dims_is_data_error(self, ds_dir, tmp_path):
        code = main(["--quiet", "sweep", "--data", str(ds_dir),
                     "--out", str(tmp_path / "s"), "--dims", "two,3"])
        assert code == EXIT_DATA


class TestUsageErrors:
    def test_no_subcommand_exits_with_usage_code(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == EXIT_USAGE

    def test_unknown_flag(self):
        with pytest.raises(SystemExit) as exc:
            main(["train", "--bogus"])
        assert exc.value.code == EXIT_USAGE

    def test_bad_choice_value(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["train", "--data", str(tmp_path), "--out", str(tmp_path),
                  "--variant", "transE"])
        assert exc.value.code == EXIT_USAGE
