"""Command-line interface: exit codes, artifacts, snapshots, sidecars."""

import json

import numpy as np
import pytest
from PIL import Image

from mixaug.cli import PREVIEW_SCHEMA, main

TINY = [
    "--override", "data.num_classes=3",
    "--override", "data.image_size=16",
    "--override", "data.cue_size=4",
    "--override", "data.background_alphabet=3",
    "--override", "data.noise_std=0.0",
    "--override", "data.samples_per_class=8",
    "--override", "data.seed=42",
    "--override", "model.widths=8,8",
    "--override", "train.epochs=2",
    "--override", "train.batch_size=8",
    "--override", "train.lr_decay_epochs=",
    "--override", "run.seeds=1",
]


def _train(out, *extra):
    return main(["train", *TINY, "--out", str(out), *extra])


# ---------------------------------------------------------------------------
# exit codes


def test_exit_zero_on_success(tmp_path, capsys):
    assert _train(tmp_path) == 0
    shown = capsys.readouterr().out
    assert "seed" in shown and "best_acc" in shown


def test_exit_two_on_unknown_key(tmp_path, capsys):
    code = main(["train", "--override", "bogus.key=1", "--out", str(tmp_path)])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_exit_two_on_bad_usage():
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_exit_one_on_existing_artifacts(tmp_path, capsys):
    assert _train(tmp_path) == 0
    assert _train(tmp_path) == 1
    assert "--force" in capsys.readouterr().err
    assert _train(tmp_path, "--force") == 0


def test_exit_two_when_preview_has_no_strategy(tmp_path, capsys):
    code = main(["preview", *TINY, "--override", "mix.strategy=none", "--out", str(tmp_path)])
    assert code == 2


def test_config_error_names_bad_value(tmp_path, capsys):
    code = main(["train", "--override", "mix.strategy=blend", "--out", str(tmp_path)])
    assert code == 2
    assert "blend" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# train artifacts


def test_snapshot_reflects_overrides(tmp_path):
    _train(tmp_path)
    cfg = (tmp_path / "train" / "seed1" / "config.cfg").read_text()
    assert "data.num_classes = 3" in cfg
    assert "train.epochs = 2" in cfg
    assert "mix.strategy = snapmix" in cfg  # default carried into the snapshot


def test_reruns_are_identical_modulo_wall_time(tmp_path):
    _train(tmp_path / "a")
    _train(tmp_path / "b")
    dir_a = tmp_path / "a" / "train" / "seed1"
    dir_b = tmp_path / "b" / "train" / "seed1"
    assert (dir_a / "epochs.csv").read_text() == (dir_b / "epochs.csv").read_text()
    assert (dir_a / "config.cfg").read_text() == (dir_b / "config.cfg").read_text()
    sa = json.loads((dir_a / "summary.json").read_text())
    sb = json.loads((dir_b / "summary.json").read_text())
    sa.pop("wall_time_sec"), sb.pop("wall_time_sec")
    assert sa == sb


def test_seed_flag_overrides_config_seeds(tmp_path):
    assert main(["train", *TINY, "--seed", "5", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "train" / "seed5").is_dir()
    assert not (tmp_path / "train" / "seed1").exists()


def test_out_env_var_is_honored(tmp_path, monkeypatch):
    monkeypatch.setenv("MIXAUG_OUT", str(tmp_path / "from-env"))
    assert main(["train", *TINY]) == 0
    assert (tmp_path / "from-env" / "train" / "seed1" / "summary.json").exists()


# ---------------------------------------------------------------------------
# preview


def test_preview_panels_and_sidecar(tmp_path):
    code = main(["preview", *TINY, "--count", "3", "--out", str(tmp_path)])
    assert code == 0
    out = tmp_path / "preview"
    sidecar = json.loads((out / "preview.json").read_text())
    assert sidecar["schema"] == PREVIEW_SCHEMA
    assert sidecar["strategy"] == "snapmix"
    assert sidecar["count"] == 3
    assert len(sidecar["samples"]) == 3

    for record in sidecar["samples"]:
        png = out / record["panel"]
        assert png.exists()
        with Image.open(png) as img:
            # five panels (a, b, mixed, two map overlays) at 16px x4 upscale
            # plus four 2px separators.
            assert img.size == (5 * 64 + 4 * 2, 64)

        # The stored weights must be recomputable from the stored evidence.
        if record["degenerate"]:
            assert (record["rho_a"], record["rho_b"]) == (1.0, 0.0)
        else:
            want_a = min(max(1.0 - record["spm_mass_a"], 0.0), 1.0)
            want_b = min(max(record["spm_mass_b"], 0.0), 1.0)
            assert abs(record["rho_a"] - want_a) <= 1e-9
            assert abs(record["rho_b"] - want_b) <= 1e-9


def test_preview_is_deterministic(tmp_path):
    main(["preview", *TINY, "--count", "2", "--out", str(tmp_path / "a")])
    main(["preview", *TINY, "--count", "2", "--out", str(tmp_path / "b")])
    bytes_a = (tmp_path / "a" / "preview" / "preview_00.png").read_bytes()
    bytes_b = (tmp_path / "b" / "preview" / "preview_00.png").read_bytes()
    assert bytes_a == bytes_b
    side_a = (tmp_path / "a" / "preview" / "preview.json").read_text()
    side_b = (tmp_path / "b" / "preview" / "preview.json").read_text()
    assert side_a == side_b


def test_preview_area_strategy_round_trip(tmp_path):
    code = main(
        ["preview", *TINY, "--override", "mix.strategy=cutmix", "--count", "4", "--out", str(tmp_path)]
    )
    assert code == 0
    sidecar = json.loads((tmp_path / "preview" / "preview.json").read_text())
    for record in sidecar["samples"]:
        ratio = record["box_a"]["realized_ratio"]
        assert abs(record["rho_b"] - ratio) <= 1e-9
        assert abs(record["rho_a"] - (1.0 - ratio)) <= 1e-9


def test_preview_respects_force_guard(tmp_path):
    assert main(["preview", *TINY, "--count", "1", "--out", str(tmp_path)]) == 0
    assert main(["preview", *TINY, "--count", "1", "--out", str(tmp_path)]) == 1
    assert main(["preview", *TINY, "--count", "1", "--out", str(tmp_path), "--force"]) == 0


def test_preview_checkpoint_mismatch_is_config_error(tmp_path, capsys):
    assert _train(tmp_path) == 0
    ckpt = tmp_path / "train" / "seed1" / "checkpoint.npz"
    code = main(
        [
            "preview",
            *TINY,
            "--override", "data.num_classes=4",  # classes no longer match
            "--checkpoint", str(ckpt),
            "--out", str(tmp_path / "p"),
        ]
    )
    assert code == 2
    assert "classes" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# noise-bench


def test_noise_bench_writes_summary(tmp_path):
    code = main(["noise-bench", *TINY, "--trials", "100", "--out", str(tmp_path)])
    assert code == 0
    summary = json.loads((tmp_path / "noise-bench" / "summary.json").read_text())
    assert summary["schema"] == "mixaug-noise-bench/1"
    assert summary["trials"] == 100
    # Untrained model on a dyadic grid: the two rules tie exactly.
    assert summary["mae_semantic"] == summary["mae_area"]


def test_noise_bench_requires_synthetic_data(tmp_path, capsys):
    code = main(
        [
            "noise-bench",
            "--override", "data.kind=folder",
            "--override", f"data.path={tmp_path}",
            "--out", str(tmp_path),
        ]
    )
    assert code == 2
    assert "mask" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# sweep and ablation


def test_sweep_command_writes_csv(tmp_path):
    code = main(
        ["sweep", *TINY[:-2], "--alphas", "1.0,5.0", "--seeds", "1", "--out", str(tmp_path)]
    )
    assert code == 0
    lines = (tmp_path / "sweep" / "sweep.csv").read_text().strip().split("\n")
    assert len(lines) == 3


def test_ablation_command_writes_csv(tmp_path, capsys):
    code = main(["ablation", *TINY[:-2], "--seeds", "1", "--out", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "ablation" / "ablation.csv").read_text().strip().split("\n")
    assert len(lines) == 5
    shown = capsys.readouterr().out
    assert "semantic_ratio" in shown
