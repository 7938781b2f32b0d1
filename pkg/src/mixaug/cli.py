"""Command-line interface.

Subcommands
-----------
train        train one model per configured seed and persist run artifacts
preview      render mixed-sample panels plus a machine-readable sidecar
noise-bench  compare both label-weight rules against ground-truth masks
sweep        repeat training across mixing-concentration values
ablation     factor the mixing operator apart from the label rule

Every subcommand reads the same flat ``key = value`` config format
(``--config``) plus repeatable ``--override key=value`` flags. Artifacts go
under ``--out``, the ``MIXAUG_OUT`` environment variable, or ``./mixaug-out``,
in a per-command subdirectory.

Exit codes: 0 on success, 1 on runtime failure, 2 on bad usage or
configuration.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .augment import MixConfig, MixResult, apply_mix
from .cam import batch_spms
from .config import (
    ConfigError,
    ExperimentConfig,
    build_experiment,
    config_hash,
    experiment_to_flat,
    parse_config_file,
    parse_override,
    resolve,
)
from .data import SplitDataset, SyntheticSpec
from .harness import (
    DEFAULT_SWEEP_ALPHAS,
    ablation_grid,
    alpha_sweep,
    atomic_write_text,
    load_dataset,
    noise_benchmark,
    render_table,
    run_many,
)
from .net import SmallConvNet, load_checkpoint
from .render import mix_panel, save_png
from .seeding import substream

__all__ = ["main", "build_parser", "PREVIEW_SCHEMA"]

PREVIEW_SCHEMA = "mixaug-preview/1"

DEFAULT_OUT = "mixaug-out"
OUT_ENV_VAR = "MIXAUG_OUT"


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(parser: argparse.ArgumentParser, seeded: bool = True) -> None:
    parser.add_argument("--config", metavar="FILE", help="flat key = value config file")
    parser.add_argument(
        "--override",
        metavar="KEY=VALUE",
        action="append",
        default=[],
        help="override one config key (repeatable)",
    )
    parser.add_argument("--out", metavar="DIR", help=f"output root (default ${OUT_ENV_VAR} or ./{DEFAULT_OUT})")
    parser.add_argument("--force", action="store_true", help="overwrite existing artifacts")
    if seeded:
        parser.add_argument("--seed", type=int, help="single seed overriding run.seeds")


def _csv_ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part.strip()) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _csv_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part.strip()) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixaug",
        description="data-mixing augmentation experiments on a small CNN",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one model per configured seed")
    _add_common(p_train)

    p_prev = sub.add_parser("preview", help="render mixed-sample panels")
    _add_common(p_prev)
    p_prev.add_argument("--count", type=int, default=4, help="number of panels (default 4)")
    p_prev.add_argument("--checkpoint", metavar="FILE", help="model checkpoint for trained relevance maps")
    p_prev.add_argument("--upscale", type=int, default=4, help="nearest-neighbour upscale factor")

    p_noise = sub.add_parser("noise-bench", help="label-noise benchmark against ground truth")
    _add_common(p_noise)
    p_noise.add_argument("--trials", type=int, default=1000, help="number of sampled trials")
    p_noise.add_argument("--checkpoint", metavar="FILE", help="model checkpoint to score with")
    p_noise.add_argument("--split", choices=("train", "test"), default="test")

    p_sweep = sub.add_parser("sweep", help="train across mixing-concentration values")
    _add_common(p_sweep, seeded=False)
    p_sweep.add_argument(
        "--alphas",
        type=_csv_floats,
        default=DEFAULT_SWEEP_ALPHAS,
        help="comma-separated concentration values",
    )
    p_sweep.add_argument("--seeds", type=_csv_ints, help="comma-separated seeds overriding run.seeds")

    p_abl = sub.add_parser("ablation", help="mixing-operator x label-rule grid")
    _add_common(p_abl, seeded=False)
    p_abl.add_argument("--include-mixup", action="store_true", help="append a linear-blend reference row")
    p_abl.add_argument("--seeds", type=_csv_ints, help="comma-separated seeds overriding run.seeds")

    return parser


def _load_experiment(args) -> tuple[ExperimentConfig, dict]:
    values: dict[str, object] = {}
    if args.config:
        values.update(parse_config_file(args.config))
    for spec in args.override:
        key, value = parse_override(spec)
        values[key] = value
    resolved = resolve(values)
    return build_experiment(resolved), resolved


def _output_root(args) -> Path:
    root = args.out or os.environ.get(OUT_ENV_VAR) or DEFAULT_OUT
    return Path(root)


def _load_model_for(dataset: SplitDataset, exp: ExperimentConfig, checkpoint: str | None, seed: int) -> SmallConvNet:
    """A model matching the dataset: fresh when no checkpoint is given."""
    channels, height, width = dataset.image_shape
    if checkpoint is None:
        return SmallConvNet(
            exp.model_config(channels, height, dataset.num_classes), substream(seed, "init")
        )
    model, _, _ = load_checkpoint(checkpoint)
    cfg = model.config
    if (cfg.in_channels, cfg.image_size) != (channels, height):
        raise ConfigError(
            f"checkpoint expects {cfg.in_channels}x{cfg.image_size}x{cfg.image_size} images, "
            f"dataset provides {channels}x{height}x{width}"
        )
    if cfg.num_classes != dataset.num_classes:
        raise ConfigError(
            f"checkpoint has {cfg.num_classes} classes, dataset has {dataset.num_classes}"
        )
    return model


# ---------------------------------------------------------------------------
# subcommands


def _cmd_train(args) -> int:
    exp, _ = _load_experiment(args)
    seeds = (args.seed,) if args.seed is not None else exp.seeds
    out_root = _output_root(args) / "train"
    reports = run_many(exp, seeds=seeds, out_root=out_root, force=args.force)

    rows = []
    for report in reports:
        rows.append(
            [
                str(report.seed),
                report.status,
                f"{report.best_acc:.2f}",
                f"{report.mean_final_k_acc:.2f}",
                f"{report.wall_time_sec:.1f}s",
            ]
        )
    print(render_table(["seed", "status", "best_acc", f"mean_final_{reports[0].final_k}", "wall_time"], rows))
    ok = [r for r in reports if r.status == "ok"]
    if ok:
        finals = np.array([r.mean_final_k_acc for r in ok])
        print(f"mean over {len(ok)} seed(s): {finals.mean():.2f} +/- {finals.std():.2f}")
    print(f"config {reports[0].config_hash[:12]}  artifacts in {out_root}")
    failed = [r for r in reports if r.status != "ok"]
    for report in failed:
        print(f"seed {report.seed} failed: {report.fail_reason}", file=sys.stderr)
    return 1 if failed else 0


def _box_record(box) -> dict | None:
    if box is None:
        return None
    return {
        "x0": box.x0,
        "y0": box.y0,
        "x1": box.x1,
        "y1": box.y1,
        "realized_ratio": box.realized_ratio,
    }


def _preview_record(
    panel_name: str,
    i: int,
    j: int,
    result: MixResult,
    spm_a: np.ndarray | None,
    spm_b: np.ndarray | None,
) -> dict:
    """One sidecar entry, carrying enough evidence to recompute the weights."""
    record = {
        "panel": panel_name,
        "source_a": i,
        "source_b": j,
        "label_a": int(result.label_a),
        "label_b": int(result.label_b),
        "strategy": result.strategy,
        "rho_a": float(result.rho_a),
        "rho_b": float(result.rho_b),
        "box_a": _box_record(result.box_a),
        "box_b": _box_record(result.box_b),
    }
    degenerate = result.strategy == "snapmix" and (
        result.box_a is None or result.box_a.is_empty or result.box_b is None or result.box_b.is_empty
    )
    record["degenerate"] = degenerate
    if spm_a is not None and result.box_a is not None:
        record["spm_mass_a"] = float(spm_a[result.box_a.slices].sum())
    if spm_b is not None and result.box_b is not None:
        record["spm_mass_b"] = float(spm_b[result.box_b.slices].sum())
    return record


def _cmd_preview(args) -> int:
    exp, _ = _load_experiment(args)
    if exp.mix is None:
        raise ConfigError("preview needs mix.strategy set to an actual strategy, not none")
    if args.count < 1:
        raise ConfigError(f"--count must be >= 1, got {args.count}")
    seed = args.seed if args.seed is not None else exp.seeds[0]
    dataset = load_dataset(exp.data)
    images, labels, _ = dataset.arrays("train")
    if images.shape[0] < 2:
        raise ConfigError("preview needs at least two training images to pair")

    model = _load_model_for(dataset, exp, args.checkpoint, seed)
    # Force the mixing coin so every panel actually shows a mix.
    mix = replace(exp.mix, switch_prob=1.0)
    rng = substream(seed, "preview")
    out_dir = _output_root(args) / "preview"
    out_dir.mkdir(parents=True, exist_ok=True)
    sidecar_path = out_dir / "preview.json"
    if sidecar_path.exists() and not args.force:
        raise FileExistsError(f"{sidecar_path} exists; pass --force to overwrite")

    n = images.shape[0]
    records = []
    for k in range(args.count):
        i = int(rng.integers(0, n))
        draw = int(rng.integers(0, n - 1))
        j = draw + 1 if draw >= i else draw
        pair_images = images[[i, j]]
        pair_labels = labels[[i, j]]
        spms = None
        if mix.strategy == "snapmix":
            spms = batch_spms(model, pair_images, pair_labels)
        provider = spms.__getitem__ if spms is not None else None
        result = apply_mix(pair_images, pair_labels, mix, rng, spm_provider=provider)[0]

        spm_a = spms[0] if spms is not None else None
        spm_b = spms[1] if spms is not None else None
        panel = mix_panel(
            images[i],
            images[j],
            result.image,
            box_a=result.box_a,
            box_b=result.box_b,
            spm_a=spm_a,
            spm_b=spm_b,
            upscale=args.upscale,
        )
        panel_name = f"preview_{k:02d}.png"
        save_png(out_dir / panel_name, panel)
        records.append(_preview_record(panel_name, i, j, result, spm_a, spm_b))

    sidecar = {
        "schema": PREVIEW_SCHEMA,
        "strategy": mix.strategy,
        "label_strategy": mix.label_strategy,
        "alpha": mix.alpha,
        "symmetric": mix.symmetric,
        "seed": seed,
        "count": args.count,
        "checkpoint": args.checkpoint,
        "samples": records,
    }
    atomic_write_text(sidecar_path, json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    print(f"wrote {args.count} panel(s) and {sidecar_path.name} to {out_dir}")
    return 0


def _cmd_noise_bench(args) -> int:
    exp, _ = _load_experiment(args)
    if exp.mix is None:
        raise ConfigError("noise-bench needs mix.strategy set to an actual strategy, not none")
    if not isinstance(exp.data, SyntheticSpec):
        raise ConfigError("noise-bench needs synthetic data with ground-truth masks")
    seed = args.seed if args.seed is not None else exp.seeds[0]
    dataset = load_dataset(exp.data)
    model = _load_model_for(dataset, exp, args.checkpoint, seed)
    rng = substream(seed, "noisebench")
    result = noise_benchmark(dataset, exp.mix, model, args.trials, rng, split=args.split)

    print(
        render_table(
            ["rule", "mean_abs_error"],
            [
                ["semantic_ratio", repr(result.mae_semantic)],
                ["area_ratio", repr(result.mae_area)],
            ],
        )
    )
    out_dir = _output_root(args) / "noise-bench"
    out_dir.mkdir(parents=True, exist_ok=True)
    summary_path = out_dir / "summary.json"
    if summary_path.exists() and not args.force:
        raise FileExistsError(f"{summary_path} exists; pass --force to overwrite")
    payload = result.to_dict()
    payload.update(
        {
            "seed": seed,
            "split": args.split,
            "checkpoint": args.checkpoint,
            "strategy": exp.mix.strategy,
            "alpha": exp.mix.alpha,
            "symmetric": exp.mix.symmetric,
        }
    )
    atomic_write_text(summary_path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"summary in {summary_path}")
    return 0


def _cmd_sweep(args) -> int:
    exp, _ = _load_experiment(args)
    if exp.mix is None:
        raise ConfigError("sweep needs mix.strategy set to an actual strategy, not none")
    out_dir = _output_root(args) / "sweep"
    result = alpha_sweep(exp, alphas=args.alphas, seeds=args.seeds, out_dir=out_dir, force=args.force)
    rows = [
        [f"{row.alpha:g}", f"{row.mean_acc:.2f}", f"{row.std_acc:.2f}", str(len(row.accs))]
        for row in result.rows
    ]
    print(render_table(["alpha", "mean_acc", "std_acc", "seeds"], rows))
    print(f"spread {result.spread:.2f}  grand mean {result.grand_mean:.2f}  artifacts in {out_dir}")
    return 0


def _cmd_ablation(args) -> int:
    exp, _ = _load_experiment(args)
    if exp.mix is None:
        raise ConfigError("ablation needs mix.strategy set to an actual strategy, not none")
    out_dir = _output_root(args) / "ablation"
    result = ablation_grid(
        exp,
        include_mixup=args.include_mixup,
        seeds=args.seeds,
        out_dir=out_dir,
        force=args.force,
    )
    rows = [
        [row.mixing, row.label_strategy, f"{row.mean_acc:.2f}", f"{row.std_acc:.2f}", str(len(row.accs))]
        for row in result.rows
    ]
    print(render_table(["mixing", "labels", "mean_acc", "std_acc", "seeds"], rows))
    print(f"artifacts in {out_dir}")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "preview": _cmd_preview,
    "noise-bench": _cmd_noise_bench,
    "sweep": _cmd_sweep,
    "ablation": _cmd_ablation,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileExistsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
