"""Experiment harness: seeded runs, the ablation grid, the alpha sweep, and
the label-noise benchmark.

A run is fully determined by (experiment config, seed): the dataset comes
from its own data seed, and the run seed feeds three named substreams
("init" for weights, "order" for epoch shuffling, "mix" for augmentation
draws), so per-epoch curves reproduce exactly. Reports carry the config hash
so every table cell can be traced back to its persisted run directory. All
report files are written via a temp file and a rename.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .augment import MixConfig, apply_mix, area_ratio_labels, sample_box, sample_lambda, semantic_ratio_labels
from .cam import batch_spms, compute_cam, make_spm
from .config import ExperimentConfig, canonical_render, config_hash, experiment_to_flat
from .data import FolderSpec, SplitDataset, SyntheticSpec, generate, ingest_folder, mask_box_ratio
from .net import (
    MomentumSGD,
    NonFiniteLossError,
    SmallConvNet,
    save_checkpoint,
    train_step,
    train_step_arrays,
)
from .seeding import substream

__all__ = [
    "DEFAULT_SWEEP_ALPHAS",
    "RunReport",
    "GridRow",
    "GridResult",
    "SweepRow",
    "SweepResult",
    "NoiseBenchResult",
    "default_mix_config",
    "learning_rate_at",
    "evaluate",
    "run_experiment",
    "run_many",
    "ablation_grid",
    "alpha_sweep",
    "noise_benchmark",
    "write_run_artifacts",
    "render_table",
    "atomic_write_text",
]

logger = logging.getLogger(__name__)

# The alpha grid commonly swept for Beta(alpha, alpha) mixing ratios.
DEFAULT_SWEEP_ALPHAS = (0.2, 0.5, 1.0, 3.0, 5.0, 7.0, 8.0)

RUN_SUMMARY_SCHEMA = "mixaug-run/1"
EPOCH_CSV_HEADER = "epoch,train_loss,lr,test_acc"


def default_mix_config(strategy: str) -> MixConfig:
    """Stock hyperparameters per strategy (from-scratch regime)."""
    table = {
        "mixup": MixConfig("mixup", alpha=1.0, switch_prob=0.5),
        "cutmix": MixConfig("cutmix", alpha=3.0, switch_prob=1.0),
        "cutout": MixConfig("cutout", alpha=1.0, switch_prob=0.5),
        "snapmix": MixConfig(
            "snapmix", alpha=5.0, switch_prob=0.5, label_strategy="semantic_ratio", symmetric=False
        ),
    }
    if strategy not in table:
        raise ValueError(f"unknown strategy {strategy!r}")
    return table[strategy]


def learning_rate_at(base_lr: float, decay_epochs, epoch: int) -> float:
    """Step schedule: multiply by 0.1 after each boundary epoch completes."""
    return base_lr * 0.1 ** sum(epoch > b for b in decay_epochs)


@dataclass
class RunReport:
    """Everything a finished (or aborted) run leaves behind."""

    config_hash: str
    seed: int
    epochs_run: int
    train_loss: list[float]
    lrs: list[float]
    eval_epochs: list[int]
    test_acc: list[float]
    best_acc: float
    mean_final_k_acc: float
    final_k: int
    wall_time_sec: float
    status: str = "ok"
    fail_reason: str = ""

    def summary_dict(self) -> dict:
        return {
            "schema": RUN_SUMMARY_SCHEMA,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "status": self.status,
            "fail_reason": self.fail_reason,
            "epochs_run": self.epochs_run,
            "best_acc": self.best_acc,
            "mean_final_k_acc": self.mean_final_k_acc,
            "final_k": self.final_k,
            "wall_time_sec": self.wall_time_sec,
            "train_loss": list(self.train_loss),
            "lr": list(self.lrs),
            "eval_epochs": list(self.eval_epochs),
            "test_acc": list(self.test_acc),
        }

    def epoch_csv(self) -> str:
        """Per-epoch rows; test_acc is blank on epochs without an eval."""
        acc_by_epoch = dict(zip(self.eval_epochs, self.test_acc))
        lines = [EPOCH_CSV_HEADER]
        for i in range(self.epochs_run):
            epoch = i + 1
            acc = acc_by_epoch.get(epoch)
            lines.append(
                f"{epoch},{self.train_loss[i]!r},{self.lrs[i]!r},"
                + ("" if acc is None else repr(acc))
            )
        return "\n".join(lines) + "\n"


def atomic_write_text(path, text: str) -> None:
    """Write-temp-then-rename so readers never see a half-written file."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


_DATASET_CACHE: dict[object, SplitDataset] = {}


def load_dataset(data_spec) -> SplitDataset:
    """Materialize (and memoize) the dataset behind a data spec.

    Cached datasets are shared; treat them as read-only.
    """
    cached = _DATASET_CACHE.get(data_spec)
    if cached is not None:
        return cached
    if isinstance(data_spec, SyntheticSpec):
        ds = generate(data_spec)
    elif isinstance(data_spec, FolderSpec):
        ds, _ = ingest_folder(data_spec)
    else:
        raise TypeError(f"unsupported data spec {type(data_spec).__name__}")
    _DATASET_CACHE[data_spec] = ds
    return ds


def evaluate(model: SmallConvNet, images: np.ndarray, labels: np.ndarray, batch_size: int = 256) -> float:
    """Top-1 accuracy in percent."""
    hits = 0
    for start in range(0, len(images), batch_size):
        pred = model.predict_batch(images[start : start + batch_size])
        hits += int((pred == labels[start : start + batch_size]).sum())
    return 100.0 * hits / len(images)


def run_experiment(
    exp: ExperimentConfig,
    seed: int | None = None,
    out_dir=None,
    force: bool = False,
) -> RunReport:
    """Train one seed of `exp` and report per-epoch curves.

    Mixing runs in the window after ``exp.mix_warmup_epochs`` clean epochs
    (a from-scratch net needs time to take off before it can fit composite
    targets) and before the last ``exp.mix_cooldown_epochs`` epochs (so the
    model re-converges on clean data before final measurements). The mix RNG
    stream is consumed only inside the window. A non-finite loss aborts the
    run; the partial report comes back with ``status="failed"`` (and is
    still persisted when `out_dir` is given).
    """
    if seed is None:
        seed = exp.seeds[0]
    ds = load_dataset(exp.data)
    channels, height, width = ds.image_shape
    if height != width:
        raise ValueError(f"expected square images, got {height}x{width}")
    model = SmallConvNet(
        exp.model_config(channels, height, ds.num_classes), substream(seed, "init")
    )
    optimizer = MomentumSGD(exp.lr, exp.momentum)
    order_rng = substream(seed, "order")
    mix_rng = substream(seed, "mix")
    flat_hash = config_hash(experiment_to_flat(exp))

    needs_spm = (
        exp.mix is not None
        and exp.mix.strategy == "snapmix"
        and exp.mix.label_strategy == "semantic_ratio"
    )
    n_train = len(ds.train_images)
    ones = np.ones(exp.batch_size)
    zeros = np.zeros(exp.batch_size)

    train_loss: list[float] = []
    lrs: list[float] = []
    eval_epochs: list[int] = []
    test_acc: list[float] = []
    status, fail_reason = "ok", ""
    t0 = time.perf_counter()

    for epoch in range(1, exp.epochs + 1):
        lr = learning_rate_at(exp.lr, exp.lr_decay_epochs, epoch)
        optimizer.lr = lr
        perm = order_rng.permutation(n_train)
        loss_sum, seen = 0.0, 0
        aborted = False
        mixing_now = (
            exp.mix is not None
            and epoch > exp.mix_warmup_epochs
            and epoch <= exp.epochs - exp.mix_cooldown_epochs
        )
        for start in range(0, n_train, exp.batch_size):
            idx = perm[start : start + exp.batch_size]
            imgs = ds.train_images[idx]
            labs = ds.train_labels[idx]
            try:
                if not mixing_now:
                    k = len(idx)
                    loss = train_step_arrays(
                        model, imgs, labs, labs, ones[:k], zeros[:k], optimizer
                    )
                else:
                    provider = None
                    if needs_spm:
                        spms = batch_spms(model, imgs, labs)
                        provider = spms.__getitem__
                    results = apply_mix(imgs, labs, exp.mix, mix_rng, provider)
                    loss = train_step(model, results, optimizer)
            except NonFiniteLossError as exc:
                status = "failed"
                fail_reason = f"epoch {epoch}, batch at {start}, seed {seed}: {exc}"
                logger.error("aborting run: %s", fail_reason)
                aborted = True
                break
            loss_sum += loss * len(idx)
            seen += len(idx)
        if seen:
            train_loss.append(loss_sum / seen)
            lrs.append(lr)
        if aborted:
            break
        if epoch % exp.eval_every == 0 or epoch == exp.epochs:
            eval_epochs.append(epoch)
            test_acc.append(evaluate(model, ds.test_images, ds.test_labels))

    wall = time.perf_counter() - t0
    k = min(exp.final_k, len(test_acc))
    report = RunReport(
        config_hash=flat_hash,
        seed=int(seed),
        epochs_run=len(train_loss),
        train_loss=train_loss,
        lrs=lrs,
        eval_epochs=eval_epochs,
        test_acc=test_acc,
        best_acc=max(test_acc) if test_acc else 0.0,
        mean_final_k_acc=float(np.mean(test_acc[-k:])) if k else 0.0,
        final_k=exp.final_k,
        wall_time_sec=wall,
        status=status,
        fail_reason=fail_reason,
    )
    if out_dir is not None:
        rng_states = {
            "order": order_rng.bit_generator.state,
            "mix": mix_rng.bit_generator.state,
        }
        write_run_artifacts(
            out_dir, report, exp, model=model, optimizer=optimizer, rng_states=rng_states, force=force
        )
    return report


def write_run_artifacts(
    out_dir,
    report: RunReport,
    exp: ExperimentConfig,
    model: SmallConvNet | None = None,
    optimizer: MomentumSGD | None = None,
    rng_states: dict | None = None,
    force: bool = False,
) -> Path:
    """Persist a run: config snapshot, per-epoch CSV, summary, checkpoint."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / "summary.json"
    if marker.exists() and not force:
        raise FileExistsError(f"{marker} exists; pass force=True (or --force) to overwrite")
    atomic_write_text(out / "config.cfg", canonical_render(experiment_to_flat(exp)))
    atomic_write_text(out / "epochs.csv", report.epoch_csv())
    atomic_write_text(out / "summary.json", json.dumps(report.summary_dict(), indent=2) + "\n")
    if model is not None:
        save_checkpoint(
            out / "checkpoint.npz",
            model,
            optimizer=optimizer,
            epoch=report.epochs_run,
            rng_states=rng_states,
        )
    return out


def run_many(
    exp: ExperimentConfig,
    seeds=None,
    out_root=None,
    force: bool = False,
) -> list[RunReport]:
    """One run per seed, persisted under ``out_root/seed<k>/`` when given."""
    seeds = exp.seeds if seeds is None else tuple(seeds)
    reports = []
    for seed in seeds:
        out_dir = None if out_root is None else Path(out_root) / f"seed{seed}"
        reports.append(run_experiment(exp, seed=seed, out_dir=out_dir, force=force))
    return reports


# ---------------------------------------------------------------------------
# ablation grid


@dataclass
class GridRow:
    mixing: str
    label_strategy: str
    mean_acc: float
    std_acc: float
    accs: list[float]
    config_hash: str
    reports: list[RunReport] = field(repr=False, default_factory=list)


@dataclass
class GridResult:
    rows: list[GridRow]

    CSV_HEADER = "mixing,label_strategy,mean_acc,std_acc,n_seeds,config_hash"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.mixing},{r.label_strategy},{r.mean_acc!r},{r.std_acc!r},{len(r.accs)},{r.config_hash}"
            )
        return "\n".join(lines) + "\n"

    def cell(self, mixing: str, label_strategy: str) -> GridRow:
        for r in self.rows:
            if r.mixing == mixing and r.label_strategy == label_strategy:
                return r
        raise KeyError(f"no grid cell ({mixing}, {label_strategy})")


def _summarize(reports: list[RunReport]) -> tuple[float, float, list[float]]:
    accs = [r.mean_final_k_acc for r in reports]
    return float(np.mean(accs)), float(np.std(accs)), accs


def ablation_grid(
    exp: ExperimentConfig,
    include_mixup: bool = False,
    seeds=None,
    out_dir=None,
    force: bool = False,
) -> GridResult:
    """Decouple the mixing operator from the label rule.

    Four cells: {symmetric, asymmetric} cut-and-paste x {area_ratio,
    semantic_ratio} label weights, every cell at the base config's alpha and
    switch probability so only the two factors move. The (symmetric,
    area_ratio) cell is the classic area-labeled paste, i.e. cutmix under
    another flag setting. ``include_mixup`` appends a linear-blend row at the
    same alpha for reference.
    """
    if exp.mix is None:
        raise ValueError("ablation_grid needs a base mix config for alpha / switch_prob")
    alpha, switch = exp.mix.alpha, exp.mix.switch_prob
    cells: list[tuple[str, str, MixConfig]] = []
    for mixing in ("symmetric", "asymmetric"):
        for label in ("area_ratio", "semantic_ratio"):
            cells.append(
                (
                    mixing,
                    label,
                    MixConfig(
                        "snapmix",
                        alpha=alpha,
                        switch_prob=switch,
                        label_strategy=label,
                        symmetric=(mixing == "symmetric"),
                    ),
                )
            )
    if include_mixup:
        cells.append(("mixup", "linear", MixConfig("mixup", alpha=alpha, switch_prob=switch)))

    rows = []
    for mixing, label, mix in cells:
        cell_exp = replace(exp, mix=mix)
        out_root = None if out_dir is None else Path(out_dir) / "runs" / f"{mixing}-{label}"
        reports = run_many(cell_exp, seeds=seeds, out_root=out_root, force=force)
        mean, std, accs = _summarize(reports)
        rows.append(
            GridRow(mixing, label, mean, std, accs, config_hash(experiment_to_flat(cell_exp)), reports)
        )
    result = GridResult(rows)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        atomic_write_text(out / "ablation.csv", result.to_csv())
        atomic_write_text(
            out / "summary.json",
            json.dumps(
                {
                    "schema": "mixaug-ablation/1",
                    "rows": [
                        {
                            "mixing": r.mixing,
                            "label_strategy": r.label_strategy,
                            "mean_acc": r.mean_acc,
                            "std_acc": r.std_acc,
                            "accs": r.accs,
                            "config_hash": r.config_hash,
                        }
                        for r in result.rows
                    ],
                },
                indent=2,
            )
            + "\n",
        )
    return result


# ---------------------------------------------------------------------------
# alpha sweep


@dataclass
class SweepRow:
    alpha: float
    mean_acc: float
    std_acc: float
    accs: list[float]
    config_hash: str
    reports: list[RunReport] = field(repr=False, default_factory=list)


@dataclass
class SweepResult:
    rows: list[SweepRow]

    CSV_HEADER = "alpha,mean_acc,std_acc,n_seeds,config_hash"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.rows:
            lines.append(f"{r.alpha!r},{r.mean_acc!r},{r.std_acc!r},{len(r.accs)},{r.config_hash}")
        return "\n".join(lines) + "\n"

    @property
    def spread(self) -> float:
        means = [r.mean_acc for r in self.rows]
        return max(means) - min(means)

    @property
    def grand_mean(self) -> float:
        return float(np.mean([r.mean_acc for r in self.rows]))


def alpha_sweep(
    exp: ExperimentConfig,
    alphas=DEFAULT_SWEEP_ALPHAS,
    seeds=None,
    out_dir=None,
    force: bool = False,
) -> SweepResult:
    """Multi-seed accuracy for each mixing-concentration alpha.

    The summary records the max-minus-min spread of the per-alpha means so
    sensitivity to alpha can be eyeballed at a glance.
    """
    if exp.mix is None:
        raise ValueError("alpha_sweep needs a mix config to vary alpha on")
    rows = []
    for alpha in alphas:
        cell_exp = replace(exp, mix=replace(exp.mix, alpha=float(alpha)))
        out_root = None if out_dir is None else Path(out_dir) / "runs" / f"alpha{alpha}"
        reports = run_many(cell_exp, seeds=seeds, out_root=out_root, force=force)
        mean, std, accs = _summarize(reports)
        rows.append(
            SweepRow(float(alpha), mean, std, accs, config_hash(experiment_to_flat(cell_exp)), reports)
        )
    result = SweepResult(rows)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        atomic_write_text(out / "sweep.csv", result.to_csv())
        atomic_write_text(
            out / "summary.json",
            json.dumps(
                {
                    "schema": "mixaug-sweep/1",
                    "grand_mean": result.grand_mean,
                    "spread": result.spread,
                    "rows": [
                        {
                            "alpha": r.alpha,
                            "mean_acc": r.mean_acc,
                            "std_acc": r.std_acc,
                            "accs": r.accs,
                            "config_hash": r.config_hash,
                        }
                        for r in result.rows
                    ],
                },
                indent=2,
            )
            + "\n",
        )
    return result


# ---------------------------------------------------------------------------
# label-noise benchmark


@dataclass
class NoiseBenchResult:
    mae_semantic: float
    mae_area: float
    trials: int

    def to_dict(self) -> dict:
        return {
            "schema": "mixaug-noise-bench/1",
            "trials": self.trials,
            "mae_semantic": self.mae_semantic,
            "mae_area": self.mae_area,
        }


def noise_benchmark(
    dataset: SplitDataset,
    mix: MixConfig,
    model: SmallConvNet,
    trials: int,
    rng: np.random.Generator,
    split: str = "test",
) -> NoiseBenchResult:
    """Score both label-weight rules against ground truth.

    Each trial samples a source image b and boxes the way the mixing policy
    would, then compares two estimates of the semantic share cut from b
    inside box_b: the semantic-ratio estimate (model SPM mass in box_b) and
    the area-ratio estimate (realized pixel share of box_b), each against
    the mask truth. Reported numbers are mean absolute errors; smaller means
    the rule writes less noise into training labels.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    images, labels, masks = dataset.arrays(split)
    if masks is None:
        raise ValueError(f"{split} split carries no semantic masks")
    n, _, height, width = images.shape

    # One SPM per distinct image, with its true class row, computed lazily.
    spm_cache: dict[int, np.ndarray] = {}
    head = model.params["head.w"]

    def spm_of(i: int) -> np.ndarray:
        got = spm_cache.get(i)
        if got is None:
            _, feats, _ = model.forward_batch(images[i : i + 1])
            got = make_spm(compute_cam(feats[0], head[int(labels[i])], height, width))
            spm_cache[i] = got
        return got

    err_sem, err_area = 0.0, 0.0
    for _ in range(trials):
        b = int(rng.integers(0, n))
        lam_a = sample_lambda(mix.alpha, rng)
        box_a = sample_box(lam_a, width, height, rng)
        if mix.strategy == "snapmix" and not mix.symmetric:
            lam_b = sample_lambda(mix.alpha, rng)
            box_b = sample_box(lam_b, width, height, rng)
        else:
            box_b = box_a
        truth = 0.0 if box_b.is_empty else mask_box_ratio(masks[b], box_b)
        est_sem = semantic_ratio_labels(spm_of(b), box_a, spm_of(b), box_b)[1]
        est_area = area_ratio_labels(box_b)[1]
        err_sem += abs(est_sem - truth)
        err_area += abs(est_area - truth)
    return NoiseBenchResult(err_sem / trials, err_area / trials, trials)


# ---------------------------------------------------------------------------
# table rendering


def render_table(header: list[str], rows: list[list[str]]) -> str:
    """Fixed-width text table for terminal output."""
    cells = [header] + [[str(c) for c in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    out_lines = []
    for r, row in enumerate(cells):
        out_lines.append("  ".join(c.ljust(widths[i]) for i, c in enumerate(row)).rstrip())
        if r == 0:
            out_lines.append("  ".join("-" * widths[i] for i in range(len(header))))
    return "\n".join(out_lines) + "\n"
