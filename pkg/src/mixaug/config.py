"""Flat key = value run configuration.

Config files are plain text: one ``section.key = value`` per line, ``#``
comments, blank lines ignored. Overrides use the same ``key=value`` syntax.
Unknown keys are rejected by name. The resolved configuration (defaults
filled in, overrides applied, auto values settled) has one canonical
rendering: keys sorted, one per line. The config hash is the sha256 of that
rendering minus the ``run.`` section, so every seed of the same experiment
shares a hash while any substantive change produces a new one.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .augment import MixConfig
from .data import FolderSpec, SyntheticSpec
from .net import ModelConfig

__all__ = [
    "ConfigError",
    "SCHEMA",
    "parse_config_text",
    "parse_config_file",
    "parse_override",
    "resolve",
    "canonical_render",
    "config_hash",
    "ExperimentConfig",
    "build_experiment",
    "experiment_to_flat",
]


class ConfigError(ValueError):
    """Bad configuration input: unknown key, bad value, missing file."""


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int_list(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(int(part.strip()) for part in text.split(","))


def _float_list(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(part.strip()) for part in text.split(","))


# key -> (parser, default). Defaults are the desk-scale training recipe.
SCHEMA: dict[str, tuple] = {
    "data.kind": (str, "synthetic"),
    "data.num_classes": (int, 10),
    "data.image_size": (int, 32),
    "data.cue_size": (int, 4),
    "data.background_alphabet": (int, 4),
    "data.noise_std": (float, 0.05),
    "data.samples_per_class": (int, 30),
    "data.seed": (int, 1234),
    "data.channels": (int, 3),
    "data.path": (str, ""),
    "data.resize": (int, 512),
    "data.crop": (int, 448),
    "data.flip": (_bool, True),
    "data.normalize": (str, "unit"),
    "model.widths": (_int_list, (16, 32, 32)),
    "model.kernel": (int, 3),
    "model.stride": (int, 2),
    "model.mid_branch": (_bool, False),
    "model.mid_width": (int, 16),
    "model.fusion": (str, "sum"),
    "mix.strategy": (str, "snapmix"),
    "mix.alpha": (float, 5.0),
    "mix.switch_prob": (float, 0.5),
    "mix.label_strategy": (str, "auto"),
    "mix.symmetric": (_bool, False),
    "mix.warmup_epochs": (int, 0),
    "mix.cooldown_epochs": (int, 0),
    "train.epochs": (int, 60),
    "train.lr": (float, 0.01),
    "train.momentum": (float, 0.9),
    "train.batch_size": (int, 32),
    "train.lr_decay_epochs": (_int_list, (24, 48)),
    "train.eval_every": (int, 1),
    "train.final_k": (int, 10),
    "run.seeds": (_int_list, (1, 2, 3)),
}

_STRATEGY_CHOICES = ("none", "mixup", "cutmix", "cutout", "snapmix")


def parse_config_text(text: str, origin: str = "<config>") -> dict[str, object]:
    """Parse raw lines into typed values; unknown keys fail by name."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in SCHEMA:
            raise ConfigError(f"{origin}:{lineno}: unknown config key {key!r}")
        parser = SCHEMA[key][0]
        try:
            values[key] = parser(val)
        except ValueError as exc:
            raise ConfigError(f"{origin}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def parse_config_file(path) -> dict[str, object]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, origin=str(path))


def parse_override(spec: str) -> tuple[str, object]:
    """Parse one ``key=value`` override."""
    if "=" not in spec:
        raise ConfigError(f"override must be key=value, got {spec!r}")
    key, _, val = spec.partition("=")
    key = key.strip()
    if key not in SCHEMA:
        raise ConfigError(f"unknown config key {key!r} in override")
    try:
        return key, SCHEMA[key][0](val.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from exc


def resolve(values: dict[str, object]) -> dict[str, object]:
    """Fill defaults and settle auto values; returns the full flat config."""
    cfg = {key: default for key, (_, default) in SCHEMA.items()}
    for key, val in values.items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        cfg[key] = val
    if cfg["mix.strategy"] not in _STRATEGY_CHOICES:
        raise ConfigError(
            f"mix.strategy must be one of {_STRATEGY_CHOICES}, got {cfg['mix.strategy']!r}"
        )
    if cfg["mix.label_strategy"] == "auto":
        cfg["mix.label_strategy"] = (
            "semantic_ratio" if cfg["mix.strategy"] == "snapmix" else "area_ratio"
        )
    if cfg["data.kind"] not in ("synthetic", "folder"):
        raise ConfigError(f"data.kind must be 'synthetic' or 'folder', got {cfg['data.kind']!r}")
    if cfg["data.kind"] == "folder" and not cfg["data.path"]:
        raise ConfigError("data.kind = folder requires data.path")
    return cfg


def _render_value(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        return ",".join(_render_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def canonical_render(cfg: dict[str, object]) -> str:
    """The one blessed text form: sorted ``key = value`` lines."""
    lines = [f"{key} = {_render_value(cfg[key])}" for key in sorted(cfg)]
    return "\n".join(lines) + "\n"


def config_hash(cfg: dict[str, object]) -> str:
    """sha256 over the canonical rendering, run.* keys excluded."""
    hashed = {k: v for k, v in cfg.items() if not k.startswith("run.")}
    return hashlib.sha256(canonical_render(hashed).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: dataset, model shape, mixing policy, training recipe."""

    data: SyntheticSpec | FolderSpec
    model_widths: tuple[int, ...]
    model_kernel: int
    model_stride: int
    mid_branch: bool
    mid_width: int
    fusion: str
    mix: MixConfig | None
    mix_warmup_epochs: int
    mix_cooldown_epochs: int
    epochs: int
    lr: float
    momentum: float
    batch_size: int
    lr_decay_epochs: tuple[int, ...]
    eval_every: int
    final_k: int
    seeds: tuple[int, ...]

    def model_config(self, in_channels: int, image_size: int, num_classes: int) -> ModelConfig:
        return ModelConfig(
            in_channels=in_channels,
            image_size=image_size,
            num_classes=num_classes,
            widths=self.model_widths,
            kernel=self.model_kernel,
            stride=self.model_stride,
            mid_branch=self.mid_branch,
            mid_width=self.mid_width,
            fusion=self.fusion,
        )


def experiment_to_flat(exp: "ExperimentConfig") -> dict[str, object]:
    """Render a typed experiment back to the resolved flat form.

    Sections not in play (folder keys for a synthetic dataset and vice
    versa, mix keys for the clean baseline) keep their schema defaults so
    every experiment has exactly one flat form.
    """
    cfg = {key: default for key, (_, default) in SCHEMA.items()}
    if isinstance(exp.data, SyntheticSpec):
        cfg["data.kind"] = "synthetic"
        cfg["data.num_classes"] = exp.data.num_classes
        cfg["data.image_size"] = exp.data.image_size
        cfg["data.cue_size"] = exp.data.cue_size
        cfg["data.background_alphabet"] = exp.data.background_alphabet
        cfg["data.noise_std"] = exp.data.noise_std
        cfg["data.samples_per_class"] = exp.data.samples_per_class
        cfg["data.seed"] = exp.data.seed
        cfg["data.channels"] = exp.data.channels
    else:
        cfg["data.kind"] = "folder"
        cfg["data.path"] = exp.data.path
        cfg["data.resize"] = exp.data.resize
        cfg["data.crop"] = exp.data.crop
        cfg["data.flip"] = exp.data.flip
        cfg["data.normalize"] = exp.data.normalize
        cfg["data.seed"] = exp.data.seed
    cfg["model.widths"] = tuple(exp.model_widths)
    cfg["model.kernel"] = exp.model_kernel
    cfg["model.stride"] = exp.model_stride
    cfg["model.mid_branch"] = exp.mid_branch
    cfg["model.mid_width"] = exp.mid_width
    cfg["model.fusion"] = exp.fusion
    if exp.mix is None:
        cfg["mix.strategy"] = "none"
        cfg["mix.label_strategy"] = "area_ratio"
    else:
        cfg["mix.strategy"] = exp.mix.strategy
        cfg["mix.alpha"] = exp.mix.alpha
        cfg["mix.switch_prob"] = exp.mix.switch_prob
        cfg["mix.label_strategy"] = exp.mix.label_strategy
        cfg["mix.symmetric"] = exp.mix.symmetric
    cfg["mix.warmup_epochs"] = exp.mix_warmup_epochs
    cfg["mix.cooldown_epochs"] = exp.mix_cooldown_epochs
    cfg["train.epochs"] = exp.epochs
    cfg["train.lr"] = exp.lr
    cfg["train.momentum"] = exp.momentum
    cfg["train.batch_size"] = exp.batch_size
    cfg["train.lr_decay_epochs"] = tuple(exp.lr_decay_epochs)
    cfg["train.eval_every"] = exp.eval_every
    cfg["train.final_k"] = exp.final_k
    cfg["run.seeds"] = tuple(exp.seeds)
    return cfg


def build_experiment(cfg: dict[str, object]) -> ExperimentConfig:
    """Turn a resolved flat config into typed experiment settings."""
    try:
        if cfg["data.kind"] == "synthetic":
            data: SyntheticSpec | FolderSpec = SyntheticSpec(
                num_classes=cfg["data.num_classes"],
                image_size=cfg["data.image_size"],
                cue_size=cfg["data.cue_size"],
                background_alphabet=cfg["data.background_alphabet"],
                noise_std=cfg["data.noise_std"],
                samples_per_class=cfg["data.samples_per_class"],
                seed=cfg["data.seed"],
                channels=cfg["data.channels"],
            )
        else:
            data = FolderSpec(
                path=cfg["data.path"],
                resize=cfg["data.resize"],
                crop=cfg["data.crop"],
                flip=cfg["data.flip"],
                normalize=cfg["data.normalize"],
                seed=cfg["data.seed"],
            )
        mix = None
        if cfg["mix.strategy"] != "none":
            mix = MixConfig(
                strategy=cfg["mix.strategy"],
                alpha=cfg["mix.alpha"],
                switch_prob=cfg["mix.switch_prob"],
                label_strategy=cfg["mix.label_strategy"],
                symmetric=cfg["mix.symmetric"],
            )
        warmup = cfg["mix.warmup_epochs"]
        if warmup < 0:
            raise ConfigError(f"mix.warmup_epochs must be >= 0, got {warmup}")
        cooldown = cfg["mix.cooldown_epochs"]
        if cooldown < 0:
            raise ConfigError(f"mix.cooldown_epochs must be >= 0, got {cooldown}")
        return ExperimentConfig(
            data=data,
            model_widths=tuple(cfg["model.widths"]),
            model_kernel=cfg["model.kernel"],
            model_stride=cfg["model.stride"],
            mid_branch=cfg["model.mid_branch"],
            mid_width=cfg["model.mid_width"],
            fusion=cfg["model.fusion"],
            mix=mix,
            mix_warmup_epochs=warmup,
            mix_cooldown_epochs=cooldown,
            epochs=cfg["train.epochs"],
            lr=cfg["train.lr"],
            momentum=cfg["train.momentum"],
            batch_size=cfg["train.batch_size"],
            lr_decay_epochs=tuple(cfg["train.lr_decay_epochs"]),
            eval_every=cfg["train.eval_every"],
            final_k=cfg["train.final_k"],
            seeds=tuple(cfg["run.seeds"]),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
