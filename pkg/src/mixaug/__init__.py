"""mixaug: semantically-weighted data mixing for image classifiers.

The package cuts a patch from one training image, pastes it into another,
and weights the two labels by how much *evidence* each side contributes --
measured with the model's own class activation maps -- rather than by raw
pixel area. Linear blending, area-labeled pasting, and erasing are included
as baselines, along with a pure-numpy CNN, a synthetic dataset with
ground-truth relevance masks, and an experiment harness (single runs,
operator/label ablation grid, concentration sweep, label-noise benchmark).
"""

from .augment import (
    LABEL_STRATEGIES,
    STRATEGIES,
    BoxRegion,
    MixConfig,
    MixResult,
    apply_mix,
    area_ratio_labels,
    cutmix,
    cutout,
    mix_result_arrays,
    mixup,
    sample_box,
    sample_lambda,
    semantic_ratio_labels,
    snapmix_image,
    transform_patch,
)
from .cam import batch_spms, check_spm, compute_cam, make_spm
from .config import (
    ConfigError,
    ExperimentConfig,
    build_experiment,
    canonical_render,
    config_hash,
    experiment_to_flat,
    parse_config_file,
    parse_config_text,
    parse_override,
    resolve,
)
from .data import (
    FolderSpec,
    GroundTruthSample,
    SplitDataset,
    SyntheticSpec,
    generate,
    ingest_folder,
    mask_box_ratio,
    true_semantic_ratio,
    write_manifest,
)
from .harness import (
    DEFAULT_SWEEP_ALPHAS,
    GridResult,
    NoiseBenchResult,
    RunReport,
    SweepResult,
    ablation_grid,
    alpha_sweep,
    default_mix_config,
    evaluate,
    learning_rate_at,
    load_dataset,
    noise_benchmark,
    run_experiment,
    run_many,
)
from .interpolation import bilinear_resize
from .net import (
    MixedTarget,
    ModelConfig,
    MomentumSGD,
    NonFiniteLossError,
    SmallConvNet,
    load_checkpoint,
    mixed_loss,
    save_checkpoint,
    train_step,
    train_step_arrays,
)
from .render import heat_to_rgb, mix_panel, overlay_heat, save_png
from .seeding import substream

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # mixing
    "STRATEGIES",
    "LABEL_STRATEGIES",
    "BoxRegion",
    "MixConfig",
    "MixResult",
    "sample_lambda",
    "sample_box",
    "mixup",
    "cutmix",
    "cutout",
    "snapmix_image",
    "transform_patch",
    "area_ratio_labels",
    "semantic_ratio_labels",
    "apply_mix",
    "mix_result_arrays",
    # relevance maps
    "compute_cam",
    "make_spm",
    "check_spm",
    "batch_spms",
    "bilinear_resize",
    # model
    "ModelConfig",
    "MixedTarget",
    "SmallConvNet",
    "MomentumSGD",
    "NonFiniteLossError",
    "mixed_loss",
    "train_step",
    "train_step_arrays",
    "save_checkpoint",
    "load_checkpoint",
    # data
    "SyntheticSpec",
    "FolderSpec",
    "GroundTruthSample",
    "SplitDataset",
    "generate",
    "ingest_folder",
    "mask_box_ratio",
    "true_semantic_ratio",
    "write_manifest",
    # config
    "ConfigError",
    "ExperimentConfig",
    "parse_config_text",
    "parse_config_file",
    "parse_override",
    "resolve",
    "canonical_render",
    "config_hash",
    "build_experiment",
    "experiment_to_flat",
    # experiments
    "DEFAULT_SWEEP_ALPHAS",
    "RunReport",
    "GridResult",
    "SweepResult",
    "NoiseBenchResult",
    "default_mix_config",
    "learning_rate_at",
    "evaluate",
    "load_dataset",
    "run_experiment",
    "run_many",
    "ablation_grid",
    "alpha_sweep",
    "noise_benchmark",
    # rendering
    "heat_to_rgb",
    "overlay_heat",
    "mix_panel",
    "save_png",
    # seeding
    "substream",
]
