"""Small CAM-compatible convolutional classifier, pure numpy.

The backbone is a short stack of strided 3x3 conv + leaky-ReLU blocks; the
head is a bias-free linear layer over globally averaged features, which is
exactly the shape class-activation mapping needs (see :mod:`mixaug.cam`). An optional
auxiliary branch (1x1 conv, global max pool, linear) taps the penultimate
stage; its loss trains only its own three tensors because its gradient is
never propagated into the backbone. Forward, backward, and the momentum-SGD
update are all written out explicitly, so gradients can be verified against
finite differences and checkpoints round-trip bit-for-bit.

Supervision is a two-label target: ``mixed_loss`` charges cross-entropy
against ``label_a`` weighted by ``rho_a`` plus cross-entropy against
``label_b`` weighted by ``rho_b``. With (rho_a, rho_b) = (1, 0) it is plain
cross-entropy; with both weights zero the loss and its gradient vanish.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .augment import MixResult, mix_result_arrays

__all__ = [
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
]


# Slope of the negative half of the activation. A hard cutoff at zero lets a
# from-scratch net fall into an all-dead state (every pre-activation negative
# -> zero features, zero logits, zero gradients) that no step can leave; the
# leak keeps that fixed point reachable only asymptotically.
LEAKY_SLOPE = 0.1


class NonFiniteLossError(RuntimeError):
    """Raised when a training step produces a NaN or infinite loss."""

    def __init__(self, loss: float, detail: str = ""):
        self.loss = loss
        msg = f"non-finite training loss {loss!r}"
        if detail:
            msg = f"{msg} ({detail})"
        super().__init__(msg)


@dataclass(frozen=True)
class ModelConfig:
    """Architecture settings.

    ``widths`` gives the channel count of each conv stage; every stage
    downsamples by ``stride``. ``fusion`` picks how main and auxiliary
    logits combine at prediction time: plain sum, or averaged softmax
    probabilities with ``"softmax_avg"``.
    """

    in_channels: int
    image_size: int
    num_classes: int
    widths: tuple[int, ...] = (16, 32, 32)
    kernel: int = 3
    stride: int = 2
    mid_branch: bool = False
    mid_width: int = 16
    fusion: str = "sum"

    def __post_init__(self) -> None:
        if self.in_channels not in (1, 3):
            raise ValueError(f"in_channels must be 1 or 3, got {self.in_channels}")
        if self.num_classes < 2:
            raise ValueError(f"need at least 2 classes, got {self.num_classes}")
        if not self.widths or any(w < 1 for w in self.widths):
            raise ValueError(f"widths must be positive, got {self.widths}")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ValueError(f"kernel must be odd and positive, got {self.kernel}")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if self.mid_branch and len(self.widths) < 2:
            raise ValueError("the auxiliary branch needs at least 2 stages")
        if self.mid_branch and self.mid_width < 1:
            raise ValueError(f"mid_width must be positive, got {self.mid_width}")
        if self.fusion not in ("sum", "softmax_avg"):
            raise ValueError(f"fusion must be 'sum' or 'softmax_avg', got {self.fusion!r}")
        if min(self.grid_sizes()) < 1:
            raise ValueError(
                f"image size {self.image_size} collapses below 1x1 after {len(self.widths)} stages"
            )

    def grid_sizes(self) -> list[int]:
        """Spatial side length after each stage."""
        size = self.image_size
        sizes = []
        pad = self.kernel // 2
        for _ in self.widths:
            size = (size + 2 * pad - self.kernel) // self.stride + 1
            sizes.append(size)
        return sizes


@dataclass(frozen=True)
class MixedTarget:
    """Two-label supervision for one sample."""

    label_a: int
    label_b: int
    rho_a: float
    rho_b: float


# ---------------------------------------------------------------------------
# layer primitives


def _im2col(xpad: np.ndarray, k: int, stride: int, oh: int, ow: int) -> np.ndarray:
    n, c = xpad.shape[:2]
    cols = np.empty((n, c, k, k, oh, ow), dtype=np.float64)
    for i in range(k):
        for j in range(k):
            cols[:, :, i, j] = xpad[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride]
    return cols.reshape(n, c * k * k, oh * ow)


def _col2im(
    dcols: np.ndarray, x_shape: tuple[int, ...], k: int, stride: int, pad: int, oh: int, ow: int
) -> np.ndarray:
    n, c, h, w = x_shape
    dxp = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=np.float64)
    dc = dcols.reshape(n, c, k, k, oh, ow)
    for i in range(k):
        for j in range(k):
            dxp[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride] += dc[:, :, i, j]
    if pad == 0:
        return dxp
    return dxp[:, :, pad : pad + h, pad : pad + w]


def _conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int):
    f, _, k, _ = w.shape
    pad = k // 2
    n, _, h, width = x.shape
    oh = (h + 2 * pad - k) // stride + 1
    ow = (width + 2 * pad - k) // stride + 1
    xpad = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    cols = _im2col(xpad, k, stride, oh, ow)
    out = np.matmul(w.reshape(f, -1), cols) + b[None, :, None]
    return out.reshape(n, f, oh, ow), cols


def _conv_backward(
    dout: np.ndarray, cols: np.ndarray, x_shape: tuple[int, ...], w: np.ndarray, stride: int
):
    f, _, k, _ = w.shape
    pad = k // 2
    n = dout.shape[0]
    oh, ow = dout.shape[2], dout.shape[3]
    dflat = dout.reshape(n, f, oh * ow)
    dw = np.einsum("nfl,nkl->fk", dflat, cols).reshape(w.shape)
    db = dout.sum(axis=(0, 2, 3))
    dcols = np.matmul(w.reshape(f, -1).T, dflat)
    dx = _col2im(dcols, x_shape, k, stride, pad, oh, ow)
    return dw, db, dx


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    m = logits.max(axis=1, keepdims=True)
    shifted = logits - m
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(_log_softmax(logits))


def _check_targets(num_classes: int, la, lb, ra, rb) -> None:
    for name, lab in (("label_a", la), ("label_b", lb)):
        if lab.min() < 0 or lab.max() >= num_classes:
            raise ValueError(f"{name} outside [0, {num_classes})")
    for name, rho in (("rho_a", ra), ("rho_b", rb)):
        if (rho < 0).any() or (rho > 1).any():
            raise ValueError(f"{name} outside [0, 1]")


def _mixed_ce_with_grad(logits: np.ndarray, la, lb, ra, rb) -> tuple[float, np.ndarray]:
    """Mean two-label cross-entropy and its gradient w.r.t. the logits."""
    n, k = logits.shape
    _check_targets(k, la, lb, ra, rb)
    logp = _log_softmax(logits)
    rows = np.arange(n)
    loss = float(np.mean(-(ra * logp[rows, la] + rb * logp[rows, lb])))
    grad = np.exp(logp) * (ra + rb)[:, None]
    # Sequential fancy-index updates so label_a == label_b subtracts both weights.
    grad[rows, la] -= ra
    grad[rows, lb] -= rb
    return loss, grad / n


def mixed_loss(logits: np.ndarray, target: MixedTarget) -> float:
    """Two-label cross-entropy for a single logit vector.

    ``rho_a * ce(logits, label_a) + rho_b * ce(logits, label_b)`` with
    softmax cross-entropy. Reduces to plain cross-entropy at (1, 0) and to
    exactly zero when both weights are zero.
    """
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1:
        raise ValueError(f"logits must be 1-D, got shape {z.shape}")
    loss, _ = _mixed_ce_with_grad(
        z[None, :],
        np.array([target.label_a]),
        np.array([target.label_b]),
        np.array([float(target.rho_a)]),
        np.array([float(target.rho_b)]),
    )
    return loss


# ---------------------------------------------------------------------------
# the model


class SmallConvNet:
    """Strided-conv classifier with a GAP linear head and optional aux branch.

    Parameters are plain float64 arrays in ``self.params``:
    ``conv{i}.w`` / ``conv{i}.b`` per stage, ``head.w`` of shape
    ``[num_classes, depth]`` (no bias), and when the auxiliary branch is on,
    ``mid.conv.w`` / ``mid.conv.b`` / ``mid.head.w``. The head starts at
    zero, so an untrained model emits all-zero activation maps and its
    semantic-percent maps fall back to uniform.
    """

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        self.config = config
        self.params: dict[str, np.ndarray] = {}
        c_in = config.in_channels
        k = config.kernel
        for i, width in enumerate(config.widths):
            fan_in = c_in * k * k
            self.params[f"conv{i}.w"] = rng.normal(0.0, np.sqrt(2.0 / fan_in), (width, c_in, k, k))
            self.params[f"conv{i}.b"] = np.zeros(width)
            c_in = width
        self.params["head.w"] = np.zeros((config.num_classes, config.widths[-1]))
        if config.mid_branch:
            c_pen = config.widths[-2]
            self.params["mid.conv.w"] = rng.normal(
                0.0, np.sqrt(2.0 / c_pen), (config.mid_width, c_pen)
            )
            self.params["mid.conv.b"] = np.zeros(config.mid_width)
            self.params["mid.head.w"] = np.zeros((config.num_classes, config.mid_width))

    @property
    def num_params(self) -> int:
        return sum(v.size for v in self.params.values())

    # -- forward ------------------------------------------------------------

    def _forward(self, x: np.ndarray, want_caches: bool):
        cfg = self.config
        acts = [np.asarray(x, dtype=np.float64)]
        pres, cols_list = [], []
        for i in range(len(cfg.widths)):
            pre, cols = _conv_forward(
                acts[-1], self.params[f"conv{i}.w"], self.params[f"conv{i}.b"], cfg.stride
            )
            acts.append(np.where(pre > 0.0, pre, LEAKY_SLOPE * pre))
            if want_caches:
                pres.append(pre)
                cols_list.append(cols)
        feats = acts[-1]
        gap = feats.mean(axis=(2, 3))
        logits = gap @ self.params["head.w"].T

        mid_logits = None
        mid_cache = None
        if cfg.mid_branch:
            xp = acts[-2]
            z = np.einsum("mc,nchw->nmhw", self.params["mid.conv.w"], xp)
            z = z + self.params["mid.conv.b"][None, :, None, None]
            flat = z.reshape(z.shape[0], z.shape[1], -1)
            idx = flat.argmax(axis=2)
            pooled = np.take_along_axis(flat, idx[:, :, None], axis=2)[:, :, 0]
            mid_logits = pooled @ self.params["mid.head.w"].T
            if want_caches:
                mid_cache = (xp, z.shape, idx, pooled)

        caches = None
        if want_caches:
            caches = {"acts": acts, "pres": pres, "cols": cols_list, "gap": gap, "mid": mid_cache}
        return logits, feats, mid_logits, caches

    def forward_batch(self, images: np.ndarray):
        """Inference pass: (logits [n,k], features [n,d,h,w], mid logits or None)."""
        x = np.asarray(images, dtype=np.float64)
        if x.ndim != 4:
            raise ValueError(f"images must be [n, channels, height, width], got {x.shape}")
        if x.shape[1] != self.config.in_channels:
            raise ValueError(f"expected {self.config.in_channels} channels, got {x.shape[1]}")
        logits, feats, mid_logits, _ = self._forward(x, want_caches=False)
        return logits, feats, mid_logits

    def forward(self, image: np.ndarray):
        """Single-image forward: (logits [k], features [d,h,w], mid logits or None)."""
        img = np.asarray(image, dtype=np.float64)
        if img.ndim != 3:
            raise ValueError(f"image must be [channels, height, width], got {img.shape}")
        logits, feats, mid_logits, _ = self._forward(img[None], want_caches=False)
        return logits[0], feats[0], (None if mid_logits is None else mid_logits[0])

    # -- loss and gradients ---------------------------------------------------

    def loss_and_grads(
        self,
        images: np.ndarray,
        label_a: np.ndarray,
        label_b: np.ndarray,
        rho_a: np.ndarray,
        rho_b: np.ndarray,
        branch_loss_weights: tuple[float, float] = (1.0, 1.0),
    ) -> tuple[float, dict[str, np.ndarray]]:
        """Mean mixed loss over a batch plus gradients for every parameter.

        The total is ``w_main * main + w_mid * mid`` per
        ``branch_loss_weights``; the auxiliary term exists only when the
        branch does. The auxiliary gradient stops at its 1x1 conv, so
        backbone tensors see gradient from the main loss alone.
        """
        cfg = self.config
        x = np.asarray(images, dtype=np.float64)
        la = np.asarray(label_a, dtype=np.int64)
        lb = np.asarray(label_b, dtype=np.int64)
        ra = np.asarray(rho_a, dtype=np.float64)
        rb = np.asarray(rho_b, dtype=np.float64)
        w_main, w_mid = branch_loss_weights

        logits, feats, mid_logits, caches = self._forward(x, want_caches=True)
        main_loss, dlogits = _mixed_ce_with_grad(logits, la, lb, ra, rb)
        total = w_main * main_loss
        grads: dict[str, np.ndarray] = {}

        dlogits = w_main * dlogits
        gap = caches["gap"]
        grads["head.w"] = dlogits.T @ gap
        dgap = dlogits @ self.params["head.w"]
        n, d, fh, fw = feats.shape
        dact = dgap[:, :, None, None] / (fh * fw)

        if cfg.mid_branch:
            mid_loss, dmid = _mixed_ce_with_grad(mid_logits, la, lb, ra, rb)
            total += w_mid * mid_loss
            dmid = w_mid * dmid
            xp, z_shape, idx, pooled = caches["mid"]
            grads["mid.head.w"] = dmid.T @ pooled
            dpooled = dmid @ self.params["mid.head.w"]
            dflat = np.zeros((z_shape[0], z_shape[1], z_shape[2] * z_shape[3]))
            np.put_along_axis(dflat, idx[:, :, None], dpooled[:, :, None], axis=2)
            dz = dflat.reshape(z_shape)
            grads["mid.conv.w"] = np.einsum("nmhw,nchw->mc", dz, xp)
            grads["mid.conv.b"] = dz.sum(axis=(0, 2, 3))
            # No gradient w.r.t. xp: the branch never trains the backbone.

        for i in reversed(range(len(cfg.widths))):
            dpre = dact * np.where(caches["pres"][i] > 0.0, 1.0, LEAKY_SLOPE)
            dw, db, dact = _conv_backward(
                dpre, caches["cols"][i], caches["acts"][i].shape, self.params[f"conv{i}.w"], cfg.stride
            )
            grads[f"conv{i}.w"] = dw
            grads[f"conv{i}.b"] = db
        return total, grads

    # -- prediction -----------------------------------------------------------

    def predict_batch(self, images: np.ndarray) -> np.ndarray:
        """Class indices; ties resolve to the lowest index."""
        logits, _, mid_logits = self.forward_batch(images)
        if mid_logits is None:
            scores = logits
        elif self.config.fusion == "softmax_avg":
            scores = 0.5 * (_softmax(logits) + _softmax(mid_logits))
        else:
            scores = logits + mid_logits
        return np.argmax(scores, axis=1)

    def predict(self, image: np.ndarray) -> int:
        img = np.asarray(image, dtype=np.float64)
        if img.ndim != 3:
            raise ValueError(f"image must be [channels, height, width], got {img.shape}")
        return int(self.predict_batch(img[None])[0])


# ---------------------------------------------------------------------------
# optimization


class MomentumSGD:
    """Classic momentum: v <- momentum * v + g; p <- p - lr * v."""

    def __init__(self, lr: float, momentum: float = 0.9):
        if lr < 0:
            raise ValueError(f"lr must be non-negative, got {lr}")
        if not (0.0 <= momentum < 1.0):
            raise ValueError(f"momentum must be in [0, 1), got {momentum}")
        self.lr = float(lr)
        self.momentum = float(momentum)
        self.velocity: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        for name in sorted(grads):
            v = self.velocity.get(name)
            if v is None:
                v = np.zeros_like(params[name])
                self.velocity[name] = v
            v *= self.momentum
            v += grads[name]
            params[name] -= self.lr * v


def train_step_arrays(
    model: SmallConvNet,
    images: np.ndarray,
    label_a: np.ndarray,
    label_b: np.ndarray,
    rho_a: np.ndarray,
    rho_b: np.ndarray,
    optimizer: MomentumSGD,
    branch_loss_weights: tuple[float, float] = (1.0, 1.0),
) -> float:
    """One momentum-SGD update on pre-stacked arrays; returns the loss."""
    loss, grads = model.loss_and_grads(
        images, label_a, label_b, rho_a, rho_b, branch_loss_weights
    )
    if not np.isfinite(loss):
        raise NonFiniteLossError(loss)
    optimizer.step(model.params, grads)
    return loss


def train_step(
    model: SmallConvNet,
    batch: Sequence[MixResult],
    optimizer: MomentumSGD,
    branch_loss_weights: tuple[float, float] = (1.0, 1.0),
) -> float:
    """One update on a batch of mixed samples; returns the scalar loss."""
    images, la, lb, ra, rb = mix_result_arrays(batch)
    return train_step_arrays(model, images, la, lb, ra, rb, optimizer, branch_loss_weights)


# ---------------------------------------------------------------------------
# checkpoints

CHECKPOINT_FORMAT = "mixaug-checkpoint/1"


def save_checkpoint(
    path,
    model: SmallConvNet,
    optimizer: MomentumSGD | None = None,
    epoch: int = 0,
    rng_states: dict | None = None,
) -> None:
    """Write parameters, optimizer state, and RNG states losslessly to .npz."""
    meta = {
        "format": CHECKPOINT_FORMAT,
        "config": asdict(model.config),
        "epoch": int(epoch),
        "rng_states": rng_states or {},
        "optimizer": None
        if optimizer is None
        else {"lr": optimizer.lr, "momentum": optimizer.momentum},
    }
    arrays = {f"param:{k}": v for k, v in model.params.items()}
    if optimizer is not None:
        arrays.update({f"velocity:{k}": v for k, v in optimizer.velocity.items()})
    np.savez(path, __meta__=np.array(json.dumps(meta)), **arrays)


def load_checkpoint(path) -> tuple[SmallConvNet, MomentumSGD | None, dict]:
    """Rebuild a model (and optimizer, if saved) bit-for-bit from .npz."""
    with np.load(path, allow_pickle=False) as blob:
        meta = json.loads(str(blob["__meta__"]))
        if meta.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"not a recognized checkpoint: format {meta.get('format')!r}")
        cfg_dict = dict(meta["config"])
        cfg_dict["widths"] = tuple(cfg_dict["widths"])
        config = ModelConfig(**cfg_dict)
        model = SmallConvNet(config, np.random.default_rng(0))
        for key in list(model.params):
            model.params[key] = blob[f"param:{key}"].copy()
        optimizer = None
        if meta.get("optimizer") is not None:
            optimizer = MomentumSGD(meta["optimizer"]["lr"], meta["optimizer"]["momentum"])
            for name in blob.files:
                if name.startswith("velocity:"):
                    optimizer.velocity[name[len("velocity:") :]] = blob[name].copy()
    return model, optimizer, meta
