"""GAN training over the A x B cross-product schedule, persistence and sampling."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from PIL import Image

from .._validation import check_positive_int
from ..exceptions import (CorruptModel, IoError, NonFiniteLoss, PoseRecError, ValidationError,
                          VersionMismatch)
from ..imaging import (ColorSpace, ImageBuffer, center_crop_square, load_image, resize_area,
                       to_color_space)
from .adam import AdamState, adam_step
from .nn import MLP, SIGMOID, TANH, backward, bce_loss, forward
from .schedule import SplitDatasets, build_schedule

log = logging.getLogger(__name__)

MODEL_VERSION = 1


@dataclass(frozen=True)
class GanConfig:
    image_side: int = 16
    channels: int = 1
    latent_dim: int = 64
    g_hidden: Tuple[int, ...] = (128,)
    d_hidden: Tuple[int, ...] = (128,)
    learning_rate: float = 2e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 2000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "g_hidden", tuple(int(h) for h in self.g_hidden))
        object.__setattr__(self, "d_hidden", tuple(int(h) for h in self.d_hidden))
        check_positive_int(self.image_side, "image_side")
        check_positive_int(self.latent_dim, "latent_dim")
        check_positive_int(self.epochs, "epochs")
        if self.channels not in (1, 3):
            raise ValidationError("channels must be 1 (grayscale) or 3 (RGB)")
        for h in self.g_hidden + self.d_hidden:
            check_positive_int(h, "hidden width")
        if not (self.learning_rate > 0 and math.isfinite(self.learning_rate)):
            raise ValidationError("learning_rate must be a positive finite number")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValidationError("Adam betas must lie in [0, 1)")
        if not self.eps > 0:
            raise ValidationError("eps must be positive")

    @property
    def image_dim(self) -> int:
        return self.image_side * self.image_side * self.channels

    @property
    def generator_dims(self) -> List[int]:
        return [self.latent_dim, *self.g_hidden, self.image_dim]

    @property
    def discriminator_dims(self) -> List[int]:
        return [self.image_dim, *self.d_hidden, 1]

    def to_json(self) -> dict:
        d = asdict(self)
        d["g_hidden"] = list(self.g_hidden)
        d["d_hidden"] = list(self.d_hidden)
        return d


@dataclass(frozen=True)
class LossRecord:
    epoch: int
    iteration: int
    d_loss: float
    g_loss: float


@dataclass(eq=False)
class GanModel:
    config: GanConfig
    generator: MLP
    discriminator: MLP
    adam_g: AdamState
    adam_d: AdamState

    @classmethod
    def init(cls, config: GanConfig, rng: Optional[np.random.Generator] = None) -> "GanModel":
        rng = rng if rng is not None else np.random.default_rng(config.seed)
        g = MLP.init(config.generator_dims, TANH, rng)
        d = MLP.init(config.discriminator_dims, SIGMOID, rng)
        return cls(config, g, d, AdamState.zeros_like(g.params), AdamState.zeros_like(d.params))

    def __eq__(self, other):
        if not isinstance(other, GanModel):
            return NotImplemented
        return (self.config == other.config and self.generator == other.generator
                and self.discriminator == other.discriminator
                and self.adam_g == other.adam_g and self.adam_d == other.adam_d)


def _adam(net: MLP, grads, state: AdamState, cfg: GanConfig):
    params, state = adam_step(net.params, grads, state, cfg.learning_rate,
                              cfg.beta1, cfg.beta2, cfg.eps)
    return net.with_params(params), state


def train_step(model: GanModel, real: np.ndarray, z: np.ndarray) -> Tuple[GanModel, float, float]:
    """One discriminator update followed by one generator update.

    The discriminator sees ``real`` labelled 1 and ``G(z)`` labelled 0; the
    generator is then pushed to make the updated discriminator output 1 on
    ``G(z)`` (non-saturating loss).
    """
    cfg = model.config
    fake, g_cache = forward(model.generator, z)

    batch = np.vstack([real, fake])
    labels = np.concatenate([np.ones(len(real)), np.zeros(len(fake))])
    p, d_cache = forward(model.discriminator, batch)
    d_loss, dp = bce_loss(p, labels)
    d_grads, _ = backward(model.discriminator, d_cache, dp)
    disc, adam_d = _adam(model.discriminator, d_grads, model.adam_d, cfg)

    p_fake, f_cache = forward(disc, fake)
    g_loss, dp = bce_loss(p_fake, np.ones(len(fake)))
    _, d_fake = backward(disc, f_cache, dp)
    g_grads, _ = backward(model.generator, g_cache, d_fake)
    gen, adam_g = _adam(model.generator, g_grads, model.adam_g, cfg)

    return GanModel(cfg, gen, disc, adam_g, adam_d), d_loss, g_loss


def train_gan_arrays(set_a, set_b, config: GanConfig) -> Tuple[GanModel, List[LossRecord]]:
    """Train on preprocessed image vectors.

    ``set_a`` and ``set_b`` are ``(n, image_dim)`` arrays scaled to [-1, 1].
    Iteration ``(i, j)`` uses the real pair ``{A_i, B_j}`` and two fresh
    latent vectors; everything is drawn from one generator seeded with
    ``config.seed``.
    """
    a = np.asarray(set_a, dtype=np.float64).reshape(len(set_a), -1)
    b = np.asarray(set_b, dtype=np.float64).reshape(len(set_b), -1)
    if a.shape[1] != config.image_dim or b.shape[1] != config.image_dim:
        raise ValidationError(f"training images must have {config.image_dim} values, "
                              f"got {a.shape[1]} and {b.shape[1]}")
    schedule = build_schedule(config.epochs, len(a), len(b))
    rng = np.random.default_rng(config.seed)
    model = GanModel.init(config, rng)
    losses: List[LossRecord] = []
    per_epoch = schedule.per_epoch
    for step, (i, j) in enumerate(schedule):
        real = np.stack([a[i], b[j]])
        z = rng.standard_normal((2, config.latent_dim))
        model, d_loss, g_loss = train_step(model, real, z)
        epoch, it = divmod(step, per_epoch)
        if not (math.isfinite(d_loss) and math.isfinite(g_loss)):
            raise NonFiniteLoss(f"non-finite loss at epoch {epoch} iteration {it} "
                                f"(pair {i},{j}): d_loss={d_loss}, g_loss={g_loss}")
        losses.append(LossRecord(epoch, it, d_loss, g_loss))
        if it == per_epoch - 1 and (epoch + 1) % 100 == 0:
            log.info("epoch %d: d_loss=%.4f g_loss=%.4f", epoch + 1, d_loss, g_loss)
    return model, losses


def prepare_image(img: ImageBuffer, side: int, channels: int = 1) -> np.ndarray:
    """Center-crop, area-downscale and scale an image to a [-1, 1] vector."""
    space = ColorSpace.GRAY if channels == 1 else ColorSpace.RGB
    img = resize_area(center_crop_square(to_color_space(img, space)), side, side)
    return img.pixels.astype(np.float64).ravel() / 127.5 - 1.0


def train_gan(split: SplitDatasets, config: GanConfig) -> Tuple[GanModel, List[LossRecord]]:
    """Load the twelve split images from disk and train on them."""
    def load(ids):
        return np.stack([prepare_image(load_image(split.path_of(i)), config.image_side,
                                       config.channels) for i in ids])
    return train_gan_arrays(load(split.set_a), load(split.set_b), config)


def write_loss_log(losses: Sequence[LossRecord], path) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "iteration", "d_loss", "g_loss"])
            for r in losses:
                w.writerow([r.epoch, r.iteration, repr(r.d_loss), repr(r.g_loss)])
    except OSError as exc:
        raise IoError(f"cannot write loss log {path}: {exc}") from exc


def _net_json(net: MLP) -> dict:
    return {"dims": net.dims, "output": net.output,
            "weights": [w.ravel().tolist() for w in net.weights],
            "biases": [b.tolist() for b in net.biases]}


def _adam_json(state: AdamState) -> dict:
    return {"t": state.t, "m": [m.ravel().tolist() for m in state.m],
            "v": [v.ravel().tolist() for v in state.v]}


def save_model(model: GanModel, path) -> None:
    doc = {"version": MODEL_VERSION, "config": model.config.to_json(),
           "generator": _net_json(model.generator),
           "discriminator": _net_json(model.discriminator),
           "adam": {"generator": _adam_json(model.adam_g),
                    "discriminator": _adam_json(model.adam_d)}}
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(doc, allow_nan=False) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write model {path}: {exc}") from exc


def _tensor(flat, shape) -> np.ndarray:
    arr = np.array(flat, dtype=np.float64)
    if arr.size != int(np.prod(shape)):
        raise CorruptModel(f"tensor has {arr.size} values, expected shape {tuple(shape)}")
    arr = arr.reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise CorruptModel("non-finite parameter value")
    return arr


def _net_from_json(doc: dict, expected_dims: List[int], output: str) -> MLP:
    dims = [int(d) for d in doc["dims"]]
    if dims != expected_dims or doc["output"] != output:
        raise CorruptModel(f"network dims {dims} ({doc['output']}) do not match "
                           f"config {expected_dims} ({output})")
    shapes = list(zip(dims[:-1], dims[1:]))
    if len(doc["weights"]) != len(shapes) or len(doc["biases"]) != len(shapes):
        raise CorruptModel("layer count does not match dims")
    weights = [_tensor(w, s) for w, s in zip(doc["weights"], shapes)]
    biases = [_tensor(b, (s[1],)) for b, s in zip(doc["biases"], shapes)]
    return MLP(weights, biases, output)


def _adam_from_json(doc: dict, params: List[np.ndarray]) -> AdamState:
    t = int(doc["t"])
    if t < 0 or len(doc["m"]) != len(params) or len(doc["v"]) != len(params):
        raise CorruptModel("optimizer state does not mirror the parameters")
    return AdamState([_tensor(m, p.shape) for m, p in zip(doc["m"], params)],
                     [_tensor(v, p.shape) for v, p in zip(doc["v"], params)], t)


def load_model(path) -> GanModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read model {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptModel(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict) or "version" not in doc:
        raise CorruptModel(f"{path}: missing version field")
    if doc["version"] != MODEL_VERSION:
        raise VersionMismatch(f"{path}: model version {doc['version']!r}, "
                              f"this build reads version {MODEL_VERSION}")
    try:
        cfg = doc["config"]
        config = GanConfig(**{k: cfg[k] for k in GanConfig.__dataclass_fields__})
        gen = _net_from_json(doc["generator"], config.generator_dims, TANH)
        disc = _net_from_json(doc["discriminator"], config.discriminator_dims, SIGMOID)
        adam_g = _adam_from_json(doc["adam"]["generator"], gen.params)
        adam_d = _adam_from_json(doc["adam"]["discriminator"], disc.params)
    except CorruptModel:
        raise
    except (KeyError, TypeError, ValueError, PoseRecError) as exc:
        raise CorruptModel(f"{path}: malformed model ({exc!r})") from None
    return GanModel(config, gen, disc, adam_g, adam_d)


def sample_images(model: GanModel, n: int, seed: int = 0) -> np.ndarray:
    """``n`` generated images as uint8 arrays of shape ``(n, side, side[, 3])``."""
    n = check_positive_int(n, "n")
    cfg = model.config
    z = np.random.default_rng(seed).standard_normal((n, cfg.latent_dim))
    x, _ = forward(model.generator, z)
    px = np.clip(np.floor((x + 1.0) * 127.5 + 0.5), 0, 255).astype(np.uint8)
    shape = (n, cfg.image_side, cfg.image_side) + ((3,) if cfg.channels == 3 else ())
    return px.reshape(shape)


def generate_samples(model: GanModel, n: int, out_dir, seed: int = 0) -> List[Path]:
    """Write ``n`` samples as ``sample_NNN.png`` into ``out_dir``."""
    images = sample_images(model, n, seed)
    out = Path(out_dir)
    paths = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for k, px in enumerate(images):
            p = out / f"sample_{k:03d}.png"
            Image.fromarray(px).save(p, format="PNG")
            paths.append(p)
    except OSError as exc:
        raise IoError(f"cannot write samples to {out}: {exc}") from exc
    return paths
