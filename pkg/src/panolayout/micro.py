"""A tiny conv stack (ReLU hidden layers, sigmoid edge/corner head) and its training loop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import conv, offsets
from .conv import ConvLayer
from .loss import multi_scale_loss, weighted_bce_logits
from .optim import AdamState, adam_step
from .sphere import ImageGeometry


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class MicroNet:
    """Stride-1 conv layers; ``equi`` selects equirectangular or standard convolutions."""

    layers: list[ConvLayer]
    geometry: ImageGeometry
    equi: bool = True
    dropout: float = 0.0
    padding: str = "zero"
    _fields: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.equi:
            self._fields = [offsets.offset_field(self.geometry, l.spec or offsets.KernelSpec.matching(self.geometry, l.resolution))
                            for l in self.layers]

    @classmethod
    def build(cls, geom: ImageGeometry, channels: list[int], seed: int, equi: bool = True,
              resolution: int = 3, dropout: float = 0.0) -> "MicroNet":
        """``channels = [in, hidden..., 2]``; Glorot-uniform init from ``seed``."""
        rng = np.random.default_rng(seed)
        spec = offsets.KernelSpec.matching(geom, resolution) if equi else None
        layers = [ConvLayer.init(rng, cin, cout, resolution, spec=spec)
                  for cin, cout in zip(channels[:-1], channels[1:])]
        return cls(layers, geom, equi, dropout)

    def params(self) -> list[np.ndarray]:
        out = []
        for l in self.layers:
            out += [l.weight, l.bias]
        return out

    def set_params(self, params: list[np.ndarray]) -> None:
        for i, l in enumerate(self.layers):
            l.weight = params[2 * i]
            l.bias = params[2 * i + 1]

    def _conv(self, i, x):
        """Layer output plus the sampled columns, kept for the backward pass."""
        if self.equi:
            cols = conv.equi_columns(x, self._fields[i], self.layers[i].stride)
            return conv.conv_equi(x, self.layers[i], self._fields[i], cols=cols), cols
        return conv.conv_standard(x, self.layers[i], self.padding), None

    def _conv_backward(self, i, x, g, cols):
        if self.equi:
            return conv.conv_equi_backward(x, self.layers[i], self._fields[i], g, cols=cols)
        return conv.conv_standard_backward(x, self.layers[i], g, self.padding)

    def forward(self, x: np.ndarray, rng: np.random.Generator | None = None):
        """Return ``(logits, cache)``; dropout is applied only when ``rng`` is given."""
        cache = []
        h = np.asarray(x, dtype=np.float64)
        for i in range(len(self.layers)):
            z, cols = self._conv(i, h)
            mask = None
            if i < len(self.layers) - 1:
                a = conv.relu(z)
                if rng is not None and self.dropout > 0:
                    mask = (rng.random(a.shape) >= self.dropout) / (1.0 - self.dropout)
                    a = a * mask
            else:
                a = z
            cache.append((h, z, mask, cols))
            h = a
        return h, cache

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Edge and corner probabilities ``(2, H, W)``."""
        logits, _ = self.forward(x)
        return conv.sigmoid(logits)

    def backward(self, cache, grad_logits: np.ndarray) -> list[np.ndarray]:
        grads = [None] * (2 * len(self.layers))
        g = grad_logits
        for i in reversed(range(len(self.layers))):
            h, z, mask, cols = cache[i]
            if i < len(self.layers) - 1:
                if mask is not None:
                    g = g * mask
                g = conv.relu_backward(z, g)
            gx, gw, gb = self._conv_backward(i, h, g, cols)
            grads[2 * i] = gw
            grads[2 * i + 1] = gb
            g = gx
        return grads


def standardize(image: np.ndarray) -> np.ndarray:
    """Zero-mean, unit-variance channels (constant channels are only centred)."""
    image = np.asarray(image, dtype=np.float64)
    mean = image.mean(axis=(1, 2), keepdims=True)
    std = image.std(axis=(1, 2), keepdims=True)
    return (image - mean) / np.where(std > 0, std, 1.0)


def loss_and_grad(net: MicroNet, image: np.ndarray, target: np.ndarray, rng=None, soft: bool = False):
    """Weighted cross-entropy summed over the edge and corner maps, with parameter gradients."""
    logits, cache = net.forward(image, rng)
    total = 0.0
    g = np.empty_like(logits)
    for m in range(logits.shape[0]):
        loss, g[m] = weighted_bce_logits(logits[m], target[m], soft=soft)
        total += loss
    return total, net.backward(cache, g)


def train_micro(net: MicroNet, dataset, epochs: int, seed: int = 0, lr: float = 2.5e-4,
                decay: float = 0.995, weight_decay: float = 0.0, soft: bool = False) -> list[float]:
    """Full-batch Adam over ``dataset`` (list of ``(image, target)``), one step per epoch.

    ``target`` is ``(2, H, W)`` (edge, corner). Returns the loss at each epoch,
    evaluated before that epoch's update. The learning rate decays by
    ``decay`` after every epoch. Targets are binarized at 0.5 unless ``soft``;
    with soft (blurred) targets the loss cannot approach zero, since a perfect
    prediction still pays the targets' own entropy.

    Raises:
        TrainingDiverged: the loss became NaN or infinite.
    """
    rng = np.random.default_rng(seed)
    state = AdamState(lr=lr, decay_rate=decay, weight_decay=weight_decay)
    history: list[float] = []
    for _ in range(epochs):
        total = 0.0
        acc = None
        for image, target in dataset:
            loss, grads = loss_and_grad(net, image, target, rng if net.dropout > 0 else None, soft)
            total += loss
            acc = grads if acc is None else [a + g for a, g in zip(acc, grads)]
        if not np.isfinite(total):
            raise TrainingDiverged(f"loss became {total} at epoch {len(history)}")
        history.append(total)
        net.set_params(adam_step(net.params(), acc, state))
        state.end_epoch()
    return history


def multi_scale_targets(target: np.ndarray, scales: int = 4) -> list[dict]:
    """GT pyramid by 2x max-pooling, coarsest first, for :func:`multi_scale_loss`."""
    levels = []
    t = target
    for _ in range(scales):
        levels.append({"edge": t[0], "corner": t[1]})
        c, h, w = t.shape
        if h % 2 or w % 2:
            break
        t = t.reshape(c, h // 2, 2, w // 2, 2).max(axis=(2, 4))
    return levels[::-1]


__all__ = ["MicroNet", "TrainingDiverged", "standardize", "loss_and_grad", "train_micro",
           "multi_scale_targets", "multi_scale_loss"]
