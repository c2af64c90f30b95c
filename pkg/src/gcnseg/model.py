"""Segmentation model: conv encoder, graph propagation layers, softmax head.

A patch runs through a small stack of 3x3 same-padding convolutions, its
feature map is flattened row-major into per-pixel node features, and a
stack of graph layers H' = sigma(A^ H W) followed by row softmax produces
per-pixel class probabilities.  Backpropagation is derived by hand; the
forward pass caches every pre-activation the backward pass needs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArchitectureError, DimensionError, LabelError, NumericalFailure
from .graph import build_grid_graph, renormalized_adjacency_sparse


@dataclass
class ConvLayerParams:
    kernels: np.ndarray  # (out_ch, in_ch, 3, 3)
    bias: np.ndarray     # (out_ch,)


@dataclass
class GcnLayerParams:
    weight: np.ndarray   # (d_in, d_out)
    has_relu: bool


@dataclass(frozen=True)
class Architecture:
    """Dimension chain of the model; conv output width must feed the first graph layer."""

    conv_channels: tuple[int, ...] = (3, 16, 16)
    gcn_dims: tuple[int, ...] = (16, 32, 2)
    grid: tuple[int, int] = (64, 64)
    connectivity: int = 4

    def __post_init__(self):
        if len(self.conv_channels) < 2 or len(self.gcn_dims) < 2:
            raise ArchitectureError("need at least one conv layer and one graph layer")
        if any(c < 1 for c in self.conv_channels) or any(d < 1 for d in self.gcn_dims):
            raise ArchitectureError("layer widths must be positive")
        if self.conv_channels[-1] != self.gcn_dims[0]:
            raise ArchitectureError(
                f"conv output width {self.conv_channels[-1]} does not feed "
                f"the first graph layer width {self.gcn_dims[0]}"
            )
        if self.gcn_dims[-1] < 2:
            raise ArchitectureError("need at least two output classes")
        if self.grid[0] < 1 or self.grid[1] < 1:
            raise ArchitectureError(f"invalid grid {self.grid}")
        if self.connectivity not in (4, 8):
            raise ArchitectureError(f"connectivity must be 4 or 8, got {self.connectivity}")


@dataclass
class GcnModel:
    conv_layers: list[ConvLayerParams]
    gcn_layers: list[GcnLayerParams]
    a_hat: object                 # sparse (n, n) propagation operator
    grid: tuple[int, int]
    num_classes: int
    connectivity: int = 4

    @property
    def in_channels(self) -> int:
        return self.conv_layers[0].kernels.shape[1]


@dataclass
class GradientSet:
    """Gradients with the same shapes as the parameters they mirror."""

    conv_kernels: list[np.ndarray]
    conv_biases: list[np.ndarray]
    gcn_weights: list[np.ndarray]


@dataclass
class ForwardCache:
    image: np.ndarray
    conv_cols: list[np.ndarray]    # im2col matrix fed to each conv layer
    conv_pre: list[np.ndarray]     # conv outputs before the inter-layer ReLU
    gcn_inputs: list[np.ndarray]   # H^(l-1) per graph layer
    gcn_agg: list[np.ndarray]      # A^ H per graph layer
    gcn_pre: list[np.ndarray]      # A^ H W per graph layer
    logits: np.ndarray
    log_probs: np.ndarray
    probs: np.ndarray


def grid_operator(height: int, width: int, connectivity: int = 4):
    """Sparse renormalized adjacency for a pixel grid (shared across patches)."""
    return renormalized_adjacency_sparse(build_grid_graph(height, width, connectivity))


def init_model(seed: int, arch: Architecture | None = None) -> GcnModel:
    """Glorot-uniform weights, zero biases, deterministic for a given seed."""
    if arch is None:
        arch = Architecture()
    rng = np.random.default_rng(seed)
    conv_layers = []
    for cin, cout in zip(arch.conv_channels, arch.conv_channels[1:]):
        span = np.sqrt(6.0 / (cin * 9 + cout * 9))
        kernels = rng.uniform(-span, span, size=(cout, cin, 3, 3))
        conv_layers.append(ConvLayerParams(kernels=kernels, bias=np.zeros(cout)))
    gcn_layers = []
    last = len(arch.gcn_dims) - 2
    for i, (din, dout) in enumerate(zip(arch.gcn_dims, arch.gcn_dims[1:])):
        span = np.sqrt(6.0 / (din + dout))
        weight = rng.uniform(-span, span, size=(din, dout))
        gcn_layers.append(GcnLayerParams(weight=weight, has_relu=i < last))
    return GcnModel(
        conv_layers=conv_layers,
        gcn_layers=gcn_layers,
        a_hat=grid_operator(*arch.grid, arch.connectivity),
        grid=arch.grid,
        num_classes=arch.gcn_dims[-1],
        connectivity=arch.connectivity,
    )


def model_for_grid(model: GcnModel, height: int, width: int) -> GcnModel:
    """Same weights on a different patch geometry (weights are shared, not copied)."""
    if (height, width) == model.grid:
        return model
    return GcnModel(
        conv_layers=model.conv_layers,
        gcn_layers=model.gcn_layers,
        a_hat=grid_operator(height, width, model.connectivity),
        grid=(height, width),
        num_classes=model.num_classes,
        connectivity=model.connectivity,
    )


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _im2col(x: np.ndarray) -> np.ndarray:
    """3x3 same-padding patches of a (c, h, w) tensor as rows: (h*w, c*9)."""
    c, h, w = x.shape
    padded = np.zeros((c, h + 2, w + 2), dtype=np.float64)
    padded[:, 1:-1, 1:-1] = x
    cols = np.empty((h * w, c * 9), dtype=np.float64)
    k = 0
    for ch in range(c):
        for dr in range(3):
            for dc in range(3):
                cols[:, k] = padded[ch, dr:dr + h, dc:dc + w].ravel()
                k += 1
    return cols


def _col2im(cols: np.ndarray, c: int, h: int, w: int) -> np.ndarray:
    """Scatter-add inverse of _im2col."""
    padded = np.zeros((c, h + 2, w + 2), dtype=np.float64)
    k = 0
    for ch in range(c):
        for dr in range(3):
            for dc in range(3):
                padded[ch, dr:dr + h, dc:dc + w] += cols[:, k].reshape(h, w)
                k += 1
    return padded[:, 1:-1, 1:-1]


def _conv_stack(layers, image, keep_cache: bool):
    x = image
    cols_cache = []
    pre_cache = []
    last = len(layers) - 1
    for i, layer in enumerate(layers):
        cout, cin = layer.kernels.shape[:2]
        if x.shape[0] != cin:
            raise DimensionError(
                f"conv layer {i} expects {cin} input channels, got {x.shape[0]}"
            )
        h, w = x.shape[1], x.shape[2]
        cols = _im2col(x)
        pre = (cols @ layer.kernels.reshape(cout, -1).T + layer.bias).T.reshape(cout, h, w)
        if keep_cache:
            cols_cache.append(cols)
            pre_cache.append(pre)
        # ReLU between conv layers only; the last conv output feeds the
        # graph stack untouched.
        x = relu(pre) if i < last else pre
    return x, cols_cache, pre_cache


def conv_forward(layers: list[ConvLayerParams], image: np.ndarray) -> np.ndarray:
    """Run the conv encoder on a (in_ch, h, w) image; spatial size is preserved."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3:
        raise DimensionError(f"expected a (c, h, w) image, got shape {image.shape}")
    out, _, _ = _conv_stack(layers, image, keep_cache=False)
    return out


def gcn_forward(a_hat, h: np.ndarray, layer: GcnLayerParams) -> np.ndarray:
    """One propagation step: sigma(A^ H W), with sigma = ReLU or identity."""
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2:
        raise DimensionError(f"expected node features (n, d), got shape {h.shape}")
    if a_hat.shape[0] != a_hat.shape[1] or a_hat.shape[0] != h.shape[0]:
        raise DimensionError(
            f"operator shape {a_hat.shape} does not match {h.shape[0]} nodes"
        )
    if h.shape[1] != layer.weight.shape[0]:
        raise DimensionError(
            f"features of width {h.shape[1]} cannot enter a "
            f"{layer.weight.shape[0]}->{layer.weight.shape[1]} layer"
        )
    pre = (a_hat @ h) @ layer.weight
    return relu(pre) if layer.has_relu else pre


def softmax_rows(h: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction; rows sum to 1 within 1e-12."""
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] < 2:
        raise DimensionError(f"expected (n, c) logits with c >= 2, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise NumericalFailure("softmax received non-finite logits")
    shifted = h - h.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def log_softmax_rows(h: np.ndarray) -> np.ndarray:
    """Row-wise log-softmax via log-sum-exp (never log of stored probabilities)."""
    h = np.asarray(h, dtype=np.float64)
    shifted = h - h.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def model_forward(model: GcnModel, patch: np.ndarray):
    """Full forward pass; returns (probs, cache) with one row per pixel."""
    patch = np.asarray(patch, dtype=np.float64)
    h, w = model.grid
    if patch.shape != (model.in_channels, h, w):
        raise DimensionError(
            f"patch shape {patch.shape} does not match model "
            f"({model.in_channels}, {h}, {w})"
        )
    feats, cols_cache, pre_cache = _conv_stack(model.conv_layers, patch, keep_cache=True)
    nodes = feats.reshape(feats.shape[0], h * w).T  # row-major pixel order

    gcn_inputs, gcn_agg, gcn_pre = [], [], []
    x = nodes
    for layer in model.gcn_layers:
        if x.shape[1] != layer.weight.shape[0]:
            raise DimensionError(
                f"features of width {x.shape[1]} cannot enter a "
                f"{layer.weight.shape[0]}->{layer.weight.shape[1]} layer"
            )
        agg = model.a_hat @ x
        pre = agg @ layer.weight
        gcn_inputs.append(x)
        gcn_agg.append(agg)
        gcn_pre.append(pre)
        x = relu(pre) if layer.has_relu else pre

    logits = x
    probs = softmax_rows(logits)
    cache = ForwardCache(
        image=patch,
        conv_cols=cols_cache,
        conv_pre=pre_cache,
        gcn_inputs=gcn_inputs,
        gcn_agg=gcn_agg,
        gcn_pre=gcn_pre,
        logits=logits,
        log_probs=log_softmax_rows(logits),
        probs=probs,
    )
    return probs, cache


def model_backward(model: GcnModel, cache: ForwardCache, labels: np.ndarray):
    """Mean-NLL loss and gradients for every parameter.

    The softmax+NLL gradient at the logits is (p - one_hot) / n; graph
    layers backpropagate through A^ using its symmetry; conv gradients
    come from the cached im2col matrices.
    """
    labels = np.asarray(labels)
    n, c = cache.logits.shape
    if labels.shape != (n,):
        raise DimensionError(f"expected {n} labels, got shape {labels.shape}")
    if not np.issubdtype(labels.dtype, np.integer):
        raise LabelError(f"labels must be integers, got dtype {labels.dtype}")
    if labels.min() < 0 or labels.max() >= c:
        raise LabelError(
            f"labels must lie in [0, {c}), got range "
            f"[{labels.min()}, {labels.max()}]"
        )

    loss = float(-np.mean(cache.log_probs[np.arange(n), labels]))

    d_logits = cache.probs.copy()
    d_logits[np.arange(n), labels] -= 1.0
    d_logits /= n

    gcn_grads = [None] * len(model.gcn_layers)
    d_h = d_logits
    for i in range(len(model.gcn_layers) - 1, -1, -1):
        layer = model.gcn_layers[i]
        d_pre = d_h * (cache.gcn_pre[i] > 0.0) if layer.has_relu else d_h
        gcn_grads[i] = cache.gcn_agg[i].T @ d_pre
        d_h = model.a_hat @ (d_pre @ layer.weight.T)  # A^ is symmetric

    h, w = model.grid
    d_feats = d_h.T.reshape(-1, h, w)
    kernel_grads = [None] * len(model.conv_layers)
    bias_grads = [None] * len(model.conv_layers)
    d_pre = d_feats
    for i in range(len(model.conv_layers) - 1, -1, -1):
        layer = model.conv_layers[i]
        cout, cin = layer.kernels.shape[:2]
        d_out = d_pre.reshape(cout, h * w).T
        kernel_grads[i] = (d_out.T @ cache.conv_cols[i]).reshape(layer.kernels.shape)
        bias_grads[i] = d_out.sum(axis=0)
        if i > 0:
            d_cols = d_out @ layer.kernels.reshape(cout, -1)
            d_x = _col2im(d_cols, cin, h, w)
            d_pre = d_x * (cache.conv_pre[i - 1] > 0.0)

    return loss, GradientSet(
        conv_kernels=kernel_grads,
        conv_biases=bias_grads,
        gcn_weights=gcn_grads,
    )


def predict_classes(model: GcnModel, patch: np.ndarray) -> np.ndarray:
    """Per-pixel argmax class map (ties resolve to the lowest class index)."""
    probs, _ = model_forward(model, patch)
    return probs.argmax(axis=1).astype(np.uint8).reshape(model.grid)
