"""SGD training loop, NLL loss, deterministic shuffling, checkpoints.

Everything here is reproducible: shuffles come from an explicit 64-bit
LCG, batch gradients accumulate in a fixed order, and checkpoints are a
bit-exact little-endian container, so identical (seed, data, config)
always produce identical bytes.
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    CheckpointError,
    DatasetError,
    DimensionError,
    LabelError,
    NumericalFailure,
)
from .metrics import ConfusionMatrix, accumulate, f1, iou, overall_accuracy
from .model import (
    Architecture,
    GcnModel,
    GradientSet,
    init_model,
    model_backward,
    model_forward,
    predict_classes,
)

CHECKPOINT_MAGIC = b"GCNCKPT1"
_CHECKPOINT_VERSION = 1.0


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    epochs: int = 30
    batch_size: int = 4
    seed: int = 0
    checkpoint_path: str | None = None
    log_every: int = 0

    def __post_init__(self):
        # lr = 0 is allowed so a loop run can be verified as a no-op.
        if self.learning_rate < 0.0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass
class EpochRecord:
    epoch: int
    mean_loss: float
    seconds: float
    eval_metrics: dict[str, float] | None = None


def nll_loss(log_probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-likelihood, -(1/n) sum_i log_probs[i, labels[i]]."""
    log_probs = np.asarray(log_probs, dtype=np.float64)
    labels = np.asarray(labels)
    if log_probs.ndim != 2:
        raise DimensionError(f"expected (n, c) log-probabilities, got {log_probs.shape}")
    n, c = log_probs.shape
    if labels.shape != (n,):
        raise DimensionError(f"expected {n} labels, got shape {labels.shape}")
    if not np.issubdtype(labels.dtype, np.integer):
        raise LabelError(f"labels must be integers, got dtype {labels.dtype}")
    if labels.min() < 0 or labels.max() >= c:
        raise LabelError(f"labels must lie in [0, {c})")
    return float(-np.mean(log_probs[np.arange(n), labels]))


def sgd_step(model: GcnModel, grads: GradientSet, lr: float) -> GcnModel:
    """Plain gradient descent, w <- w - lr * g; no momentum, no weight decay."""
    conv_pairs = list(zip(model.conv_layers, grads.conv_kernels, grads.conv_biases))
    if len(grads.conv_kernels) != len(model.conv_layers) or \
            len(grads.gcn_weights) != len(model.gcn_layers):
        raise DimensionError("gradient set does not mirror the model's layers")
    for layer, gk, gb in conv_pairs:
        if gk.shape != layer.kernels.shape or gb.shape != layer.bias.shape:
            raise DimensionError("conv gradient shape mismatch")
        layer.kernels -= lr * gk
        layer.bias -= lr * gb
    for layer, gw in zip(model.gcn_layers, grads.gcn_weights):
        if gw.shape != layer.weight.shape:
            raise DimensionError("graph-layer gradient shape mismatch")
        layer.weight -= lr * gw
    return model


def batch_gradient(model: GcnModel, samples) -> tuple[float, GradientSet]:
    """Mean loss and mean gradients over a batch, accumulated in sample order."""
    total = None
    loss_sum = 0.0
    for sample in samples:
        _, cache = model_forward(model, sample.image)
        loss, grads = model_backward(model, cache, sample.mask.reshape(-1).astype(np.int64))
        loss_sum += loss
        if total is None:
            total = grads
        else:
            for acc, g in zip(total.conv_kernels, grads.conv_kernels):
                acc += g
            for acc, g in zip(total.conv_biases, grads.conv_biases):
                acc += g
            for acc, g in zip(total.gcn_weights, grads.gcn_weights):
                acc += g
    count = len(samples)
    if count == 0:
        raise DatasetError("cannot compute a gradient over an empty batch")
    if count > 1:
        for arr in total.conv_kernels + total.conv_biases + total.gcn_weights:
            arr /= count
    return loss_sum / count, total


# Deterministic shuffle used for mini-batching.  Fisher-Yates driven by a
# 64-bit LCG with the MMIX constants:
#     state <- (6364136223846793005 * state + 1442695040888963407) mod 2^64
# The per-epoch stream starts at
#     state0 = (seed + (epoch + 1) * 0x9E3779B97F4A7C15) mod 2^64
# advanced once before the first draw; index draws take the top 31 bits:
#     j = (state >> 33) mod (i + 1)
# Any implementation following this recipe reproduces the same order.
_LCG_MULT = 6364136223846793005
_LCG_INC = 1442695040888963407
_MASK64 = (1 << 64) - 1
_EPOCH_STRIDE = 0x9E3779B97F4A7C15


def shuffled_indices(n: int, seed: int, epoch: int) -> list[int]:
    state = (seed + (epoch + 1) * _EPOCH_STRIDE) & _MASK64
    state = (_LCG_MULT * state + _LCG_INC) & _MASK64
    order = list(range(n))
    for i in range(n - 1, 0, -1):
        state = (_LCG_MULT * state + _LCG_INC) & _MASK64
        j = (state >> 33) % (i + 1)
        order[i], order[j] = order[j], order[i]
    return order


def evaluate(model: GcnModel, samples) -> ConfusionMatrix:
    """Pixel confusion matrix of argmax predictions over a sample list."""
    cm = ConfusionMatrix()
    for sample in samples:
        pred = predict_classes(model, sample.image)
        cm = accumulate(cm, (pred == 1).astype(np.uint8), sample.mask)
    return cm


def train(cfg: TrainConfig, model: GcnModel, data, eval_data=None, log_fn=None):
    """Run the SGD loop; returns (model, per-epoch history).

    Writes a checkpoint after every epoch when cfg.checkpoint_path is set,
    plus a `.best` sibling tracking the best eval IoU when eval data is
    supplied.
    """
    data = list(data)
    if not data:
        raise DatasetError("training data is empty")
    for sample in data:
        if sample.image.shape[1:] != model.grid:
            raise DatasetError(
                f"sample patch {sample.image.shape[1:]} does not match "
                f"model grid {model.grid}"
            )

    history: list[EpochRecord] = []
    best_iou = -1.0
    step = 0
    for epoch in range(1, cfg.epochs + 1):
        started = time.perf_counter()
        order = shuffled_indices(len(data), cfg.seed, epoch)
        loss_sum = 0.0
        seen = 0
        for lo in range(0, len(data), cfg.batch_size):
            batch = [data[k] for k in order[lo:lo + cfg.batch_size]]
            step += 1
            try:
                loss, grads = batch_gradient(model, batch)
            except NumericalFailure as exc:
                raise NumericalFailure(
                    f"numerical failure at epoch {epoch}, step {step}: {exc}"
                ) from exc
            if not np.isfinite(loss):
                raise NumericalFailure(
                    f"non-finite loss at epoch {epoch}, step {step}"
                )
            sgd_step(model, grads, cfg.learning_rate)
            loss_sum += loss * len(batch)
            seen += len(batch)
            if log_fn and cfg.log_every and step % cfg.log_every == 0:
                log_fn(f"epoch {epoch} step {step} loss {loss:.6f}")

        metrics = None
        if eval_data is not None:
            cm = evaluate(model, eval_data)
            metrics = {
                "oa": overall_accuracy(cm),
                "f1": f1(cm),
                "iou": iou(cm),
            }
        record = EpochRecord(
            epoch=epoch,
            mean_loss=loss_sum / seen,
            seconds=time.perf_counter() - started,
            eval_metrics=metrics,
        )
        history.append(record)
        if log_fn:
            line = f"epoch {epoch}/{cfg.epochs} mean_loss {record.mean_loss:.6f}"
            if metrics:
                line += (f" oa {metrics['oa']:.4f} f1 {metrics['f1']:.4f}"
                         f" iou {metrics['iou']:.4f}")
            log_fn(line)
        if cfg.checkpoint_path:
            save_checkpoint(model, cfg.checkpoint_path)
            if metrics and metrics["iou"] > best_iou:
                best_iou = metrics["iou"]
                save_checkpoint(model, cfg.checkpoint_path + ".best")
    return model, history


# --- checkpoint container -------------------------------------------------
#
# Layout (everything little-endian):
#   8 bytes   magic "GCNCKPT1"
#   u32       tensor count
#   per tensor: u32 name length, UTF-8 name, u32 rank, rank * u32 dims
#   payloads: float64 values, row-major, in manifest order

def _tensor_entries(model: GcnModel):
    meta = np.array(
        [_CHECKPOINT_VERSION, float(model.connectivity),
         float(model.grid[0]), float(model.grid[1])],
        dtype=np.float64,
    )
    entries = [("meta", meta)]
    for i, layer in enumerate(model.conv_layers):
        entries.append((f"conv.{i}.kernels", layer.kernels))
        entries.append((f"conv.{i}.bias", layer.bias))
    for i, layer in enumerate(model.gcn_layers):
        entries.append((f"gcn.{i}.weight", layer.weight))
    return entries


def save_checkpoint(model: GcnModel, path) -> None:
    entries = _tensor_entries(model)
    buf = bytearray(CHECKPOINT_MAGIC)
    buf += struct.pack("<I", len(entries))
    for name, arr in entries:
        raw = name.encode("utf-8")
        buf += struct.pack("<I", len(raw))
        buf += raw
        buf += struct.pack("<I", arr.ndim)
        buf += struct.pack(f"<{arr.ndim}I", *arr.shape)
    for _, arr in entries:
        buf += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    Path(path).write_bytes(bytes(buf))


def _read_exact(data: bytes, pos: int, count: int) -> tuple[bytes, int]:
    if pos + count > len(data):
        raise CheckpointError(f"checkpoint truncated at byte {len(data)}")
    return data[pos:pos + count], pos + count


def load_checkpoint(path) -> GcnModel:
    """Rebuild a model from a checkpoint written by save_checkpoint."""
    data = Path(path).read_bytes()
    head, pos = _read_exact(data, 0, len(CHECKPOINT_MAGIC))
    if head != CHECKPOINT_MAGIC:
        raise CheckpointError(f"bad magic {head!r}")
    raw, pos = _read_exact(data, pos, 4)
    count = struct.unpack("<I", raw)[0]
    manifest = []
    for _ in range(count):
        raw, pos = _read_exact(data, pos, 4)
        name_len = struct.unpack("<I", raw)[0]
        raw, pos = _read_exact(data, pos, name_len)
        name = raw.decode("utf-8")
        raw, pos = _read_exact(data, pos, 4)
        rank = struct.unpack("<I", raw)[0]
        raw, pos = _read_exact(data, pos, 4 * rank)
        dims = struct.unpack(f"<{rank}I", raw)
        manifest.append((name, dims))
    tensors = {}
    for name, dims in manifest:
        size = int(np.prod(dims, dtype=np.int64)) if dims else 1
        raw, pos = _read_exact(data, pos, 8 * size)
        tensors[name] = np.frombuffer(raw, dtype="<f8").reshape(dims).copy()

    if "meta" not in tensors or tensors["meta"].shape != (4,):
        raise CheckpointError("missing or malformed meta tensor")
    version, connectivity, grid_h, grid_w = tensors["meta"]
    if version != _CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")

    conv_channels = []
    i = 0
    while f"conv.{i}.kernels" in tensors:
        kernels = tensors[f"conv.{i}.kernels"]
        if f"conv.{i}.bias" not in tensors:
            raise CheckpointError(f"conv layer {i} is missing its bias tensor")
        if not conv_channels:
            conv_channels.append(kernels.shape[1])
        elif kernels.shape[1] != conv_channels[-1]:
            raise CheckpointError(f"conv layer {i} breaks the channel chain")
        conv_channels.append(kernels.shape[0])
        i += 1
    gcn_dims = []
    i = 0
    while f"gcn.{i}.weight" in tensors:
        weight = tensors[f"gcn.{i}.weight"]
        if not gcn_dims:
            gcn_dims.append(weight.shape[0])
        elif weight.shape[0] != gcn_dims[-1]:
            raise CheckpointError(f"graph layer {i} breaks the dimension chain")
        gcn_dims.append(weight.shape[1])
        i += 1
    if len(conv_channels) < 2 or len(gcn_dims) < 2:
        raise CheckpointError("checkpoint holds no complete layer stack")

    arch = Architecture(
        conv_channels=tuple(conv_channels),
        gcn_dims=tuple(gcn_dims),
        grid=(int(grid_h), int(grid_w)),
        connectivity=int(connectivity),
    )
    model = init_model(0, arch)
    for i, layer in enumerate(model.conv_layers):
        layer.kernels[:] = tensors[f"conv.{i}.kernels"]
        layer.bias[:] = tensors[f"conv.{i}.bias"]
    for i, layer in enumerate(model.gcn_layers):
        layer.weight[:] = tensors[f"gcn.{i}.weight"]
    return model
