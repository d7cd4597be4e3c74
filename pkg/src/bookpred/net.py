"""From-scratch neural classifiers over chunked sentence embeddings.

Two architectures share the parameter container, loss, optimizer, and
checkpoint format:

* ``cnn`` — multi-window 1-D convolution along the chunk axis, ReLU,
  max-over-time pooling per filter, inverted dropout on the pooled
  vector, optional concatenation of the 5 scaled readability scores,
  then a two-layer dense head producing 2 logits;
* ``book2vec`` — the same dense head applied directly to one averaged
  book vector.

Everything is float64 numpy; backpropagation is exact (gradients are
validated against central finite differences in the test suite).
"""

from __future__ import annotations

import json
import math
import os
import struct
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .corpus import SuccessLabel
from .readability import ReadabilityScaler

__all__ = [
    "ModelConfig",
    "ModelParams",
    "AdamState",
    "ForwardCache",
    "CheckpointError",
    "init_params",
    "build_book2vec",
    "forward",
    "loss",
    "backward",
    "adam_step",
    "predict",
    "readability_output_gradient",
    "save_checkpoint",
    "load_checkpoint",
]

N_READABILITY = 5
N_CLASSES = 2

# Class index convention: 0 = Unsuccessful, 1 = Successful.
_LABEL_INDEX = {SuccessLabel.UNSUCCESSFUL: 0, SuccessLabel.SUCCESSFUL: 1}
_INDEX_LABEL = {v: k for k, v in _LABEL_INDEX.items()}


def label_index(label: SuccessLabel) -> int:
    return _LABEL_INDEX[label]


@dataclass(frozen=True)
class ModelConfig:
    input_dim: int
    arch: str = "cnn"  # "cnn" | "book2vec"
    window_sizes: tuple[int, ...] = (2, 3, 5, 7)
    filters_per_window: int = 20
    hidden_units: int = 50
    dropout_p: float = 0.6
    n_chunks: int = 50
    use_readability: bool = True

    def __post_init__(self) -> None:
        if self.arch not in ("cnn", "book2vec"):
            raise ValueError(f"unknown arch {self.arch!r}")
        if self.input_dim < 1:
            raise ValueError("input_dim must be positive")
        if self.hidden_units < 1:
            raise ValueError("hidden_units must be positive")
        if not (0.0 <= self.dropout_p < 1.0):
            raise ValueError(f"dropout_p {self.dropout_p} outside [0, 1)")
        if self.arch == "cnn":
            if not self.window_sizes:
                raise ValueError("cnn needs at least one window size")
            if any(w < 1 for w in self.window_sizes):
                raise ValueError("window sizes must be positive")
            if max(self.window_sizes) > self.n_chunks:
                raise ValueError(
                    f"window size {max(self.window_sizes)} exceeds n_chunks {self.n_chunks}"
                )
            if self.filters_per_window < 1:
                raise ValueError("filters_per_window must be positive")

    @property
    def pooled_dim(self) -> int:
        if self.arch != "cnn":
            return 0
        return self.filters_per_window * len(self.window_sizes)

    @property
    def fused_dim(self) -> int:
        """Width of the vector entering the dense head."""
        if self.arch == "book2vec":
            return self.input_dim
        return self.pooled_dim + (N_READABILITY if self.use_readability else 0)

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "arch": self.arch,
            "window_sizes": list(self.window_sizes),
            "filters_per_window": self.filters_per_window,
            "hidden_units": self.hidden_units,
            "dropout_p": self.dropout_p,
            "n_chunks": self.n_chunks,
            "use_readability": self.use_readability,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        d["window_sizes"] = tuple(d["window_sizes"])
        return cls(**d)


@dataclass
class ModelParams:
    """All trainable tensors, aligned with ``config.window_sizes``."""

    config: ModelConfig
    conv_kernels: list[np.ndarray]  # per window: (filters, w, input_dim)
    conv_biases: list[np.ndarray]  # per window: (filters,)
    dense1_w: np.ndarray  # (hidden_units, fused_dim)
    dense1_b: np.ndarray  # (hidden_units,)
    dense2_w: np.ndarray  # (2, hidden_units)
    dense2_b: np.ndarray  # (2,)

    def tensors(self):
        """Yield (name, array) in fixed declaration order."""
        for w, kernel, bias in zip(
            self.config.window_sizes, self.conv_kernels, self.conv_biases
        ):
            yield f"conv{w}_kernel", kernel
            yield f"conv{w}_bias", bias
        yield "dense1_w", self.dense1_w
        yield "dense1_b", self.dense1_b
        yield "dense2_w", self.dense2_w
        yield "dense2_b", self.dense2_b

    def copy(self) -> "ModelParams":
        return ModelParams(
            config=self.config,
            conv_kernels=[k.copy() for k in self.conv_kernels],
            conv_biases=[b.copy() for b in self.conv_biases],
            dense1_w=self.dense1_w.copy(),
            dense1_b=self.dense1_b.copy(),
            dense2_w=self.dense2_w.copy(),
            dense2_b=self.dense2_b.copy(),
        )

    def with_tensors(self, new: dict[str, np.ndarray]) -> "ModelParams":
        kernels = [new[f"conv{w}_kernel"] for w in self.config.window_sizes]
        biases = [new[f"conv{w}_bias"] for w in self.config.window_sizes]
        return ModelParams(
            config=self.config,
            conv_kernels=kernels,
            conv_biases=biases,
            dense1_w=new["dense1_w"],
            dense1_b=new["dense1_b"],
            dense2_w=new["dense2_w"],
            dense2_b=new["dense2_b"],
        )


@dataclass
class ForwardCache:
    """Intermediates recorded by a train-mode forward pass for backprop."""

    x: np.ndarray
    windows: list[np.ndarray]  # per window: (T, w*input_dim) im2col view
    conv_pre: list[np.ndarray]  # per window: (T, filters) pre-ReLU maps
    argmax: list[np.ndarray]  # per window: (filters,) max-over-time index
    pooled: np.ndarray  # concatenated pooled features, pre-dropout
    keep_mask: np.ndarray | None  # dropout keep mask (train mode, p > 0)
    fused: np.ndarray  # vector entering dense1
    z1: np.ndarray  # dense1 pre-activation
    h: np.ndarray  # dense1 post-ReLU
    train_mode: bool


def init_params(config: ModelConfig, seed: int) -> ModelParams:
    """Glorot-uniform weights, zero biases, deterministic per seed.

    Each tensor draws from uniform [-a, a] with a = sqrt(6/(fan_in +
    fan_out)), treating a conv kernel as a linear map from its w*dim
    receptive field onto its filters.
    """
    rng = np.random.default_rng(seed)
    kernels: list[np.ndarray] = []
    biases: list[np.ndarray] = []
    if config.arch == "cnn":
        f = config.filters_per_window
        for w in config.window_sizes:
            a = math.sqrt(6.0 / (w * config.input_dim + f))
            kernels.append(rng.uniform(-a, a, size=(f, w, config.input_dim)))
            biases.append(np.zeros(f))
    fused = config.fused_dim
    a1 = math.sqrt(6.0 / (fused + config.hidden_units))
    dense1_w = rng.uniform(-a1, a1, size=(config.hidden_units, fused))
    a2 = math.sqrt(6.0 / (config.hidden_units + N_CLASSES))
    dense2_w = rng.uniform(-a2, a2, size=(N_CLASSES, config.hidden_units))
    return ModelParams(
        config=config,
        conv_kernels=kernels,
        conv_biases=biases,
        dense1_w=dense1_w,
        dense1_b=np.zeros(config.hidden_units),
        dense2_w=dense2_w,
        dense2_b=np.zeros(N_CLASSES),
    )


def build_book2vec(input_dim: int, hidden_units: int = 50, seed: int = 0) -> ModelParams:
    """Two-layer feed-forward classifier over one averaged book vector,
    sharing the loss/optimizer/checkpoint machinery of the CNN."""
    config = ModelConfig(
        input_dim=input_dim,
        arch="book2vec",
        window_sizes=(),
        filters_per_window=0,
        hidden_units=hidden_units,
        dropout_p=0.0,
        n_chunks=1,
        use_readability=False,
    )
    return init_params(config, seed)


def _run_forward(
    params: ModelParams,
    x: np.ndarray,
    readability_scaled: np.ndarray | None,
    train_mode: bool,
    rng: np.random.Generator | None,
) -> tuple[np.ndarray, ForwardCache]:
    cfg = params.config
    x = np.asarray(x, dtype=float)

    if cfg.arch == "book2vec":
        if readability_scaled is not None:
            raise ValueError("book2vec does not take readability inputs")
        if x.shape != (cfg.input_dim,):
            raise ValueError(f"expected input shape ({cfg.input_dim},), got {x.shape}")
        fused = x
        windows: list[np.ndarray] = []
        conv_pre: list[np.ndarray] = []
        argmax: list[np.ndarray] = []
        pooled = np.zeros(0)
        keep_mask = None
    else:
        if x.shape != (cfg.n_chunks, cfg.input_dim):
            raise ValueError(
                f"expected input shape ({cfg.n_chunks}, {cfg.input_dim}), got {x.shape}"
            )
        if cfg.use_readability:
            if readability_scaled is None:
                raise ValueError("model was configured with use_readability=True")
            readability_scaled = np.asarray(readability_scaled, dtype=float)
            if readability_scaled.shape != (N_READABILITY,):
                raise ValueError(
                    f"readability vector must have shape ({N_READABILITY},), "
                    f"got {readability_scaled.shape}"
                )
        elif readability_scaled is not None:
            raise ValueError("model was configured with use_readability=False")

        windows = []
        conv_pre = []
        argmax = []
        pooled_parts = []
        f = cfg.filters_per_window
        for w, kernel, bias in zip(cfg.window_sizes, params.conv_kernels, params.conv_biases):
            t = cfg.n_chunks - w + 1
            win = sliding_window_view(x, (w, cfg.input_dim)).reshape(t, w * cfg.input_dim)
            pre = win @ kernel.reshape(f, -1).T + bias  # (t, filters)
            relu_map = np.maximum(pre, 0.0)
            idx = np.argmax(relu_map, axis=0)  # ties break to the lowest index
            windows.append(win)
            conv_pre.append(pre)
            argmax.append(idx)
            pooled_parts.append(relu_map[idx, np.arange(f)])
        pooled = np.concatenate(pooled_parts)

        if train_mode and cfg.dropout_p > 0.0:
            if rng is None:
                raise ValueError("train-mode forward with dropout needs an rng")
            keep_prob = 1.0 - cfg.dropout_p
            keep_mask = rng.random(pooled.shape) < keep_prob
            dropped = pooled * keep_mask / keep_prob
        else:
            keep_mask = None
            dropped = pooled

        if cfg.use_readability:
            fused = np.concatenate([dropped, readability_scaled])
        else:
            fused = dropped

    z1 = params.dense1_w @ fused + params.dense1_b
    h = np.maximum(z1, 0.0)
    logits = params.dense2_w @ h + params.dense2_b
    cache = ForwardCache(
        x=x,
        windows=windows,
        conv_pre=conv_pre,
        argmax=argmax,
        pooled=pooled,
        keep_mask=keep_mask,
        fused=fused,
        z1=z1,
        h=h,
        train_mode=train_mode,
    )
    return logits, cache


def forward(
    params: ModelParams,
    x: np.ndarray,
    readability_scaled: np.ndarray | None = None,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, ForwardCache | None]:
    """Compute the 2 logits; in train mode also return the backprop cache.

    ``readability_scaled`` must be the already-scaled 5-vector and is
    required exactly when the model was built with readability fusion.
    Eval-mode output is a pure function of (params, inputs).
    """
    logits, cache = _run_forward(params, x, readability_scaled, train_mode, rng)
    return logits, (cache if train_mode else None)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    e = np.exp(shifted)
    return e / e.sum()


def loss(logits: np.ndarray, label: SuccessLabel) -> float:
    """Softmax cross-entropy over the 2 logits (natural log),
    log-sum-exp stabilized."""
    logits = np.asarray(logits, dtype=float)
    shifted = logits - logits.max()
    return float(np.log(np.exp(shifted).sum()) - shifted[label_index(label)])


def _backward_from_dlogits(
    params: ModelParams, cache: ForwardCache, dlogits: np.ndarray
) -> tuple[dict[str, np.ndarray], np.ndarray | None]:
    """Reverse-mode pass from a gradient on the logits.

    Returns per-tensor gradients plus the gradient with respect to the
    5 readability inputs (None when the model does not fuse them).
    """
    cfg = params.config
    grads: dict[str, np.ndarray] = {}

    grads["dense2_w"] = np.outer(dlogits, cache.h)
    grads["dense2_b"] = dlogits.copy()
    dh = params.dense2_w.T @ dlogits
    dz1 = dh * (cache.z1 > 0.0)
    grads["dense1_w"] = np.outer(dz1, cache.fused)
    grads["dense1_b"] = dz1.copy()
    dfused = params.dense1_w.T @ dz1

    if cfg.arch == "book2vec":
        return grads, None

    if cfg.use_readability:
        d_readability = dfused[-N_READABILITY:].copy()
        d_dropped = dfused[:-N_READABILITY]
    else:
        d_readability = None
        d_dropped = dfused

    if cache.keep_mask is not None:
        dpooled = d_dropped * cache.keep_mask / (1.0 - cfg.dropout_p)
    else:
        dpooled = d_dropped

    # Max-over-time routes each filter's gradient to its argmax time step
    # only, and the ReLU gate zeroes it when that step's pre-activation
    # is not positive, so the kernel gradient is one window row per filter.
    f = cfg.filters_per_window
    offset = 0
    for i, w in enumerate(cfg.window_sizes):
        g = dpooled[offset : offset + f]
        offset += f
        idx = cache.argmax[i]
        gate = cache.conv_pre[i][idx, np.arange(f)] > 0.0
        g_eff = g * gate
        dk_flat = g_eff[:, None] * cache.windows[i][idx]  # (filters, w*dim)
        grads[f"conv{w}_kernel"] = dk_flat.reshape(f, w, cfg.input_dim)
        grads[f"conv{w}_bias"] = g_eff
    return grads, d_readability


def backward(
    params: ModelParams, cache: ForwardCache, label: SuccessLabel
) -> tuple[dict[str, np.ndarray], np.ndarray | None]:
    """Exact gradients of the cross-entropy loss for every tensor,
    plus the gradient with respect to the readability inputs.

    The cache must come from a train-mode forward on the same params;
    the dropout mask is replayed from it.
    """
    probs = _softmax(params.dense2_w @ cache.h + params.dense2_b)
    dlogits = probs.copy()
    dlogits[label_index(label)] -= 1.0
    return _backward_from_dlogits(params, cache, dlogits)


def readability_output_gradient(
    params: ModelParams,
    x: np.ndarray,
    readability_scaled: np.ndarray,
    target: str = "logit",
) -> np.ndarray:
    """Gradient of the Successful output with respect to the 5 scaled
    readability inputs, in eval mode (no dropout).

    ``target="logit"`` differentiates the Successful-class logit;
    ``target="probability"`` differentiates its softmax probability.
    """
    if not params.config.use_readability:
        raise ValueError("model was trained without readability fusion")
    if target not in ("logit", "probability"):
        raise ValueError(f"unknown attribution target {target!r}")
    logits, cache = _run_forward(params, x, readability_scaled, train_mode=False, rng=None)
    success = label_index(SuccessLabel.SUCCESSFUL)
    other = 1 - success
    if target == "logit":
        dlogits = np.zeros(N_CLASSES)
        dlogits[success] = 1.0
    else:
        p = _softmax(logits)
        dlogits = np.zeros(N_CLASSES)
        dlogits[success] = p[success] * (1.0 - p[success])
        dlogits[other] = -p[success] * p[other]
    _, d_readability = _backward_from_dlogits(params, cache, dlogits)
    assert d_readability is not None
    return d_readability


@dataclass
class AdamState:
    """Adam moment accumulators, one pair per parameter tensor."""

    t: int
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    lr: float = 0.0009
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(
        cls,
        params: ModelParams,
        lr: float = 0.0009,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> "AdamState":
        m = {name: np.zeros_like(t) for name, t in params.tensors()}
        v = {name: np.zeros_like(t) for name, t in params.tensors()}
        return cls(t=0, m=m, v=v, lr=lr, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(
    params: ModelParams, grads: dict[str, np.ndarray], state: AdamState
) -> tuple[ModelParams, AdamState]:
    """One bias-corrected Adam update; returns new params and state."""
    t = state.t + 1
    new_m: dict[str, np.ndarray] = {}
    new_v: dict[str, np.ndarray] = {}
    new_tensors: dict[str, np.ndarray] = {}
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for name, theta in params.tensors():
        g = grads[name]
        m = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        v = state.beta2 * state.v[name] + (1.0 - state.beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        new_tensors[name] = theta - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
        new_m[name] = m
        new_v[name] = v
    new_params = params.with_tensors(new_tensors)
    new_state = replace(state, t=t, m=new_m, v=new_v)
    return new_params, new_state


def predict(
    params: ModelParams,
    x: np.ndarray,
    readability_scaled: np.ndarray | None = None,
) -> tuple[SuccessLabel, float]:
    """Eval-mode prediction: (label, probability of that label).

    Ties go to Successful, the majority class.
    """
    logits, _ = _run_forward(params, x, readability_scaled, train_mode=False, rng=None)
    p = _softmax(logits)
    success = label_index(SuccessLabel.SUCCESSFUL)
    if p[success] >= p[1 - success]:
        return SuccessLabel.SUCCESSFUL, float(p[success])
    return SuccessLabel.UNSUCCESSFUL, float(p[1 - success])


# ----------------------------------------------------------------------
# Checkpoint format: magic BPMD, version u32, u32 JSON length, JSON
# metadata (model config + caller extras), parameter tensors in
# declaration order as little-endian float32, then the readability
# scaler (5 + 5 float64) when present.
# ----------------------------------------------------------------------

CHECKPOINT_MAGIC = b"BPMD"
CHECKPOINT_VERSION = 1


class CheckpointError(Exception):
    pass


def save_checkpoint(
    path: str | Path,
    params: ModelParams,
    scaler: ReadabilityScaler | None = None,
    extra: dict | None = None,
) -> None:
    path = Path(path)
    meta = {
        "config": params.config.to_dict(),
        "extra": extra or {},
        "has_scaler": scaler is not None,
    }
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, suffix=".bpmd.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(CHECKPOINT_MAGIC)
            fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(meta_bytes)))
            fh.write(meta_bytes)
            for _, tensor in params.tensors():
                fh.write(np.ascontiguousarray(tensor, dtype="<f4").tobytes())
            if scaler is not None:
                fh.write(np.ascontiguousarray(scaler.mean, dtype="<f8").tobytes())
                fh.write(np.ascontiguousarray(scaler.std, dtype="<f8").tobytes())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def load_checkpoint(
    path: str | Path,
) -> tuple[ModelParams, ReadabilityScaler | None, dict]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 12 or raw[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: not a model checkpoint (bad magic)")
    version, meta_len = struct.unpack_from("<II", raw, 4)
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    offset = 12
    if len(raw) < offset + meta_len:
        raise CheckpointError(f"{path}: truncated metadata")
    try:
        meta = json.loads(raw[offset : offset + meta_len].decode("utf-8"))
        config = ModelConfig.from_dict(meta["config"])
    except (ValueError, KeyError, TypeError) as exc:
        raise CheckpointError(f"{path}: bad metadata ({exc})") from None
    offset += meta_len

    template = init_params(config, seed=0)
    tensors: dict[str, np.ndarray] = {}
    for name, tensor in template.tensors():
        count = tensor.size
        end = offset + 4 * count
        if len(raw) < end:
            raise CheckpointError(f"{path}: truncated tensor {name}")
        values = np.frombuffer(raw, dtype="<f4", count=count, offset=offset)
        tensors[name] = values.astype(float).reshape(tensor.shape)
        offset = end
    params = template.with_tensors(tensors)

    scaler = None
    if meta["has_scaler"]:
        end = offset + 8 * 2 * N_READABILITY
        if len(raw) < end:
            raise CheckpointError(f"{path}: truncated scaler")
        mean = np.frombuffer(raw, dtype="<f8", count=N_READABILITY, offset=offset).copy()
        std = np.frombuffer(
            raw, dtype="<f8", count=N_READABILITY, offset=offset + 8 * N_READABILITY
        ).copy()
        scaler = ReadabilityScaler(mean=mean, std=std)
        offset = end
    if offset != len(raw):
        raise CheckpointError(f"{path}: {len(raw) - offset} trailing bytes")
    return params, scaler, meta["extra"]
