"""Finite-difference gradient oracle shared by the net tests and the
acceptance suite."""

from __future__ import annotations

import numpy as np

from bookpred import net
from bookpred.corpus import SuccessLabel


def rel_error(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-3)


def gradcheck_model(
    config: net.ModelConfig,
    seed: int,
    dropout_seed: int | None = None,
    eps: float = 1e-4,
) -> float:
    """Max relative error between analytic and central-difference
    gradients over every parameter entry and, when present, the 5
    readability inputs.

    With dropout enabled the rng is re-seeded per forward so the mask
    (and therefore the loss) is a deterministic function of the
    parameters, which makes finite differences valid through it.
    """
    rng = np.random.default_rng(seed)
    params = net.init_params(config, seed=seed)
    # nudge biases off zero so their gradients flow through live paths
    for name, tensor in params.tensors():
        if name.endswith("_b") or name.endswith("_bias"):
            tensor += rng.standard_normal(tensor.shape) * 0.1
    if config.arch == "cnn":
        x = rng.standard_normal((config.n_chunks, config.input_dim))
    else:
        x = rng.standard_normal(config.input_dim)
    readability = rng.standard_normal(net.N_READABILITY) if config.use_readability else None
    label = SuccessLabel.SUCCESSFUL if seed % 2 else SuccessLabel.UNSUCCESSFUL

    def forward_rng():
        if config.dropout_p > 0.0:
            return np.random.default_rng(dropout_seed)
        return None

    logits, cache = net.forward(params, x, readability, train_mode=True, rng=forward_rng())
    grads, d_readability = net.backward(params, cache, label)

    def loss_at(readability_vec):
        lg, _ = net.forward(params, x, readability_vec, train_mode=True, rng=forward_rng())
        return net.loss(lg, label)

    worst = 0.0
    for name, tensor in params.tensors():
        flat = tensor.ravel()
        gflat = grads[name].ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = loss_at(readability)
            flat[i] = orig - eps
            down = loss_at(readability)
            flat[i] = orig
            numeric = (up - down) / (2.0 * eps)
            worst = max(worst, rel_error(numeric, gflat[i]))
    if readability is not None:
        for i in range(net.N_READABILITY):
            bumped = readability.copy()
            bumped[i] += eps
            up = loss_at(bumped)
            bumped[i] -= 2.0 * eps
            down = loss_at(bumped)
            numeric = (up - down) / (2.0 * eps)
            worst = max(worst, rel_error(numeric, d_readability[i]))
    return worst
