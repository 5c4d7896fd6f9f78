"""Single-layer LSTM classifier trained with masked BPTT and Adam.

Sequences of shape (t, C) are standardized per channel, zero-padded to a
common length, and run through standard LSTM gate equations (input, forget,
cell, output). The final hidden state feeds an affine layer and a sigmoid.
Padding steps are masked so state freezes at each sequence's true end, which
makes variable-length batches exact rather than approximate.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..errors import ContractError
from .model import TrainedModel, check_binary_labels
from .preprocess import StandardizationParams

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class LSTMConfig:
    hidden_size: int = 256
    channels: Optional[int] = None
    epochs: int = 30
    learning_rate: float = 0.01
    clip_norm: float = 5.0
    batch_size: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.hidden_size < 1:
            raise ContractError("hidden_size must be >= 1")


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def init_params(n_channels: int, hidden_size: int, rng) -> Dict[str, np.ndarray]:
    """Glorot-uniform weights per gate block; forget-gate bias starts at 1."""
    H = hidden_size

    def glorot(fan_in, fan_out, shape):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=shape)

    W = np.concatenate(
        [glorot(n_channels, H, (n_channels, H)) for _ in range(4)], axis=1
    )
    U = np.concatenate([glorot(H, H, (H, H)) for _ in range(4)], axis=1)
    b = np.zeros(4 * H)
    b[H : 2 * H] = 1.0
    return {
        "W": W,
        "U": U,
        "b": b,
        "w_out": glorot(H, 1, (H,)),
        "b_out": np.zeros(1),
    }


def pad_sequences(seqs: Sequence[np.ndarray]):
    """Stack (t_i, C) arrays into a zero-padded (B, Tmax, C) tensor + mask."""
    B = len(seqs)
    lengths = [s.shape[0] for s in seqs]
    t_max = max(lengths)
    C = seqs[0].shape[1]
    X = np.zeros((B, t_max, C))
    mask = np.zeros((B, t_max))
    for k, s in enumerate(seqs):
        X[k, : lengths[k]] = s
        mask[k, : lengths[k]] = 1.0
    return X, mask


def _final_hidden(params, X, mask):
    W, U, b = params["W"], params["U"], params["b"]
    B, T, _ = X.shape
    H = U.shape[0]
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    for t in range(T):
        m = mask[:, t][:, None]
        a = X[:, t, :] @ W + h @ U + b
        i = _sigmoid(a[:, :H])
        f = _sigmoid(a[:, H : 2 * H])
        g = np.tanh(a[:, 2 * H : 3 * H])
        o = _sigmoid(a[:, 3 * H :])
        c_cand = f * c + i * g
        h_cand = o * np.tanh(c_cand)
        c = m * c_cand + (1.0 - m) * c
        h = m * h_cand + (1.0 - m) * h
    return h


def lstm_loss_and_grads(params, X, mask, y):
    """Mean binary cross-entropy (from logits) and analytic gradients.

    X is a standardized padded batch (B, T, C), mask marks valid steps, and
    y holds 0/1 labels. Masked steps contribute no parameter gradient and
    pass state gradients straight through, matching the frozen forward state.
    """
    W, U, b = params["W"], params["U"], params["b"]
    w_out, b_out = params["w_out"], params["b_out"]
    B, T, _ = X.shape
    H = U.shape[0]
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    cache = []
    for t in range(T):
        xt = X[:, t, :]
        m = mask[:, t][:, None]
        a = xt @ W + h @ U + b
        i = _sigmoid(a[:, :H])
        f = _sigmoid(a[:, H : 2 * H])
        g = np.tanh(a[:, 2 * H : 3 * H])
        o = _sigmoid(a[:, 3 * H :])
        c_cand = f * c + i * g
        tc = np.tanh(c_cand)
        cache.append((xt, h, c, i, f, g, o, tc, m))
        c = m * c_cand + (1.0 - m) * c
        h = m * (o * tc) + (1.0 - m) * h
    z = h @ w_out + b_out[0]
    yf = y.astype(np.float64)
    loss = float(np.mean(np.logaddexp(0.0, z) - yf * z))
    dz = (_sigmoid(z) - yf) / B
    grads = {
        "W": np.zeros_like(W),
        "U": np.zeros_like(U),
        "b": np.zeros_like(b),
        "w_out": h.T @ dz,
        "b_out": np.array([dz.sum()]),
    }
    dh = dz[:, None] * w_out[None, :]
    dc = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        xt, h_prev, c_prev, i, f, g, o, tc, m = cache[t]
        dh_cand = m * dh
        dc_cand = m * dc + dh_cand * o * (1.0 - tc * tc)
        do = dh_cand * tc
        df = dc_cand * c_prev
        di = dc_cand * g
        dg = dc_cand * i
        da = np.concatenate(
            [
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g * g),
                do * o * (1.0 - o),
            ],
            axis=1,
        )
        grads["W"] += xt.T @ da
        grads["U"] += h_prev.T @ da
        grads["b"] += da.sum(axis=0)
        dh = da @ U.T + (1.0 - m) * dh
        dc = dc_cand * f + (1.0 - m) * dc
    return loss, grads


def _clip_global_norm(grads: Dict[str, np.ndarray], clip: float) -> None:
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > clip:
        scale = clip / total
        for g in grads.values():
            g *= scale


def _fit_channel_standardizer(seqs: Sequence[np.ndarray]) -> StandardizationParams:
    stacked = np.concatenate(seqs, axis=0)
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    zero = std <= 0.0
    std = np.where(zero, 1.0, std)
    return StandardizationParams(mean=mean, std=std, zero_variance=zero)


def _check_sequences(sequences: Sequence[np.ndarray], n_channels: int) -> List[np.ndarray]:
    out = []
    for seq in sequences:
        seq = np.asarray(seq, dtype=np.float64)
        if seq.ndim != 2 or seq.shape[1] != n_channels:
            raise ContractError(
                f"sequence must be t x {n_channels}, got shape {seq.shape}"
            )
        if seq.shape[0] == 0:
            raise ContractError("zero-length sequence")
        out.append(seq)
    return out


def train_lstm(
    sequences: Sequence[np.ndarray],
    y,
    channel_names: Sequence[str],
    config: Optional[LSTMConfig] = None,
) -> TrainedModel:
    """Fit the LSTM on variable-length sequences with Adam.

    Full-batch by default; set batch_size for seeded shuffled minibatches.
    The per-epoch loss history is stored in the params.

    Raises:
        ContractError: channel mismatch or a zero-length sequence.
        DataError: non-binary or single-class labels.
    """
    cfg = config or LSTMConfig()
    names = tuple(channel_names)
    C = len(names)
    if cfg.channels is not None and cfg.channels != C:
        raise ContractError(
            f"config expects {cfg.channels} channels, data has {C}"
        )
    y = check_binary_labels(y)
    seqs = _check_sequences(sequences, C)
    if len(seqs) != y.size:
        raise ContractError(f"{len(seqs)} sequences for {y.size} labels")
    std = _fit_channel_standardizer(seqs)
    seqs = [(s - std.mean) / std.std for s in seqs]
    X, mask = pad_sequences(seqs)
    rng = np.random.default_rng(cfg.seed)
    params = init_params(C, cfg.hidden_size, rng)
    m_state = {k: np.zeros_like(v) for k, v in params.items()}
    v_state = {k: np.zeros_like(v) for k, v in params.items()}
    step = 0
    losses = []
    n = y.size
    for _ in range(cfg.epochs):
        if cfg.batch_size is None or cfg.batch_size >= n:
            batches = [np.arange(n)]
        else:
            order = rng.permutation(n)
            batches = [
                order[s : s + cfg.batch_size]
                for s in range(0, n, cfg.batch_size)
            ]
        epoch_losses = []
        for idx in batches:
            loss, grads = lstm_loss_and_grads(
                params, X[idx], mask[idx], y[idx]
            )
            epoch_losses.append(loss)
            _clip_global_norm(grads, cfg.clip_norm)
            step += 1
            for k in params:
                m_state[k] = ADAM_BETA1 * m_state[k] + (1 - ADAM_BETA1) * grads[k]
                v_state[k] = ADAM_BETA2 * v_state[k] + (1 - ADAM_BETA2) * grads[k] ** 2
                m_hat = m_state[k] / (1 - ADAM_BETA1**step)
                v_hat = v_state[k] / (1 - ADAM_BETA2**step)
                params[k] = params[k] - cfg.learning_rate * m_hat / (
                    np.sqrt(v_hat) + ADAM_EPS
                )
        losses.append(float(np.mean(epoch_losses)))
    params["loss_history"] = np.array(losses)
    return TrainedModel(
        variant="lstm",
        params=params,
        standardization=std,
        config=asdict(cfg),
        channel_names=names,
    )


def lstm_probabilities(model: TrainedModel, sequences: Sequence[np.ndarray]) -> np.ndarray:
    """Sigmoid outputs for a batch of raw (unstandardized) sequences."""
    from .model import prepare_sequence

    if not sequences:
        return np.zeros(0)
    seqs = [prepare_sequence(model, s) for s in sequences]
    X, mask = pad_sequences(seqs)
    params = {k: np.asarray(v) for k, v in model.params.items() if k != "loss_history"}
    h = _final_hidden(params, X, mask)
    z = h @ params["w_out"] + params["b_out"][0]
    return _sigmoid(z)
