"""Surrogate-gradient training of the LIF networks.

Reverse-mode backpropagation through the time-unrolled network, where the
Heaviside spike derivative is replaced by the fast-sigmoid surrogate slope.
The loss is the spike-count cross entropy plus two hinge regularizers on the
hidden raster: a per-neuron lower firing-rate term and a squared population
spike-count term. Optimization uses the Adamax rule.
"""

from dataclasses import dataclass, field

import numpy as np

from ._snn_kernels import bptt_backward
from .snn import forward_batch


@dataclass
class TrainConfig:
    learning_rate: float = 0.0015
    batch_size: int = 128
    epochs: int = 300
    surrogate_scale: float = 10.0
    reg_spikes: float = 0.0      # mu_2, scales the population (upper) term
    reg_neurons: float = 0.0     # mu_1, scales the per-neuron (lower) term
    reg_lower_threshold: float = 1e-3
    reg_lower_strength: float = 1.0
    reg_upper_threshold: float = 100.0
    reg_upper_strength: float = 1.0
    seed: int = 0
    dtype: str = "float32"
    test_fraction: float = 0.2
    stop_at_test_accuracy: float = None

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if min(self.reg_spikes, self.reg_neurons) < 0:
            raise ValueError("regularizer scales must be >= 0")


@dataclass
class LossBreakdown:
    cross_entropy: float
    reg_l1: float
    reg_l2: float
    total: float


def surrogate_grad(u, scale):
    """Derivative of the fast sigmoid u/(1 + scale*|u|): 1/(1 + scale*|u|)^2."""
    if not scale > 0:
        raise ValueError("surrogate scale must be positive")
    u = np.asarray(u, dtype=np.float64)
    return 1.0 / (1.0 + scale * np.abs(u)) ** 2


def fast_sigmoid(u, scale):
    u = np.asarray(u, dtype=np.float64)
    return u / (1.0 + scale * np.abs(u))


def _log_softmax(counts):
    z = counts - counts.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))

def loss_cross_entropy(counts, labels):
    """Mean negative log softmax of the per-class output spike counts."""
    counts = np.asarray(counts, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() >= counts.shape[1]:
        raise ValueError("label out of range")
    lsm = _log_softmax(counts)
    return float(-lsm[np.arange(len(labels)), labels].mean())


def loss_reg_lower(hidden_spikes, strength, threshold):
    """Per-neuron lower firing-rate hinge.

    ``hidden_spikes`` is the [T, B, N] raster; the penalty sums, over samples
    and neurons, the excess of the per-neuron firing rate (mean spikes per
    step) above ``threshold``, scaled by strength/(B + N).
    """
    T, B, N = hidden_spikes.shape
    rates = hidden_spikes.astype(np.float64).mean(axis=0)  # [B, N]
    return float(strength / (B + N) * np.maximum(0.0, rates - threshold).sum())


def loss_reg_upper(hidden_spikes, strength, threshold):
    """Squared population spike-count hinge.

    Penalizes, per sample, the square of the excess of the mean-over-neurons
    total spike count above ``threshold``, scaled by strength/B.
    """
    T, B, N = hidden_spikes.shape
    mean_counts = hidden_spikes.astype(np.float64).sum(axis=(0, 2)) / N  # [B]
    return float(strength / B * (np.maximum(0.0, mean_counts - threshold) ** 2).sum())


def loss_total(counts, labels, hidden_spikes, cfg):
    ce = loss_cross_entropy(counts, labels)
    l1 = loss_reg_lower(hidden_spikes, cfg.reg_lower_strength, cfg.reg_lower_threshold)
    l2 = loss_reg_upper(hidden_spikes, cfg.reg_upper_strength, cfg.reg_upper_threshold)
    return LossBreakdown(
        cross_entropy=ce,
        reg_l1=l1,
        reg_l2=l2,
        total=ce + cfg.reg_neurons * l1 + cfg.reg_spikes * l2,
    )


@dataclass
class GradientSet:
    d_w_in: np.ndarray
    d_v_rec: np.ndarray  # None for feedforward networks
    d_w_out: np.ndarray


def backward(net, trace, x, labels, cfg):
    """Gradients of the total loss for one batch.

    ``trace`` must come from ``forward_batch`` on ``x`` ([B, T, C]); the
    smooth-mode trace of the same network is accepted and then the returned
    gradients are the exact gradients of the smoothed loss (the property the
    finite-difference check exercises). The reset path is excluded from
    differentiation.
    """
    x = np.asarray(x)
    if x.ndim == 2:
        x = x[None]
    B = x.shape[0]
    if trace.batch_size != B:
        raise ValueError("trace does not match the input batch")
    dtype = net.dtype
    labels = np.asarray(labels)

    counts = trace.soft_output_counts.astype(np.float64)
    probs = np.exp(_log_softmax(counts))
    probs[np.arange(B), labels] -= 1.0
    g_count = probs / B

    hidden = trace.hidden_spikes.astype(np.float64)
    T, _, N = hidden.shape
    rates = hidden.mean(axis=0)
    g_lower = (
        cfg.reg_neurons
        * cfg.reg_lower_strength
        / ((B + N) * T)
        * (rates > cfg.reg_lower_threshold)
    )
    mean_counts = hidden.sum(axis=(0, 2)) / N
    excess = np.maximum(0.0, mean_counts - cfg.reg_upper_threshold)
    g_upper = cfg.reg_spikes * cfg.reg_upper_strength * 2.0 * excess / (B * N)
    g_s1_const = g_lower + g_upper[:, None]

    xf = np.ascontiguousarray(x.transpose(1, 0, 2).astype(dtype))
    hp, op = net.lif_hidden, net.lif_out
    scalars = [hp.alpha, hp.beta, hp.firing_threshold, op.alpha, op.beta, op.firing_threshold]
    a1, b1, t1, a2, b2, t2 = (dtype.type(v) for v in scalars)
    v = net.v_rec if net.recurrent else np.zeros((0, 0), dtype=dtype)
    d_w_in, d_v, d_w_out = bptt_backward(
        xf,
        trace.hidden_voltage, trace.hidden_spikes, trace.hidden_spikes_hard,
        trace.out_voltage, trace.out_spikes_hard,
        np.ascontiguousarray(net.w_out), np.ascontiguousarray(v), net.recurrent,
        g_count.astype(dtype), g_s1_const.astype(dtype),
        a1, b1, t1, a2, b2, t2,
        dtype.type(cfg.surrogate_scale), dtype.type(1.0),
    )
    return GradientSet(
        d_w_in=d_w_in,
        d_v_rec=d_v if net.recurrent else None,
        d_w_out=d_w_out,
    )


@dataclass
class AdamaxState:
    """Exponential first moment plus infinity-norm second moment, per tensor."""

    m: np.ndarray
    u: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, w):
        return cls(m=np.zeros_like(w, dtype=np.float64), u=np.zeros_like(w, dtype=np.float64))


def optimizer_step(weights, grads, state, learning_rate):
    """One Adamax update; mutates ``weights`` and ``state``, returns weights."""
    g = np.asarray(grads, dtype=np.float64)
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * g
    state.u = np.maximum(state.beta2 * state.u, np.abs(g))
    correction = 1.0 - state.beta1 ** state.step
    weights -= (learning_rate / correction * state.m / (state.u + state.eps)).astype(
        weights.dtype
    )
    return weights


def stratified_split(labels, test_fraction, rng):
    """Seeded per-class shuffle; at least one test sample per class."""
    labels = np.asarray(labels)
    train_idx, test_idx = [], []
    for c in np.unique(labels):
        idx = np.where(labels == c)[0]
        if len(idx) < 2:
            raise ValueError(f"class {c} has fewer than 2 samples")
        idx = rng.permutation(idx)
        n_test = max(1, int(round(len(idx) * test_fraction)))
        test_idx.append(idx[:n_test])
        train_idx.append(idx[n_test:])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(test_idx))


def evaluate(net, x, labels, batch_size=256):
    """Classification accuracy of the network on [N, T, C] inputs."""
    labels = np.asarray(labels)
    correct = 0
    for start in range(0, len(labels), batch_size):
        batch = x[start : start + batch_size]
        counts = forward_batch(net, batch).output_spike_counts
        correct += int((np.argmax(counts, axis=1) == labels[start : start + batch_size]).sum())
    return correct / len(labels)


@dataclass
class EpochMetrics:
    epoch: int
    train_accuracy: float
    test_accuracy: float
    cross_entropy: float
    reg_l1: float
    reg_l2: float
    total_loss: float
    hidden_spike_mean: float


@dataclass
class TrainResult:
    net: "NetworkDef"
    metrics: list = field(default_factory=list)
    best_epoch: int = -1
    best_test_accuracy: float = 0.0
    train_indices: np.ndarray = None
    test_indices: np.ndarray = None


def train(net, data, cfg):
    """Train on ``data = (inputs [N, T, C], labels [N])``.

    Performs a seeded stratified 80/20 split, runs mini-batch epochs, logs
    per-epoch accuracy and the loss breakdown, and returns the weights of the
    epoch with the best test accuracy. Fully deterministic for a fixed
    config: identical seeds give identical metric trajectories and weights.
    """
    x, labels = data
    x = np.asarray(x)
    labels = np.asarray(labels)
    if len(x) != len(labels) or len(x) == 0:
        raise ValueError("empty or inconsistent dataset")
    dtype = np.dtype(cfg.dtype)
    net = net.astype(dtype)

    rng = np.random.default_rng(cfg.seed)
    train_idx, test_idx = stratified_split(labels, cfg.test_fraction, rng)
    x_train, y_train = x[train_idx], labels[train_idx]
    x_test, y_test = x[test_idx], labels[test_idx]

    states = {"w_in": AdamaxState.zeros_like(net.w_in), "w_out": AdamaxState.zeros_like(net.w_out)}
    if net.recurrent:
        states["v_rec"] = AdamaxState.zeros_like(net.v_rec)

    best = TrainResult(net=net.copy(), metrics=[])
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(x_train))
        correct = 0
        ce_sum = l1_sum = l2_sum = tot_sum = spike_sum = 0.0
        n_batches = 0
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb, yb = x_train[idx], y_train[idx]
            trace = forward_batch(net, xb, surrogate_scale=cfg.surrogate_scale)
            counts = trace.output_spike_counts
            correct += int((np.argmax(counts, axis=1) == yb).sum())
            breakdown = loss_total(counts, yb, trace.hidden_spikes_hard, cfg)
            ce_sum += breakdown.cross_entropy
            l1_sum += breakdown.reg_l1
            l2_sum += breakdown.reg_l2
            tot_sum += breakdown.total
            spike_sum += float(trace.hidden_spike_totals.mean())
            n_batches += 1
            grads = backward(net, trace, xb, yb, cfg)
            optimizer_step(net.w_in, grads.d_w_in, states["w_in"], cfg.learning_rate)
            optimizer_step(net.w_out, grads.d_w_out, states["w_out"], cfg.learning_rate)
            if net.recurrent:
                optimizer_step(net.v_rec, grads.d_v_rec, states["v_rec"], cfg.learning_rate)

        test_acc = evaluate(net, x_test, y_test, batch_size=max(cfg.batch_size, 64))
        metrics = EpochMetrics(
            epoch=epoch,
            train_accuracy=correct / len(x_train),
            test_accuracy=test_acc,
            cross_entropy=ce_sum / n_batches,
            reg_l1=l1_sum / n_batches,
            reg_l2=l2_sum / n_batches,
            total_loss=tot_sum / n_batches,
            hidden_spike_mean=spike_sum / n_batches,
        )
        best.metrics.append(metrics)
        if test_acc > best.best_test_accuracy or best.best_epoch < 0:
            best.best_test_accuracy = test_acc
            best.best_epoch = epoch
            best.net = net.copy()
        if cfg.stop_at_test_accuracy is not None and test_acc >= cfg.stop_at_test_accuracy:
            break

    best.train_indices = train_idx
    best.test_indices = test_idx
    return best


def write_metrics_csv(metrics, path):
    """One CSV row per epoch with the loss breakdown and accuracies."""
    with open(path, "w") as fh:
        fh.write("epoch,train_acc,test_acc,L,L1,L2,L_tot,hidden_spike_mean\n")
        for m in metrics:
            fh.write(
                f"{m.epoch},{m.train_accuracy!r},{m.test_accuracy!r},"
                f"{m.cross_entropy!r},{m.reg_l1!r},{m.reg_l2!r},"
                f"{m.total_loss!r},{m.hidden_spike_mean!r}\n"
            )


def smoothed_loss(net, x, labels, cfg):
    """Total loss of the surrogate-smoothed network (gradient-check twin).

    The forward pass propagates fast-sigmoid spike values while resets follow
    the hard threshold crossings; ``backward`` on the same trace returns this
    function's exact gradient.
    """
    trace = forward_batch(net, x, smooth=True, surrogate_scale=cfg.surrogate_scale)
    counts = trace.soft_output_counts
    breakdown = loss_total(counts, labels, trace.hidden_spikes, cfg)
    return breakdown.total, trace
