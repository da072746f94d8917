"""Current-based LIF network model: parameters, forward pass, prediction.

Discrete-time dynamics per step (per layer):

    I(t) = alpha * I(t-1) + weighted_input(t)
    U(t) = (beta * U(t-1) + I(t)) * (1 - S(t-1))
    S(t) = 1 where U(t) >= firing_threshold

with alpha = exp(-bin/tau_syn) and beta = exp(-bin/tau_mem). Spiking neurons
are reset by the multiplicative (1 - S) factor on the following step. The
hidden layer optionally receives recurrent input from its own previous-step
spikes; the output layer is made of the same LIF neurons and the predicted
class is the output neuron with the highest spike count.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._snn_kernels import lif_forward


@dataclass
class LifParams:
    tau_mem_ms: float
    tau_syn_ms: float
    alpha: float
    beta: float
    firing_threshold: float = 1.0
    u_rest: float = 0.0
    input_resistance: float = 1.0

    def __post_init__(self):
        if not (self.tau_mem_ms > 0 and self.tau_syn_ms > 0):
            raise ValueError("time constants must be positive")
        if not (0 < self.alpha < 1 and 0 < self.beta < 1):
            raise ValueError("decay factors must lie in (0, 1)")
        if not self.firing_threshold > 0:
            raise ValueError("firing_threshold must be positive")

    @classmethod
    def from_time_constants(cls, tau_mem_ms, tau_syn_ms, time_bin_ms, firing_threshold=1.0):
        return cls(
            tau_mem_ms=tau_mem_ms,
            tau_syn_ms=tau_syn_ms,
            alpha=math.exp(-time_bin_ms / tau_syn_ms),
            beta=math.exp(-time_bin_ms / tau_mem_ms),
            firing_threshold=firing_threshold,
        )

    def check_consistency(self, time_bin_ms, tol=1e-12):
        """Verify alpha/beta agree with the time constants for this bin."""
        if abs(self.alpha - math.exp(-time_bin_ms / self.tau_syn_ms)) > tol:
            raise ValueError("alpha inconsistent with tau_syn and bin size")
        if abs(self.beta - math.exp(-time_bin_ms / self.tau_mem_ms)) > tol:
            raise ValueError("beta inconsistent with tau_mem and bin size")


@dataclass
class LayerState:
    current: np.ndarray
    voltage: np.ndarray
    spikes: np.ndarray

    @classmethod
    def zeros(cls, n_neurons, dtype=np.float64):
        return cls(
            current=np.zeros(n_neurons, dtype=dtype),
            voltage=np.zeros(n_neurons, dtype=dtype),
            spikes=np.zeros(n_neurons, dtype=dtype),
        )


def lif_step(state, params, weighted_input):
    """One LIF update; ``state.spikes`` is the previous step's indicator."""
    weighted_input = np.asarray(weighted_input)
    if weighted_input.shape != state.current.shape:
        raise ValueError("weighted_input shape does not match layer state")
    if not np.all(np.isfinite(weighted_input)):
        raise ValueError("non-finite weighted input")
    current = params.alpha * state.current + weighted_input
    voltage = (params.beta * state.voltage + current) * (1.0 - state.spikes)
    spikes = (voltage >= params.firing_threshold).astype(current.dtype)
    return LayerState(current=current, voltage=voltage, spikes=spikes)


@dataclass
class NetworkDef:
    n_inputs: int
    hidden_size: int
    n_outputs: int
    recurrent: bool
    w_in: np.ndarray
    v_rec: np.ndarray  # None for feedforward networks
    w_out: np.ndarray
    lif_hidden: LifParams
    lif_out: LifParams

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.w_in.shape != (self.hidden_size, self.n_inputs):
            raise ValueError("w_in shape mismatch")
        if self.w_out.shape != (self.n_outputs, self.hidden_size):
            raise ValueError("w_out shape mismatch")
        if self.recurrent:
            if self.v_rec is None or self.v_rec.shape != (self.hidden_size, self.hidden_size):
                raise ValueError("recurrent network requires square v_rec")
        elif self.v_rec is not None:
            raise ValueError("feedforward network must not carry v_rec")
        for w in (self.w_in, self.v_rec, self.w_out):
            if w is not None and not np.all(np.isfinite(w)):
                raise ValueError("non-finite weights")

    @classmethod
    def initialize(
        cls,
        n_inputs,
        hidden_size,
        n_outputs,
        recurrent,
        lif_hidden,
        lif_out,
        fwd_weight_scale=1.0,
        weight_scale_factor=0.01,
        seed=0,
        dtype=np.float64,
    ):
        """Seeded scaled-normal initialization.

        Forward weights draw from Normal(0, fwd_weight_scale/sqrt(fan_in));
        recurrent weights use the forward scale times weight_scale_factor.
        """
        rng = np.random.default_rng(seed)
        w_in = rng.normal(0.0, fwd_weight_scale / math.sqrt(n_inputs), (hidden_size, n_inputs))
        v_rec = None
        if recurrent:
            v_rec = rng.normal(
                0.0,
                fwd_weight_scale * weight_scale_factor / math.sqrt(hidden_size),
                (hidden_size, hidden_size),
            ).astype(dtype)
        w_out = rng.normal(
            0.0, fwd_weight_scale / math.sqrt(hidden_size), (n_outputs, hidden_size)
        )
        return cls(
            n_inputs=n_inputs,
            hidden_size=hidden_size,
            n_outputs=n_outputs,
            recurrent=recurrent,
            w_in=w_in.astype(dtype),
            v_rec=v_rec,
            w_out=w_out.astype(dtype),
            lif_hidden=lif_hidden,
            lif_out=lif_out,
        )

    def copy(self):
        return NetworkDef(
            n_inputs=self.n_inputs,
            hidden_size=self.hidden_size,
            n_outputs=self.n_outputs,
            recurrent=self.recurrent,
            w_in=self.w_in.copy(),
            v_rec=None if self.v_rec is None else self.v_rec.copy(),
            w_out=self.w_out.copy(),
            lif_hidden=self.lif_hidden,
            lif_out=self.lif_out,
        )

    def astype(self, dtype):
        out = self.copy()
        out.w_in = out.w_in.astype(dtype)
        out.w_out = out.w_out.astype(dtype)
        if out.v_rec is not None:
            out.v_rec = out.v_rec.astype(dtype)
        return out

    @property
    def dtype(self):
        return self.w_in.dtype


@dataclass
class BatchTrace:
    """Full state history of a batched forward pass, time-major [T, B, n].

    In the default hard-spike mode ``*_spikes`` and ``*_spikes_hard`` are the
    same arrays. The smooth mode (used by the gradient check) stores fast
    sigmoid values in ``*_spikes`` while ``*_spikes_hard`` keeps the actual
    threshold crossings driving the reset.
    """

    hidden_current: np.ndarray
    hidden_voltage: np.ndarray
    hidden_spikes: np.ndarray
    hidden_spikes_hard: np.ndarray
    out_current: np.ndarray
    out_voltage: np.ndarray
    out_spikes: np.ndarray
    out_spikes_hard: np.ndarray
    smooth: bool = False

    @property
    def n_steps(self):
        return self.hidden_current.shape[0]

    @property
    def batch_size(self):
        return self.hidden_current.shape[1]

    @property
    def output_spike_counts(self):
        """Per-sample output spike counts [B, n_outputs]."""
        return self.out_spikes_hard.sum(axis=0)

    @property
    def soft_output_counts(self):
        return self.out_spikes.sum(axis=0)

    @property
    def hidden_spike_totals(self):
        return self.hidden_spikes_hard.sum(axis=(0, 2))


@dataclass
class ForwardTrace:
    """Single-sample trace with [T, n] tensors (spec'd sample-level view)."""

    hidden_current: np.ndarray
    hidden_voltage: np.ndarray
    hidden_spikes: np.ndarray
    out_current: np.ndarray
    out_voltage: np.ndarray
    out_spikes: np.ndarray
    output_spike_counts: np.ndarray
    hidden_spike_total: int


def forward_batch(net, x, smooth=False, surrogate_scale=10.0):
    """Run the network over a [B, T, C] (or [T, C]) binary input tensor."""
    x = np.asarray(x)
    if x.ndim == 2:
        x = x[None]
    if x.shape[2] != net.n_inputs:
        raise ValueError(f"input has {x.shape[2]} channels, network expects {net.n_inputs}")
    dtype = net.dtype
    xf = np.ascontiguousarray(x.transpose(1, 0, 2).astype(dtype))
    w_in_t = np.ascontiguousarray(net.w_in.T)
    w_out_t = np.ascontiguousarray(net.w_out.T)
    if net.recurrent:
        v_t = np.ascontiguousarray(net.v_rec.T)
    else:
        v_t = np.zeros((0, 0), dtype=dtype)
    hp, op = net.lif_hidden, net.lif_out
    scalars = [hp.alpha, hp.beta, hp.firing_threshold, op.alpha, op.beta, op.firing_threshold]
    a1, b1, t1, a2, b2, t2 = (dtype.type(v) for v in scalars)
    I1, U1, S1, S1H, I2, U2, S2, S2H = lif_forward(
        xf, w_in_t, v_t, w_out_t, net.recurrent,
        a1, b1, t1, a2, b2, t2,
        smooth, dtype.type(surrogate_scale), dtype.type(1.0),
    )
    return BatchTrace(
        hidden_current=I1, hidden_voltage=U1, hidden_spikes=S1, hidden_spikes_hard=S1H,
        out_current=I2, out_voltage=U2, out_spikes=S2, out_spikes_hard=S2H,
        smooth=smooth,
    )


def forward(net, x):
    """Single-sample forward pass; ``x`` is a [T, n_inputs] binary tensor."""
    x = np.asarray(x)
    if x.ndim != 2:
        raise ValueError("forward expects a single [T, n_inputs] sample")
    bt = forward_batch(net, x[None])
    return ForwardTrace(
        hidden_current=bt.hidden_current[:, 0],
        hidden_voltage=bt.hidden_voltage[:, 0],
        hidden_spikes=bt.hidden_spikes[:, 0],
        out_current=bt.out_current[:, 0],
        out_voltage=bt.out_voltage[:, 0],
        out_spikes=bt.out_spikes[:, 0],
        output_spike_counts=bt.output_spike_counts[0],
        hidden_spike_total=int(bt.hidden_spike_totals[0]),
    )


def predict_counts(counts):
    """Winner per sample: highest spike count, ties to the lowest index."""
    counts = np.asarray(counts)
    if counts.ndim == 1:
        return int(np.argmax(counts))
    return np.argmax(counts, axis=1)


def predict(trace):
    """Predicted class of a single-sample trace."""
    return predict_counts(trace.output_spike_counts)
