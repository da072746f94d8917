"""Fixed-point mapping of trained networks and integer inference.

Trained float networks are mapped onto hardware-style constraints: 12-bit
decay constants derived from the time constants, weights quantized to even
integers within the 9-bit signed range via a per-layer scaling factor, and a
threshold rescaled by 2^6 times that factor so spike behavior is preserved up
to quantization error. Inference runs in exact integer arithmetic and counts
synaptic operations (presynaptic spike deliveries) as an energy proxy.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._quant_kernels import loihi_run


class SaturationError(RuntimeError):
    """Integer state exceeded the 32-bit accumulator range."""


@dataclass
class QuantParams:
    decay_current: int
    decay_voltage: int
    w_scale: int
    threshold_q: int

    def __post_init__(self):
        for d in (self.decay_current, self.decay_voltage):
            if not 0 <= d <= 4096:
                raise ValueError("decay constants must lie in [0, 4096]")
        if self.w_scale < 1:
            raise ValueError("w_scale must be a positive integer")


@dataclass
class SynOpReport:
    """Event and synaptic-operation tallies over a set of samples."""

    n_samples: int
    input_events: int
    hidden_spikes: int
    output_spikes: int
    synops: int

    @property
    def input_events_per_sample(self):
        return self.input_events / self.n_samples

    @property
    def hidden_spikes_per_sample(self):
        return self.hidden_spikes / self.n_samples

    @property
    def output_spikes_per_sample(self):
        return self.output_spikes / self.n_samples

    @property
    def synops_per_sample(self):
        return self.synops / self.n_samples

    def __add__(self, other):
        return SynOpReport(
            n_samples=self.n_samples + other.n_samples,
            input_events=self.input_events + other.input_events,
            hidden_spikes=self.hidden_spikes + other.hidden_spikes,
            output_spikes=self.output_spikes + other.output_spikes,
            synops=self.synops + other.synops,
        )

    def to_dict(self):
        return {
            "n_samples": self.n_samples,
            "input_events": self.input_events,
            "hidden_spikes": self.hidden_spikes,
            "output_spikes": self.output_spikes,
            "synops": self.synops,
            "input_events_per_sample": self.input_events_per_sample,
            "hidden_spikes_per_sample": self.hidden_spikes_per_sample,
            "output_spikes_per_sample": self.output_spikes_per_sample,
            "synops_per_sample": self.synops_per_sample,
        }


@dataclass
class QuantizedNetwork:
    n_inputs: int
    hidden_size: int
    n_outputs: int
    recurrent: bool
    w_in_q: np.ndarray
    v_rec_q: np.ndarray  # None for feedforward networks
    w_out_q: np.ndarray
    quant_hidden: QuantParams
    quant_out: QuantParams


def decay_from_tau(tau_ms, time_bin_ms):
    """12-bit decay constant for a time constant at the given bin size.

    decay = int(2^12 * (1 - exp(-bin/tau))), clamped to [0, 4096]; a state
    decays per step by the factor (4096 - decay)/4096 ~ exp(-bin/tau).
    """
    if not tau_ms > 0:
        raise ValueError("tau must be positive")
    if not time_bin_ms > 0:
        raise ValueError("time bin must be positive")
    decay = int(4096 * (1.0 - math.exp(-time_bin_ms / tau_ms)))
    return max(0, min(4096, decay))


def _decay_from_alpha(alpha):
    return max(0, min(4096, int(4096 * (1.0 - alpha))))


def quantize_to_even(scaled):
    """Round to the nearest even integer, ties away from zero."""
    scaled = np.asarray(scaled, dtype=np.float64)
    return (2.0 * np.sign(scaled) * np.floor(np.abs(scaled) / 2.0 + 0.5)).astype(np.int64)


def quantize_weights(weights, firing_threshold):
    """Quantize one layer's weight group and rescale its threshold.

    w_scale = int(256 / max|w|); each weight maps to the nearest even integer
    of w*w_scale (so |w_q/w_scale - w| <= 1/w_scale), and the threshold
    becomes 2^6 * threshold * w_scale, matching the 2^6 input scaling of the
    integer dynamics. Entries land in the 9-bit signed range; +256 can occur
    only when max|w|*w_scale exceeds 255 (near-exact division).
    """
    mats = weights if isinstance(weights, (list, tuple)) else [weights]
    max_abs = max(float(np.abs(m).max()) for m in mats)
    if max_abs == 0.0:
        raise ValueError("cannot quantize an all-zero weight group")
    w_scale = int(256.0 / max_abs)
    if w_scale < 1:
        raise ValueError("weights exceed the representable range (max|w| > 256)")
    quantized = [quantize_to_even(np.asarray(m, dtype=np.float64) * w_scale) for m in mats]
    threshold_q = int(64 * firing_threshold * w_scale)
    if not isinstance(weights, (list, tuple)):
        quantized = quantized[0]
    return quantized, w_scale, threshold_q


def quantize_network(net):
    """Map a trained float network to its fixed-point form.

    The hidden layer's input and recurrent matrices share one scaling factor
    (they feed the same current accumulator); the output layer is scaled
    independently. Decay constants come straight from the stored alpha/beta
    factors, which equal exp(-bin/tau) by construction.
    """
    if net.recurrent:
        (w_in_q, v_q), scale_h, th_h = quantize_weights(
            [net.w_in, net.v_rec], net.lif_hidden.firing_threshold
        )
    else:
        w_in_q, scale_h, th_h = quantize_weights(net.w_in, net.lif_hidden.firing_threshold)
        v_q = None
    w_out_q, scale_o, th_o = quantize_weights(net.w_out, net.lif_out.firing_threshold)
    return QuantizedNetwork(
        n_inputs=net.n_inputs,
        hidden_size=net.hidden_size,
        n_outputs=net.n_outputs,
        recurrent=net.recurrent,
        w_in_q=w_in_q,
        v_rec_q=v_q,
        w_out_q=w_out_q,
        quant_hidden=QuantParams(
            decay_current=_decay_from_alpha(net.lif_hidden.alpha),
            decay_voltage=_decay_from_alpha(net.lif_hidden.beta),
            w_scale=scale_h,
            threshold_q=th_h,
        ),
        quant_out=QuantParams(
            decay_current=_decay_from_alpha(net.lif_out.alpha),
            decay_voltage=_decay_from_alpha(net.lif_out.beta),
            w_scale=scale_o,
            threshold_q=th_o,
        ),
    )


@dataclass
class IntegerLayerState:
    current: np.ndarray
    voltage: np.ndarray

    @classmethod
    def zeros(cls, n_neurons):
        return cls(
            current=np.zeros(n_neurons, dtype=np.int64),
            voltage=np.zeros(n_neurons, dtype=np.int64),
        )


def loihi_step(state, params, spiking_inputs, weights_q):
    """One integer LIF step for a single layer.

    ``spiking_inputs`` holds presynaptic indices active this step; their
    quantized weight columns are accumulated times 2^6. Decay multiplies by
    (4096 - decay) and shifts right by 12 bits, rounding toward zero for
    negative values. Neurons reaching the quantized threshold spike and reset
    to zero. Returns (new_state, spike_vector).
    """
    current = state.current.astype(np.int64)
    voltage = state.voltage.astype(np.int64)

    def trunc_shift(values, decay):
        scaled = values * (4096 - decay)
        return np.sign(scaled) * (np.abs(scaled) >> 12)

    current = trunc_shift(current, params.decay_current)
    for idx in np.asarray(spiking_inputs, dtype=np.int64):
        current = current + 64 * weights_q[:, idx].astype(np.int64)
    voltage = trunc_shift(voltage, params.decay_voltage) + current
    spikes = voltage >= params.threshold_q
    voltage = np.where(spikes, 0, voltage)
    if max(np.abs(current).max(initial=0), np.abs(voltage).max(initial=0)) > 2**31 - 1:
        raise SaturationError("integer state exceeded the 32-bit range")
    return IntegerLayerState(current=current, voltage=voltage), spikes.astype(np.uint8)


def quantized_forward(qnet, inputs, blank_steps=100):
    """Integer inference over [N, T, C] binned inputs.

    Samples are streamed back to back with ``blank_steps`` empty steps after
    each one, letting state decay naturally instead of being reset. Returns
    (predictions [N], SynOpReport, per-sample output counts [N, n_outputs]).
    """
    bits = np.ascontiguousarray(np.asarray(inputs, dtype=np.uint8))
    if bits.ndim == 2:
        bits = bits[None]
    if bits.shape[2] != qnet.n_inputs:
        raise ValueError("input channel count does not match the network")
    v_q = qnet.v_rec_q if qnet.recurrent else np.zeros((0, 0), dtype=np.int64)
    counts, input_events, hidden_spikes, output_spikes, synops, saturated = loihi_run(
        bits,
        np.ascontiguousarray(qnet.w_in_q.astype(np.int64)),
        np.ascontiguousarray(v_q.astype(np.int64)),
        np.ascontiguousarray(qnet.w_out_q.astype(np.int64)),
        qnet.recurrent,
        qnet.quant_hidden.decay_current,
        qnet.quant_hidden.decay_voltage,
        qnet.quant_out.decay_current,
        qnet.quant_out.decay_voltage,
        qnet.quant_hidden.threshold_q,
        qnet.quant_out.threshold_q,
        int(blank_steps),
    )
    if saturated:
        raise SaturationError("integer state exceeded the 32-bit range")
    report = SynOpReport(
        n_samples=bits.shape[0],
        input_events=int(input_events.sum()),
        hidden_spikes=int(hidden_spikes.sum()),
        output_spikes=int(output_spikes.sum()),
        synops=int(synops.sum()),
    )
    return np.argmax(counts, axis=1), report, counts
