"""Hot kernel for fixed-point network inference with synop tallies."""

import numpy as np

from ._accel import maybe_jit

INT32_LIMIT = 2**31 - 1


def _loihi_run(
    bits, w_in_q, v_q, w_out_q, recurrent,
    decay_i1, decay_u1, decay_i2, decay_u2,
    th1, th2, blank_steps,
):
    """Continuous-flow integer inference over [N, T, C] binned inputs.

    Samples run back to back, each followed by ``blank_steps`` input-free
    steps during which the state keeps decaying; state is never reset between
    samples. Per step: currents decay (truncation toward zero) and accumulate
    64x the quantized weight per presynaptic spike; voltages decay, add the
    current, and spike-and-reset at the quantized threshold. Recurrent spikes
    are delivered on the following step, hidden-to-output on the same step.

    Output spikes and synaptic operations are attributed to the sample whose
    window (including its trailing blank) they fall in. One synop is one
    presynaptic-spike-to-target delivery, counted as the fan-out of each
    spiking element at spike time. Returns per-sample output spike counts and
    tallies plus a saturation flag set when any state magnitude exceeds the
    32-bit accumulator range.
    """
    N, T, C = bits.shape
    H = w_in_q.shape[0]
    O = w_out_q.shape[0]
    fanout_hidden = O + (H if recurrent else 0)

    i1 = np.zeros(H, np.int64)
    u1 = np.zeros(H, np.int64)
    i2 = np.zeros(O, np.int64)
    u2 = np.zeros(O, np.int64)
    s1_prev = np.zeros(H, np.uint8)

    counts = np.zeros((N, O), np.int64)
    input_events = np.zeros(N, np.int64)
    hidden_spikes = np.zeros(N, np.int64)
    output_spikes = np.zeros(N, np.int64)
    synops = np.zeros(N, np.int64)
    saturated = 0

    # decay: (state * (4096 - decay)) >> 12, rounded toward zero
    for n in range(N):
        for t in range(T + blank_steps):
            for h in range(H):
                scaled = i1[h] * (4096 - decay_i1)
                i1[h] = scaled // 4096 if scaled >= 0 else -((-scaled) // 4096)
            if recurrent:
                for h in range(H):
                    if s1_prev[h]:
                        for i in range(H):
                            i1[i] += 64 * v_q[i, h]
            if t < T:
                for c in range(C):
                    if bits[n, t, c]:
                        input_events[n] += 1
                        synops[n] += H
                        for i in range(H):
                            i1[i] += 64 * w_in_q[i, c]

            s1 = np.zeros(H, np.uint8)
            for h in range(H):
                scaled = u1[h] * (4096 - decay_u1)
                u = (scaled // 4096 if scaled >= 0 else -((-scaled) // 4096)) + i1[h]
                if u >= th1:
                    s1[h] = 1
                    hidden_spikes[n] += 1
                    synops[n] += fanout_hidden
                    u1[h] = 0
                else:
                    u1[h] = u
                if abs(i1[h]) > INT32_LIMIT or abs(u1[h]) > INT32_LIMIT:
                    saturated = 1

            for o in range(O):
                scaled = i2[o] * (4096 - decay_i2)
                i2[o] = scaled // 4096 if scaled >= 0 else -((-scaled) // 4096)
            for h in range(H):
                if s1[h]:
                    for o in range(O):
                        i2[o] += 64 * w_out_q[o, h]
            for o in range(O):
                scaled = u2[o] * (4096 - decay_u2)
                u = (scaled // 4096 if scaled >= 0 else -((-scaled) // 4096)) + i2[o]
                if u >= th2:
                    counts[n, o] += 1
                    output_spikes[n] += 1
                    u2[o] = 0
                else:
                    u2[o] = u
                if abs(i2[o]) > INT32_LIMIT or abs(u2[o]) > INT32_LIMIT:
                    saturated = 1

            s1_prev = s1
            if saturated:
                return counts, input_events, hidden_spikes, output_spikes, synops, saturated

    return counts, input_events, hidden_spikes, output_spikes, synops, saturated


loihi_run = maybe_jit(_loihi_run)
