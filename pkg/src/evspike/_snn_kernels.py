"""Hot kernels for the discrete-time LIF forward pass and its BPTT reverse."""

import numpy as np

from ._accel import maybe_jit


def _lif_forward(
    x, w_in_t, v_t, w_out_t, recurrent,
    alpha1, beta1, th1, alpha2, beta2, th2,
    smooth, sg_scale, one,
):
    """Run the two-layer network over a batch.

    ``x`` is [T, B, C] in the compute dtype; weight matrices arrive
    pre-transposed and contiguous. State updates per step: current decays by
    alpha and accumulates the weighted input (recurrent input uses the
    previous step's hidden spikes), voltage decays by beta, adds the current,
    and is zeroed for neurons that spiked on the previous step; a spike fires
    where the voltage reaches the threshold.

    With ``smooth`` set, the stored/propagated spike values are the fast
    sigmoid of (voltage - threshold) while reset still follows the hard
    threshold events; this is the differentiable twin of the network used by
    the finite-difference gradient check. ``one`` is 1 in the compute dtype
    (keeps float32 math from promoting).
    """
    T, B, C = x.shape
    H = w_in_t.shape[1]
    O = w_out_t.shape[1]

    I1 = np.empty((T, B, H), x.dtype)
    U1 = np.empty((T, B, H), x.dtype)
    S1 = np.empty((T, B, H), x.dtype)
    S1H = np.empty((T, B, H), x.dtype)
    I2 = np.empty((T, B, O), x.dtype)
    U2 = np.empty((T, B, O), x.dtype)
    S2 = np.empty((T, B, O), x.dtype)
    S2H = np.empty((T, B, O), x.dtype)

    i1 = np.zeros((B, H), x.dtype)
    u1 = np.zeros((B, H), x.dtype)
    s1_prev = np.zeros((B, H), x.dtype)
    s1h_prev = np.zeros((B, H), x.dtype)
    i2 = np.zeros((B, O), x.dtype)
    u2 = np.zeros((B, O), x.dtype)
    s2h_prev = np.zeros((B, O), x.dtype)

    for t in range(T):
        i1 = alpha1 * i1 + np.dot(x[t], w_in_t)
        if recurrent:
            i1 = i1 + np.dot(s1_prev, v_t)
        tmp = beta1 * u1 + i1
        u1 = tmp - tmp * s1h_prev
        s1h = (u1 >= th1).astype(x.dtype)
        if smooth:
            d = u1 - th1
            s1 = d / (sg_scale * np.abs(d) + one)
        else:
            s1 = s1h

        i2 = alpha2 * i2 + np.dot(s1, w_out_t)
        tmp2 = beta2 * u2 + i2
        u2 = tmp2 - tmp2 * s2h_prev
        s2h = (u2 >= th2).astype(x.dtype)
        if smooth:
            d2 = u2 - th2
            s2 = d2 / (sg_scale * np.abs(d2) + one)
        else:
            s2 = s2h

        I1[t] = i1
        U1[t] = u1
        S1[t] = s1
        S1H[t] = s1h
        I2[t] = i2
        U2[t] = u2
        S2[t] = s2
        S2H[t] = s2h
        s1_prev = s1
        s1h_prev = s1h
        s2h_prev = s2h

    return I1, U1, S1, S1H, I2, U2, S2, S2H


lif_forward = maybe_jit(_lif_forward)


def _bptt_backward(
    x, U1, S1, S1H, U2, S2H, w_out, v, recurrent,
    g_count, g_s1_const,
    alpha1, beta1, th1, alpha2, beta2, th2,
    sg_scale, one,
):
    """Reverse sweep of the unrolled network.

    Every spike-nonlinearity derivative is the fast-sigmoid surrogate slope
    1/(1 + scale*|U - threshold|)^2; the reset multiplication is treated as a
    constant of the backward pass (its hard-spike factors S1H/S2H enter only
    as stored values). ``g_count`` is dLoss/d(output spike count) per sample
    and ``g_s1_const`` the per-(sample, neuron) regularizer adjoint, constant
    over time. Returns (d_w_in, d_v, d_w_out); d_v stays zero for
    feedforward networks.
    """
    T, B, C = x.shape
    O, H = w_out.shape

    d_w_in = np.zeros((H, C), x.dtype)
    d_v = np.zeros((v.shape[0], v.shape[1]), x.dtype)
    d_w_out = np.zeros((O, H), x.dtype)

    gu1n = np.zeros((B, H), x.dtype)
    gi1n = np.zeros((B, H), x.dtype)
    gu2n = np.zeros((B, O), x.dtype)
    gi2n = np.zeros((B, O), x.dtype)

    for t in range(T - 1, -1, -1):
        d2 = sg_scale * np.abs(U2[t] - th2) + one
        gu2 = g_count / (d2 * d2)
        if t < T - 1:
            gu2 = gu2 + beta2 * gu2n * (one - S2H[t])
        gi2 = alpha2 * gi2n
        if t > 0:
            gi2 = gi2 + gu2 * (one - S2H[t - 1])
        else:
            gi2 = gi2 + gu2
        d_w_out += np.dot(np.ascontiguousarray(gi2.T), S1[t])

        gs1 = np.dot(gi2, w_out) + g_s1_const
        if recurrent and t < T - 1:
            gs1 = gs1 + np.dot(gi1n, v)
        d1 = sg_scale * np.abs(U1[t] - th1) + one
        gu1 = gs1 / (d1 * d1)
        if t < T - 1:
            gu1 = gu1 + beta1 * gu1n * (one - S1H[t])
        gi1 = alpha1 * gi1n
        if t > 0:
            gi1 = gi1 + gu1 * (one - S1H[t - 1])
        else:
            gi1 = gi1 + gu1
        d_w_in += np.dot(np.ascontiguousarray(gi1.T), x[t])
        if recurrent and t > 0:
            d_v += np.dot(np.ascontiguousarray(gi1.T), S1[t - 1])

        gu1n = gu1
        gi1n = gi1
        gu2n = gu2
        gi2n = gi2

    return d_w_in, d_v, d_w_out


bptt_backward = maybe_jit(_bptt_backward)
