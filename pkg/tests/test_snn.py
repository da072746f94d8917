import numpy as np
import pytest

import evspike as ev
from evspike.snn import forward_batch, predict_counts

from conftest import make_tiny_net
from reference_impls import scalar_lif_forward


class TestLifStep:
    def test_zero_state_zero_input(self):
        params = ev.LifParams.from_time_constants(20.0, 10.0, 5.0)
        state = ev.LayerState.zeros(4)
        out = ev.lif_step(state, params, np.zeros(4))
        assert np.all(out.current == 0)
        assert np.all(out.voltage == 0)
        assert np.all(out.spikes == 0)

    def test_hand_worked_two_steps(self):
        params = ev.LifParams(
            tau_mem_ms=1.0, tau_syn_ms=1.0, alpha=0.9, beta=0.8, firing_threshold=1.0
        )
        state = ev.LayerState.zeros(1)
        first = ev.lif_step(state, params, np.array([1.2]))
        assert first.current[0] == pytest.approx(1.2)
        assert first.voltage[0] == pytest.approx(1.2)
        assert first.spikes[0] == 1.0
        second = ev.lif_step(first, params, np.array([0.0]))
        assert second.current[0] == pytest.approx(1.08)
        assert second.voltage[0] == 0.0  # reset zeroes the whole update
        assert second.spikes[0] == 0.0

    def test_current_decays_geometrically_without_input(self):
        params = ev.LifParams(
            tau_mem_ms=1.0, tau_syn_ms=1.0, alpha=0.7, beta=0.5, firing_threshold=10.0
        )
        state = ev.LayerState(
            current=np.array([2.0]), voltage=np.zeros(1), spikes=np.zeros(1)
        )
        for t in range(1, 6):
            state = ev.lif_step(state, params, np.zeros(1))
            assert state.current[0] == pytest.approx(2.0 * 0.7**t)

    def test_rejects_bad_input(self):
        params = ev.LifParams.from_time_constants(20.0, 10.0, 5.0)
        state = ev.LayerState.zeros(2)
        with pytest.raises(ValueError):
            ev.lif_step(state, params, np.zeros(3))
        with pytest.raises(ValueError):
            ev.lif_step(state, params, np.array([np.nan, 0.0]))


class TestForward:
    def test_zero_input_stays_silent(self):
        net = make_tiny_net(recurrent=True)
        trace = ev.forward(net, np.zeros((10, 2), dtype=np.uint8))
        assert trace.hidden_spike_total == 0
        assert np.all(trace.output_spike_counts == 0)
        assert np.all(trace.hidden_voltage == 0)

    def test_feedforward_equals_recurrent_with_zero_weights(self):
        rnn = make_tiny_net(recurrent=True, seed=9)
        rnn.v_rec[:] = 0.0
        ff = ev.NetworkDef(
            n_inputs=rnn.n_inputs, hidden_size=rnn.hidden_size, n_outputs=rnn.n_outputs,
            recurrent=False, w_in=rnn.w_in.copy(), v_rec=None, w_out=rnn.w_out.copy(),
            lif_hidden=rnn.lif_hidden, lif_out=rnn.lif_out,
        )
        rng = np.random.default_rng(0)
        x = (rng.random((7, 2)) < 0.5).astype(np.uint8)
        a = ev.forward(rnn, x)
        b = ev.forward(ff, x)
        assert np.array_equal(a.hidden_spikes, b.hidden_spikes)
        assert np.array_equal(a.out_voltage, b.out_voltage)
        assert np.array_equal(a.output_spike_counts, b.output_spike_counts)

    def test_matches_scalar_loop_oracle(self):
        net = make_tiny_net(recurrent=True, seed=14)
        rng = np.random.default_rng(2)
        x = (rng.random((3, 2)) < 0.6).astype(np.float64)
        ref = scalar_lif_forward(
            net.w_in.tolist(), net.v_rec.tolist(), net.w_out.tolist(),
            net.lif_hidden.alpha, net.lif_hidden.beta, net.lif_hidden.firing_threshold,
            x,
        )
        trace = ev.forward(net, x)
        np.testing.assert_allclose(trace.hidden_current, ref["i1"], rtol=0, atol=1e-12)
        np.testing.assert_allclose(trace.hidden_voltage, ref["u1"], rtol=0, atol=1e-12)
        np.testing.assert_array_equal(trace.hidden_spikes, ref["s1"])
        np.testing.assert_allclose(trace.out_voltage, ref["u2"], rtol=0, atol=1e-12)
        np.testing.assert_array_equal(trace.out_spikes, ref["s2"])

    def test_reset_zeroes_spiking_neurons_next_step(self):
        net = make_tiny_net(recurrent=False, seed=21)
        rng = np.random.default_rng(3)
        x = (rng.random((12, 2)) < 0.7).astype(np.uint8)
        trace = ev.forward(net, x)
        spikes = trace.hidden_spikes.astype(bool)
        for t in range(trace.hidden_spikes.shape[0] - 1):
            assert np.all(trace.hidden_voltage[t + 1][spikes[t]] == 0.0)

    def test_spike_raster_invariant_to_power_of_two_rescaling(self):
        net = make_tiny_net(recurrent=True, seed=4)
        rng = np.random.default_rng(4)
        x = (rng.random((9, 2)) < 0.5).astype(np.uint8)
        base = ev.forward(net, x)
        scaled = net.copy()
        c = 2.0  # exact in binary floating point, so rasters match bit for bit
        scaled.w_in *= c
        scaled.v_rec *= c
        scaled.w_out *= c
        for name in ("lif_hidden", "lif_out"):
            p = getattr(scaled, name)
            setattr(
                scaled, name,
                ev.LifParams(
                    tau_mem_ms=p.tau_mem_ms, tau_syn_ms=p.tau_syn_ms,
                    alpha=p.alpha, beta=p.beta,
                    firing_threshold=c * p.firing_threshold,
                ),
            )
        other = ev.forward(scaled, x)
        assert np.array_equal(base.hidden_spikes, other.hidden_spikes)
        assert np.array_equal(base.out_spikes, other.out_spikes)

    def test_forward_bit_reproducible(self):
        net = make_tiny_net(recurrent=True, seed=6)
        rng = np.random.default_rng(5)
        x = (rng.random((4, 11, 2)) < 0.5).astype(np.uint8)
        a = forward_batch(net, x)
        b = forward_batch(net, x)
        assert a.hidden_voltage.tobytes() == b.hidden_voltage.tobytes()
        assert a.out_spikes.tobytes() == b.out_spikes.tobytes()

    def test_input_channel_mismatch_raises(self):
        net = make_tiny_net(recurrent=False)
        with pytest.raises(ValueError):
            ev.forward(net, np.zeros((5, 3), dtype=np.uint8))


class TestPredict:
    def test_highest_count_wins(self):
        assert predict_counts(np.array([0, 5, 2])) == 1

    def test_all_zero_ties_to_class_zero(self):
        assert predict_counts(np.zeros(4)) == 0

    def test_tie_breaks_to_lowest_index(self):
        assert predict_counts(np.array([3, 3, 1])) == 0

    def test_batch_variant(self):
        counts = np.array([[1, 2], [5, 0], [3, 3]])
        assert predict_counts(counts).tolist() == [1, 0, 0]


class TestNetworkDef:
    def test_initialization_is_seeded(self):
        a = make_tiny_net(recurrent=True, seed=7)
        b = make_tiny_net(recurrent=True, seed=7)
        assert np.array_equal(a.w_in, b.w_in)
        assert np.array_equal(a.v_rec, b.v_rec)

    def test_dimension_validation(self):
        net = make_tiny_net(recurrent=False)
        with pytest.raises(ValueError):
            ev.NetworkDef(
                n_inputs=2, hidden_size=3, n_outputs=2, recurrent=False,
                w_in=np.zeros((4, 2)), v_rec=None, w_out=net.w_out,
                lif_hidden=net.lif_hidden, lif_out=net.lif_out,
            )

    def test_lif_params_consistency_check(self):
        params = ev.LifParams.from_time_constants(60.0, 6.0, 5.0)
        params.check_consistency(5.0)
        with pytest.raises(ValueError):
            params.check_consistency(3.0)
