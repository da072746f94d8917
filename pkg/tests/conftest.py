import numpy as np
import pytest

import evspike as ev


@pytest.fixture(scope="session")
def small_synth():
    return ev.synth_dataset(4, 12, seed=11)


@pytest.fixture(scope="session")
def tiny_lif():
    return ev.LifParams.from_time_constants(20.0, 10.0, 5.0)


def make_tiny_net(recurrent, seed=3, n_inputs=2, hidden=3, outputs=2, dtype=np.float64):
    lif = ev.LifParams.from_time_constants(20.0, 10.0, 5.0)
    return ev.NetworkDef.initialize(
        n_inputs=n_inputs,
        hidden_size=hidden,
        n_outputs=outputs,
        recurrent=recurrent,
        lif_hidden=lif,
        lif_out=lif,
        fwd_weight_scale=3.0,
        weight_scale_factor=0.5,
        seed=seed,
        dtype=dtype,
    )
