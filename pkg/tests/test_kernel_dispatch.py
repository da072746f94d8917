"""The jitted kernels and their pure-numpy originals must agree bit for bit."""

import os
import subprocess
import sys

import numpy as np
import pytest

import evspike as ev
from evspike import _accel
from evspike._codec_kernels import sigma_delta_scan
from evspike._quant_kernels import loihi_run
from evspike._snn_kernels import bptt_backward, lif_forward

needs_numba = pytest.mark.skipif(
    not _accel.NUMBA_ENABLED, reason="numba disabled; only one path to compare"
)


@needs_numba
def test_encoder_kernel_paths_agree():
    rng = np.random.default_rng(0)
    values = np.ascontiguousarray(rng.integers(0, 255, (4, 30)).astype(np.float64))
    jitted = sigma_delta_scan(values, 2.0, 1000)
    plain = sigma_delta_scan.py_func(values, 2.0, 1000)
    for a, b in zip(jitted, plain):
        assert a.tobytes() == b.tobytes()


@needs_numba
def test_forward_kernel_paths_agree():
    rng = np.random.default_rng(1)
    dtype = np.float32
    x = np.ascontiguousarray((rng.random((12, 3, 4)) < 0.4).astype(dtype))
    w_in_t = np.ascontiguousarray(rng.normal(0, 1, (4, 5)).astype(dtype))
    v_t = np.ascontiguousarray(rng.normal(0, 0.2, (5, 5)).astype(dtype))
    w_out_t = np.ascontiguousarray(rng.normal(0, 1, (5, 2)).astype(dtype))
    args = (
        x, w_in_t, v_t, w_out_t, True,
        dtype(0.9), dtype(0.8), dtype(1.0), dtype(0.9), dtype(0.8), dtype(1.0),
        False, dtype(10.0), dtype(1.0),
    )
    for a, b in zip(lif_forward(*args), lif_forward.py_func(*args)):
        assert a.tobytes() == b.tobytes()


@needs_numba
def test_backward_kernel_paths_agree():
    rng = np.random.default_rng(2)
    dtype = np.float64
    T, B, C, H, O = 6, 2, 3, 4, 2
    x = np.ascontiguousarray((rng.random((T, B, C)) < 0.5).astype(dtype))
    w_in_t = np.ascontiguousarray(rng.normal(0, 1, (C, H)).astype(dtype))
    v_t = np.ascontiguousarray(rng.normal(0, 0.3, (H, H)).astype(dtype))
    w_out_t = np.ascontiguousarray(rng.normal(0, 1, (H, O)).astype(dtype))
    fwd = lif_forward(
        x, w_in_t, v_t, w_out_t, True,
        dtype(0.9), dtype(0.8), dtype(1.0), dtype(0.9), dtype(0.8), dtype(1.0),
        False, dtype(10.0), dtype(1.0),
    )
    I1, U1, S1, S1H, I2, U2, S2, S2H = fwd
    g_count = np.ascontiguousarray(rng.normal(0, 1, (B, O)).astype(dtype))
    g_const = np.ascontiguousarray(rng.normal(0, 0.1, (B, H)).astype(dtype))
    args = (
        x, U1, S1, S1H, U2, S2H,
        np.ascontiguousarray(w_out_t.T), np.ascontiguousarray(v_t.T), True,
        g_count, g_const,
        dtype(0.9), dtype(0.8), dtype(1.0), dtype(0.9), dtype(0.8), dtype(1.0),
        dtype(10.0), dtype(1.0),
    )
    for a, b in zip(bptt_backward(*args), bptt_backward.py_func(*args)):
        assert a.tobytes() == b.tobytes()


@needs_numba
def test_integer_kernel_paths_agree():
    rng = np.random.default_rng(3)
    bits = np.ascontiguousarray((rng.random((2, 8, 3)) < 0.5).astype(np.uint8))
    w_in = np.ascontiguousarray(rng.integers(-128, 128, (4, 3)) * 2)
    v = np.ascontiguousarray(rng.integers(-20, 20, (4, 4)) * 2)
    w_out = np.ascontiguousarray(rng.integers(-128, 128, (2, 4)) * 2)
    args = (bits, w_in, v, w_out, True, 300, 600, 300, 600, 20000, 20000, 10)
    for a, b in zip(loihi_run(*args), loihi_run.py_func(*args)):
        if isinstance(a, np.ndarray):
            assert a.tobytes() == b.tobytes()
        else:
            assert a == b


def test_env_flag_selects_pure_numpy_path():
    code = (
        "import os; os.environ['EVSPIKE_NO_NUMBA'] = '1'; "
        "import evspike; from evspike._codec_kernels import sigma_delta_scan; "
        "assert not evspike.NUMBA_ENABLED; "
        "assert not hasattr(sigma_delta_scan, 'py_func'); "
        "import numpy as np; import evspike as ev; "
        "seq = ev.FrameSequence(np.array([[0, 3, 3, 1]], dtype=np.float64), 40.0, 0); "
        "stream = ev.encode(seq, ev.EncoderConfig(threshold=2.0)); "
        "assert len(stream) == 1 and stream.polarities[0] == 1; "
        "print('fallback ok')"
    )
    result = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True, text=True,
        env={**os.environ, "EVSPIKE_NO_NUMBA": "1"},
    )
    assert result.returncode == 0, result.stderr
    assert "fallback ok" in result.stdout


@needs_numba
def test_jitted_kernels_expose_py_func():
    for kernel in (sigma_delta_scan, lif_forward, bptt_backward, loihi_run):
        assert hasattr(kernel, "py_func")
