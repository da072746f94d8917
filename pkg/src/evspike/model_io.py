"""HDF5 containers for float and quantized networks.

Self-describing layout: root attributes carry the topology (n_inputs,
hidden_size, n_outputs, recurrent, kind) and optional preprocessing metadata
(threshold, time_bin_size_ms, nb_input_copies); weight matrices live in named
datasets ``w_in``, ``v_rec``, ``w_out`` stored little-endian (float64 for
float networks, int32 for quantized ones). LIF parameters sit in the
``lif_hidden``/``lif_out`` groups, fixed-point parameters in
``quant_hidden``/``quant_out``.
"""

import numpy as np
import h5py

from .quant import QuantParams, QuantizedNetwork
from .snn import LifParams, NetworkDef

_LIF_FIELDS = (
    "tau_mem_ms", "tau_syn_ms", "alpha", "beta",
    "firing_threshold", "u_rest", "input_resistance",
)
_QUANT_FIELDS = ("decay_current", "decay_voltage", "w_scale", "threshold_q")


def _write_topology(fh, net, kind, preprocessing):
    fh.attrs["kind"] = kind
    fh.attrs["n_inputs"] = net.n_inputs
    fh.attrs["hidden_size"] = net.hidden_size
    fh.attrs["n_outputs"] = net.n_outputs
    fh.attrs["recurrent"] = bool(net.recurrent)
    for key, value in (preprocessing or {}).items():
        fh.attrs[f"prep_{key}"] = value


def read_preprocessing(path):
    with h5py.File(path, "r") as fh:
        return {
            key[5:]: (value.item() if hasattr(value, "item") else value)
            for key, value in fh.attrs.items()
            if key.startswith("prep_")
        }


def save_network(net, path, preprocessing=None):
    with h5py.File(path, "w") as fh:
        _write_topology(fh, net, "float", preprocessing)
        fh.create_dataset("w_in", data=net.w_in.astype("<f8"))
        if net.recurrent:
            fh.create_dataset("v_rec", data=net.v_rec.astype("<f8"))
        fh.create_dataset("w_out", data=net.w_out.astype("<f8"))
        for name, params in (("lif_hidden", net.lif_hidden), ("lif_out", net.lif_out)):
            grp = fh.create_group(name)
            for field in _LIF_FIELDS:
                grp.attrs[field] = getattr(params, field)


def load_network(path):
    with h5py.File(path, "r") as fh:
        if fh.attrs.get("kind") != "float":
            raise ValueError(f"{path}: not a float network container")
        lif = {}
        for name in ("lif_hidden", "lif_out"):
            lif[name] = LifParams(**{f: float(fh[name].attrs[f]) for f in _LIF_FIELDS})
        recurrent = bool(fh.attrs["recurrent"])
        return NetworkDef(
            n_inputs=int(fh.attrs["n_inputs"]),
            hidden_size=int(fh.attrs["hidden_size"]),
            n_outputs=int(fh.attrs["n_outputs"]),
            recurrent=recurrent,
            w_in=fh["w_in"][()].astype(np.float64),
            v_rec=fh["v_rec"][()].astype(np.float64) if recurrent else None,
            w_out=fh["w_out"][()].astype(np.float64),
            lif_hidden=lif["lif_hidden"],
            lif_out=lif["lif_out"],
        )


def save_quantized(qnet, path, preprocessing=None):
    with h5py.File(path, "w") as fh:
        _write_topology(fh, qnet, "quantized", preprocessing)
        fh.create_dataset("w_in", data=qnet.w_in_q.astype("<i4"))
        if qnet.recurrent:
            fh.create_dataset("v_rec", data=qnet.v_rec_q.astype("<i4"))
        fh.create_dataset("w_out", data=qnet.w_out_q.astype("<i4"))
        for name, params in (("quant_hidden", qnet.quant_hidden), ("quant_out", qnet.quant_out)):
            grp = fh.create_group(name)
            for field in _QUANT_FIELDS:
                grp.attrs[field] = getattr(params, field)


def load_quantized(path):
    with h5py.File(path, "r") as fh:
        if fh.attrs.get("kind") != "quantized":
            raise ValueError(f"{path}: not a quantized network container")
        qp = {}
        for name in ("quant_hidden", "quant_out"):
            qp[name] = QuantParams(**{f: int(fh[name].attrs[f]) for f in _QUANT_FIELDS})
        recurrent = bool(fh.attrs["recurrent"])
        return QuantizedNetwork(
            n_inputs=int(fh.attrs["n_inputs"]),
            hidden_size=int(fh.attrs["hidden_size"]),
            n_outputs=int(fh.attrs["n_outputs"]),
            recurrent=recurrent,
            w_in_q=fh["w_in"][()].astype(np.int64),
            v_rec_q=fh["v_rec"][()].astype(np.int64) if recurrent else None,
            w_out_q=fh["w_out"][()].astype(np.int64),
            quant_hidden=qp["quant_hidden"],
            quant_out=qp["quant_out"],
        )
