"""Experiment orchestration: preprocessing, TTC, reports, config handling.

An experiment runs encode -> bin -> input copies -> train (n seeds) ->
quantize -> integer inference, collecting accuracy statistics, encoding
quality, synop tallies, and the time-to-classify metric into a JSON report
plus CSV tables. Outputs are plot-ready data series, deterministic
byte-for-byte for a fixed config and seed.
"""

import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .codec import BinningConfig, EncoderConfig, analyze_encoding, bin_events, encode, input_copies
from .dataset import load_dataset, synth_dataset
from .model_io import save_network, save_quantized
from .presets import HIDDEN_SIZE_DEFAULT, default_hyperparameters
from .quant import quantize_network, quantized_forward
from .snn import LifParams, NetworkDef
from .training import TrainConfig, evaluate, train, write_metrics_csv

ENV_PREFIX = "EVSPIKE_"

HYPERPARAMETER_KEYS = (
    "scale", "time_bin_size", "nb_input_copies", "tau_mem", "tau_ratio",
    "fwd_weight_scale", "weight_scale_factor", "reg_spikes", "reg_neurons",
)


def prepare_inputs(dataset, threshold, time_bin_size_ms, nb_input_copies,
                   interpolation_resolution=1000):
    """Encode, bin, and replicate a dataset into network-ready tensors.

    Returns (inputs [N, T, channels] uint8, labels [N], streams).
    """
    enc = EncoderConfig(threshold=threshold, interpolation_resolution=interpolation_resolution)
    bcfg = BinningConfig(time_bin_size_ms=time_bin_size_ms)
    streams = [encode(s, enc) for s in dataset.samples]
    tensors = [
        input_copies(bin_events(st, bcfg, s.label), nb_input_copies)
        for s, st in zip(dataset.samples, streams)
    ]
    inputs = np.stack([t.bits for t in tensors])
    return inputs, dataset.labels, streams


def build_network(n_inputs, n_outputs, hp, hidden_size=HIDDEN_SIZE_DEFAULT,
                  recurrent=True, seed=0):
    """Network from a Hyperparameters bundle (tau_ratio applied to both layers)."""
    lif = LifParams.from_time_constants(hp.tau_mem, hp.tau_syn, hp.time_bin_size)
    return NetworkDef.initialize(
        n_inputs=n_inputs,
        hidden_size=hidden_size,
        n_outputs=n_outputs,
        recurrent=recurrent,
        lif_hidden=lif,
        lif_out=lif,
        fwd_weight_scale=hp.fwd_weight_scale,
        weight_scale_factor=hp.weight_scale_factor,
        seed=seed,
    )


def train_config_from_hyperparameters(hp, epochs, seed, **overrides):
    kwargs = dict(
        epochs=epochs,
        surrogate_scale=hp.scale,
        reg_spikes=hp.reg_spikes,
        reg_neurons=hp.reg_neurons,
        seed=seed,
    )
    kwargs.update(overrides)
    return TrainConfig(**kwargs)


@dataclass
class TtcResult:
    """Time-to-classify: smallest prefix fraction reaching full accuracy.

    ``fraction`` is the smallest probed fraction p such that accuracy on the
    first p*T bins comes within one percentage point of the full-window
    accuracy; ``curve`` holds (fraction, accuracy) exactly as evaluated, no
    smoothing. A network whose accuracy curve is flat yields the smallest
    probed fraction by definition.
    """

    fraction: float
    full_accuracy: float
    curve: list

    def to_dict(self):
        return {
            "fraction": self.fraction,
            "full_accuracy": self.full_accuracy,
            "curve": [[f, a] for f, a in self.curve],
        }


def compute_ttc(net, inputs, labels, fraction_step=0.05, tolerance=0.01, batch_size=256):
    """Probe prefix fractions of the bin window at ``fraction_step`` spacing."""
    labels = np.asarray(labels)
    T = inputs.shape[1]
    fractions = np.arange(fraction_step, 1.0 + 1e-9, fraction_step)
    curve = []
    for p in fractions:
        t = max(1, int(round(p * T)))
        acc = evaluate(net, inputs[:, :t], labels, batch_size=batch_size)
        curve.append((float(p), float(acc)))
    full_accuracy = curve[-1][1]
    fraction = next(
        (p for p, acc in curve if acc >= full_accuracy - tolerance), curve[-1][0]
    )
    return TtcResult(fraction=float(fraction), full_accuracy=full_accuracy, curve=curve)


@dataclass
class ExperimentConfig:
    threshold: float = 2.0
    epochs: int = 100
    n_seeds: int = 3
    seed: int = 0
    hidden_size: int = HIDDEN_SIZE_DEFAULT
    recurrent: bool = True
    batch_size: int = 128
    learning_rate: float = 0.0015
    stop_at_test_accuracy: float = None
    blank_steps: int = 100
    analysis_bin_sizes: tuple = ()
    hyperparameters: dict = field(default_factory=dict)
    data: dict = field(default_factory=lambda: {"synth_classes": 10, "synth_repetitions": 50})
    outdir: str = "experiment_out"

    def resolved_hyperparameters(self):
        hp = default_hyperparameters(self.threshold)
        overrides = {k: v for k, v in self.hyperparameters.items() if k in HYPERPARAMETER_KEYS}
        if overrides:
            from dataclasses import replace

            hp = replace(hp, **overrides)
        return hp


def _apply_env_overrides(raw, environ):
    """EVSPIKE_<KEY>=value overrides a top-level or hyperparameter key."""
    for key, value in environ.items():
        if not key.startswith(ENV_PREFIX):
            continue
        name = key[len(ENV_PREFIX):].lower()
        if name in ("no_numba", "dataset", "run_long"):
            continue  # reserved switches, not config keys
        target = None
        if name in HYPERPARAMETER_KEYS:
            target = raw.setdefault("hyperparameters", {})
        elif name in ExperimentConfig.__dataclass_fields__:
            target = raw
        if target is None:
            continue
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value
        target[name] = parsed
    return raw


def load_experiment_config(path, environ=None, seed_override=None):
    """Read a TOML config, apply EVSPIKE_* env overrides, then the CLI seed."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    raw = _apply_env_overrides(raw, environ if environ is not None else os.environ)
    known = {k: v for k, v in raw.items() if k in ExperimentConfig.__dataclass_fields__}
    unknown = set(raw) - set(known)
    if unknown:
        raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
    if "analysis_bin_sizes" in known:
        known["analysis_bin_sizes"] = tuple(known["analysis_bin_sizes"])
    cfg = ExperimentConfig(**known)
    if seed_override is not None:
        cfg.seed = int(seed_override)
    return cfg


def _load_experiment_dataset(cfg):
    data = cfg.data
    if "path" in data:
        return load_dataset(data["path"], expected_sha256=data.get("sha256"))
    return synth_dataset(
        n_classes=int(data.get("synth_classes", 10)),
        n_repetitions=int(data.get("synth_repetitions", 50)),
        seed=int(data.get("synth_seed", cfg.seed)),
        include_blank_class=bool(data.get("synth_blank_class", False)),
    )


@dataclass
class ExperimentResult:
    config: dict
    accuracy_mean: float
    accuracy_std: float
    accuracies: list
    quantized_accuracy: float
    quantized_drop: float
    ttc: TtcResult
    encoding: list
    synops: dict
    n_samples: int

    def to_dict(self):
        return {
            "schema_version": 1,
            "config": self.config,
            "accuracy_mean": self.accuracy_mean,
            "accuracy_std": self.accuracy_std,
            "accuracies": self.accuracies,
            "quantized_accuracy": self.quantized_accuracy,
            "quantized_drop": self.quantized_drop,
            "ttc": self.ttc.to_dict(),
            "encoding": [r.to_dict() for r in self.encoding],
            "synops": self.synops,
            "n_samples": self.n_samples,
        }


def write_json(obj, path):
    """Deterministic JSON: sorted keys, round-trip float precision."""
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _config_snapshot(cfg, hp):
    # outdir is a filesystem location, not part of the scientific config;
    # leaving it out keeps reruns byte-identical wherever they land
    snap = {
        k: getattr(cfg, k)
        for k in ExperimentConfig.__dataclass_fields__
        if k != "outdir"
    }
    snap["analysis_bin_sizes"] = list(snap["analysis_bin_sizes"])
    snap["hyperparameters"] = {k: getattr(hp, k) for k in HYPERPARAMETER_KEYS}
    return snap


def run_experiment(cfg, dry_run=False):
    """Execute the full pipeline; returns the result (and writes files).

    With ``dry_run`` the config is validated and resolved but no data is
    touched and nothing is written.
    """
    hp = cfg.resolved_hyperparameters()
    if dry_run:
        return _config_snapshot(cfg, hp)

    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    dataset = _load_experiment_dataset(cfg)

    bin_sizes = list(cfg.analysis_bin_sizes) or [hp.time_bin_size]
    thresholds = sorted({1.0, float(cfg.threshold)})
    reports = analyze_encoding(dataset.samples, thresholds, bin_sizes)
    encoding = [r for r in reports if r.threshold == float(cfg.threshold)]

    inputs, labels, _ = prepare_inputs(
        dataset, cfg.threshold, hp.time_bin_size, hp.nb_input_copies
    )
    n_outputs = dataset.n_classes

    accuracies = []
    best_result = None
    for i in range(cfg.n_seeds):
        seed = cfg.seed + i
        net = build_network(
            inputs.shape[2], n_outputs, hp,
            hidden_size=cfg.hidden_size, recurrent=cfg.recurrent, seed=seed,
        )
        tcfg = train_config_from_hyperparameters(
            hp, cfg.epochs, seed,
            batch_size=cfg.batch_size,
            learning_rate=cfg.learning_rate,
            stop_at_test_accuracy=cfg.stop_at_test_accuracy,
        )
        result = train(net, (inputs, labels), tcfg)
        write_metrics_csv(result.metrics, outdir / f"metrics_seed{seed}.csv")
        accuracies.append(result.best_test_accuracy)
        if best_result is None or result.best_test_accuracy > best_result.best_test_accuracy:
            best_result = result

    net = best_result.net.astype(np.float64)
    test_idx = best_result.test_indices
    x_test, y_test = inputs[test_idx], labels[test_idx]
    float_acc = evaluate(net, x_test, y_test)

    prep = {
        "threshold": float(cfg.threshold),
        "time_bin_size_ms": float(hp.time_bin_size),
        "nb_input_copies": int(hp.nb_input_copies),
    }
    save_network(net, outdir / "model.h5", preprocessing=prep)
    qnet = quantize_network(net)
    save_quantized(qnet, outdir / "model_quantized.h5", preprocessing=prep)
    predictions, synop_report, _ = quantized_forward(qnet, x_test, blank_steps=cfg.blank_steps)
    q_acc = float((predictions == y_test).mean())

    ttc = compute_ttc(net, x_test, y_test)

    result = ExperimentResult(
        config=_config_snapshot(cfg, hp),
        accuracy_mean=float(np.mean(accuracies)),
        accuracy_std=float(np.std(accuracies)),
        accuracies=[float(a) for a in accuracies],
        quantized_accuracy=q_acc,
        quantized_drop=float(float_acc - q_acc),
        ttc=ttc,
        encoding=encoding,
        synops=synop_report.to_dict(),
        n_samples=len(dataset),
    )
    write_json(result.to_dict(), outdir / "report.json")
    with open(outdir / "ttc_curve.csv", "w") as fh:
        fh.write("fraction,accuracy\n")
        for f, a in ttc.curve:
            fh.write(f"{f!r},{a!r}\n")
    with open(outdir / "encoding.csv", "w") as fh:
        fh.write(
            "threshold,time_bin_size_ms,mean_events,compression_ratio,mse,"
            "mean_events_binned,compression_ratio_binned,mse_binned,"
            "events_lost_fraction,isi_below_1ms\n"
        )
        for r in reports:
            fh.write(
                f"{r.threshold!r},{r.time_bin_size_ms!r},{r.mean_events_per_sample!r},"
                f"{r.compression_ratio!r},{r.reconstruction_mse!r},"
                f"{r.mean_events_per_sample_binned!r},{r.compression_ratio_binned!r},"
                f"{r.reconstruction_mse_binned!r},{r.events_lost_fraction!r},"
                f"{r.isi_fraction_below_1ms!r}\n"
            )
    return result


def dataset_checksum(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
