"""Hyperparameter search: grid over time binning and input copies.

The grid stage trains one network per (threshold, time_bin_size,
nb_input_copies) cell and reports the best test accuracy of each, flagging
rows that match the shipped per-threshold defaults. A seeded random-search
mode over the full hyperparameter space is provided as the optional wider
first stage.
"""

from dataclasses import dataclass, replace

import numpy as np

from .harness import build_network, prepare_inputs, train_config_from_hyperparameters
from .presets import HIDDEN_SIZE_DEFAULT, default_hyperparameters
from .training import train


@dataclass
class GridRow:
    threshold: float
    time_bin_size: float
    nb_input_copies: int
    best_test_accuracy: float
    best_epoch: int
    is_default_config: bool


@dataclass
class GridSearchResult:
    rows: list
    best: GridRow

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(
                "threshold,time_bin_size,nb_input_copies,best_test_accuracy,"
                "best_epoch,is_default_config\n"
            )
            for r in self.rows:
                fh.write(
                    f"{r.threshold!r},{r.time_bin_size!r},{r.nb_input_copies},"
                    f"{r.best_test_accuracy!r},{r.best_epoch},"
                    f"{int(r.is_default_config)}\n"
                )


def grid_search(
    dataset,
    thresholds,
    bin_sizes_ms,
    copies_list,
    epochs=30,
    seed=0,
    hidden_size=HIDDEN_SIZE_DEFAULT,
    recurrent=True,
    batch_size=128,
    stop_at_test_accuracy=None,
):
    """Train one network per grid cell; deterministic for a fixed seed."""
    if not (list(thresholds) and list(bin_sizes_ms) and list(copies_list)):
        raise ValueError("grid must be non-empty")
    rows = []
    for th in thresholds:
        base = default_hyperparameters(th)
        for bin_ms in bin_sizes_ms:
            inputs_cache = None
            for copies in copies_list:
                hp = replace(
                    base, time_bin_size=float(bin_ms), nb_input_copies=int(copies)
                )
                if inputs_cache is None or inputs_cache[0] != copies:
                    inputs, labels, _ = prepare_inputs(
                        dataset, th, hp.time_bin_size, hp.nb_input_copies
                    )
                    inputs_cache = (copies, inputs, labels)
                _, inputs, labels = inputs_cache
                net = build_network(
                    inputs.shape[2], dataset.n_classes, hp,
                    hidden_size=hidden_size, recurrent=recurrent, seed=seed,
                )
                tcfg = train_config_from_hyperparameters(
                    hp, epochs, seed,
                    batch_size=batch_size,
                    stop_at_test_accuracy=stop_at_test_accuracy,
                )
                result = train(net, (inputs, labels), tcfg)
                rows.append(
                    GridRow(
                        threshold=float(th),
                        time_bin_size=float(bin_ms),
                        nb_input_copies=int(copies),
                        best_test_accuracy=result.best_test_accuracy,
                        best_epoch=result.best_epoch,
                        is_default_config=(
                            float(bin_ms) == base.time_bin_size
                            and int(copies) == base.nb_input_copies
                        ),
                    )
                )
    best = max(rows, key=lambda r: r.best_test_accuracy)
    return GridSearchResult(rows=rows, best=best)


RANDOM_SEARCH_SPACE = {
    "scale": (1.0, 20.0),
    "time_bin_size": (1.0, 20.0),
    "nb_input_copies": (1, 8),
    "tau_mem": (10.0, 100.0),
    "tau_ratio": (2.0, 20.0),
    "fwd_weight_scale": (0.5, 5.0),
    "weight_scale_factor": (1e-3, 1e-1),
    "reg_spikes": (0.0, 5e-3),
    "reg_neurons": (0.0, 1e-5),
}


def random_search(dataset, threshold, n_trials, epochs=30, seed=0,
                  hidden_size=HIDDEN_SIZE_DEFAULT, recurrent=True, batch_size=128):
    """Seeded random sampling of the full space; wider stage before the grid."""
    rng = np.random.default_rng(seed)
    base = default_hyperparameters(threshold)
    trials = []
    for trial in range(n_trials):
        draw = {}
        for key, (lo, hi) in RANDOM_SEARCH_SPACE.items():
            if key == "nb_input_copies":
                draw[key] = int(rng.integers(lo, hi + 1))
            elif key == "weight_scale_factor":
                draw[key] = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
            else:
                draw[key] = float(rng.uniform(lo, hi))
        hp = replace(base, **draw)
        inputs, labels, _ = prepare_inputs(
            dataset, threshold, hp.time_bin_size, hp.nb_input_copies
        )
        net = build_network(
            inputs.shape[2], dataset.n_classes, hp,
            hidden_size=hidden_size, recurrent=recurrent, seed=seed + trial,
        )
        tcfg = train_config_from_hyperparameters(
            hp, epochs, seed + trial, batch_size=batch_size
        )
        result = train(net, (inputs, labels), tcfg)
        trials.append((draw, result.best_test_accuracy))
    trials.sort(key=lambda t: -t[1])
    return trials
