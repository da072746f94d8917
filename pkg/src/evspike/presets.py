"""Shipped per-threshold hyperparameter defaults.

One tuned configuration per encoding threshold, found by a two-stage search
(random exploration followed by a grid over time_bin_size and
nb_input_copies). Key names follow the config-file vocabulary verbatim.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Hyperparameters:
    scale: float               # surrogate-gradient steepness
    time_bin_size: float       # ms
    nb_input_copies: int
    tau_mem: float             # ms
    tau_ratio: float           # tau_mem / tau_syn, applied to both layers
    fwd_weight_scale: float
    weight_scale_factor: float
    reg_spikes: float          # mu_2
    reg_neurons: float         # mu_1

    @property
    def tau_syn(self):
        return self.tau_mem / self.tau_ratio


DEFAULT_HYPERPARAMETERS = {
    1.0: Hyperparameters(
        scale=5.0, time_bin_size=5.0, nb_input_copies=2, tau_mem=60.0, tau_ratio=10.0,
        fwd_weight_scale=1.0, weight_scale_factor=1e-2, reg_spikes=4e-3, reg_neurons=1e-6,
    ),
    2.0: Hyperparameters(
        scale=15.0, time_bin_size=3.0, nb_input_copies=8, tau_mem=50.0, tau_ratio=10.0,
        fwd_weight_scale=1.0, weight_scale_factor=2e-2, reg_spikes=1.5e-3, reg_neurons=0.0,
    ),
    5.0: Hyperparameters(
        scale=10.0, time_bin_size=3.0, nb_input_copies=4, tau_mem=70.0, tau_ratio=10.0,
        fwd_weight_scale=1.5, weight_scale_factor=3.5e-2, reg_spikes=1e-3, reg_neurons=0.0,
    ),
    10.0: Hyperparameters(
        scale=10.0, time_bin_size=5.0, nb_input_copies=2, tau_mem=70.0, tau_ratio=10.0,
        fwd_weight_scale=4.0, weight_scale_factor=1.5e-2, reg_spikes=1.5e-3, reg_neurons=0.0,
    ),
}

HIDDEN_SIZE_DEFAULT = 450
N_OUTPUTS_DEFAULT = 28  # 27 letter classes plus one "no contact" class


def default_hyperparameters(threshold):
    """Tuned defaults for the given encoding threshold (nearest match)."""
    key = float(threshold)
    if key in DEFAULT_HYPERPARAMETERS:
        return DEFAULT_HYPERPARAMETERS[key]
    nearest = min(DEFAULT_HYPERPARAMETERS, key=lambda t: abs(t - key))
    return DEFAULT_HYPERPARAMETERS[nearest]
