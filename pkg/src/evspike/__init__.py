"""Event-based encoding and spiking-network pipeline for tactile time series.

Sigma-delta encoding of frame-based sensor recordings, encoding-quality
analysis, surrogate-gradient training of feedforward/recurrent LIF networks,
fixed-point inference with synaptic-operation accounting, and linear
baselines, all behind one CLI (``evspike``).
"""

from ._accel import NUMBA_ENABLED
from .codec import (
    BinnedSpikeTensor,
    BinningConfig,
    EncoderConfig,
    EncodingReport,
    EventStream,
    FrameSequence,
    analyze_encoding,
    bin_events,
    binned_to_stream,
    encode,
    input_copies,
    mse,
    reconstruct,
)
from .dataset import Dataset, load_dataset, save_dataset, synth_dataset
from .quant import (
    QuantizedNetwork,
    QuantParams,
    SaturationError,
    SynOpReport,
    decay_from_tau,
    loihi_step,
    quantize_network,
    quantize_weights,
    quantized_forward,
)
from .snn import (
    ForwardTrace,
    LayerState,
    LifParams,
    NetworkDef,
    forward,
    forward_batch,
    lif_step,
    predict,
    predict_counts,
)
from .training import (
    GradientSet,
    LossBreakdown,
    TrainConfig,
    backward,
    loss_cross_entropy,
    loss_reg_lower,
    loss_reg_upper,
    optimizer_step,
    surrogate_grad,
    train,
)

__version__ = "0.1.0"
