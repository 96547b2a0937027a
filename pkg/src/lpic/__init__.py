"""lpic: a self-contained learned lossless image codec.

A small masked-convolution network predicts, for every pixel, a discretized
mixture distribution over each RGB sub-pixel; a range coder turns those
distributions into a compact bitstream.  Decoding follows one of three
schedules (sequential, wavefront, diagonal) that trade passes through the
network for parallelism.  Training runs on the CPU with hand-derived
gradients.
"""

from .codec import (CodecTrace, Container, bpsp, decode, encode,
                    theoretical_bpsp)
from .coder import RangeDecoder, RangeEncoder, rate_of
from .errors import (CorruptStreamError, FingerprintMismatchError, LpicError,
                     UnsupportedImageError)
from .mixture import (PixelParams, activate, bin_probability, pmf,
                      quantize_cdf, update_means)
from .network import (Distribution, ModelConfig, Weights, causal_taps,
                      count_parameters, estimate_macs, forward_fc,
                      forward_full, forward_patch, forward_taps_batch,
                      glorot_weights, leaky_relu, load_weights, normalize,
                      normalize_value, save_weights, weight_fingerprint,
                      zero_weights)
from .schedules import (Schedule, ScheduleMode, build_schedule, diagonal,
                        parse_mode, sequential, validate, wavefront)
from .training import TrainConfig, train

__version__ = "0.1.0"
