"""CPU inference engine for a bunched autoregressive neural vocoder.

Per-frame acoustic features go in, 16-bit PCM comes out. The sample-rate
network advances once per bunch of S samples, excitation codes can be
split into high/low halves with chained softmax heads, and every sampled
bit is reproducible from a documented PRNG seed.
"""

from .codec import BitSplit, MuLawSpec, decode, encode, recombine, split_code
from .config import ModelConfig, all_benchmark_configs, make_config
from .flops import FlopReport, count_flops, predicted_cr
from .kernels import active_backend
from .modelio import (FormatError, WeightStore, generate_test_weights,
                      read_features, read_wav, synthetic_features,
                      write_features, write_wav)
from .srn import PreparedModel, Synthesizer, init_state, prepare_model, synthesize

__version__ = "0.1.0"

__all__ = [
    "BitSplit", "MuLawSpec", "encode", "decode", "split_code", "recombine",
    "ModelConfig", "make_config", "all_benchmark_configs",
    "FlopReport", "count_flops", "predicted_cr",
    "active_backend",
    "FormatError", "WeightStore", "generate_test_weights",
    "read_features", "write_features", "read_wav", "write_wav",
    "synthetic_features",
    "PreparedModel", "Synthesizer", "init_state", "prepare_model",
    "synthesize",
    "__version__",
]
