"""Wall-clock benchmark across the eight bunching configurations.

Methodology: one warm-up synthesis per config is discarded (JIT
compilation, cache warming), then the same seeded stream is synthesized
`repeat` times and the median wall time is kept. RTF = wall seconds per
second of produced audio; CR = RTF relative to the S=1,(8,0) baseline.
Feature preparation and file IO happen outside the timed region, and the
timed region performs no allocation beyond the output buffers.

Reports are plain JSON with a pinned schema name so downstream tooling
can check compatibility.
"""

from __future__ import annotations

import json
import os
import platform
import statistics
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .config import ModelConfig, all_benchmark_configs
from .flops import count_flops, predicted_cr
from .kernels import HAVE_NUMBA, active_backend
from .modelio import WeightStore, generate_test_weights, synthetic_features
from .srn import PreparedModel, Synthesizer, prepare_model

SCHEMA = "blpc-bench/1"


def weight_filename(config: ModelConfig) -> str:
    """Canonical per-config weight file name, e.g. s2-b7-4.blpcw."""
    return (f"s{config.bunch_size}-b{config.high_bits}"
            f"-{config.low_bits}.blpcw")


def machine_info() -> dict:
    info = {
        "platform": platform.platform(),
        "machine": platform.machine(),
        "processor": platform.processor() or "unknown",
        "python": platform.python_version(),
        "numpy": np.__version__,
        "cpu_count": os.cpu_count(),
        "jit_available": HAVE_NUMBA,
    }
    if HAVE_NUMBA:
        import numba
        info["numba"] = numba.__version__
    return info


@dataclass(frozen=True)
class ConfigResult:
    config: ModelConfig
    wall_seconds: float
    audio_seconds: float
    rtf: float
    cr: float
    predicted_cr: float
    rep_seconds: tuple[float, ...]
    streams_equal: bool | None = None

    def to_dict(self) -> dict:
        rep = count_flops(self.config)
        return {
            "config": self.config.label(),
            "bunch_size": self.config.bunch_size,
            "high_bits": self.config.high_bits,
            "low_bits": self.config.low_bits,
            "wall_seconds": self.wall_seconds,
            "audio_seconds": self.audio_seconds,
            "rtf": self.rtf,
            "cr": self.cr,
            "predicted_cr": self.predicted_cr,
            "dual_fc_macs_per_sample": rep.dual_fc_macs_per_sample,
            "weighted_flops_per_frame": rep.weighted_per_frame,
            "rep_seconds": list(self.rep_seconds),
            "streams_equal": self.streams_equal,
        }


@dataclass(frozen=True)
class BenchReport:
    machine: dict
    frames: int
    repeat: int
    seed: int
    backend: str
    streams: int
    results: tuple[ConfigResult, ...]
    schema: str = field(default=SCHEMA)

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "machine": self.machine,
            "params": {
                "frames": self.frames,
                "repeat": self.repeat,
                "seed": self.seed,
                "backend": self.backend,
                "streams": self.streams,
            },
            "baseline": self.results[0].config.label(),
            "results": [r.to_dict() for r in self.results],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def load_stores(weights_dir, configs) -> list[WeightStore]:
    """Load one weight store per config from a directory; missing files
    are reported together so the caller sees the full gap at once."""
    paths = [os.path.join(weights_dir, weight_filename(c)) for c in configs]
    missing = [p for p in paths if not os.path.exists(p)]
    if missing:
        raise FileNotFoundError(
            "missing weight files: " + ", ".join(missing))
    return [WeightStore.load(p) for p in paths]


def _pin_to_one_core() -> None:
    try:
        os.sched_setaffinity(0, {min(os.sched_getaffinity(0))})
    except (AttributeError, OSError):
        pass  # unsupported platform; measurement proceeds unpinned


def _time_stream(model: PreparedModel, features, seed: int, repeat: int):
    syn = Synthesizer(model, seed=seed)
    pcm = syn.synthesize(features)  # warm-up, discarded
    reps = []
    for _ in range(repeat):
        syn.reset(seed)
        t0 = time.perf_counter()
        pcm = syn.synthesize(features)
        reps.append(time.perf_counter() - t0)
    return pcm, reps


def _time_concurrent(model: PreparedModel, features, seed: int,
                     repeat: int, streams: int):
    """Independent streams on their own threads, one Synthesizer each.

    Weights are shared read-only; every stream gets its own state and a
    distinct seed. Returns the per-rep wall time of the slowest stream
    (all must finish) and the concurrent outputs for an equality check.
    """
    synths = [Synthesizer(model, seed=seed + i) for i in range(streams)]
    outs = [None] * streams

    def work(i):
        outs[i] = synths[i].synthesize(features)

    for s in synths:
        s.reset(None)
    threads = [threading.Thread(target=work, args=(i,))
               for i in range(streams)]
    for t in threads:  # warm-up pass
        t.start()
    for t in threads:
        t.join()

    reps = []
    for _ in range(repeat):
        for i, s in enumerate(synths):
            s.reset(seed + i)
        threads = [threading.Thread(target=work, args=(i,))
                   for i in range(streams)]
        t0 = time.perf_counter()
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        reps.append(time.perf_counter() - t0)
    return outs, reps


def run_bench(frames: int = 200, repeat: int = 5, seed: int = 0,
              weights_dir=None, backend: str | None = None,
              streams: int = 1, pin: bool = True) -> BenchReport:
    """Benchmark all eight configs and return a structured report.

    With `weights_dir`, per-config files are loaded (all must exist);
    otherwise deterministic test weights are generated from `seed`.
    """
    if frames < 1:
        raise ValueError("frames must be >= 1")
    if repeat < 1:
        raise ValueError("repeat must be >= 1")
    if streams < 1:
        raise ValueError("streams must be >= 1")
    configs = all_benchmark_configs()
    if weights_dir is not None:
        stores = load_stores(weights_dir, configs)
    else:
        stores = [generate_test_weights(seed, c) for c in configs]
    features = synthetic_features(frames, seed=seed)
    if pin:
        _pin_to_one_core()

    results = []
    base_rtf = None
    for cfg, store in zip(configs, stores):
        model = prepare_model(store, backend=backend)
        if streams == 1:
            pcm, reps = _time_stream(model, features, seed, repeat)
            audio = pcm.size / cfg.sample_rate
            streams_equal = None
        else:
            outs, reps = _time_concurrent(model, features, seed, repeat,
                                          streams)
            # each stream must reproduce its single-threaded run exactly
            streams_equal = True
            for i, out in enumerate(outs):
                solo = Synthesizer(model, seed=seed + i).synthesize(features)
                if not np.array_equal(out, solo):
                    streams_equal = False
            audio = streams * outs[0].size / cfg.sample_rate
        wall = statistics.median(reps)
        rtf = wall / audio
        if base_rtf is None:
            base_rtf = rtf
        results.append(ConfigResult(
            config=cfg,
            wall_seconds=wall,
            audio_seconds=audio,
            rtf=rtf,
            cr=rtf / base_rtf,
            predicted_cr=predicted_cr(cfg),
            rep_seconds=tuple(reps),
            streams_equal=streams_equal,
        ))
    return BenchReport(
        machine=machine_info(),
        frames=frames,
        repeat=repeat,
        seed=seed,
        backend=active_backend() if backend is None else backend,
        streams=streams,
        results=tuple(results),
    )
