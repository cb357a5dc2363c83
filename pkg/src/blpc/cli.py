"""Command line front end.

Subcommands:
  synth         features file + weights file -> 16-bit mono WAV
  bench         RTF/CR benchmark over the eight standard configs
  gen-weights   write deterministic test weight files
  gen-features  write a synthetic feature file
  verify-codec  exhaustive round-trip audit of a mu-law spec

Exit codes:
  0  success (for verify-codec: the audit passed)
  1  internal error, or a failed verify-codec audit
  2  bad input: missing file, bad argument value
  3  malformed input file (bad magic, checksum, truncation)
"""

from __future__ import annotations

import argparse
import sys
import time

from .bench import run_bench, weight_filename
from .codec import BitSplit, MuLawSpec, step_audit
from .config import all_benchmark_configs, make_config
from .modelio import (FormatError, WeightStore, generate_test_weights,
                      read_features, synthetic_features, write_features,
                      write_wav)
from .srn import Synthesizer, prepare_model


def _cmd_synth(args) -> int:
    store = WeightStore.load(args.weights)
    features = read_features(args.features)
    model = prepare_model(store, backend=args.backend)
    syn = Synthesizer(model, seed=args.seed, temperature=args.temperature)
    t0 = time.perf_counter()
    pcm = syn.synthesize(features)
    wall = time.perf_counter() - t0
    write_wav(args.out, pcm, store.config.sample_rate)
    audio = pcm.size / store.config.sample_rate
    rtf = wall / audio if audio else 0.0
    print(f"frames={features.shape[0]} samples={pcm.size} "
          f"wall={wall:.3f}s rtf={rtf:.3f}")
    return 0


def _cmd_bench(args) -> int:
    report = run_bench(frames=args.frames, repeat=args.repeat,
                       seed=args.seed, weights_dir=args.weights_dir,
                       backend=args.backend, streams=args.streams)
    text = report.to_json()
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text)
        for r in report.results:
            print(f"{r.config.label()}: rtf={r.rtf:.4f} cr={r.cr:.4f} "
                  f"predicted_cr={r.predicted_cr:.4f}")
        print(f"report written to {args.report}")
    else:
        print(text, end="")
    return 0


def _cmd_gen_weights(args) -> int:
    if args.bunch is not None:
        configs = [make_config(args.bunch, (args.high, args.low))]
    else:
        configs = all_benchmark_configs()
    import os
    os.makedirs(args.out_dir, exist_ok=True)
    for cfg in configs:
        store = generate_test_weights(args.seed, cfg)
        path = os.path.join(args.out_dir, weight_filename(cfg))
        store.save(path)
        print(f"wrote {path}")
    return 0


def _cmd_gen_features(args) -> int:
    feats = synthetic_features(args.frames, seed=args.seed)
    write_features(args.out, feats)
    print(f"wrote {args.out} ({args.frames} frames)")
    return 0


def _cmd_verify_codec(args) -> int:
    spec = MuLawSpec(bits=args.bits, slope=args.slope)
    audit = step_audit(spec)
    print(f"bits={audit['bits']} slope={audit['slope']} "
          f"codes={audit['num_codes']} "
          f"min_decode_step={audit['min_decode_step']}")
    if audit["roundtrip_ok"]:
        print("round-trip: pass (every code survives encode(decode(y)))")
        return 0
    bad = audit["collapsed_codes"]
    shown = ", ".join(str(c) for c in bad[:16])
    more = "" if len(bad) <= 16 else f" (+{len(bad) - 16} more)"
    print(f"round-trip: FAIL, {len(bad)} collapsed codes: {shown}{more}")
    return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="blpc",
        description="bunched autoregressive vocoder: synthesis and "
                    "benchmarking on CPU")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="synthesize a WAV from features")
    sp.add_argument("--features", required=True, help="feature file path")
    sp.add_argument("--weights", required=True, help="weight file path")
    sp.add_argument("--out", required=True, help="output WAV path")
    sp.add_argument("--seed", type=int, default=0, help="sampling seed")
    sp.add_argument("--temperature", type=float, default=1.0)
    sp.add_argument("--backend", choices=("numba", "numpy"), default=None)
    sp.set_defaults(func=_cmd_synth)

    bp = sub.add_parser("bench", help="RTF/CR benchmark, eight configs")
    bp.add_argument("--weights-dir", default=None,
                    help="directory of per-config weight files "
                         "(default: generate from --seed)")
    bp.add_argument("--frames", type=int, default=200)
    bp.add_argument("--repeat", type=int, default=5)
    bp.add_argument("--report", default=None, help="write JSON report here")
    bp.add_argument("--seed", type=int, default=0)
    bp.add_argument("--streams", type=int, default=1,
                    help="concurrent independent streams")
    bp.add_argument("--backend", choices=("numba", "numpy"), default=None)
    bp.set_defaults(func=_cmd_bench)

    gw = sub.add_parser("gen-weights", help="write test weight files")
    gw.add_argument("--out-dir", required=True)
    gw.add_argument("--seed", type=int, default=0)
    gw.add_argument("--bunch", type=int, default=None,
                    help="bunch size for a single config "
                         "(default: all eight)")
    gw.add_argument("--high", type=int, default=8, help="high code bits")
    gw.add_argument("--low", type=int, default=0, help="low code bits")
    gw.set_defaults(func=_cmd_gen_weights)

    gf = sub.add_parser("gen-features", help="write a synthetic feature file")
    gf.add_argument("--out", required=True)
    gf.add_argument("--frames", type=int, default=100)
    gf.add_argument("--seed", type=int, default=0)
    gf.set_defaults(func=_cmd_gen_features)

    vc = sub.add_parser("verify-codec", help="audit a mu-law spec")
    vc.add_argument("--bits", type=int, required=True,
                    help="total code bits")
    vc.add_argument("--slope", type=float, default=1.0)
    vc.set_defaults(func=_cmd_verify_codec)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        name = exc.filename if exc.filename else exc
        print(f"error: file not found: {name}", file=sys.stderr)
        return 2
    except IsADirectoryError as exc:
        print(f"error: expected a file: {exc.filename}", file=sys.stderr)
        return 2
    except FormatError as exc:
        print(f"error: malformed file: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
