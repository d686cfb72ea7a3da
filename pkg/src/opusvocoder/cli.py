"""``vocoder`` command line: features, synth, bench, model-info, make-test-model.

Exit codes: 0 success, 1 I/O failure, 2 format or validation error.
Messages on stderr start with the failing stage (``model:``, ``features:``,
``output:``) so callers can tell a bad model from a bad feature file.
Every command is deterministic; ``--seed`` defaults to 0.
"""

import argparse
import concurrent.futures
import dataclasses
import io
import json
import logging
import os
import struct
import sys
import tempfile
import time
import wave

import numpy as np

from . import __version__, dsp, features, modelio, nnet, synthetic, vocoder

log = logging.getLogger("opusvocoder")

EXIT_OK = 0
EXIT_IO = 1
EXIT_FORMAT = 2

FMTX_MAGIC = b"FMTX"
FMTX_VERSION = 1
FMTX_HEADER = struct.Struct("<4sIII")
MATRIX_COLS = features.N_FEATURES + dsp.LPC_ORDER
EQUIVALENT_UNITS_PUBLISHED = 122


class CliError(Exception):
    def __init__(self, stage, message, code):
        super().__init__(f"{stage}: {message}")
        self.code = code


# --------------------------------------------------------------------------
# file helpers


def atomic_write(path, payload):
    """Write ``payload`` to a temp file beside ``path`` and rename it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".vocoder-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return len(payload)


def matrix_bytes(matrix):
    m = np.asarray(matrix, dtype="<f4").reshape(-1, MATRIX_COLS)
    return FMTX_HEADER.pack(FMTX_MAGIC, FMTX_VERSION, m.shape[0], m.shape[1]) + m.tobytes()


def parse_matrix(data):
    if len(data) < FMTX_HEADER.size:
        raise ValueError("truncated FMTX header")
    magic, version, rows, cols = FMTX_HEADER.unpack_from(data, 0)
    if magic != FMTX_MAGIC:
        raise ValueError(f"bad magic {magic!r}, expected FMTX")
    if version != FMTX_VERSION:
        raise ValueError(f"unsupported FMTX version {version}")
    if cols != MATRIX_COLS:
        raise ValueError(f"expected {MATRIX_COLS} columns, header says {cols}")
    expected = FMTX_HEADER.size + 4 * rows * cols
    if len(data) != expected:
        raise ValueError(f"payload is {len(data)} bytes, header implies {expected}")
    return np.frombuffer(data, dtype="<f4", offset=FMTX_HEADER.size).reshape(rows, cols)


def wav_bytes(samples):
    pcm = np.clip(np.round(np.asarray(samples, dtype=np.float64) * 32767.0), -32768, 32767)
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(dsp.SAMPLE_RATE)
        w.writeframes(pcm.astype("<i2").tobytes())
    return buf.getvalue()


def read_wav(path):
    """16-bit mono 16 kHz PCM only; anything else names the offending field."""
    try:
        w = wave.open(str(path), "rb")
    except wave.Error as exc:
        raise ValueError(f"not a RIFF/WAVE PCM file: {exc}") from None
    with w:
        checks = (("channels", w.getnchannels(), 1), ("sample_width", w.getsampwidth(), 2),
                  ("sample_rate", w.getframerate(), dsp.SAMPLE_RATE),
                  ("compression", w.getcomptype(), "NONE"))
        for name, got, want in checks:
            if got != want:
                raise ValueError(f"unsupported WAV {name}: {got} (need {want})")
        data = w.readframes(w.getnframes())
    return dsp.AudioBuffer(np.frombuffer(data, dtype="<i2") / 32768.0)


def _load_model(path):
    try:
        return modelio.load_model(path)
    except OSError as exc:
        raise CliError("model", f"cannot read {path}: {exc.strerror or exc}", EXIT_IO)
    except nnet.ModelError as exc:
        raise CliError("model", str(exc), EXIT_FORMAT)


def _read_bytes(stage, path):
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(stage, f"cannot read {path}: {exc.strerror or exc}", EXIT_IO)


def _write(stage, path, payload):
    try:
        return atomic_write(path, payload)
    except OSError as exc:
        raise CliError(stage, f"cannot write {path}: {exc.strerror or exc}", EXIT_IO)


def _emit(obj, as_json):
    if as_json:
        print(json.dumps(obj, sort_keys=True))
    else:
        for key in sorted(obj):
            print(f"{key}: {obj[key]}")


# --------------------------------------------------------------------------
# commands


def feature_matrix(frames):
    """Rows of ``[38 conditioning | 16 LPC derived from the decoded cepstrum]``."""
    rows = []
    for cond in features.conditioning_sequence(frames):
        rows.append(np.concatenate((cond.flatten(), features.lpc_from_conditioning(cond))))
    return np.array(rows, dtype=np.float64).reshape(-1, MATRIX_COLS)


def cmd_features(args):
    data = _read_bytes("features", args.input)
    try:
        frames = features.load_feature_dump(data)
    except features.FeatureFormatError as exc:
        raise CliError("features", str(exc), EXIT_FORMAT)
    matrix = feature_matrix(frames)
    _write("output", args.output, matrix_bytes(matrix))
    log.info("wrote %d x %d feature matrix to %s", *matrix.shape, args.output)
    if args.json_summary:
        m32 = matrix.astype(np.float32).astype(np.float64)
        print(json.dumps({
            "frames": int(matrix.shape[0]),
            "columns": MATRIX_COLS,
            "mean": m32.mean(axis=0).tolist() if len(m32) else [],
            "variance": m32.var(axis=0).tolist() if len(m32) else [],
        }, sort_keys=True))
    return EXIT_OK


def _read_features(path):
    data = _read_bytes("features", path)
    try:
        return parse_matrix(data)
    except ValueError as exc:
        raise CliError("features", str(exc), EXIT_FORMAT)


def cmd_synth(args):
    if args.noise_scale < 0:
        raise CliError("synth", "--noise-scale must be non-negative", EXIT_FORMAT)
    model = _load_model(args.model)
    matrix = _read_features(args.features)
    try:
        pairs = vocoder.split_feature_matrix(matrix)
    except ValueError as exc:
        raise CliError("features", str(exc), EXIT_FORMAT)
    t0 = time.perf_counter()
    audio = vocoder.synthesize(pairs, model, seed=args.seed, noise_scale=args.noise_scale)
    wall = time.perf_counter() - t0
    _write("output", args.output, wav_bytes(audio.samples))
    log.info("synthesised %.2f s in %.2f s", audio.duration, wall)
    if args.report_dir:
        from . import report
        report.synthesis_report(args.report_dir, audio.samples, matrix[:, :features.N_FEATURES])
    if args.json:
        _emit({"frames": len(pairs), "samples": len(audio), "seed": args.seed,
               "wall_seconds": wall}, True)
    return EXIT_OK


def bench_features(seconds, seed=0):
    n = int(round(seconds * nnet.FRAME_RATE))
    if n == 0:
        return []
    return vocoder.split_feature_matrix(feature_matrix(synthetic.random_frames(n, seed)))


def run_bench(model, seconds, streams=1, seed=0):
    """Time ``streams`` concurrent syntheses of ``seconds`` of audio each."""
    pairs = bench_features(seconds, seed)
    if pairs:
        vocoder.synthesize(pairs[:1], model, seed=seed)  # compile before timing

    def one(k):
        t = time.perf_counter()
        vocoder.synthesize(pairs, model, seed=seed + k)
        return time.perf_counter() - t

    t0 = time.perf_counter()
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(streams, 1)) as pool:
        walls = list(pool.map(one, range(streams)))
    wall = time.perf_counter() - t0
    fc = nnet.flop_count(model)
    audio_seconds = len(pairs) / nnet.FRAME_RATE
    total = audio_seconds * streams
    return {
        "seconds": audio_seconds,
        "streams": streams,
        "wall_seconds": wall,
        "stream_wall_seconds": walls,
        "real_time_factor": total / wall if wall > 0 and total > 0 else 0.0,
        "gflops_analytic": fc["gflops"],
        "gflops_achieved": fc["flops_per_second"] * total / wall / 1e9 if total > 0 else 0.0,
        "flops_per_sample": fc["flops_per_sample"],
        "flops_per_frame": fc["flops_per_frame"],
        "sample_rate_weights": fc["sample_rate_weights"],
    }


def cmd_bench(args):
    if args.seconds < 0 or args.streams < 1:
        raise CliError("bench", "--seconds must be >= 0 and --streams >= 1", EXIT_FORMAT)
    model = _load_model(args.model)
    result = run_bench(model, args.seconds, args.streams, args.seed)
    if args.report_dir:
        from . import report
        report.bench_report(args.report_dir, result)
    if args.json:
        _emit(result, True)
    else:
        print(f"audio {result['seconds']:.2f} s x {result['streams']} stream(s) "
              f"in {result['wall_seconds']:.2f} s")
        print(f"real-time factor {result['real_time_factor']:.2f}")
        print(f"analytic {result['gflops_analytic']:.3f} GFLOPS, "
              f"achieved {result['gflops_achieved']:.3f} GFLOP/s")
    return EXIT_OK


def model_info(model, path=None):
    c = model.config
    fc = nnet.flop_count(model)
    dens = {k: m.density for k, m in model.sparse().items()}
    mean = float(np.mean(list(dens.values())))
    shapes = {k: list(v.shape) for k, v in model.arrays().items()}
    shapes.update({k: [m.rows, m.cols] for k, m in model.sparse().items()})
    units = nnet.equivalent_units(c.n_a, mean)
    return {
        "config": dataclasses.asdict(c),
        "shapes": shapes,
        "densities": dens,
        "mean_density": mean,
        "sample_rate_weights": fc["sample_rate_weights"],
        "sample_rate_weight_items": fc["sample_rate_weight_items"],
        "frame_rate_weights": fc["frame_rate_weights"],
        "gflops": fc["gflops"],
        "equivalent_units": units,
        "equivalent_units_note": (f"formula sqrt(d*N^2+N) gives {units:.1f}; "
                                  f"the published figure is {EQUIVALENT_UNITS_PUBLISHED}, "
                                  "a rounding difference"),
        "checksum": f"{modelio.file_checksum(path):016x}" if path else None,
    }


def cmd_model_info(args):
    model = _load_model(args.model)
    info = model_info(model, args.model)
    if args.report_dir:
        from . import report
        report.model_report(args.report_dir, info)
    if args.json:
        _emit(info, True)
        return EXIT_OK
    print(f"N_A={model.config.n_a} N_B={model.config.n_b} checksum {info['checksum']}")
    for name, shape in info["shapes"].items():
        print(f"  {name:16s} {'x'.join(map(str, shape))}")
    for name, d in info["densities"].items():
        print(f"  density {name} {d:.4f}")
    print(f"mean density {info['mean_density']:.4f}")
    print(f"sample-rate weights {info['sample_rate_weights']}")
    for name, n in info["sample_rate_weight_items"].items():
        print(f"  {name:18s} {n}")
    print(f"analytic complexity {info['gflops']:.3f} GFLOPS")
    print(f"equivalent units {info['equivalent_units']:.2f} ({info['equivalent_units_note']})")
    return EXIT_OK


def cmd_make_test_model(args):
    try:
        config = nnet.get_config(args.config)
        if args.n_a is not None:
            config = dataclasses.replace(config, n_a=args.n_a)
        model = nnet.random_model(args.seed, config)
    except nnet.ModelError as exc:
        raise CliError("model", str(exc), EXIT_FORMAT)
    payload = modelio.model_bytes(model)
    _write("output", args.output, payload)
    print(f"{args.output}: {len(payload)} bytes, checksum "
          f"{modelio.checksum(payload[:-8]):016x}")
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point


def build_parser():
    p = argparse.ArgumentParser(prog="vocoder", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("features", help="OPNV dump -> FMTX feature matrix")
    f.add_argument("input")
    f.add_argument("output")
    f.add_argument("--json-summary", action="store_true")
    f.set_defaults(func=cmd_features)

    s = sub.add_parser("synth", help="feature matrix + model -> WAV")
    s.add_argument("features")
    s.add_argument("model")
    s.add_argument("output")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--noise-scale", type=float, default=0.0)
    s.add_argument("--report-dir")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_synth)

    b = sub.add_parser("bench", help="time synthesis on randomised features")
    b.add_argument("model")
    b.add_argument("--seconds", type=float, default=5.0)
    b.add_argument("--streams", type=int, default=1)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--report-dir")
    b.add_argument("--json", action="store_true")
    b.set_defaults(func=cmd_bench)

    i = sub.add_parser("model-info", help="shapes, densities, weight totals")
    i.add_argument("model")
    i.add_argument("--report-dir")
    i.add_argument("--json", action="store_true")
    i.set_defaults(func=cmd_model_info)

    m = sub.add_parser("make-test-model", help="write a deterministic random model")
    m.add_argument("output")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--config", default="reference", choices=sorted(nnet.CONFIGS))
    m.add_argument("--n-a", type=int, help="override the GRU_A width")
    m.set_defaults(func=cmd_make_test_model)
    return p


def main(argv=None):
    logging.basicConfig(level=os.environ.get("VOCODER_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_FORMAT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except CliError as exc:
        print(f"vocoder {exc}", file=sys.stderr)
        return exc.code
    except vocoder.SynthesisDivergenceError as exc:
        print(f"vocoder synth: {exc}", file=sys.stderr)
        return EXIT_FORMAT


if __name__ == "__main__":
    sys.exit(main())
