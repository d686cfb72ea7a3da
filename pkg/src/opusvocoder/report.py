"""Figures and CSV tables for the ``--report-dir`` option of the CLI."""

import csv
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import dsp  # noqa: E402


def _ensure(directory):
    os.makedirs(directory, exist_ok=True)
    return directory


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def synthesis_report(directory, audio, conditioning):
    """Waveform, spectrogram and per-frame table of one synthesised utterance."""
    _ensure(directory)
    x = np.asarray(audio, dtype=np.float64)
    n_frames = len(x) // dsp.FRAME_SIZE
    frames = x[:n_frames * dsp.FRAME_SIZE].reshape(n_frames, dsp.FRAME_SIZE)
    rms = np.sqrt(np.mean(frames ** 2, axis=1)) if n_frames else np.zeros(0)
    cond = np.asarray(conditioning, dtype=np.float64).reshape(-1, 38)
    rows = [(i, f"{rms[i]:.6g}", f"{cond[i, 36]:.6g}", f"{cond[i, 37]:.6g}")
            for i in range(min(n_frames, len(cond)))]
    paths = [write_csv(os.path.join(directory, "frames.csv"),
                       ["frame", "rms", "pitch_norm", "pitch_gain"], rows)]

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 5), sharex=True)
    t = np.arange(len(x)) / dsp.SAMPLE_RATE
    ax1.plot(t, x, lw=0.5, color="k")
    ax1.set_ylabel("amplitude")
    ax1.set_ylim(-1.05, 1.05)
    if len(x) >= dsp.WINDOW_SIZE:
        ax2.specgram(x, NFFT=dsp.WINDOW_SIZE, Fs=dsp.SAMPLE_RATE,
                     noverlap=dsp.WINDOW_SIZE - dsp.FRAME_SIZE, cmap="magma")
    ax2.set_xlabel("time (s)")
    ax2.set_ylabel("frequency (Hz)")
    paths.append(_save(fig, os.path.join(directory, "synthesis.png")))
    return paths


def bench_report(directory, result):
    """FLOP breakdown table and bar chart from a ``bench`` result dict."""
    _ensure(directory)
    per_sample = result["flops_per_sample"]
    per_frame = result["flops_per_frame"]
    rows = [("sample", k, v, v * dsp.SAMPLE_RATE) for k, v in per_sample.items()]
    rows += [("frame", k, v, v * 100) for k, v in per_frame.items()]
    paths = [write_csv(os.path.join(directory, "flops.csv"),
                       ["rate", "item", "flops_per_eval", "flops_per_second"], rows)]

    fig, ax = plt.subplots(figsize=(7, 4))
    labels = [r[1] for r in rows]
    vals = np.array([r[3] for r in rows]) / 1e9
    colors = ["tab:blue" if r[0] == "sample" else "tab:orange" for r in rows]
    ax.barh(labels, vals, color=colors)
    ax.set_xlabel("GFLOP/s")
    ax.set_title(f"analytic total {result['gflops_analytic']:.2f} GFLOPS")
    ax.invert_yaxis()
    paths.append(_save(fig, os.path.join(directory, "flops.png")))

    timing = [(i, f"{w:.6f}") for i, w in enumerate(result.get("stream_wall_seconds", []))]
    paths.append(write_csv(os.path.join(directory, "streams.csv"),
                           ["stream", "wall_seconds"], timing))
    return paths


def model_report(directory, info):
    """Per-matrix density chart for ``model-info``."""
    _ensure(directory)
    dens = info["densities"]
    paths = [write_csv(os.path.join(directory, "densities.csv"), ["matrix", "density"],
                       [(k, f"{v:.6f}") for k, v in dens.items()])]
    fig, ax = plt.subplots(figsize=(4, 3))
    ax.bar(list(dens), list(dens.values()), color="tab:green")
    ax.axhline(info["mean_density"], color="k", ls="--", lw=1)
    ax.set_ylabel("density")
    paths.append(_save(fig, os.path.join(directory, "densities.png")))
    return paths
