"""Speech-like test material: a source-filter signal and matching dumps."""

import numpy as np
import scipy.signal

from . import dsp
from .features import FrameFeatures, MAX_PITCH, MIN_PITCH

_FORMANTS = [(500.0, 1500.0, 2500.0), (700.0, 1200.0, 2600.0),
             (300.0, 2200.0, 3000.0), (400.0, 800.0, 2400.0)]


def _resonator(freq, bw):
    r = np.exp(-np.pi * bw / dsp.SAMPLE_RATE)
    theta = 2.0 * np.pi * freq / dsp.SAMPLE_RATE
    return np.array([1.0, -2.0 * r * np.cos(theta), r * r])


def speech_like(seconds, seed=0, peak=0.5):
    """Glottal-pulse / noise excitation through drifting three-formant filters.

    Alternates voiced and unvoiced 200 ms segments with a smooth envelope;
    pitch glides between 100 and 220 Hz.
    """
    rng = np.random.default_rng(seed)
    n = int(round(seconds * dsp.SAMPLE_RATE))
    out = np.zeros(n)
    seg = dsp.SAMPLE_RATE // 5
    zi = None
    phase = 0.0
    for start in range(0, n, seg):
        stop = min(start + seg, n)
        m = stop - start
        voiced = rng.random() < 0.7
        if voiced:
            f0 = np.linspace(*rng.uniform(100.0, 220.0, size=2), m)
            ph = phase + np.cumsum(f0 / dsp.SAMPLE_RATE)
            src = (np.diff(np.floor(np.concatenate(([phase], ph)))) > 0).astype(float)
            src = scipy.signal.lfilter([1.0], [1.0, -0.9], src) + 0.02 * rng.standard_normal(m)
            phase = ph[-1] % 1.0
        else:
            src = 0.3 * rng.standard_normal(m)
        a = np.array([1.0])
        for freq, bw in zip(_FORMANTS[rng.integers(len(_FORMANTS))], (80.0, 120.0, 160.0)):
            a = np.convolve(a, _resonator(freq * rng.uniform(0.9, 1.1), bw))
        if zi is None:
            zi = np.zeros(len(a) - 1)
        seg_out, zi = scipy.signal.lfilter([1.0], a, src, zi=zi)
        env = np.sin(np.pi * (np.arange(m) + 0.5) / m) ** 0.5
        out[start:stop] = seg_out * env
    return out * (peak / max(np.max(np.abs(out)), 1e-12))


def frame_lpc(block, condition=True):
    """LPC of one analysis block via Hann-windowed autocorrelation."""
    w = np.asarray(block, dtype=np.float64) * dsp.hann_window(len(block))
    r = np.correlate(w, w, mode="full")[len(w) - 1:len(w) + dsp.LPC_ORDER]
    if r[0] <= 0:
        return np.zeros(dsp.LPC_ORDER)
    return dsp.levinson_durbin(r, condition=condition)


def block_lpc_sequence(signal):
    """Per-frame LPC over 320-sample blocks ending at each 160-sample frame."""
    x = np.concatenate((np.zeros(dsp.FRAME_SIZE), np.asarray(signal, dtype=np.float64)))
    n = len(signal) // dsp.FRAME_SIZE
    return [frame_lpc(x[i * dsp.FRAME_SIZE:i * dsp.FRAME_SIZE + dsp.WINDOW_SIZE])
            for i in range(n)]


def _pitch_and_gains(block):
    lo, hi = 32, 320
    x = block - np.mean(block)
    r = np.correlate(x, x, mode="full")[len(x) - 1:]
    if r[0] <= 0:
        return MIN_PITCH * 4, np.zeros(5)
    lag = lo + int(np.argmax(r[lo:hi]))
    taps = np.array([r[min(lag + k, len(r) - 1)] for k in (-2, -1, 0, 1, 2)]) / r[0]
    gains = np.clip(taps, 0.0, None) * np.array([0.1, 0.2, 0.4, 0.2, 0.1])
    return float(np.clip(lag, MIN_PITCH, MAX_PITCH)), gains


def frames_from_signal(signal):
    """Fake decoder dump for a 16 kHz signal: one FrameFeatures per 10 ms."""
    signal = np.clip(np.asarray(signal, dtype=np.float64), -1.0, 1.0)
    lpcs = block_lpc_sequence(signal)
    padded = np.concatenate((np.zeros(dsp.FRAME_SIZE), signal))
    frames = []
    for i, lpc in enumerate(lpcs):
        block = padded[i * dsp.FRAME_SIZE:i * dsp.FRAME_SIZE + dsp.WINDOW_SIZE]
        pitch, gains = _pitch_and_gains(block)
        cur = signal[i * dsp.FRAME_SIZE:(i + 1) * dsp.FRAME_SIZE]
        frames.append(FrameFeatures(lpc, gains, pitch, cur))
    return frames


def random_frames(n, seed=0):
    """``n`` frames of speech-like material."""
    return frames_from_signal(speech_like(n * dsp.FRAME_SIZE / dsp.SAMPLE_RATE, seed))
