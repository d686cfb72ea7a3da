"""Decoder-side parameter ingestion and 38-dim conditioning features.

Frames arrive through the OPNV dump, a fixed-record little-endian file
written by an instrumented Opus decoder (one record per 10 ms frame):

    header:  b"OPNV"  u32 version=1  u32 frame_count
    record:  16 x f32 lpc_q | 5 x f32 ltp_gains | f32 pitch_period | 160 x i16 pcm
"""

import os
import struct
from dataclasses import dataclass

import numpy as np
import scipy.signal

from . import dsp

OPNV_MAGIC = b"OPNV"
OPNV_VERSION = 1
OPNV_HEADER = struct.Struct("<4sII")
OPNV_RECORD = np.dtype([
    ("lpc", "<f4", (dsp.LPC_ORDER,)),
    ("ltp", "<f4", (5,)),
    ("pitch", "<f4"),
    ("pcm", "<i2", (dsp.FRAME_SIZE,)),
])
assert OPNV_RECORD.itemsize == 408

N_FEATURES = 2 * dsp.N_BANDS + 2
MIN_PITCH = 16.0
MAX_PITCH = 512.0
PCM_SCALE = 32768.0


class FeatureFormatError(ValueError):
    """Malformed feature dump; ``offset`` is the byte position of the fault."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True, eq=False)
class FrameFeatures:
    lpc_q: np.ndarray
    ltp_gains: np.ndarray
    pitch_period: float
    decoded: np.ndarray  # int16 PCM, 160 samples

    def __post_init__(self):
        lpc = np.asarray(self.lpc_q, dtype=np.float32)
        ltp = np.asarray(self.ltp_gains, dtype=np.float32)
        pcm = np.asarray(self.decoded)
        if lpc.shape != (dsp.LPC_ORDER,):
            raise ValueError("lpc_q must hold 16 coefficients")
        if ltp.shape != (5,):
            raise ValueError("ltp_gains must hold 5 taps")
        if pcm.shape != (dsp.FRAME_SIZE,):
            raise ValueError("decoded must hold exactly 160 samples")
        if np.issubdtype(pcm.dtype, np.floating):
            if np.any(np.abs(pcm) > 1.0):
                raise ValueError("float PCM must lie in [-1, 1]")
            pcm = np.clip(np.round(pcm * PCM_SCALE), -32768, 32767)
        pcm = pcm.astype(np.int16)
        pitch = float(np.float32(np.clip(self.pitch_period, MIN_PITCH, MAX_PITCH)))
        if not (np.all(np.isfinite(lpc)) and np.all(np.isfinite(ltp)) and np.isfinite(pitch)):
            raise ValueError("frame parameters must be finite")
        object.__setattr__(self, "lpc_q", lpc)
        object.__setattr__(self, "ltp_gains", ltp)
        object.__setattr__(self, "pitch_period", pitch)
        object.__setattr__(self, "decoded", pcm)

    def decoded_float(self):
        return self.decoded.astype(np.float64) / PCM_SCALE


@dataclass(frozen=True)
class ConditioningVector:
    cepstrum_decoded: np.ndarray
    cepstrum_lpc: np.ndarray
    pitch_period_norm: float
    pitch_gain: float

    def flatten(self):
        return np.concatenate((self.cepstrum_decoded, self.cepstrum_lpc,
                               [self.pitch_period_norm, self.pitch_gain]))

    @classmethod
    def from_array(cls, values):
        v = np.asarray(values, dtype=np.float64)
        if v.shape != (N_FEATURES,):
            raise ValueError(f"conditioning vector must have {N_FEATURES} entries")
        n = dsp.N_BANDS
        return cls(v[:n].copy(), v[n:2 * n].copy(), float(v[2 * n]), float(v[2 * n + 1]))

    def __len__(self):
        return N_FEATURES


# --------------------------------------------------------------------------
# OPNV dump I/O


def _open_source(source):
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return fh.read()
    if isinstance(source, (bytes, bytearray, memoryview)):
        return bytes(source)
    return source.read()


def load_feature_dump(source):
    """Parse an OPNV dump from a path, bytes, or binary stream."""
    data = _open_source(source)
    if len(data) < OPNV_HEADER.size:
        raise FeatureFormatError("truncated OPNV header", len(data))
    magic, version, count = OPNV_HEADER.unpack_from(data, 0)
    if magic != OPNV_MAGIC:
        raise FeatureFormatError(f"bad magic {magic!r}, expected OPNV", 0)
    if version != OPNV_VERSION:
        raise FeatureFormatError(f"unsupported OPNV version {version}", 4)
    body = len(data) - OPNV_HEADER.size
    complete = body // OPNV_RECORD.itemsize
    if complete < count:
        offset = OPNV_HEADER.size + complete * OPNV_RECORD.itemsize
        raise FeatureFormatError(
            f"truncated record {complete} of {count}", offset)
    if body > count * OPNV_RECORD.itemsize:
        raise FeatureFormatError("trailing bytes after last record",
                                 OPNV_HEADER.size + count * OPNV_RECORD.itemsize)
    recs = np.frombuffer(data, dtype=OPNV_RECORD, count=count, offset=OPNV_HEADER.size)
    frames = []
    for i, rec in enumerate(recs):
        for field in ("lpc", "ltp", "pitch"):
            bad = ~np.isfinite(np.atleast_1d(rec[field]))
            if np.any(bad):
                pos = (OPNV_HEADER.size + i * OPNV_RECORD.itemsize
                       + OPNV_RECORD.fields[field][1] + 4 * int(np.argmax(bad)))
                raise FeatureFormatError(f"non-finite {field} in frame {i}", pos)
        frames.append(FrameFeatures(rec["lpc"].copy(), rec["ltp"].copy(),
                                    float(rec["pitch"]), rec["pcm"].copy()))
    return frames


def dump_bytes(frames):
    recs = np.zeros(len(frames), dtype=OPNV_RECORD)
    for i, fr in enumerate(frames):
        recs[i]["lpc"] = fr.lpc_q
        recs[i]["ltp"] = fr.ltp_gains
        recs[i]["pitch"] = fr.pitch_period
        recs[i]["pcm"] = fr.decoded
    return OPNV_HEADER.pack(OPNV_MAGIC, OPNV_VERSION, len(frames)) + recs.tobytes()


def write_feature_dump(frames, sink):
    """Serialize frames to a path or writable binary stream; returns bytes written."""
    payload = dump_bytes(frames)
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "wb") as fh:
            fh.write(payload)
    else:
        sink.write(payload)
    return len(payload)


# --------------------------------------------------------------------------
# conditioning


def pitch_gain(ltp_gains):
    return float(np.clip(np.sum(np.asarray(ltp_gains, dtype=np.float64)), 0.0, 1.0))


def normalize_pitch(pitch_period):
    return float(np.clip(pitch_period, MIN_PITCH, MAX_PITCH)) / MAX_PITCH - 0.5


def conditioning_from_frame(frame, window_state):
    """Both cepstra plus pitch features for one 10 ms frame.

    ``window_state`` holds the previous 160 decoded samples (float, [-1, 1]),
    so the spectral analysis window straddles two frames with 50% overlap.
    Returns ``(ConditioningVector, new_window_state)``.
    """
    prev = np.asarray(window_state, dtype=np.float64)
    if prev.shape != (dsp.FRAME_SIZE,):
        raise ValueError("window_state must hold 160 samples")
    cur = frame.decoded_float()
    block = np.concatenate((prev, cur))
    cep_dec = dsp.cepstrum_from_bands(dsp.band_energies(dsp.power_spectrum(block)))
    resp = dsp.lpc_frequency_response(frame.lpc_q.astype(np.float64))
    cep_lpc = dsp.cepstrum_from_bands(dsp.band_energies(resp))
    cond = ConditioningVector(cep_dec, cep_lpc, normalize_pitch(frame.pitch_period),
                              pitch_gain(frame.ltp_gains))
    return cond, cur


def conditioning_sequence(frames):
    """Run :func:`conditioning_from_frame` over a whole dump from a silent start."""
    state = np.zeros(dsp.FRAME_SIZE)
    out = []
    for fr in frames:
        cond, state = conditioning_from_frame(fr, state)
        out.append(cond)
    return out


def band_psd_from_cepstrum(cepstrum):
    """Per-bin power on the 161-bin grid, log-linear between band centres."""
    bands = dsp.bands_from_cepstrum(cepstrum)
    density = bands / dsp.BAND_BIN_COUNTS
    log_psd = np.interp(dsp.BIN_FREQS_HZ, dsp.BAND_CENTERS_HZ, np.log10(density))
    return 10.0 ** log_psd


def lpc_from_cepstrum(cepstrum):
    psd = band_psd_from_cepstrum(cepstrum)
    autocorr = np.fft.irfft(psd, n=dsp.WINDOW_SIZE)[:dsp.LPC_ORDER + 1]
    return dsp.levinson_durbin(autocorr)


def lpc_from_conditioning(cond):
    """LPC derived from the decoded-audio cepstrum, not the bit-stream LPC."""
    return lpc_from_cepstrum(cond.cepstrum_decoded)


# --------------------------------------------------------------------------
# augmentation


def augment_level(signal, gain_db):
    if not -40.0 <= gain_db <= 0.0:
        raise ValueError(f"gain_db must lie in [-40, 0], got {gain_db!r}")
    x = dsp._as_signal(signal)
    return dsp.AudioBuffer(np.clip(x * 10.0 ** (gain_db / 20.0), -1.0, 1.0))


def augment_tilt(signal, r1, r2):
    """Pole-zero tilt ``(1 + r1 z^-1) / (1 + r2 z^-1)`` from zero state."""
    if abs(r1) >= 1.0 or abs(r2) >= 1.0:
        raise ValueError("tilt coefficients must satisfy |r| < 1")
    x = dsp._as_signal(signal)
    return dsp.AudioBuffer(scipy.signal.lfilter([1.0, r1], [1.0, r2], x))


def random_tilt(rng, limit=0.4):
    r1, r2 = rng.uniform(-limit, limit, size=2)
    return float(r1), float(r2)
