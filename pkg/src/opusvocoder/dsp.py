"""Signal-processing primitives for 16 kHz wideband speech.

Everything here is a pure function of its inputs. Streaming filters take
and return their one-sample memory explicitly.
"""

import math

import numpy as np
import scipy.fft
import scipy.signal

SAMPLE_RATE = 16000
LPC_ORDER = 16
FRAME_SIZE = 160
WINDOW_SIZE = 320
N_BINS = WINDOW_SIZE // 2 + 1
N_BANDS = 18
PREEMPHASIS = 0.85

MU = 255
MULAW_CENTER = 128
_MULAW_SCALE = 127.0
_LOG_1P_MU = math.log(1.0 + MU)

BAND_EDGES_HZ = np.array([0, 200, 400, 600, 800, 1000, 1200, 1400, 1600,
                          2000, 2400, 2800, 3200, 4000, 4800, 5600, 6400,
                          7200, 8000], dtype=np.float64)
BIN_FREQS_HZ = np.arange(N_BINS) * (SAMPLE_RATE / WINDOW_SIZE)

LOG_FLOOR = 1e-10
LAG_WINDOW_HZ = 60.0
WHITE_NOISE_FLOOR = 1e-4
MAX_RESPONSE = 1e12


class DegenerateInputError(ValueError):
    """Raised when an autocorrelation sequence cannot be modelled."""


class NumericalInstabilityError(ArithmeticError):
    pass


class AudioBuffer:
    """Mono float signal at the fixed 16 kHz rate."""

    sample_rate = SAMPLE_RATE

    def __init__(self, samples):
        samples = np.asarray(samples, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(samples)):
            raise ValueError("audio samples must be finite")
        self.samples = samples

    def __len__(self):
        return len(self.samples)

    def __array__(self, dtype=None, copy=None):
        return self.samples if dtype is None else self.samples.astype(dtype)

    @property
    def duration(self):
        return len(self.samples) / SAMPLE_RATE

    def __repr__(self):
        return f"AudioBuffer({len(self.samples)} samples, {self.duration:.3f} s)"


def _as_signal(signal):
    if isinstance(signal, AudioBuffer):
        return signal.samples
    return np.asarray(signal, dtype=np.float64)


def _check_alpha(alpha):
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha!r}")


# --------------------------------------------------------------------------
# mu-law


def mulaw_encode(x):
    """Map amplitudes to 8-bit mu-law codes (128 is zero).

    Codes are clamped to [0, 255] after rounding, so the reachable negative
    extreme ``mulaw_decode(0)`` (slightly beyond -1) still encodes to 0.
    Accepts scalars or arrays; returns the same shape as ``int64``.
    """
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("mu-law input must be finite")
    mag = np.log1p(MU * np.abs(x)) / _LOG_1P_MU
    code = np.floor(MULAW_CENTER + _MULAW_SCALE * np.sign(x) * mag + 0.5)
    code = np.clip(code, 0, 255).astype(np.int64)
    return code[()] if code.ndim == 0 else code


def mulaw_decode(code):
    code = np.asarray(code)
    if np.any((code < 0) | (code > 255)):
        raise ValueError("mu-law codes must lie in [0, 255]")
    k = code.astype(np.float64) - MULAW_CENTER
    x = np.sign(k) * np.expm1(np.abs(k) / _MULAW_SCALE * _LOG_1P_MU) / MU
    return x[()] if x.ndim == 0 else x


# --------------------------------------------------------------------------
# emphasis filters


def preemphasis(signal, alpha=PREEMPHASIS, state=0.0):
    """First-order FIR ``1 - alpha z^-1``.

    ``state`` is the last input sample of the previous block; the updated
    state is returned alongside the filtered block.
    """
    _check_alpha(alpha)
    x = _as_signal(signal)
    if len(x) == 0:
        return AudioBuffer(x), state
    prev = np.concatenate(([state], x[:-1]))
    return AudioBuffer(x - alpha * prev), float(x[-1])


def deemphasis(signal, alpha=PREEMPHASIS, state=0.0):
    """Inverse of :func:`preemphasis`; ``state`` is the previous output."""
    _check_alpha(alpha)
    x = _as_signal(signal)
    if len(x) == 0:
        return AudioBuffer(x), state
    out, _ = scipy.signal.lfilter([1.0], [1.0, -alpha], x, zi=[alpha * state])
    return AudioBuffer(out), float(out[-1])


# --------------------------------------------------------------------------
# linear prediction


def lpc_predict(history, lpc):
    """Prediction ``sum_i a_i s_{t-i}``; ``history[0]`` is ``s_{t-1}``."""
    history = np.asarray(history, dtype=np.float64)
    lpc = np.asarray(lpc, dtype=np.float64)
    if history.shape != (LPC_ORDER,) or lpc.shape != (LPC_ORDER,):
        raise ValueError("lpc_predict expects 16 history samples and 16 coefficients")
    return float(np.dot(lpc, history))


def lag_window(order=LPC_ORDER):
    k = np.arange(order + 1)
    return np.exp(-0.5 * (2.0 * np.pi * LAG_WINDOW_HZ * k / SAMPLE_RATE) ** 2)


def condition_autocorr(autocorr):
    """Apply the 60 Hz Gaussian lag window and the -40 dB white-noise floor."""
    r = np.asarray(autocorr, dtype=np.float64) * lag_window(len(autocorr) - 1)
    r[0] *= 1.0 + WHITE_NOISE_FLOOR
    return r


def levinson_recursion(autocorr):
    """Plain Levinson-Durbin recursion.

    Returns ``(a, k, err)``: prediction coefficients in the ``y = sum a_i
    s_{t-i}`` convention, reflection coefficients, and the residual energy
    after each order (``err[0] == r0``).
    """
    r = np.asarray(autocorr, dtype=np.float64)
    if r.ndim != 1 or len(r) < 2:
        raise ValueError("autocorrelation needs at least two lags")
    if not np.all(np.isfinite(r)):
        raise DegenerateInputError("autocorrelation must be finite")
    if r[0] <= 0.0:
        raise DegenerateInputError(f"r0 must be positive, got {r[0]!r}")
    order = len(r) - 1
    a = np.zeros(order)
    k = np.zeros(order)
    err = np.zeros(order + 1)
    err[0] = r[0]
    for i in range(order):
        acc = r[i + 1] - np.dot(a[:i], r[i:0:-1])
        ki = acc / err[i]
        a[:i] = a[:i] - ki * a[:i][::-1]
        a[i] = ki
        k[i] = ki
        err[i + 1] = err[i] * (1.0 - ki * ki)
    return a, k, err


def levinson_durbin(autocorr, condition=True):
    """16th-order LPC from 17 autocorrelation lags.

    With ``condition`` (the default) the lags are lag-windowed and floored
    first, which keeps every reflection coefficient strictly inside (-1, 1).
    """
    r = np.asarray(autocorr, dtype=np.float64)
    if r.shape != (LPC_ORDER + 1,):
        raise ValueError(f"expected {LPC_ORDER + 1} autocorrelation lags, got {r.shape}")
    if not np.all(np.isfinite(r)):
        raise DegenerateInputError("autocorrelation must be finite")
    if r[0] <= 0.0:
        raise DegenerateInputError(f"r0 must be positive, got {r[0]!r}")
    if condition:
        r = condition_autocorr(r)
    a, _, _ = levinson_recursion(r)
    return a


def lpc_to_reflection(lpc):
    """Step-down recursion; all |k| < 1 iff ``1/A(z)`` is stable."""
    a = np.array(lpc, dtype=np.float64)
    order = len(a)
    k = np.zeros(order)
    for i in range(order - 1, -1, -1):
        ki = a[i]
        k[i] = ki
        if abs(ki) >= 1.0:
            break
        a = (a[:i] + ki * a[:i][::-1]) / (1.0 - ki * ki)
    return k


def is_minimum_phase(lpc):
    return bool(np.all(np.abs(lpc_to_reflection(lpc)) < 1.0))


# --------------------------------------------------------------------------
# spectra and cepstra


def _band_index():
    idx = np.searchsorted(BAND_EDGES_HZ, BIN_FREQS_HZ, side="right") - 1
    return np.minimum(idx, N_BANDS - 1)


BIN_TO_BAND = _band_index()
BAND_BIN_COUNTS = np.bincount(BIN_TO_BAND, minlength=N_BANDS)
BAND_CENTERS_HZ = 0.5 * (BAND_EDGES_HZ[:-1] + BAND_EDGES_HZ[1:])


def band_energies(power_spectrum):
    """Sum 161 power bins into the 18 bands; each bin lands in exactly one."""
    p = np.asarray(power_spectrum, dtype=np.float64)
    if p.shape != (N_BINS,):
        raise ValueError(f"expected {N_BINS} bins, got {p.shape}")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError("power spectrum bins must be finite and non-negative")
    return np.bincount(BIN_TO_BAND, weights=p, minlength=N_BANDS)


def cepstrum_from_bands(bands):
    bands = np.asarray(bands, dtype=np.float64)
    if bands.shape != (N_BANDS,):
        raise ValueError(f"expected {N_BANDS} bands, got {bands.shape}")
    if np.any(bands < 0):
        raise ValueError("band energies must be non-negative")
    return scipy.fft.dct(np.log10(bands + LOG_FLOOR), type=2, norm="ortho")


def bands_from_cepstrum(cepstrum):
    """Inverse of :func:`cepstrum_from_bands`; the result includes the floor."""
    c = np.asarray(cepstrum, dtype=np.float64)
    if c.shape != (N_BANDS,):
        raise ValueError(f"expected {N_BANDS} cepstral coefficients, got {c.shape}")
    return 10.0 ** scipy.fft.idct(c, type=2, norm="ortho")


def hann_window(n=WINDOW_SIZE):
    # periodic form, so 50% overlapped windows sum to one
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def power_spectrum(frame):
    """|FFT|^2 of a Hann-windowed 320-sample block."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != (WINDOW_SIZE,):
        raise ValueError(f"expected {WINDOW_SIZE} samples, got {frame.shape}")
    spec = np.fft.rfft(frame * hann_window())
    return spec.real ** 2 + spec.imag ** 2


def lpc_frequency_response(lpc):
    """Power response ``1/|A(e^jw)|^2`` on the 161-bin grid."""
    lpc = np.asarray(lpc, dtype=np.float64)
    if lpc.shape != (LPC_ORDER,):
        raise ValueError("expected 16 LPC coefficients")
    poly = np.zeros(WINDOW_SIZE)
    poly[0] = 1.0
    poly[1:LPC_ORDER + 1] = -lpc
    spec = np.fft.rfft(poly)
    mag2 = spec.real ** 2 + spec.imag ** 2
    with np.errstate(divide="ignore"):
        resp = 1.0 / mag2
    if not np.all(np.isfinite(resp)) or np.max(resp) > MAX_RESPONSE:
        raise NumericalInstabilityError("LPC synthesis filter response exceeds 1e12")
    return resp
