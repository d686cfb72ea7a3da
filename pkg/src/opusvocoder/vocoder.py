"""Autoregressive synthesis loop.

Prediction and excitation arithmetic happen on linear floats in the
pre-emphasised domain; mu-law indices only address the input tables and
the output classes. De-emphasis is applied to each finished frame.
"""

from dataclasses import dataclass

import numpy as np

from . import dsp, kernels
from .features import ConditioningVector, N_FEATURES
from .nnet import FrameRateState, frame_rate_network

FRAME_SIZE = dsp.FRAME_SIZE


class SynthesisDivergenceError(ArithmeticError):
    def __init__(self, sample_index):
        super().__init__(f"synthesis diverged at sample {sample_index}")
        self.sample_index = sample_index


@dataclass
class SynthState:
    h_a: np.ndarray
    h_b: np.ndarray
    history: np.ndarray          # 16 pre-emphasised samples, newest first
    e_prev: np.ndarray           # length-1 int array (mu-law class)
    deemph_state: float
    rng: np.random.Generator
    frame_state: FrameRateState
    contrib: object = None
    f: np.ndarray = None
    samples_done: int = 0

    @classmethod
    def initial(cls, model, seed=0):
        c = model.config
        return cls(
            h_a=np.zeros(c.n_a), h_b=np.zeros(c.n_b), history=np.zeros(dsp.LPC_ORDER),
            e_prev=np.array([dsp.MULAW_CENTER], dtype=np.int64), deemph_state=0.0,
            rng=np.random.default_rng(seed), frame_state=FrameRateState.zeros(c),
        )

    def copy(self):
        rng = np.random.default_rng()
        rng.bit_generator.state = self.rng.bit_generator.state
        return SynthState(self.h_a.copy(), self.h_b.copy(), self.history.copy(),
                          self.e_prev.copy(), self.deemph_state, rng,
                          self.frame_state.copy(), self.contrib,
                          None if self.f is None else self.f.copy(), self.samples_done)


def _cond_array(c):
    if isinstance(c, ConditioningVector):
        return c.flatten()
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (N_FEATURES,):
        raise ValueError(f"conditioning vector must have {N_FEATURES} entries")
    return c


def _lpc_array(lpc):
    lpc = np.ascontiguousarray(lpc, dtype=np.float64)
    if lpc.shape != (dsp.LPC_ORDER,):
        raise ValueError("expected 16 LPC coefficients")
    return lpc


def _run(state, cond, lpc, model, reference=None, noise_scale=0.0, debug=False):
    cond = _cond_array(cond)
    lpc = _lpc_array(lpc)
    contrib, f, state.frame_state = frame_rate_network(cond, state.frame_state, model)
    state.contrib, state.f = contrib, f
    cfg, rt = model.config, model.runtime
    g_a = np.ascontiguousarray(contrib.g_a, dtype=np.float64)
    g_b = np.ascontiguousarray(contrib.g_b, dtype=np.float64)
    weights = (rt["tab_s"], rt["tab_y"], rt["tab_e"], rt["ptr"], rt["bcol"], rt["bval"],
               rt["wb_in_t"], rt["wb_rec_t"], rt["w1_t"], rt["w2_t"], rt["a1"], rt["a2"])
    out_s = np.empty(FRAME_SIZE)
    out_y = np.empty(FRAME_SIZE)
    out_e = np.empty(FRAME_SIZE, dtype=np.int64)
    ce = np.zeros(1)
    if reference is not None:
        ref = np.ascontiguousarray(reference, dtype=np.float64)
        if ref.shape != (FRAME_SIZE,):
            raise ValueError("teacher forcing needs 160 reference samples")
        status = kernels.teacher_frame(lpc, ref, g_a, g_b, *weights, state.h_a, state.h_b,
                                       state.history, state.e_prev, out_s, out_y, out_e, ce)
    else:
        pitch_gain = float(np.clip(cond[-1], 0.0, 1.0))
        beta = 1.0 + cfg.beta_slope * pitch_gain
        uniforms = state.rng.random(FRAME_SIZE)
        if noise_scale > 0.0:
            noise = state.rng.laplace(0.0, noise_scale, FRAME_SIZE)
        else:
            noise = np.zeros(FRAME_SIZE)
        status = kernels.sample_frame(lpc, uniforms, noise, noise_scale > 0.0, beta,
                                      cfg.threshold, g_a, g_b, *weights, state.h_a, state.h_b,
                                      state.history, state.e_prev, out_s, out_y, out_e)
    if status >= 0:
        raise SynthesisDivergenceError(state.samples_done + status)
    if debug:
        check_excitation_identity(out_s, out_y, out_e)
    state.samples_done += FRAME_SIZE
    return out_s, out_y, out_e, ce[0] / FRAME_SIZE


def check_excitation_identity(s, y, e_idx):
    """``s - y`` must decode from exactly the excitation class that produced it."""
    resid = np.asarray(s) - np.asarray(y)
    if not np.array_equal(dsp.mulaw_encode(resid), np.asarray(e_idx)):
        raise AssertionError("excitation identity s - y = e violated")
    err = np.max(np.abs(resid - dsp.mulaw_decode(e_idx)), initial=0.0)
    if err > 1e-12 * max(1.0, np.max(np.abs(y), initial=0.0)):
        raise AssertionError(f"excitation residual off by {err}")


def synth_frame(state, cond, lpc, model, noise_scale=0.0, debug=False):
    """Generate 160 output samples; ``state`` is advanced in place and returned."""
    out_s, _, _, _ = _run(state, cond, lpc, model, noise_scale=noise_scale, debug=debug)
    out, state.deemph_state = dsp.deemphasis(out_s, dsp.PREEMPHASIS, state.deemph_state)
    return np.clip(out.samples, -1.0, 1.0), state


def teacher_forced_frame(state, cond, lpc, model, reference, debug=False):
    """Drive the network with ground-truth pre-emphasised samples.

    Returns the reconstruction ``y_t + decode(e_t)`` in the pre-emphasised
    domain, the mean cross-entropy (nats) of the true excitation classes,
    and the advanced state.
    """
    out_s, _, _, ce = _run(state, cond, lpc, model, reference=reference, debug=debug)
    _, state.deemph_state = dsp.deemphasis(out_s, dsp.PREEMPHASIS, state.deemph_state)
    return out_s, float(ce), state


def inject_excitation_noise(e_index, scale, rng):
    """Offset a class by a rounded Laplace(0, scale) draw, clamped to [0, 255]."""
    if scale < 0:
        raise ValueError("noise scale must be non-negative")
    if scale == 0:
        return int(e_index), rng
    offset = int(np.rint(rng.laplace(0.0, scale)))
    return min(max(int(e_index) + offset, 0), 255), rng


def synthesize(features, model, seed=0, noise_scale=0.0, state=None):
    """Synthesise a whole utterance from ``(conditioning, lpc)`` pairs.

    A fresh state is created unless one is passed in, which lets callers
    stream an utterance in pieces.
    """
    if state is None:
        state = SynthState.initial(model, seed)
    chunks = []
    for cond, lpc in features:
        out, state = synth_frame(state, cond, lpc, model, noise_scale=noise_scale)
        chunks.append(out)
    samples = np.concatenate(chunks) if chunks else np.zeros(0)
    return dsp.AudioBuffer(samples)


def split_feature_matrix(matrix):
    """Rows of ``[38 conditioning | 16 lpc]`` into synthesis pairs."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != N_FEATURES + dsp.LPC_ORDER:
        raise ValueError(f"feature matrix must have {N_FEATURES + dsp.LPC_ORDER} columns")
    return [(row[:N_FEATURES], row[N_FEATURES:]) for row in matrix]
