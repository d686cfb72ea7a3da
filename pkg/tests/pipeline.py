"""Whole-utterance drivers shared by the vocoder and acceptance tests."""

import numpy as np

from opusvocoder import dsp, features, synthetic, vocoder


def utterance_features(signal):
    """``(conditioning, lpc)`` pairs for a 16 kHz signal via a fake decoder dump."""
    conds = features.conditioning_sequence(synthetic.frames_from_signal(signal))
    return [(c, features.lpc_from_conditioning(c)) for c in conds]


def teacher_forced_utterance(model, signal, debug=False):
    """Returns (reconstruction, pre-emphasised reference, per-frame cross-entropy)."""
    pairs = utterance_features(signal)
    ref, _ = dsp.preemphasis(np.clip(signal, -1.0, 1.0))
    ref = ref.samples
    state = vocoder.SynthState.initial(model)
    recon, ces = [], []
    for j, (cond, lpc) in enumerate(pairs):
        chunk = ref[j * dsp.FRAME_SIZE:(j + 1) * dsp.FRAME_SIZE]
        out, ce, state = vocoder.teacher_forced_frame(state, cond, lpc, model, chunk, debug=debug)
        recon.append(out)
        ces.append(ce)
    n = len(pairs) * dsp.FRAME_SIZE
    return np.concatenate(recon), ref[:n], np.array(ces)
