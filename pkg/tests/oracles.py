"""Slow, literal reference implementations used as test oracles.

Nothing here touches the compiled kernels: loops and dense matrices only,
written straight from the model equations.
"""

import math

import numpy as np

MU = 255.0


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def mulaw_encode(x):
    mag = math.log(1.0 + MU * abs(x)) / math.log(1.0 + MU)
    code = math.floor(128 + 127 * math.copysign(mag, x) + 0.5)
    return min(max(code, 0), 255)


def mulaw_decode(code):
    k = code - 128
    mag = ((1.0 + MU) ** (abs(k) / 127.0) - 1.0) / MU
    return math.copysign(mag, k) if k else 0.0


def lpc_predict(history, a):
    y = 0.0
    for i in range(16):
        y += a[i] * history[i]
    return y


def polynomial_response(a, n_fft=320):
    """1/|A(e^jw)|^2 with A(z) = 1 - sum a_i z^-i, bin by bin."""
    out = []
    for k in range(n_fft // 2 + 1):
        w = 2.0 * math.pi * k / n_fft
        z = 1.0 + 0j
        for i, ai in enumerate(a, start=1):
            z -= ai * complex(math.cos(w * i), -math.sin(w * i))
        out.append(1.0 / abs(z) ** 2)
    return np.array(out)


def frame_rate_network(raw, x_hist):
    """``x_hist`` is the list of conditioning vectors so far, newest last.

    Convolutions are evaluated tap by tap from the (out, in, 3) kernels,
    with zero frames before the start.
    """
    fd = raw["conv1_b"].shape[0]
    xs = [np.zeros_like(x_hist[0])] * 2 + list(x_hist)
    c1 = []
    for t in range(2, len(xs)):
        acc = raw["conv1_b"].copy()
        for tap in range(3):
            acc += raw["conv1_k"][:, :, tap] @ xs[t - 2 + tap]
        c1.append(np.tanh(acc))
    c1 = [np.zeros(fd)] * 2 + c1
    acc = raw["conv2_b"].copy()
    t = len(c1) - 1
    for tap in range(3):
        acc += raw["conv2_k"][:, :, tap] @ c1[t - 2 + tap]
    c2 = np.tanh(acc)
    d1 = np.tanh(raw["dense1_w"] @ c2 + raw["dense1_b"])
    return np.tanh(raw["dense2_w"] @ d1 + raw["dense2_b"])


def gru_a(raw, h, s_idx, y_idx, e_idx, f):
    """GRU_A with explicit embeddings, dense recurrent matrices and frame projection."""
    n = len(h)
    inp = np.zeros(3 * n)
    for key, idx in (("s", s_idx), ("y", y_idx), ("e", e_idx)):
        inp += raw[f"input_{key}"] @ raw[f"embed_{key}"][idx]
    g = raw["gru_a_frame_w"] @ f + raw["gru_a_bias"]
    u = sigmoid(raw["w_u"] @ h + inp[:n] + g[:n])
    r = sigmoid(raw["w_r"] @ h + inp[n:2 * n] + g[n:2 * n])
    cand = np.tanh(r * (raw["w_h"] @ h) + inp[2 * n:] + g[2 * n:])
    return u * h + (1.0 - u) * cand


def gru_b(raw, h, h_a, f):
    """GRU_B fed with the concatenation [h_a, f]."""
    n = len(h)
    w_in = np.hstack((raw["gru_b_in_w"], raw["gru_b_frame_w"]))
    x = w_in @ np.concatenate((h_a, f)) + raw["gru_b_bias"]
    rec = raw["gru_b_rec_w"] @ h
    u = sigmoid(x[:n] + rec[:n])
    r = sigmoid(x[n:2 * n] + rec[n:2 * n])
    cand = np.tanh(x[2 * n:] + r * rec[2 * n:])
    return u * h + (1.0 - u) * cand


def dual_fc(x, w1, w2, a1, a2):
    w1, w2 = np.asarray(w1, dtype=np.float64), np.asarray(w2, dtype=np.float64)
    return a1 * np.tanh(w1 @ x) + a2 * np.tanh(w2 @ x)


def log_softmax(z):
    z = np.asarray(z, dtype=np.float64)
    m = np.max(z)
    return z - m - math.log(np.sum(np.exp(z - m)))


def teacher_forced(raw, conds, lpcs, reference):
    """Whole teacher-forced loop: reconstruction and mean cross-entropy per frame."""
    na, nb = raw["w_u"].shape[0], raw["gru_b_rec_w"].shape[1]
    h_a, h_b = np.zeros(na), np.zeros(nb)
    hist = np.zeros(16)
    e_prev = 128
    recon, ces = [], []
    for j, (c, a) in enumerate(zip(conds, lpcs)):
        f = frame_rate_network(raw, conds[:j + 1])
        ce = 0.0
        for t in range(160):
            truth = reference[160 * j + t]
            y = lpc_predict(hist, a)
            h_a = gru_a(raw, h_a, mulaw_encode(hist[0]), mulaw_encode(min(max(y, -2.0), 2.0)),
                        e_prev, f)
            h_b = gru_b(raw, h_b, h_a, f)
            logits = dual_fc(h_b, raw["dual_w1"], raw["dual_w2"], raw["dual_a1"], raw["dual_a2"])
            e = mulaw_encode(truth - y)
            ce -= log_softmax(logits)[e]
            recon.append(y + mulaw_decode(e))
            hist = np.concatenate(([truth], hist[:-1]))
            e_prev = e
        ces.append(ce / 160)
    return np.array(recon), np.array(ces)


def sample_rate_divergence(seed, n_steps, config="reference", frame_every=160):
    """Max abs gap between the optimised and naive sample-rate paths.

    Random mu-law indices and random hidden states drive both paths; the
    frame vector is redrawn every ``frame_every`` steps. Compares h_A,
    h_B and the 256 logits at every step.
    """
    from opusvocoder import nnet

    c, raw = nnet.random_raw_params(seed, config)
    model = nnet.build_model(c, raw)
    dfc = nnet.DualFcWeights.from_model(model)
    rng = np.random.default_rng(seed + 1000)
    h_a = rng.uniform(-1, 1, c.n_a)
    h_b = rng.uniform(-1, 1, c.n_b)
    ref_a, ref_b = h_a.copy(), h_b.copy()
    worst = 0.0
    for t in range(n_steps):
        if t % frame_every == 0:
            f = rng.uniform(-1, 1, c.frame_dim)
            contrib = nnet.FrameContrib(
                g_a=model.runtime["gru_a_frame_w"] @ f + model.runtime["gru_a_bias"],
                g_b=model.runtime["gru_b_frame_w"] @ f + model.runtime["gru_b_bias"])
        s, y, e = (int(v) for v in rng.integers(0, 256, 3))
        h_a = nnet.gru_a_step(h_a, s, y, e, contrib, model)
        h_b = nnet.gru_b_step(h_b, h_a, contrib, model)
        logits = nnet.dual_fc(h_b, dfc)
        ref_a = gru_a(raw, ref_a, s, y, e, f)
        ref_b = gru_b(raw, ref_b, ref_a, f)
        ref_logits = dual_fc(ref_b, raw["dual_w1"], raw["dual_w2"], raw["dual_a1"], raw["dual_a2"])
        worst = max(worst, np.max(np.abs(h_a - ref_a)), np.max(np.abs(h_b - ref_b)),
                    np.max(np.abs(logits - ref_logits)))
    return worst
