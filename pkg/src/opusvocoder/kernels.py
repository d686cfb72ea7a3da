"""Compiled per-sample kernels.

These run the sample-rate network 16000 times a second, so they are
written as flat loops for numba. All arithmetic is float64; weights are
upcast once when a model is loaded.

``exp`` is evaluated by :func:`vexp`, a polynomial with integer range
reduction that LLVM vectorises (libm calls do not). It is accurate to a
few ulp and gives the same bits whether or not a vector math library is
installed.
"""

import math

import numpy as np
from llvmlite import ir
from numba import njit, types
from numba.core import cgutils
from numba.extending import intrinsic

MU = 255.0
LOG_1P_MU = math.log(256.0)
BLOCK = 16


_LOG2E = 1.4426950408889634
_LN2_HI = 6.93147180369123816490e-01
_LN2_LO = 1.90821492927058770002e-10


@njit(cache=True, nogil=True)
def mulaw_enc(x):
    mag = math.log1p(MU * abs(x)) / LOG_1P_MU
    if x < 0.0:
        mag = -mag
    code = math.floor(128.0 + 127.0 * mag + 0.5)
    if code < 0.0:
        return 0
    if code > 255.0:
        return 255
    return int(code)


@njit(cache=True, nogil=True)
def mulaw_dec(code):
    k = code - 128
    if k == 0:
        return 0.0
    mag = math.expm1(abs(k) / 127.0 * LOG_1P_MU) / MU
    return mag if k > 0 else -mag


@njit(cache=True, nogil=True)
def vexp(x, out, kbits):
    """out[i] = exp(x[i]) for i < len(out); ``kbits`` is int64 scratch."""
    scale = kbits.view(np.float64)
    n = out.shape[0]
    for i in range(n):
        xi = min(max(x[i], -708.0), 708.0)
        k = math.floor(xi * _LOG2E + 0.5)
        r = (xi - k * _LN2_HI) - k * _LN2_LO
        p = 1.0 / 479001600.0
        p = p * r + 1.0 / 39916800.0
        p = p * r + 1.0 / 3628800.0
        p = p * r + 1.0 / 362880.0
        p = p * r + 1.0 / 40320.0
        p = p * r + 1.0 / 5040.0
        p = p * r + 1.0 / 720.0
        p = p * r + 1.0 / 120.0
        p = p * r + 1.0 / 24.0
        p = p * r + 1.0 / 6.0
        p = p * r + 0.5
        p = p * r + 1.0
        p = p * r + 1.0
        out[i] = p
        kbits[i] = (np.int64(k) + 1023) << 52
    for i in range(n):
        out[i] *= scale[i]


@intrinsic
def _block_row(typingctx, vals, cols, x, start, stop, out, offset):
    """out[offset:offset+16] = sum of vals[b] * x[cols[b]] for b in [start, stop).

    Emitted directly as two 8-wide double vectors held in registers. Written
    as plain numba loops this either stays scalar or gets vectorised behind
    per-block alias checks, both about 2.5x slower. ``vals`` must be a
    C-contiguous (n, 16) float64 array; nothing is bounds-checked.
    """
    sig = types.void(vals, cols, x, types.intp, types.intp, out, types.intp)

    def codegen(context, builder, signature, args):
        vals_v, cols_v, x_v, start_v, stop_v, out_v, off_v = args
        va = context.make_array(signature.args[0])(context, builder, vals_v)
        ca = context.make_array(signature.args[1])(context, builder, cols_v)
        xa = context.make_array(signature.args[2])(context, builder, x_v)
        oa = context.make_array(signature.args[5])(context, builder, out_v)
        vec = ir.VectorType(ir.DoubleType(), 8)
        splat = ir.Constant(ir.VectorType(ir.IntType(32), 8), [0] * 8)
        idx = start_v.type
        accs = [cgutils.alloca_once_value(builder, ir.Constant(vec, [0.0] * 8)) for _ in range(2)]
        with cgutils.for_range_slice(builder, start_v, stop_v, ir.Constant(idx, 1)) as (b, _):
            col = builder.load(builder.gep(ca.data, [b]))
            xv = builder.load(builder.gep(xa.data, [col]))
            xb = builder.insert_element(ir.Constant(vec, ir.Undefined), xv,
                                        ir.Constant(ir.IntType(32), 0))
            xb = builder.shuffle_vector(xb, ir.Constant(vec, ir.Undefined), splat)
            base = builder.mul(b, ir.Constant(idx, BLOCK))
            for half, acc in enumerate(accs):
                ptr = builder.gep(va.data, [builder.add(base, ir.Constant(idx, 8 * half))])
                w = builder.load(builder.bitcast(ptr, vec.as_pointer()), align=8)
                builder.store(builder.fadd(builder.load(acc), builder.fmul(w, xb)), acc)
        for half, acc in enumerate(accs):
            ptr = builder.gep(oa.data, [builder.add(off_v, ir.Constant(off_v.type, 8 * half))])
            builder.store(builder.load(acc), builder.bitcast(ptr, vec.as_pointer()), align=8)
        return context.get_dummy_value()

    return sig, codegen


@njit(cache=True, nogil=True)
def bsmv(ptr, bcol, bval, x, out):
    """out = M x for a matrix stored as row-grouped 16x1 blocks.

    Blocks of row group ``g`` are ``ptr[g]:ptr[g+1]``; ``bval`` is a
    C-contiguous (n_blocks, 16) array.
    """
    for rg in range(ptr.shape[0] - 1):
        _block_row(bval, bcol, x, ptr[rg], ptr[rg + 1], out, rg * BLOCK)


@njit(cache=True, nogil=True)
def dense_mv_t(wt, x, out):
    """out = W x with W given transposed, (in, out), for contiguous inner loops."""
    for i in range(out.shape[0]):
        out[i] = 0.0
    for j in range(wt.shape[0]):
        xv = x[j]
        for i in range(wt.shape[1]):
            out[i] += wt[j, i] * xv


@njit(cache=True, nogil=True)
def gru_a_update(h, g, tab_s, tab_y, tab_e, s_idx, y_idx, e_idx, ptr, bcol, bval,
                 rec, z, ez, kbits):
    """One step of the sparse GRU with precomputed input contributions.

    Gates are stacked (u, r, h). ``rec``, ``z``, ``ez`` are float scratch of
    length 3N and ``kbits`` int64 scratch of length 3N.
    """
    n = h.shape[0]
    bsmv(ptr, bcol, bval, h, rec)
    ts = tab_s[s_idx]
    ty = tab_y[y_idx]
    te = tab_e[e_idx]
    for i in range(2 * n):
        z[i] = -(rec[i] + g[i] + ts[i] + ty[i] + te[i])
    vexp(z, ez[:2 * n], kbits)
    for i in range(2 * n):
        ez[i] = 1.0 / (1.0 + ez[i])     # sigmoid
    for i in range(n):
        j = 2 * n + i
        z[j] = -2.0 * (ez[n + i] * rec[j] + g[j] + ts[j] + ty[j] + te[j])
    vexp(z[2 * n:], ez[2 * n:], kbits)
    for i in range(n):
        u = ez[i]
        cand = 2.0 / (1.0 + ez[2 * n + i]) - 1.0  # tanh
        h[i] = u * h[i] + (1.0 - u) * cand


@njit(cache=True, nogil=True)
def gru_b_gates(h, xin, gb, w_rec_t, rec, z, ez, kbits):
    """GRU_B update from an already projected input ``xin`` (length 3N)."""
    n = h.shape[0]
    dense_mv_t(w_rec_t, h, rec)
    for i in range(2 * n):
        z[i] = -(xin[i] + gb[i] + rec[i])
    vexp(z, ez[:2 * n], kbits)
    for i in range(2 * n):
        ez[i] = 1.0 / (1.0 + ez[i])
    for i in range(n):
        j = 2 * n + i
        z[j] = -2.0 * (xin[j] + gb[j] + ez[n + i] * rec[j])
    vexp(z[2 * n:], ez[2 * n:], kbits)
    for i in range(n):
        u = ez[i]
        cand = 2.0 / (1.0 + ez[2 * n + i]) - 1.0
        h[i] = u * h[i] + (1.0 - u) * cand


@njit(cache=True, nogil=True)
def gru_b_update(h, x, w_in_t, gb, w_rec_t, xin, rec, z, ez, kbits):
    """Dense GRU, reset gate applied to the recurrent term only.

    Weight matrices are passed transposed; scratch arrays have length 3N.
    ``vexp`` never runs in place: aliased buffers stop it vectorising.
    """
    dense_mv_t(w_in_t, x, xin)
    gru_b_gates(h, xin, gb, w_rec_t, rec, z, ez, kbits)


@njit(cache=True, nogil=True)
def dual_fc(x, w1_t, w2_t, a1, a2, out, tmp, kbits):
    """Weights transposed, (in, classes); ``tmp`` is scratch of four times the output size."""
    m = out.shape[0]
    pre = tmp[:2 * m]
    ex = tmp[2 * m:]
    dense_mv_t(w1_t, x, pre[:m])
    dense_mv_t(w2_t, x, pre[m:])
    for k in range(2 * m):
        pre[k] = -2.0 * pre[k]
    vexp(pre, ex, kbits)
    for k in range(m):
        out[k] = a1[k] * (2.0 / (1.0 + ex[k]) - 1.0) + a2[k] * (2.0 / (1.0 + ex[m + k]) - 1.0)


@njit(cache=True, nogil=True)
def tempered_weights(logits, beta, threshold, q, kbits):
    """Unnormalised p**beta with entries below ``threshold * max`` zeroed.

    Works on ``exp(beta * (logit - max))`` so the top class has weight 1.
    ``q`` is scratch of twice the class count; the weights end up in its
    first half. Returns the total weight.
    """
    n = logits.shape[0]
    m = logits[0]
    for k in range(1, n):
        if logits[k] > m:
            m = logits[k]
    arg = q[n:]
    for k in range(n):
        arg[k] = beta * (logits[k] - m)
    vexp(arg, q[:n], kbits)
    total = 0.0
    for k in range(n):
        if q[k] < threshold:
            q[k] = 0.0
        total += q[k]
    return total


@njit(cache=True, nogil=True)
def sample_index(logits, beta, threshold, u, q, kbits):
    """Inverse-CDF draw from the tempered distribution with uniform ``u``."""
    total = tempered_weights(logits, beta, threshold, q, kbits)
    target = u * total
    acc = 0.0
    last = 0
    for k in range(logits.shape[0]):
        if q[k] > 0.0:
            acc += q[k]
            last = k
            if acc > target:
                return k
    return last


@njit(cache=True, nogil=True)
def log_softmax_at(logits, idx, q, kbits):
    n = logits.shape[0]
    m = logits[0]
    for k in range(1, n):
        if logits[k] > m:
            m = logits[k]
    arg = q[n:]
    for k in range(n):
        arg[k] = logits[k] - m
    vexp(arg, q[:n], kbits)
    s = 0.0
    for k in range(n):
        s += q[k]
    return logits[idx] - m - math.log(s)


@njit(cache=True, nogil=True)
def _predict(lpc, hist):
    y = 0.0
    for i in range(hist.shape[0]):
        y += lpc[i] * hist[i]
    return y


@njit(cache=True, nogil=True)
def _push(hist, value):
    for i in range(hist.shape[0] - 1, 0, -1):
        hist[i] = hist[i - 1]
    hist[0] = value


@njit(cache=True, nogil=True)
def sample_frame(lpc, uniforms, noise, use_noise, beta, threshold,
                 g, gb, tab_s, tab_y, tab_e, ptr, bcol, bval,
                 wb_in_t, wb_rec_t, w1_t, w2_t, a1, a2,
                 h_a, h_b, hist, e_prev, out_s, out_y, out_e):
    """Free-running synthesis of one frame.

    ``hist`` holds the 16 most recent pre-emphasised samples, newest first;
    ``e_prev`` is a length-1 int array. Returns -1, or the index of the
    first sample whose value is not finite.
    """
    n_a = h_a.shape[0]
    n_b = h_b.shape[0]
    n_cls = w1_t.shape[1]
    rec_a = np.empty(3 * n_a)
    z_a = np.empty(3 * n_a)
    ez_a = np.empty(3 * n_a)
    xin = np.empty(3 * n_b)
    rec_b = np.empty(3 * n_b)
    z_b = np.empty(3 * n_b)
    ez_b = np.empty(3 * n_b)
    logits = np.empty(n_cls)
    q = np.empty(4 * n_cls)
    kbits = np.empty(max(3 * n_a, 2 * n_cls), dtype=np.int64)
    for t in range(out_s.shape[0]):
        y = _predict(lpc, hist)
        if not math.isfinite(y):
            return t
        s_idx = mulaw_enc(hist[0])
        y_idx = mulaw_enc(min(max(y, -2.0), 2.0))
        gru_a_update(h_a, g, tab_s, tab_y, tab_e, s_idx, y_idx, e_prev[0],
                     ptr, bcol, bval, rec_a, z_a, ez_a, kbits)
        gru_b_update(h_b, h_a, wb_in_t, gb, wb_rec_t, xin, rec_b, z_b, ez_b, kbits)
        dual_fc(h_b, w1_t, w2_t, a1, a2, logits, q, kbits)
        e_idx = sample_index(logits, beta, threshold, uniforms[t], q[:2 * n_cls], kbits)
        if use_noise:
            e_idx = min(max(e_idx + int(np.rint(noise[t])), 0), 255)
        s = y + mulaw_dec(e_idx)
        if not math.isfinite(s):
            return t
        _push(hist, s)
        e_prev[0] = e_idx
        out_s[t] = s
        out_y[t] = y
        out_e[t] = e_idx
    return -1


@njit(cache=True, nogil=True)
def teacher_frame(lpc, ref, g, gb, tab_s, tab_y, tab_e, ptr, bcol, bval,
                  wb_in_t, wb_rec_t, w1_t, w2_t, a1, a2,
                  h_a, h_b, hist, e_prev, out_s, out_y, out_e, ce):
    """One frame driven by the reference samples ``ref``.

    Every network input is known in advance, so only the two recurrences
    run sample by sample; the GRU_B input projection and the output layer
    are batched over the frame. ``ce[0]`` accumulates the cross-entropy of
    the true excitation classes. Returns -1 or the first non-finite index.
    """
    n_t = out_s.shape[0]
    n_a = h_a.shape[0]
    n_b = h_b.shape[0]
    n_cls = w1_t.shape[1]
    rec_a = np.empty(3 * n_a)
    z_a = np.empty(3 * n_a)
    ez_a = np.empty(3 * n_a)
    kbits = np.empty(max(3 * n_a, 2 * n_cls * n_t), dtype=np.int64)
    hs_a = np.empty((n_t, n_a))
    for t in range(n_t):
        y = _predict(lpc, hist)
        if not math.isfinite(y):
            return t
        s_idx = mulaw_enc(hist[0])
        y_idx = mulaw_enc(min(max(y, -2.0), 2.0))
        gru_a_update(h_a, g, tab_s, tab_y, tab_e, s_idx, y_idx, e_prev[0],
                     ptr, bcol, bval, rec_a, z_a, ez_a, kbits)
        hs_a[t] = h_a
        truth = ref[t]
        e_idx = mulaw_enc(truth - y)
        s = y + mulaw_dec(e_idx)
        if not math.isfinite(s):
            return t
        _push(hist, truth)
        e_prev[0] = e_idx
        out_s[t] = s
        out_y[t] = y
        out_e[t] = e_idx
    xin = np.dot(hs_a, wb_in_t)
    rec_b = np.empty(3 * n_b)
    z_b = np.empty(3 * n_b)
    ez_b = np.empty(3 * n_b)
    hs_b = np.empty((n_t, n_b))
    for t in range(n_t):
        gru_b_gates(h_b, xin[t], gb, wb_rec_t, rec_b, z_b, ez_b, kbits)
        hs_b[t] = h_b
    arg = np.empty((n_t, 2 * n_cls))
    arg[:, :n_cls] = np.dot(hs_b, w1_t)
    arg[:, n_cls:] = np.dot(hs_b, w2_t)
    flat = arg.ravel()
    for k in range(flat.shape[0]):
        flat[k] = -2.0 * flat[k]
    ex = np.empty(flat.shape[0])
    vexp(flat, ex, kbits)
    logits = np.empty(n_cls)
    q = np.empty(2 * n_cls)
    for t in range(n_t):
        base = 2 * n_cls * t
        for k in range(n_cls):
            logits[k] = (a1[k] * (2.0 / (1.0 + ex[base + k]) - 1.0)
                         + a2[k] * (2.0 / (1.0 + ex[base + n_cls + k]) - 1.0))
        ce[0] -= log_softmax_at(logits, out_e[t], q, kbits)
    return -1
