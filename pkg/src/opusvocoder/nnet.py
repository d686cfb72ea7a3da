"""Network layers, block-sparse matrices, sampling and the complexity model.

Gate-stacked vectors and matrices always use the order (u, r, h).
"""

import math
from dataclasses import dataclass, field, fields

import numpy as np

from . import kernels
from .features import N_FEATURES

BLOCK = kernels.BLOCK
N_CLASSES = 256
FRAME_RATE = 100
SAMPLE_RATE = 16000
FLOPS_PER_MAC = 2
FLOPS_PER_ACTIVATION = 4
INIT_STD = 0.08


class ModelError(ValueError):
    pass


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ModelConfig:
    n_a: int = 384
    n_b: int = 16
    feature_dim: int = N_FEATURES
    frame_dim: int = 128
    n_classes: int = N_CLASSES
    density_u: float = 0.05
    density_r: float = 0.05
    density_h: float = 0.2
    beta_slope: float = 2.0
    threshold: float = 0.002
    embed_dim: int = 128
    adapted: bool = False

    def __post_init__(self):
        for name in ("n_a", "n_b", "feature_dim", "frame_dim", "n_classes"):
            if getattr(self, name) <= 0:
                raise ModelError(f"{name} must be positive")
        if self.n_a % BLOCK:
            raise ModelError(f"n_a must be a multiple of {BLOCK}")
        for d in (self.density_u, self.density_r, self.density_h):
            if not 0.0 < d <= 1.0:
                raise ModelError(f"density {d} outside (0, 1]")
        if self.beta_slope < 0 or not 0.0 <= self.threshold < 1.0:
            raise ModelError("invalid temperature constants")

    @property
    def densities(self):
        return {"w_u": self.density_u, "w_r": self.density_r, "w_h": self.density_h}

    @property
    def mean_density(self):
        return (self.density_u + self.density_r + self.density_h) / 3.0


CONFIGS = {
    "reference": ModelConfig(),
    "small": ModelConfig(n_a=64, n_b=16, frame_dim=32, embed_dim=16,
                         density_u=0.25, density_r=0.25, density_h=0.5),
}


def get_config(name_or_config):
    if isinstance(name_or_config, ModelConfig):
        return name_or_config
    try:
        return CONFIGS[name_or_config]
    except KeyError:
        raise ModelError(f"unknown config {name_or_config!r}; "
                         f"choose from {sorted(CONFIGS)}") from None


# --------------------------------------------------------------------------
# block-sparse matrices


class BlockSparseMatrix:
    """Matrix whose nonzeros sit in 16x1 column blocks.

    ``block_rows[i]`` is the first row of block ``i`` (a multiple of 16),
    ``block_cols[i]`` its column, ``values[i]`` its 16 entries. Blocks are
    kept sorted by (column, row).
    """

    def __init__(self, rows, cols, block_rows, block_cols, values):
        block_rows = np.asarray(block_rows, dtype=np.int32).reshape(-1)
        block_cols = np.asarray(block_cols, dtype=np.int32).reshape(-1)
        values = np.asarray(values, dtype=np.float32).reshape(-1, BLOCK)
        if rows % BLOCK:
            raise ModelError(f"rows ({rows}) must be a multiple of {BLOCK}")
        if not len(block_rows) == len(block_cols) == len(values):
            raise ModelError("block coordinate and value counts differ")
        if len(block_rows):
            if np.any(block_rows % BLOCK) or np.any(block_rows < 0) or np.any(block_rows >= rows):
                raise ModelError("block row start out of range or misaligned")
            if np.any(block_cols < 0) or np.any(block_cols >= cols):
                raise ModelError("block column out of range")
        order = np.lexsort((block_rows, block_cols))
        block_rows, block_cols, values = block_rows[order], block_cols[order], values[order]
        key = block_cols.astype(np.int64) * rows + block_rows
        if np.any(np.diff(key) == 0):
            raise ModelError("duplicate block coordinates")
        self.rows, self.cols = int(rows), int(cols)
        self.block_rows, self.block_cols, self.values = block_rows, block_cols, values
        for a in (self.block_rows, self.block_cols, self.values):
            a.flags.writeable = False

    @property
    def n_blocks(self):
        return len(self.values)

    @property
    def nnz(self):
        return BLOCK * self.n_blocks

    @property
    def density(self):
        return self.nnz / (self.rows * self.cols)

    def row_grouped(self):
        """Kernel layout: ``(ptr, cols, values)`` with blocks grouped by row group."""
        return _group_rows(self.block_rows.astype(np.int64), self.block_cols,
                           self.values, self.rows)

    def to_dense(self):
        dense = np.zeros((self.rows, self.cols), dtype=np.float64)
        for r0, c, v in zip(self.block_rows, self.block_cols, self.values):
            dense[r0:r0 + BLOCK, c] = v
        return dense

    def __repr__(self):
        return (f"BlockSparseMatrix({self.rows}x{self.cols}, "
                f"{self.n_blocks} blocks, density={self.density:.4f})")


def _group_rows(block_rows, block_cols, values, total_rows):
    order = np.lexsort((block_cols, block_rows))
    counts = np.bincount(block_rows[order] // BLOCK, minlength=total_rows // BLOCK)
    ptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
    return (ptr, np.ascontiguousarray(block_cols[order], dtype=np.int64),
            np.ascontiguousarray(values[order], dtype=np.float64))


def sparse_matvec(m, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (m.cols,):
        raise ValueError(f"vector length {x.shape} does not match {m.cols} columns")
    out = np.zeros(m.rows)
    ptr, cols, vals = m.row_grouped()
    kernels.bsmv(ptr, cols, vals, x, out)
    return out


def prune_to_blocks(dense, target_density):
    """Keep the largest-norm 16x1 blocks until ``target_density`` is reached."""
    dense = np.asarray(dense, dtype=np.float64)
    rows, cols = dense.shape
    if rows % BLOCK:
        raise ModelError(f"rows ({rows}) must be a multiple of {BLOCK}")
    if not 0.0 < target_density <= 1.0:
        raise ModelError(f"target density {target_density} outside (0, 1]")
    blocks = dense.reshape(rows // BLOCK, BLOCK, cols)  # [row block, lane, col]
    norms = np.sqrt(np.sum(blocks ** 2, axis=1))  # [row block, col]
    total = norms.size
    keep = int(math.floor(target_density * total + 1e-9))
    # stable ordering so ties are broken deterministically
    order = np.argsort(-norms.reshape(-1), kind="stable")[:keep]
    rb, c = np.divmod(order, cols)
    values = blocks[rb, :, c]
    return BlockSparseMatrix(rows, cols, rb * BLOCK, c, values)


def equivalent_units(n_a, d):
    """Dense GRU size with the same recurrent cost as ``n_a`` units at density ``d``."""
    if n_a <= 0 or not 0.0 <= d <= 1.0:
        raise ValueError("need n_a > 0 and density in [0, 1]")
    return math.sqrt(d * n_a * n_a + n_a)


# --------------------------------------------------------------------------
# weights


_DENSE_FIELDS = (
    "conv1_w", "conv1_b", "conv2_w", "conv2_b",
    "dense1_w", "dense1_b", "dense2_w", "dense2_b",
    "gru_a_frame_w", "gru_a_bias",
    "table_s", "table_y", "table_e",
    "gru_b_in_w", "gru_b_rec_w", "gru_b_frame_w", "gru_b_bias",
    "dual_w1", "dual_w2", "dual_a1", "dual_a2",
)
_SPARSE_FIELDS = ("w_u", "w_r", "w_h")
_FRAME_FIELDS = _DENSE_FIELDS[:10] + ("gru_b_frame_w", "gru_b_bias")


@dataclass(frozen=True, eq=False)
class ModelWeights:
    """Immutable parameter set of the frame-rate and sample-rate networks.

    Convolutions see ``[x_{t-2}, x_{t-1}, x_t]`` concatenated, so their
    weights are ``(out, 3 * in)``. The three ``table_*`` arrays hold the
    folded input contributions (256 x 3 N_A) of the previous sample, the
    prediction and the previous excitation.
    """

    config: ModelConfig
    conv1_w: np.ndarray
    conv1_b: np.ndarray
    conv2_w: np.ndarray
    conv2_b: np.ndarray
    dense1_w: np.ndarray
    dense1_b: np.ndarray
    dense2_w: np.ndarray
    dense2_b: np.ndarray
    gru_a_frame_w: np.ndarray
    gru_a_bias: np.ndarray
    w_u: BlockSparseMatrix
    w_r: BlockSparseMatrix
    w_h: BlockSparseMatrix
    table_s: np.ndarray
    table_y: np.ndarray
    table_e: np.ndarray
    gru_b_in_w: np.ndarray
    gru_b_rec_w: np.ndarray
    gru_b_frame_w: np.ndarray
    gru_b_bias: np.ndarray
    dual_w1: np.ndarray
    dual_w2: np.ndarray
    dual_a1: np.ndarray
    dual_a2: np.ndarray
    runtime: dict = field(init=False, repr=False)

    def __post_init__(self):
        for name in _DENSE_FIELDS:
            arr = np.array(getattr(self, name), dtype=np.float32)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        self._check_shapes()
        object.__setattr__(self, "runtime", self._build_runtime())

    def _check_shapes(self):
        c = self.config
        na3, nb3, fd = 3 * c.n_a, 3 * c.n_b, c.frame_dim
        expected = {
            "conv1_w": (fd, 3 * c.feature_dim), "conv1_b": (fd,),
            "conv2_w": (fd, 3 * fd), "conv2_b": (fd,),
            "dense1_w": (fd, fd), "dense1_b": (fd,),
            "dense2_w": (fd, fd), "dense2_b": (fd,),
            "gru_a_frame_w": (na3, fd), "gru_a_bias": (na3,),
            "table_s": (c.n_classes, na3), "table_y": (c.n_classes, na3),
            "table_e": (c.n_classes, na3),
            "gru_b_in_w": (nb3, c.n_a), "gru_b_rec_w": (nb3, c.n_b),
            "gru_b_frame_w": (nb3, fd), "gru_b_bias": (nb3,),
            "dual_w1": (c.n_classes, c.n_b), "dual_w2": (c.n_classes, c.n_b),
            "dual_a1": (c.n_classes,), "dual_a2": (c.n_classes,),
        }
        for name, shape in expected.items():
            got = getattr(self, name).shape
            if got != shape:
                raise ModelError(f"{name} has shape {got}, expected {shape}")
        for name in _SPARSE_FIELDS:
            m = getattr(self, name)
            if (m.rows, m.cols) != (c.n_a, c.n_a):
                raise ModelError(f"{name} is {m.rows}x{m.cols}, expected {c.n_a}x{c.n_a}")
            target = c.densities[name]
            # pruning floors to whole blocks, so allow one block of slack
            if abs(m.density - target) > BLOCK / (m.rows * m.cols) + 1e-12:
                raise ModelError(
                    f"{name} density {m.density:.5f} inconsistent with configured {target}")
        if self.config.n_classes != N_CLASSES:
            raise ModelError("only 256-class mu-law output is supported")

    def _build_runtime(self):
        n = self.config.n_a
        mats = (self.w_u, self.w_r, self.w_h)
        ptr, bcol, bval = _group_rows(
            np.concatenate([m.block_rows.astype(np.int64) + k * n for k, m in enumerate(mats)]),
            np.concatenate([m.block_cols for m in mats]),
            np.concatenate([m.values for m in mats]), 3 * n)
        f64 = lambda a: np.ascontiguousarray(a, dtype=np.float64)
        return {
            "ptr": ptr, "bcol": bcol, "bval": bval,
            "tab_s": f64(self.table_s), "tab_y": f64(self.table_y), "tab_e": f64(self.table_e),
            "wb_in_t": f64(self.gru_b_in_w.T), "wb_rec_t": f64(self.gru_b_rec_w.T),
            "w1_t": f64(self.dual_w1.T), "w2_t": f64(self.dual_w2.T),
            "a1": f64(self.dual_a1), "a2": f64(self.dual_a2),
            **{name: f64(getattr(self, name)) for name in _FRAME_FIELDS},
        }

    def arrays(self):
        """Dense parameter arrays in canonical order."""
        return {name: getattr(self, name) for name in _DENSE_FIELDS}

    def sparse(self):
        return {name: getattr(self, name) for name in _SPARSE_FIELDS}

    def sample_rate_weight_count(self):
        return flop_count(self)["sample_rate_weights"]


def fold_embeddings(embedding, input_weights):
    """Fold an embedding into the layer it feeds: ``table[i] = W @ E[i]``.

    ``embedding`` is (256, D) and ``input_weights`` is (3 N_A, D).
    """
    return np.asarray(embedding, dtype=np.float64) @ np.asarray(input_weights, dtype=np.float64).T


def _f32(a):
    return np.asarray(a, dtype=np.float32).astype(np.float64)


def random_raw_params(seed, config="reference"):
    """Unfolded random parameters: embeddings, dense (pruned) recurrences.

    This is what a trainer would hand over before export. Values are
    rounded to float32 so a naive evaluation sees exactly the stored weights.
    """
    c = get_config(config)
    rng = np.random.default_rng(seed)
    g = lambda *shape: _f32(rng.normal(0.0, INIT_STD, size=shape))
    fd, na, nb, nf = c.frame_dim, c.n_a, c.n_b, c.feature_dim
    raw = {
        "conv1_k": g(fd, nf, 3), "conv1_b": g(fd),
        "conv2_k": g(fd, fd, 3), "conv2_b": g(fd),
        "dense1_w": g(fd, fd), "dense1_b": g(fd),
        "dense2_w": g(fd, fd), "dense2_b": g(fd),
        "gru_a_frame_w": g(3 * na, fd), "gru_a_bias": g(3 * na),
    }
    for name in ("w_u", "w_r", "w_h"):
        pruned = prune_to_blocks(g(na, na), c.densities[name])
        raw[name] = pruned.to_dense()
    for src in ("s", "y", "e"):
        raw[f"embed_{src}"] = rng.normal(0.0, INIT_STD, size=(c.n_classes, c.embed_dim))
        raw[f"input_{src}"] = rng.normal(0.0, INIT_STD, size=(3 * na, c.embed_dim))
    raw.update({
        "gru_b_in_w": g(3 * nb, na), "gru_b_rec_w": g(3 * nb, nb),
        "gru_b_frame_w": g(3 * nb, fd), "gru_b_bias": g(3 * nb),
        "dual_w1": g(c.n_classes, nb), "dual_w2": g(c.n_classes, nb),
        "dual_a1": g(c.n_classes), "dual_a2": g(c.n_classes),
    })
    return c, raw


def conv_kernel_to_matrix(kernel):
    """(out, in, 3) taps ordered oldest-first -> (out, 3*in) over [x_{t-2}, x_{t-1}, x_t]."""
    out_dim, in_dim, taps = kernel.shape
    return np.transpose(kernel, (0, 2, 1)).reshape(out_dim, taps * in_dim)


def build_model(config, raw):
    """Fold embeddings and pack a raw parameter dict into ModelWeights."""
    dense = {k: raw[k] for k in _DENSE_FIELDS if k in raw}
    dense["conv1_w"] = conv_kernel_to_matrix(raw["conv1_k"])
    dense["conv2_w"] = conv_kernel_to_matrix(raw["conv2_k"])
    for src in ("s", "y", "e"):
        dense[f"table_{src}"] = fold_embeddings(raw[f"embed_{src}"], raw[f"input_{src}"])
    sparse = {name: prune_to_blocks(raw[name], config.densities[name])
              for name in _SPARSE_FIELDS}
    return ModelWeights(config=config, **dense, **sparse)


def random_model(seed=0, config="reference"):
    """Deterministic untrained model: Gaussian(0, 0.08) weights, block-pruned."""
    c, raw = random_raw_params(seed, config)
    return build_model(c, raw)


def zero_model(config="reference"):
    """All-zero weights at the configured sparsity pattern (zero-valued blocks)."""
    c = get_config(config)
    m = random_model(0, c)
    dense = {k: np.zeros_like(v) for k, v in m.arrays().items()}
    sparse = {k: BlockSparseMatrix(s.rows, s.cols, s.block_rows, s.block_cols,
                                   np.zeros_like(s.values))
              for k, s in m.sparse().items()}
    return ModelWeights(config=c, **dense, **sparse)


def with_arrays(model, **updates):
    """Copy of ``model`` with some parameter arrays replaced."""
    kwargs = {f.name: getattr(model, f.name) for f in fields(model) if f.init}
    kwargs.update(updates)
    return ModelWeights(**kwargs)


# --------------------------------------------------------------------------
# frame-rate network


@dataclass
class FrameContrib:
    """Per-frame GRU inputs: ``g_a`` is (g_u, g_r, g_h) stacked, ``g_b`` the GRU_B share."""

    g_a: np.ndarray
    g_b: np.ndarray

    @property
    def g_u(self):
        return self.g_a[:len(self.g_a) // 3]

    @property
    def g_r(self):
        n = len(self.g_a) // 3
        return self.g_a[n:2 * n]

    @property
    def g_h(self):
        return self.g_a[2 * (len(self.g_a) // 3):]


@dataclass
class FrameRateState:
    cond_history: np.ndarray   # (2, feature_dim), oldest first
    conv1_history: np.ndarray  # (2, frame_dim), oldest first

    @classmethod
    def zeros(cls, config):
        return cls(np.zeros((2, config.feature_dim)), np.zeros((2, config.frame_dim)))

    def copy(self):
        return FrameRateState(self.cond_history.copy(), self.conv1_history.copy())


def frame_rate_network(cond, state, weights):
    """Two kernel-3 causal convolutions and two dense layers, all tanh.

    Returns ``(FrameContrib, f, new_state)``.
    """
    x = np.asarray(cond.flatten() if hasattr(cond, "flatten") else cond, dtype=np.float64)
    if x.shape != (weights.config.feature_dim,):
        raise ValueError(f"conditioning vector has shape {x.shape}")
    w = weights.runtime
    win1 = np.concatenate((state.cond_history[0], state.cond_history[1], x))
    c1 = np.tanh(w["conv1_w"] @ win1 + w["conv1_b"])
    win2 = np.concatenate((state.conv1_history[0], state.conv1_history[1], c1))
    c2 = np.tanh(w["conv2_w"] @ win2 + w["conv2_b"])
    d1 = np.tanh(w["dense1_w"] @ c2 + w["dense1_b"])
    f = np.tanh(w["dense2_w"] @ d1 + w["dense2_b"])
    contrib = FrameContrib(
        g_a=w["gru_a_frame_w"] @ f + w["gru_a_bias"],
        g_b=w["gru_b_frame_w"] @ f + w["gru_b_bias"],
    )
    new_state = FrameRateState(np.vstack((state.cond_history[1], x)),
                               np.vstack((state.conv1_history[1], c1)))
    return contrib, f, new_state


# --------------------------------------------------------------------------
# sample-rate network


def _scratch(n):
    return np.empty(n), np.empty(n), np.empty(n), np.empty(n, dtype=np.int64)


def gru_a_step(h, s_prev, y_t, e_prev, frame, weights):
    """One step of the sparse GRU_A; returns the new hidden state."""
    rt = weights.runtime
    h = np.array(h, dtype=np.float64)
    if h.shape != (weights.config.n_a,):
        raise ValueError("hidden state has the wrong size")
    for idx in (s_prev, y_t, e_prev):
        if not 0 <= idx <= 255:
            raise ValueError("mu-law index out of range")
    kernels.gru_a_update(h, np.asarray(frame.g_a, dtype=np.float64),
                         rt["tab_s"], rt["tab_y"], rt["tab_e"],
                         int(s_prev), int(y_t), int(e_prev),
                         rt["ptr"], rt["bcol"], rt["bval"], *_scratch(3 * len(h)))
    return h


def gru_b_step(h_b, h_a, frame, weights):
    rt = weights.runtime
    h_b = np.array(h_b, dtype=np.float64)
    n = len(h_b)
    kernels.gru_b_update(h_b, np.asarray(h_a, dtype=np.float64), rt["wb_in_t"],
                         np.asarray(frame.g_b, dtype=np.float64), rt["wb_rec_t"],
                         np.empty(3 * n), np.empty(3 * n), np.empty(3 * n), np.empty(3 * n),
                         np.empty(3 * n, dtype=np.int64))
    return h_b


@dataclass(frozen=True)
class DualFcWeights:
    w1: np.ndarray  # (classes, in)
    w2: np.ndarray
    a1: np.ndarray
    a2: np.ndarray

    @classmethod
    def from_model(cls, weights):
        return cls(weights.dual_w1, weights.dual_w2, weights.dual_a1, weights.dual_a2)


def dual_fc(x, w):
    """``a1 * tanh(W1 x) + a2 * tanh(W2 x)``."""
    x = np.asarray(x, dtype=np.float64)
    w1_t, w2_t = (np.ascontiguousarray(np.asarray(m, dtype=np.float64).T) for m in (w.w1, w.w2))
    if w1_t.shape != w2_t.shape or w1_t.shape[0] != len(x):
        raise ValueError("dual_fc weight shapes do not match the input")
    out = np.empty(w1_t.shape[1])
    kernels.dual_fc(x, w1_t, w2_t, np.ascontiguousarray(w.a1, dtype=np.float64),
                    np.ascontiguousarray(w.a2, dtype=np.float64), out,
                    np.empty(4 * len(out)), np.empty(2 * len(out), dtype=np.int64))
    return out


def softmax(logits):
    z = np.asarray(logits, dtype=np.float64)
    e = np.exp(z - np.max(z))
    return e / np.sum(e)


def excitation_distribution(logits, pitch_gain, beta_slope=2.0, threshold=0.002):
    """Sampling distribution after temperature lowering and pruning.

    Probabilities are raised to ``1 + beta_slope * pitch_gain``, renormalised,
    and classes below ``threshold`` times the top probability are dropped.
    """
    p = softmax(logits) ** (1.0 + beta_slope * pitch_gain)
    p /= np.sum(p)
    p[p < threshold * np.max(p)] = 0.0
    return p / np.sum(p)


def sample_excitation(logits, pitch_gain, rng, beta_slope=2.0, threshold=0.002):
    """Draw one excitation class; returns ``(index, rng)``."""
    logits = np.ascontiguousarray(logits, dtype=np.float64)
    if logits.shape != (N_CLASSES,) or not np.all(np.isfinite(logits)):
        raise ValueError("need 256 finite logits")
    if not 0.0 <= pitch_gain <= 1.0:
        raise ValueError("pitch_gain must lie in [0, 1]")
    beta = 1.0 + beta_slope * pitch_gain
    idx = kernels.sample_index(logits, beta, threshold, rng.random(), np.empty(2 * N_CLASSES),
                               np.empty(N_CLASSES, dtype=np.int64))
    return idx, rng


# --------------------------------------------------------------------------
# complexity model


def flop_count(weights):
    """Itemised weight and FLOP totals.

    Multiply-accumulates cost 2 FLOPs, activations (sigmoid, tanh, exp) 4.
    Table lookups are additions (1 FLOP per element). The per-frame GRU
    projections of the frame vector are frame-rate work.
    """
    c = weights.config
    na, nb, fd, nc = c.n_a, c.n_b, c.frame_dim, c.n_classes
    sample_weights = {
        "gru_a_recurrent": sum(m.nnz for m in (weights.w_u, weights.w_r, weights.w_h)),
        "gru_b_input": weights.gru_b_in_w.size,
        "gru_b_recurrent": weights.gru_b_rec_w.size,
        "dual_fc_matrices": weights.dual_w1.size + weights.dual_w2.size,
        "dual_fc_scales": weights.dual_a1.size + weights.dual_a2.size,
    }
    frame_weights = {
        "conv1": weights.conv1_w.size, "conv2": weights.conv2_w.size,
        "dense1": weights.dense1_w.size, "dense2": weights.dense2_w.size,
        "gru_a_frame": weights.gru_a_frame_w.size,
        "gru_b_frame": weights.gru_b_frame_w.size,
    }
    per_sample = {k: FLOPS_PER_MAC * v for k, v in sample_weights.items()}
    per_sample["gru_a_table_adds"] = 4 * 3 * na   # three lookups plus g, per gate
    per_sample["gru_activations"] = FLOPS_PER_ACTIVATION * 3 * (na + nb)
    per_sample["gru_state_update"] = 4 * (na + nb)  # reset product and interpolation
    per_sample["dual_fc_activations"] = FLOPS_PER_ACTIVATION * 2 * nc
    per_sample["softmax"] = FLOPS_PER_ACTIVATION * nc + 2 * nc
    per_sample["lpc_prediction"] = FLOPS_PER_MAC * 16
    per_frame = {k: FLOPS_PER_MAC * v for k, v in frame_weights.items()}
    per_frame["activations"] = FLOPS_PER_ACTIVATION * 4 * fd
    sample_total = sum(per_sample.values())
    frame_total = sum(per_frame.values())
    per_second = sample_total * SAMPLE_RATE + frame_total * FRAME_RATE
    return {
        "sample_rate_weights": sum(sample_weights.values()),
        "frame_rate_weights": sum(frame_weights.values()),
        "sample_rate_weight_items": sample_weights,
        "frame_rate_weight_items": frame_weights,
        "flops_per_sample": per_sample,
        "flops_per_frame": per_frame,
        "sample_rate_flops_per_second": sample_total * SAMPLE_RATE,
        "frame_rate_flops_per_second": frame_total * FRAME_RATE,
        "flops_per_second": per_second,
        "gflops": per_second / 1e9,
    }
