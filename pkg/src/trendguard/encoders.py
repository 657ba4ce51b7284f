"""Toy encoders: a tanh MLP and a cross-attention fusion encoder.

Both map raw feature tokens to a unit-norm embedding of dimension D, and
both ship an analytic backward pass (verified against central finite
differences in the test suite). Parameters are float64 during training;
embeddings destined for a store are cast to float32 by the caller.

The multimodal encoder encodes each modality's tokens linearly, attends
from visual tokens (queries) over text tokens (keys/values) with a single
head scaled by 1/sqrt(d_head), adds the attended output back onto the
visual tokens, mean-pools, projects, and normalizes. Tokens carry no
positional encoding, so the text side is permutation-invariant.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import EmptyTokens, ZeroEmbedding

_NORM_FLOOR = 1e-12


def _init(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    scale = 1.0 / np.sqrt(cols)
    return rng.normal(0.0, scale, size=(rows, cols))


@dataclass
class SingleModalParams:
    """Two tanh hidden layers followed by a biased projection to D."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    wp: np.ndarray
    bp: np.ndarray

    @classmethod
    def create(cls, in_dim: int, hidden: int, out_dim: int, rng: np.random.Generator):
        return cls(
            w1=_init(rng, hidden, in_dim),
            b1=np.zeros(hidden),
            w2=_init(rng, hidden, hidden),
            b2=np.zeros(hidden),
            wp=_init(rng, out_dim, hidden),
            bp=np.zeros(out_dim),
        )

    @property
    def out_dim(self) -> int:
        return self.wp.shape[0]


@dataclass
class MultiModalParams:
    """Linear token encoders, single-head cross-attention, projection."""

    wv: np.ndarray  # visual token encoder (d_model, d_v)
    bv: np.ndarray
    wt: np.ndarray  # text token encoder (d_model, d_t)
    bt: np.ndarray
    wq: np.ndarray  # (d_head, d_model)
    wk: np.ndarray
    wval: np.ndarray
    wo: np.ndarray  # (d_model, d_head)
    wp: np.ndarray  # (out_dim, d_model)
    bp: np.ndarray

    @classmethod
    def create(cls, d_v: int, d_t: int, d_model: int, out_dim: int, rng: np.random.Generator):
        return cls(
            wv=_init(rng, d_model, d_v),
            bv=np.zeros(d_model),
            wt=_init(rng, d_model, d_t),
            bt=np.zeros(d_model),
            wq=_init(rng, d_model, d_model),
            wk=_init(rng, d_model, d_model),
            wval=_init(rng, d_model, d_model),
            wo=_init(rng, d_model, d_model),
            wp=_init(rng, out_dim, d_model),
            bp=np.zeros(out_dim),
        )

    @property
    def out_dim(self) -> int:
        return self.wp.shape[0]


@dataclass
class ClassifierParams:
    """Single-modal trunk plus a softmax head; the projection output is the embedding."""

    trunk: SingleModalParams
    wc: np.ndarray  # (n_classes, out_dim)
    bc: np.ndarray
    class_labels: tuple[int, ...] = ()  # dataset label per head index

    @classmethod
    def create(cls, in_dim: int, hidden: int, out_dim: int, n_classes: int, rng: np.random.Generator):
        return cls(
            trunk=SingleModalParams.create(in_dim, hidden, out_dim, rng),
            wc=_init(rng, n_classes, out_dim),
            bc=np.zeros(n_classes),
        )

    def class_index(self, label: int) -> int:
        return self.class_labels.index(label)


def param_arrays(params) -> dict[str, np.ndarray]:
    """Flat name -> array view of a params dataclass (nested trunks prefixed)."""
    out: dict[str, np.ndarray] = {}
    for f in fields(params):
        value = getattr(params, f.name)
        if isinstance(value, np.ndarray):
            out[f.name] = value
        elif hasattr(value, "__dataclass_fields__"):
            for sub, arr in param_arrays(value).items():
                out[f"{f.name}.{sub}"] = arr
    return out


def _row_normalize(pre: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(pre, axis=1, keepdims=True)
    if np.any(norms <= _NORM_FLOOR):
        raise ZeroEmbedding("pre-normalization output has norm <= 1e-12")
    return pre / norms, norms


def _normalize_backward(z: np.ndarray, norms: np.ndarray, dz: np.ndarray) -> np.ndarray:
    # y = u / |u|  =>  dL/du = (dz - (dz.y) y) / |u|
    return (dz - (dz * z).sum(axis=1, keepdims=True) * z) / norms


def single_forward(x: np.ndarray, params: SingleModalParams):
    """Batched forward pass. Returns (z, cache) with unit-norm rows in z."""
    x = np.asarray(x, dtype=np.float64)
    h1 = np.tanh(x @ params.w1.T + params.b1)
    h2 = np.tanh(h1 @ params.w2.T + params.b2)
    pre = h2 @ params.wp.T + params.bp
    z, norms = _row_normalize(pre)
    return z, (x, h1, h2, z, norms)


def single_backward(dz: np.ndarray, cache, params: SingleModalParams) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss wrt every parameter, given dL/dz."""
    x, h1, h2, z, norms = cache
    dpre = _normalize_backward(z, norms, dz)
    grads = {
        "wp": dpre.T @ h2,
        "bp": dpre.sum(axis=0),
    }
    dh2 = dpre @ params.wp
    da2 = dh2 * (1.0 - h2 * h2)
    grads["w2"] = da2.T @ h1
    grads["b2"] = da2.sum(axis=0)
    dh1 = da2 @ params.w2
    da1 = dh1 * (1.0 - h1 * h1)
    grads["w1"] = da1.T @ x
    grads["b1"] = da1.sum(axis=0)
    return grads


def encode_single(features, params: SingleModalParams) -> np.ndarray:
    """Encode one feature vector to a unit-norm float32 embedding."""
    z, _ = single_forward(np.asarray(features, dtype=np.float64)[None, :], params)
    return z[0].astype(np.float32)


def multimodal_forward(visual: np.ndarray, text: np.ndarray, params: MultiModalParams):
    """Batched forward pass over (B, T_v, d_v) visual and (B, T_t, d_t) text tokens."""
    visual = np.asarray(visual, dtype=np.float64)
    text = np.asarray(text, dtype=np.float64)
    if visual.ndim != 3 or text.ndim != 3 or visual.shape[1] < 1 or text.shape[1] < 1:
        raise EmptyTokens("need at least one token per modality, shaped (B, T, d)")
    ve = visual @ params.wv.T + params.bv  # (B, Tv, dm)
    te = text @ params.wt.T + params.bt  # (B, Tt, dm)
    q = ve @ params.wq.T
    k = te @ params.wk.T
    val = te @ params.wval.T
    d_head = q.shape[-1]
    scores = q @ k.transpose(0, 2, 1) / np.sqrt(d_head)  # (B, Tv, Tt)
    scores -= scores.max(axis=2, keepdims=True)
    expw = np.exp(scores)
    attn = expw / expw.sum(axis=2, keepdims=True)
    ctx = attn @ val  # (B, Tv, dh)
    fused = ve + ctx @ params.wo.T  # residual on the encoded visual tokens
    pooled = fused.mean(axis=1)  # (B, dm)
    pre = pooled @ params.wp.T + params.bp
    z, norms = _row_normalize(pre)
    cache = (visual, text, ve, te, q, k, val, attn, ctx, pooled, z, norms)
    return z, cache


def multimodal_backward(dz: np.ndarray, cache, params: MultiModalParams) -> dict[str, np.ndarray]:
    visual, text, ve, te, q, k, val, attn, ctx, pooled, z, norms = cache
    t_v = ve.shape[1]
    d_head = q.shape[-1]

    dpre = _normalize_backward(z, norms, dz)
    grads = {"wp": dpre.T @ pooled, "bp": dpre.sum(axis=0)}
    dpooled = dpre @ params.wp
    dfused = np.repeat(dpooled[:, None, :], t_v, axis=1) / t_v

    dve = dfused.copy()  # residual branch
    do = dfused  # O = ctx @ wo.T
    grads["wo"] = np.einsum("btm,bth->mh", do, ctx)
    dctx = do @ params.wo

    dattn = dctx @ val.transpose(0, 2, 1)  # (B, Tv, Tt)
    dval = attn.transpose(0, 2, 1) @ dctx  # (B, Tt, dh)
    # softmax backward over the key axis
    dscores = attn * (dattn - (dattn * attn).sum(axis=2, keepdims=True))
    dscores /= np.sqrt(d_head)
    dq = dscores @ k
    dk = dscores.transpose(0, 2, 1) @ q

    grads["wq"] = np.einsum("bth,btm->hm", dq, ve)
    grads["wk"] = np.einsum("bth,btm->hm", dk, te)
    grads["wval"] = np.einsum("bth,btm->hm", dval, te)

    dve += dq @ params.wq
    dte = dk @ params.wk + dval @ params.wval

    grads["wv"] = np.einsum("btm,btd->md", dve, visual)
    grads["bv"] = dve.sum(axis=(0, 1))
    grads["wt"] = np.einsum("btm,btd->md", dte, text)
    grads["bt"] = dte.sum(axis=(0, 1))
    return grads


def encode_multimodal(visual_tokens, text_tokens, params: MultiModalParams) -> np.ndarray:
    """Encode one (T_v, d_v) + (T_t, d_t) token pair to a unit float32 embedding."""
    v = np.asarray(visual_tokens, dtype=np.float64)
    t = np.asarray(text_tokens, dtype=np.float64)
    if v.ndim != 2 or t.ndim != 2 or v.shape[0] < 1 or t.shape[0] < 1:
        raise EmptyTokens("token arrays must be (T, d) with T >= 1")
    z, _ = multimodal_forward(v[None], t[None], params)
    return z[0].astype(np.float32)


def classifier_forward(x: np.ndarray, params: ClassifierParams):
    """Trunk forward plus softmax head. Returns (probs, embedding_pre, cache)."""
    x = np.asarray(x, dtype=np.float64)
    h1 = np.tanh(x @ params.trunk.w1.T + params.trunk.b1)
    h2 = np.tanh(h1 @ params.trunk.w2.T + params.trunk.b2)
    pre = h2 @ params.trunk.wp.T + params.trunk.bp  # penultimate layer = embedding
    logits = pre @ params.wc.T + params.bc
    logits -= logits.max(axis=1, keepdims=True)
    expl = np.exp(logits)
    probs = expl / expl.sum(axis=1, keepdims=True)
    return probs, pre, (x, h1, h2, pre, probs)


def classifier_backward(dlogits: np.ndarray, cache, params: ClassifierParams) -> dict[str, np.ndarray]:
    x, h1, h2, pre, _ = cache
    grads = {"wc": dlogits.T @ pre, "bc": dlogits.sum(axis=0)}
    dpre = dlogits @ params.wc
    grads["trunk.wp"] = dpre.T @ h2
    grads["trunk.bp"] = dpre.sum(axis=0)
    dh2 = dpre @ params.trunk.wp
    da2 = dh2 * (1.0 - h2 * h2)
    grads["trunk.w2"] = da2.T @ h1
    grads["trunk.b2"] = da2.sum(axis=0)
    dh1 = da2 @ params.trunk.w2
    da1 = dh1 * (1.0 - h1 * h1)
    grads["trunk.w1"] = da1.T @ x
    grads["trunk.b1"] = da1.sum(axis=0)
    return grads


def classifier_embed(x: np.ndarray, params: ClassifierParams) -> np.ndarray:
    """Unit-norm embeddings from the classifier's penultimate layer."""
    _, pre, _ = classifier_forward(x, params)
    norms = np.linalg.norm(pre, axis=1, keepdims=True)
    if np.any(norms <= _NORM_FLOOR):
        raise ZeroEmbedding("classifier penultimate layer produced a zero vector")
    return (pre / norms).astype(np.float32)
