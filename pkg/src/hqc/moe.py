"""Desk-scale routed-expert kernel.

Two routing styles over (H, W, C) float64 feature maps:

  * task-routed ("H" blocks): one expert MLP per restoration task, every
    position goes through the task's expert
  * patch-routed ("S" blocks): the map is tiled into P x P patches, each
    patch is described by its mean feature and a learned gate mixes the
    top-k experts for the whole patch

A block computes x + moe(mixer(x)). The mixer is the identity by default;
a non-shifted window attention is available for shape parity with the
reference architecture. Everything is float64 and seeded, so outputs are
reproducible to the byte.

The patch router has an analytic backward pass used only by the finite
difference gradient check; there is no training loop here.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import erf

__all__ = [
    "Expert", "Gating", "HMoE", "SMoE", "WindowAttention", "Block",
    "ModelConfig", "Model", "RoutingTieError",
    "gelu", "gelu_grad", "softmax", "expert_forward", "gate_weights",
    "hmoe_forward", "smoe_forward", "window_attention_forward",
    "add_task_embedding", "build_model", "model_forward", "routing_histogram",
    "smoe_grad_check", "loss_sum", "make_weighted_loss",
    "save_params", "load_params",
]


class RoutingTieError(RuntimeError):
    """Gate scores too close to separate the top-k set from the rest."""


def gelu(x):
    """Exact Gaussian-error-linear unit (no tanh shortcut)."""
    x = np.asarray(x, np.float64)
    return 0.5 * x * (1.0 + erf(x / math.sqrt(2.0)))


def gelu_grad(x):
    x = np.asarray(x, np.float64)
    phi = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    return 0.5 * (1.0 + erf(x / math.sqrt(2.0))) + x * phi


def softmax(z):
    z = np.asarray(z, np.float64)
    e = np.exp(z - z.max())
    return e / e.sum()


# --------- experts and gating ---------

@dataclass
class Expert:
    """Two-layer position-wise MLP, hidden width = expansion * channels."""
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray


def expert_forward(expert: Expert, tokens: np.ndarray) -> np.ndarray:
    """tokens (n, C) -> (n, C)."""
    return gelu(tokens @ expert.w1 + expert.b1) @ expert.w2 + expert.b2


@dataclass
class Gating:
    wg: np.ndarray          # (n_experts, channels)
    top_k: int = 1
    renormalize: bool = False

    def __post_init__(self):
        if not 1 <= self.top_k <= self.wg.shape[0]:
            raise ValueError(f"top_k {self.top_k} out of range for {self.wg.shape[0]} experts")


def gate_weights(gate: Gating, descriptor: np.ndarray):
    """Mixture weights for one patch descriptor.

    Returns (weights, order): weights holds the softmax scores of the top-k
    experts (zero elsewhere, no renormalization unless asked) and order is
    the full ranking, ties resolved toward the lower expert index.
    """
    s = softmax(gate.wg @ descriptor)
    order = np.argsort(-s, kind="stable")
    w = np.zeros_like(s)
    kept = order[:gate.top_k]
    w[kept] = s[kept]
    if gate.renormalize:
        w /= w.sum()
    return w, order


@dataclass
class HMoE:
    """Task-routed bank: experts[t] serves every position of task t."""
    experts: list


def hmoe_forward(layer: HMoE, x: np.ndarray, task: int) -> np.ndarray:
    if not 0 <= task < len(layer.experts):
        raise ValueError(f"task {task} out of range for {len(layer.experts)} experts")
    h, w, c = x.shape
    return expert_forward(layer.experts[task], x.reshape(-1, c)).reshape(h, w, c)


@dataclass
class SMoE:
    """Patch-routed bank: a gate picks top-k experts per P x P patch."""
    experts: list
    gate: Gating
    patch: int = 7


def _pad_to_tiles(x, p):
    h, w = x.shape[:2]
    ph, pw = (-h) % p, (-w) % p
    if ph or pw:
        x = np.pad(x, ((0, ph), (0, pw), (0, 0)), mode="edge")
    return x


def smoe_forward(layer: SMoE, x: np.ndarray):
    """x (H, W, C) -> (out (H, W, C), top-1 patch counts (n_experts,)).

    Maps not divisible by the patch size are edge-padded for routing and
    cropped back afterwards; padded cells never reach the output.
    """
    h, w, c = x.shape
    p = layer.patch
    xp = _pad_to_tiles(x, p)
    out = np.zeros_like(xp)
    counts = np.zeros(len(layer.experts), np.int64)
    for i in range(0, xp.shape[0], p):
        for j in range(0, xp.shape[1], p):
            tokens = xp[i:i + p, j:j + p].reshape(-1, c)
            weights, order = gate_weights(layer.gate, tokens.mean(axis=0))
            counts[order[0]] += 1
            acc = np.zeros_like(tokens)
            for e in np.flatnonzero(weights):
                acc += weights[e] * expert_forward(layer.experts[e], tokens)
            out[i:i + p, j:j + p] = acc.reshape(p, p, c)
    return out[:h, :w], counts


# --------- mixer ---------

@dataclass
class WindowAttention:
    """Single-head attention inside non-overlapping windows (no shift)."""
    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    wo: np.ndarray
    window: int = 7


def window_attention_forward(attn: WindowAttention, x: np.ndarray) -> np.ndarray:
    h, w, c = x.shape
    p = attn.window
    xp = _pad_to_tiles(x, p)
    out = np.empty_like(xp)
    scale = 1.0 / math.sqrt(c)
    for i in range(0, xp.shape[0], p):
        for j in range(0, xp.shape[1], p):
            t = xp[i:i + p, j:j + p].reshape(-1, c)
            q, k, v = t @ attn.wq, t @ attn.wk, t @ attn.wv
            logits = q @ k.T * scale
            logits -= logits.max(axis=1, keepdims=True)
            a = np.exp(logits)
            a /= a.sum(axis=1, keepdims=True)
            out[i:i + p, j:j + p] = ((a @ v) @ attn.wo).reshape(p, p, c)
    return out[:h, :w]


# --------- model assembly ---------

@dataclass
class ModelConfig:
    depth: int = 4
    channels: int = 16
    n_tasks: int = 4
    n_experts: int = 16
    top_k: int = 1
    patch: int = 7
    expansion: int = 2
    mixer: str = "identity"     # or "window_attn"
    pattern: str = "HS"         # block kinds, cycled to depth
    renormalize: bool = False
    seed: int = 0

    def __post_init__(self):
        if min(self.depth, self.channels, self.n_tasks, self.n_experts,
               self.patch, self.expansion) < 1:
            raise ValueError("all size fields must be >= 1")
        if not 1 <= self.top_k <= self.n_experts:
            raise ValueError(f"top_k must be in [1, {self.n_experts}]")
        if self.mixer not in ("identity", "window_attn"):
            raise ValueError(f"mixer must be identity|window_attn, got {self.mixer!r}")
        if not self.pattern or set(self.pattern) - {"H", "S"}:
            raise ValueError(f"pattern must be a nonempty string of H and S, got {self.pattern!r}")


@dataclass
class Block:
    kind: str                   # "H" or "S"
    mixer: WindowAttention | None
    moe: HMoE | SMoE


@dataclass
class Model:
    config: ModelConfig
    task_embed: np.ndarray      # (n_tasks, channels)
    blocks: list = field(default_factory=list)


def _dense(rng, rows, cols, fan_in):
    return rng.normal(0.0, 1.0 / math.sqrt(fan_in), (rows, cols))


def _make_expert(rng, channels, expansion):
    hidden = channels * expansion
    return Expert(
        w1=_dense(rng, channels, hidden, channels),
        b1=np.zeros(hidden),
        w2=_dense(rng, hidden, channels, hidden),
        b2=np.zeros(channels),
    )


def build_model(config: ModelConfig) -> Model:
    """Seeded init: weights ~ N(0, 1/fan_in), zero biases, 0.02 embeddings."""
    rng = np.random.default_rng(config.seed)
    c = config.channels
    task_embed = rng.normal(0.0, 0.02, (config.n_tasks, c))
    blocks = []
    for i in range(config.depth):
        kind = config.pattern[i % len(config.pattern)]
        mixer = None
        if config.mixer == "window_attn":
            mixer = WindowAttention(
                wq=_dense(rng, c, c, c), wk=_dense(rng, c, c, c),
                wv=_dense(rng, c, c, c), wo=_dense(rng, c, c, c),
                window=config.patch)
        if kind == "H":
            moe = HMoE([_make_expert(rng, c, config.expansion)
                        for _ in range(config.n_tasks)])
        else:
            moe = SMoE([_make_expert(rng, c, config.expansion)
                        for _ in range(config.n_experts)],
                       Gating(_dense(rng, config.n_experts, c, c),
                              top_k=config.top_k,
                              renormalize=config.renormalize),
                       patch=config.patch)
        blocks.append(Block(kind=kind, mixer=mixer, moe=moe))
    return Model(config=config, task_embed=task_embed, blocks=blocks)


def add_task_embedding(x: np.ndarray, task_embed: np.ndarray, task: int) -> np.ndarray:
    if not 0 <= task < task_embed.shape[0]:
        raise ValueError(f"task {task} out of range for {task_embed.shape[0]} tasks")
    return np.asarray(x, np.float64) + task_embed[task]


def model_forward(model: Model, x: np.ndarray, task: int):
    """x (H, W, C) -> (out, histogram (n_tasks, n_experts)).

    The histogram row for `task` accumulates the patch router's top-1
    counts; task-routed blocks are deterministic and not counted.
    """
    cfg = model.config
    x = np.asarray(x, np.float64)
    if x.ndim != 3 or x.shape[2] != cfg.channels:
        raise ValueError(f"expected (H, W, {cfg.channels}) features, got {x.shape}")
    x = add_task_embedding(x, model.task_embed, task)
    hist = np.zeros((cfg.n_tasks, cfg.n_experts), np.int64)
    for blk in model.blocks:
        h = x if blk.mixer is None else window_attention_forward(blk.mixer, x)
        if blk.kind == "H":
            y = hmoe_forward(blk.moe, h, task)
        else:
            y, counts = smoe_forward(blk.moe, h)
            hist[task] += counts
        x = x + y
    return x, hist


def routing_histogram(model: Model, batch) -> np.ndarray:
    """Accumulated patch-routing histogram over (features, task) pairs."""
    cfg = model.config
    hist = np.zeros((cfg.n_tasks, cfg.n_experts), np.int64)
    for x, task in batch:
        _, h = model_forward(model, x, task)
        hist += h
    return hist


# --------- gradient check ---------

def loss_sum(out):
    return float(out.sum()), np.ones_like(out)


def make_weighted_loss(weights):
    w = np.asarray(weights, np.float64)

    def loss(out):
        if w.shape != out.shape:
            raise ValueError(f"weight shape {w.shape} != output shape {out.shape}")
        return float((w * out).sum()), w.copy()

    return loss


def _smoe_params(layer: SMoE):
    yield "gate.wg", layer.gate.wg
    for e, ex in enumerate(layer.experts):
        for name in ("w1", "b1", "w2", "b2"):
            yield f"expert{e}.{name}", getattr(ex, name)


def _smoe_backward(layer: SMoE, x: np.ndarray, d_out: np.ndarray, margin_tol: float):
    """Analytic parameter gradients of sum(d_out * smoe_forward(layer, x)).

    The top-k set must be locally stable: a score gap below margin_tol
    between rank k and rank k+1 raises RoutingTieError, since a finite
    difference step could flip the routing and the gradient would be
    meaningless there.
    """
    h, w, c = x.shape
    p = layer.patch
    xp = _pad_to_tiles(x, p)
    dp = np.zeros_like(xp)
    dp[:h, :w] = d_out
    gate = layer.gate
    n_exp = len(layer.experts)
    grads = {name: np.zeros_like(arr) for name, arr in _smoe_params(layer)}

    for i in range(0, xp.shape[0], p):
        for j in range(0, xp.shape[1], p):
            tokens = xp[i:i + p, j:j + p].reshape(-1, c)
            dy = dp[i:i + p, j:j + p].reshape(-1, c)
            d = tokens.mean(axis=0)
            s = softmax(gate.wg @ d)
            order = np.argsort(-s, kind="stable")
            kept = order[:gate.top_k]
            if gate.top_k < n_exp:
                gap = s[order[gate.top_k - 1]] - s[order[gate.top_k]]
                if gap < margin_tol:
                    raise RoutingTieError(
                        f"top-{gate.top_k} margin {gap:.2e} below {margin_tol:.0e}")

            norm = s[kept].sum() if gate.renormalize else 1.0
            g = np.zeros(n_exp)     # direct dL/d(mixture weight)
            for e in kept:
                ex = layer.experts[e]
                z = tokens @ ex.w1 + ex.b1
                a = gelu(z)
                out_e = a @ ex.w2 + ex.b2
                g[e] = float((dy * out_e).sum())
                de = (s[e] / norm) * dy
                grads[f"expert{e}.w2"] += a.T @ de
                grads[f"expert{e}.b2"] += de.sum(axis=0)
                dz = (de @ ex.w2.T) * gelu_grad(z)
                grads[f"expert{e}.w1"] += tokens.T @ dz
                grads[f"expert{e}.b1"] += dz.sum(axis=0)

            ds = np.zeros(n_exp)
            if gate.renormalize:
                inner = float((g[kept] * s[kept]).sum()) / (norm * norm)
                ds[kept] = g[kept] / norm - inner
            else:
                ds[kept] = g[kept]
            dlogits = s * (ds - float((ds * s).sum()))
            grads["gate.wg"] += np.outer(dlogits, d)
    return grads


def smoe_grad_check(layer: SMoE, feats: np.ndarray, loss_fn=loss_sum,
                    eps: float = 1e-3, margin_tol: float = 1e-3) -> float:
    """Largest relative gap between analytic and central-difference grads.

    Per parameter tensor the gap is max|a - f| / max(max|a|, max|f|, 1e-8);
    the return value is the worst tensor's gap.
    """
    feats = np.asarray(feats, np.float64)
    out, _ = smoe_forward(layer, feats)
    _, d_out = loss_fn(out)
    analytic = _smoe_backward(layer, feats, d_out, margin_tol)

    worst = 0.0
    for name, arr in _smoe_params(layer):
        fd = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            keep = arr[idx]
            arr[idx] = keep + eps
            hi, _ = loss_fn(smoe_forward(layer, feats)[0])
            arr[idx] = keep - eps
            lo, _ = loss_fn(smoe_forward(layer, feats)[0])
            arr[idx] = keep
            fd[idx] = (hi - lo) / (2.0 * eps)
        a = analytic[name]
        denom = max(float(np.abs(a).max(initial=0.0)),
                    float(np.abs(fd).max(initial=0.0)), 1e-8)
        worst = max(worst, float(np.abs(a - fd).max(initial=0.0)) / denom)
    return worst


# --------- persistence ---------

def _pack(arr):
    return {"shape": list(arr.shape), "data": np.asarray(arr, np.float64).ravel().tolist()}


def _unpack(d):
    return np.array(d["data"], np.float64).reshape(d["shape"])


def _pack_expert(ex):
    return {k: _pack(getattr(ex, k)) for k in ("w1", "b1", "w2", "b2")}


def _unpack_expert(d):
    return Expert(**{k: _unpack(d[k]) for k in ("w1", "b1", "w2", "b2")})


def save_params(model: Model, path) -> None:
    blocks = []
    for blk in model.blocks:
        b = {"kind": blk.kind}
        if blk.mixer is not None:
            b["mixer"] = {k: _pack(getattr(blk.mixer, k)) for k in ("wq", "wk", "wv", "wo")}
            b["mixer"]["window"] = blk.mixer.window
        if blk.kind == "H":
            b["experts"] = [_pack_expert(e) for e in blk.moe.experts]
        else:
            b["experts"] = [_pack_expert(e) for e in blk.moe.experts]
            b["gate"] = _pack(blk.moe.gate.wg)
            b["patch"] = blk.moe.patch
        blocks.append(b)
    doc = {"config": asdict(model.config), "task_embed": _pack(model.task_embed),
           "blocks": blocks}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f)


def load_params(path) -> Model:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    cfg = ModelConfig(**doc["config"])
    blocks = []
    for b in doc["blocks"]:
        mixer = None
        if "mixer" in b:
            m = b["mixer"]
            mixer = WindowAttention(wq=_unpack(m["wq"]), wk=_unpack(m["wk"]),
                                    wv=_unpack(m["wv"]), wo=_unpack(m["wo"]),
                                    window=m["window"])
        experts = [_unpack_expert(e) for e in b["experts"]]
        if b["kind"] == "H":
            moe = HMoE(experts)
        else:
            moe = SMoE(experts,
                       Gating(_unpack(b["gate"]), top_k=cfg.top_k,
                              renormalize=cfg.renormalize),
                       patch=b["patch"])
        blocks.append(Block(kind=b["kind"], mixer=mixer, moe=moe))
    return Model(config=cfg, task_embed=_unpack(doc["task_embed"]), blocks=blocks)
