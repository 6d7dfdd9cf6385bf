import math

import numpy as np
import pytest

from hqc import moe


def small_layer(rng, channels=3, n_experts=4, top_k=1, patch=3,
                renormalize=False):
    return moe.SMoE(
        [moe.Expert(w1=rng.normal(0, 0.5, (channels, 2 * channels)),
                    b1=rng.normal(0, 0.1, 2 * channels),
                    w2=rng.normal(0, 0.5, (2 * channels, channels)),
                    b2=rng.normal(0, 0.1, channels))
         for _ in range(n_experts)],
        moe.Gating(rng.normal(0, 0.7, (n_experts, channels)),
                   top_k=top_k, renormalize=renormalize),
        patch=patch)


# --------- gating ---------

def softmax_oracle(logits):
    e = [math.exp(v - max(logits)) for v in logits]
    return [v / sum(e) for v in e]


def test_gate_matches_softmax_oracle(rng):
    gate = moe.Gating(rng.normal(0, 1, (5, 4)), top_k=2)
    d = rng.normal(0, 1, 4)
    w, order = moe.gate_weights(gate, d)
    s = softmax_oracle(list(gate.wg @ d))
    ranked = sorted(range(5), key=lambda i: -s[i])
    assert list(order[:2]) == ranked[:2]
    for i in range(5):
        want = s[i] if i in ranked[:2] else 0.0
        assert w[i] == pytest.approx(want, abs=1e-12)


def test_pre_truncation_weights_sum_to_one(rng):
    gate = moe.Gating(rng.normal(0, 1, (6, 4)), top_k=1)
    d = rng.normal(0, 1, 4)
    s = softmax_oracle(list(gate.wg @ d))
    assert abs(sum(s) - 1.0) <= 1e-9
    w, _ = moe.gate_weights(gate, d)
    assert 0.0 < w.sum() < 1.0      # truncation drops mass, no renorm


def test_gate_k_equals_n_is_dense(rng):
    gate = moe.Gating(rng.normal(0, 1, (5, 4)), top_k=5)
    d = rng.normal(0, 1, 4)
    w, _ = moe.gate_weights(gate, d)
    assert np.allclose(w, softmax_oracle(list(gate.wg @ d)), atol=1e-12)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)


def test_gate_renormalize(rng):
    gate = moe.Gating(rng.normal(0, 1, (5, 4)), top_k=2, renormalize=True)
    w, _ = moe.gate_weights(gate, rng.normal(0, 1, 4))
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    assert (w > 0).sum() == 2


def test_tie_routes_to_lowest_index():
    gate = moe.Gating(np.zeros((4, 3)), top_k=2)
    w, order = moe.gate_weights(gate, np.ones(3))
    assert list(order) == [0, 1, 2, 3]
    assert w[0] == w[1] == 0.25 and w[2] == w[3] == 0.0


def test_gating_validation(rng):
    with pytest.raises(ValueError):
        moe.Gating(rng.normal(0, 1, (3, 4)), top_k=4)


# --------- layers ---------

def test_smoe_k1_output_is_wmax_times_argmax_expert(rng):
    layer = small_layer(rng, top_k=1)
    x = rng.normal(0, 1, (3, 3, 3))
    out, counts = moe.smoe_forward(layer, x)
    tokens = x.reshape(-1, 3)
    s = softmax_oracle(list(layer.gate.wg @ tokens.mean(axis=0)))
    j = int(np.argmax(s))
    want = s[j] * moe.expert_forward(layer.experts[j], tokens)
    assert np.abs(out.reshape(-1, 3) - want).max() < 1e-12
    assert counts[j] == 1 and counts.sum() == 1


def test_smoe_k_equals_n_matches_dense_mixture(rng):
    layer = small_layer(rng, n_experts=4, top_k=4)
    x = rng.normal(0, 1, (3, 6, 3))
    out, _ = moe.smoe_forward(layer, x)
    for p in range(2):
        tokens = x[:, 3 * p:3 * p + 3].reshape(-1, 3)
        s = softmax_oracle(list(layer.gate.wg @ tokens.mean(axis=0)))
        dense = sum(s[j] * moe.expert_forward(layer.experts[j], tokens)
                    for j in range(4))
        assert np.abs(out[:, 3 * p:3 * p + 3].reshape(-1, 3) - dense).max() < 1e-6


def test_smoe_patch_count_14x14_p7(rng):
    layer = small_layer(rng, channels=2, patch=7)
    x = rng.normal(0, 1, (14, 14, 2))
    _, counts = moe.smoe_forward(layer, x)
    assert counts.sum() == (14 * 14) // (7 * 7) == 4


def test_smoe_pads_odd_sizes(rng):
    layer = small_layer(rng, patch=3)
    x = rng.normal(0, 1, (4, 5, 3))
    out, counts = moe.smoe_forward(layer, x)
    assert out.shape == x.shape
    assert counts.sum() == 4            # ceil(4/3) * ceil(5/3)


def test_hmoe_task_isolation(rng):
    layer = moe.HMoE([moe.Expert(w1=rng.normal(0, 1, (3, 6)), b1=np.zeros(6),
                                 w2=rng.normal(0, 1, (6, 3)), b2=np.zeros(3))
                      for _ in range(4)])
    x = rng.normal(0, 1, (5, 5, 3))
    before = moe.hmoe_forward(layer, x, task=1)
    layer.experts[2].w1 += 100.0        # untouched task must not move
    after = moe.hmoe_forward(layer, x, task=1)
    assert np.array_equal(before, after)
    assert not np.array_equal(moe.hmoe_forward(layer, x, task=2), before)
    with pytest.raises(ValueError):
        moe.hmoe_forward(layer, x, task=4)


# --------- model assembly ---------

def test_config_validation():
    with pytest.raises(ValueError):
        moe.ModelConfig(pattern="HX")
    with pytest.raises(ValueError):
        moe.ModelConfig(top_k=0)
    with pytest.raises(ValueError):
        moe.ModelConfig(mixer="mlp")
    with pytest.raises(ValueError):
        moe.ModelConfig(depth=0)


def test_model_forward_contract(rng):
    model = moe.build_model(moe.ModelConfig())
    x = rng.normal(0, 1, (14, 14, 16))
    out, hist = moe.model_forward(model, x, task=1)
    assert out.shape == x.shape and out.dtype == np.float64
    assert hist.shape == (4, 16)
    # pattern HS over depth 4 gives two patch-routed blocks of 4 patches
    assert hist.sum() == 8 and hist[1].sum() == 8
    assert hist[[0, 2, 3]].sum() == 0


def test_model_forward_deterministic(rng):
    model = moe.build_model(moe.ModelConfig(seed=3))
    model2 = moe.build_model(moe.ModelConfig(seed=3))
    x = rng.normal(0, 1, (14, 14, 16))
    a, ha = moe.model_forward(model, x, task=0)
    b, hb = moe.model_forward(model2, x, task=0)
    assert np.array_equal(a, b) and np.array_equal(ha, hb)


def test_zero_experts_leave_residual_plus_embedding(rng):
    model = moe.build_model(moe.ModelConfig())
    for blk in model.blocks:
        for ex in blk.moe.experts:
            ex.w1[:] = 0.0
            ex.w2[:] = 0.0
    x = rng.normal(0, 1, (14, 14, 16))
    out, _ = moe.model_forward(model, x, task=2)
    assert np.array_equal(out, x + model.task_embed[2])


def test_window_attention_mixer_runs(rng):
    cfg = moe.ModelConfig(depth=2, channels=4, n_experts=4, patch=2,
                          mixer="window_attn")
    model = moe.build_model(cfg)
    x = rng.normal(0, 1, (5, 6, 4))
    out, _ = moe.model_forward(model, x, task=0)
    assert out.shape == x.shape


def test_routing_histogram_accumulates(rng):
    model = moe.build_model(moe.ModelConfig(depth=2, channels=4, n_experts=4,
                                            patch=2))
    xs = [rng.normal(0, 1, (4, 4, 4)) for _ in range(3)]
    hist = moe.routing_histogram(model, [(xs[0], 0), (xs[1], 0), (xs[2], 3)])
    # depth 2, pattern HS -> one S block; 4 patches per 4x4 map
    assert hist[0].sum() == 8 and hist[3].sum() == 4


def test_task_embedding_bounds(rng):
    model = moe.build_model(moe.ModelConfig())
    x = rng.normal(0, 1, (14, 14, 16))
    with pytest.raises(ValueError):
        moe.model_forward(model, x, task=4)
    with pytest.raises(ValueError):
        moe.model_forward(model, rng.normal(0, 1, (14, 14, 8)), task=0)


# --------- gradient check ---------

def test_grad_check_small_instances():
    worst = 0.0
    for t in range(6):
        rng = np.random.default_rng(50 + t)
        layer = small_layer(rng, top_k=1 + t % 2, renormalize=t >= 4)
        feats = rng.normal(0, 1, (6, 3, 3))
        loss = moe.make_weighted_loss(rng.normal(0, 1, feats.shape))
        worst = max(worst, moe.smoe_grad_check(layer, feats, loss))
    assert worst < 1e-4


def test_grad_check_refuses_ties(rng):
    layer = small_layer(rng)
    layer.gate.wg[:] = 0.0          # exact tie across all experts
    feats = rng.normal(0, 1, (3, 3, 3))
    with pytest.raises(moe.RoutingTieError):
        moe.smoe_grad_check(layer, feats, moe.loss_sum)


def test_grad_check_dense_k_ignores_margin(rng):
    layer = small_layer(rng, n_experts=3, top_k=3)
    layer.gate.wg[:] = 0.0          # tied but dense: no truncation boundary
    feats = rng.normal(0, 1, (3, 3, 3))
    assert moe.smoe_grad_check(layer, feats, moe.loss_sum) < 1e-4


def test_zero_loss_gives_zero_gradients(rng):
    layer = small_layer(rng)

    def zero_loss(out):
        return 0.0, np.zeros_like(out)

    assert moe.smoe_grad_check(layer, rng.normal(0, 1, (3, 3, 3)), zero_loss) == 0.0


def test_gelu_values():
    assert moe.gelu(0.0) == 0.0
    # gelu(1) = 0.5 * (1 + erf(1/sqrt(2))) = Phi(1); known value
    assert moe.gelu(np.array([1.0]))[0] == pytest.approx(0.8413447460685429, abs=1e-12)
    x = np.linspace(-3, 3, 13)
    fd = (moe.gelu(x + 1e-6) - moe.gelu(x - 1e-6)) / 2e-6
    assert np.abs(moe.gelu_grad(x) - fd).max() < 1e-8


# --------- persistence ---------

def test_save_load_roundtrip(rng, tmp_path):
    cfg = moe.ModelConfig(depth=3, channels=4, n_experts=4, patch=2,
                          mixer="window_attn", seed=9)
    model = moe.build_model(cfg)
    x = rng.normal(0, 1, (6, 6, 4))
    a, ha = moe.model_forward(model, x, task=1)
    p = tmp_path / "params.json"
    moe.save_params(model, p)
    again = moe.load_params(p)
    b, hb = moe.model_forward(again, x, task=1)
    assert np.array_equal(a, b) and np.array_equal(ha, hb)
