import math

import numpy as np
import pytest
import torch

from geoscaffold.diffusion import (
    CosineSchedule,
    ConditionedDiT,
    DiTBackbone,
    DiTConfig,
    ddim_sample,
    decode_latent,
    encode_latent,
    forward_noise,
    load_checkpoint,
    save_checkpoint,
)
from geoscaffold.diffusion.train import ClipDataset, pretrain_backbone
from geoscaffold.errors import (
    BadDimensions,
    BadMagic,
    NonFiniteLoss,
    ShapeMismatch,
    TruncatedFile,
)

SMALL = DiTConfig(num_layers=4, hidden_dim=32, patch_size=2, num_heads=2,
                  latent_channels=12)


def small_latent(b=1, l=2, h=4, w=4, channels=12, seed=0):
    gen = torch.Generator().manual_seed(seed)
    return torch.randn(b, l, channels, h, w, generator=gen)


# --- codec ---------------------------------------------------------------------------

def test_codec_round_trip_bitwise():
    gen = torch.Generator().manual_seed(0)
    video = torch.rand(2, 3, 3, 32, 48, generator=gen)
    z = encode_latent(video)
    assert torch.equal(decode_latent(z), video)


def test_codec_shapes_480x720():
    video = torch.zeros(1, 1, 3, 480, 720)
    z = encode_latent(video)
    assert z.shape == (1, 1, 192, 60, 90)


def test_codec_constant_video_constant_latent():
    video = torch.full((1, 2, 3, 16, 16), 0.25)
    z = encode_latent(video)
    assert torch.all(z == 0.25)


def test_codec_bad_dimensions():
    with pytest.raises(BadDimensions):
        encode_latent(torch.zeros(1, 1, 3, 30, 32))
    with pytest.raises(BadDimensions):
        decode_latent(torch.zeros(1, 1, 100, 4, 4))


# --- schedule ------------------------------------------------------------------------

def test_schedule_identity_1000_random_t():
    sched = CosineSchedule()
    rng = np.random.default_rng(0)
    for t in rng.uniform(0, 1, size=1000):
        assert abs(sched.alpha(t) ** 2 + sched.sigma(t) ** 2 - 1.0) < 1e-12


def test_schedule_endpoints():
    sched = CosineSchedule()
    assert sched.alpha(0.0) == 1.0
    assert abs(sched.alpha(1.0)) < 1e-15
    assert sched.sigma(0.0) == 0.0
    assert abs(sched.sigma(1.0) - 1.0) < 1e-15


def test_forward_noise_t0_is_z0():
    z0 = small_latent(seed=1)
    eps = small_latent(seed=2)
    assert torch.equal(forward_noise(z0, 0.0, eps), z0)


def test_forward_noise_t1_is_eps():
    z0 = small_latent(seed=3)
    eps = small_latent(seed=4)
    out = forward_noise(z0, 1.0, eps)
    assert torch.allclose(out, eps, atol=1e-9)


def test_forward_noise_unit_variance_monte_carlo():
    gen = torch.Generator().manual_seed(5)
    n = 200_000
    for t in (0.2, 0.5, 0.8):
        z0 = torch.randn(n, generator=gen)
        eps = torch.randn(n, generator=gen)
        x = CosineSchedule().alpha(t) * z0 + CosineSchedule().sigma(t) * eps
        assert abs(float(x.var()) - 1.0) < 0.01


def test_forward_noise_per_sample_t():
    z0 = small_latent(b=3, seed=6)
    eps = small_latent(b=3, seed=7)
    t = torch.tensor([0.0, 0.5, 1.0])
    out = forward_noise(z0, t, eps)
    assert torch.equal(out[0], z0[0])
    assert torch.allclose(out[2], eps[2], atol=1e-6)
    sched = CosineSchedule()
    expected1 = sched.alpha(0.5) * z0[1] + sched.sigma(0.5) * eps[1]
    assert torch.allclose(out[1], expected1, atol=1e-6)


def test_forward_noise_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        forward_noise(small_latent(), 0.5, small_latent(h=8, w=8))


# --- backbone ------------------------------------------------------------------------

def test_backbone_output_shape_and_determinism():
    torch.manual_seed(0)
    backbone = DiTBackbone(SMALL)
    z = small_latent(b=2, seed=8)
    out1 = backbone(z, 0.3)
    out2 = backbone(z, 0.3)
    assert out1.shape == z.shape
    assert torch.equal(out1, out2)


def test_backbone_shape_checks():
    backbone = DiTBackbone(SMALL)
    with pytest.raises(ShapeMismatch):
        backbone(torch.zeros(1, 2, 12, 4), 0.5)
    with pytest.raises(ShapeMismatch):
        backbone(torch.zeros(1, 2, 7, 4, 4), 0.5)
    with pytest.raises(ShapeMismatch):
        backbone(torch.zeros(1, 2, 12, 5, 4), 0.5)


def test_config_validation():
    with pytest.raises(ValueError):
        DiTConfig(num_layers=7)
    with pytest.raises(ValueError):
        DiTConfig(encoder_layers=3)
    with pytest.raises(ValueError):
        DiTConfig(hidden_dim=30, num_heads=4)


# --- conditioning mechanism -----------------------------------------------------------

def test_zero_init_equivalence():
    torch.manual_seed(1)
    model = ConditionedDiT(DiTBackbone(SMALL))
    z = small_latent(b=2, seed=9)
    zr = small_latent(b=2, seed=10)
    with torch.no_grad():
        cond = model(z, 0.4, zr)
        uncond = model.backbone(z, 0.4)
    assert float((cond - uncond).abs().max()) < 1e-12


@pytest.mark.parametrize("m", [4, 8, 12])
def test_injection_index_mapping(m):
    """Backbone block i receives encoder output i // (M/2): first half of
    the blocks get encoder layer 0, second half layer 1."""
    assert [i // (m // 2) for i in range(m)] == [0] * (m // 2) + [1] * (m // 2)
    cfg = DiTConfig(num_layers=m, hidden_dim=32, patch_size=2, num_heads=2,
                    latent_channels=12)
    torch.manual_seed(2)
    model = ConditionedDiT(DiTBackbone(cfg))
    with torch.no_grad():
        model.fuse.weight.copy_(torch.eye(cfg.hidden_dim))
        model.fuse.bias.zero_()
    z = small_latent(seed=11)
    zr = small_latent(seed=12)
    t = torch.tensor([0.3])
    c = model.backbone.time_embedding(t, z)
    feats = model.encoder(z, zr, c)
    manual = model.backbone(
        z, t, injections=[feats[i // (m // 2)] for i in range(m)]
    )
    assert torch.equal(model(z, t, zr), manual)


def test_encoder_clones_first_two_blocks():
    torch.manual_seed(3)
    model = ConditionedDiT(DiTBackbone(SMALL))
    for k in range(2):
        enc = dict(model.encoder.blocks[k].named_parameters())
        bb = dict(model.backbone.blocks[k].named_parameters())
        assert enc.keys() == bb.keys()
        for name in enc:
            assert torch.equal(enc[name], bb[name]), name
    # clones are independent copies, not shared tensors
    assert model.encoder.blocks[0].attn.qkv.weight is not model.backbone.blocks[0].attn.qkv.weight


def test_trainable_set_is_encoder_plus_fusion():
    torch.manual_seed(4)
    model = ConditionedDiT(DiTBackbone(SMALL))
    model.freeze_backbone()
    trainable = {id(p) for p in model.trainable_parameters()}
    expected = {id(p) for p in model.encoder.parameters()} | {
        id(p) for p in model.fuse.parameters()
    }
    assert trainable == expected
    for p in model.backbone.parameters():
        assert not p.requires_grad
    for p in model.trainable_parameters():
        assert p.requires_grad


def test_frozen_backbone_gradients_are_none():
    torch.manual_seed(5)
    model = ConditionedDiT(DiTBackbone(SMALL))
    with torch.no_grad():
        # the output head is zero-initialized; randomize it so gradients
        # can reach the trainable branch at all
        model.backbone.final.weight.normal_(0, 0.1)
        model.fuse.weight.normal_(0, 0.1)
    model.freeze_backbone()
    z = small_latent(seed=13)
    zr = small_latent(seed=14)
    eps = small_latent(seed=15)
    loss = torch.mean((model(z, 0.5, zr) - eps) ** 2)
    loss.backward()
    for name, p in model.backbone.named_parameters():
        assert p.grad is None, name
    grads = [p.grad for p in model.trainable_parameters()]
    assert all(g is not None for g in grads)
    assert any(float(g.abs().sum()) > 0 for g in grads)


def test_encoder_gradients_match_finite_differences():
    """Central finite differences in float64 on a tiny config, relative
    error < 1e-4 on sampled coordinates of every trainable tensor."""
    cfg = DiTConfig(num_layers=2, hidden_dim=16, patch_size=2, num_heads=2,
                    latent_channels=4)
    torch.manual_seed(6)
    model = ConditionedDiT(DiTBackbone(cfg)).double()
    # break the zero inits so fuse/encoder gradients are informative
    with torch.no_grad():
        model.fuse.weight.normal_(0, 0.1, generator=torch.Generator().manual_seed(7))
        model.fuse.bias.normal_(0, 0.1, generator=torch.Generator().manual_seed(8))
        model.backbone.final.weight.normal_(
            0, 0.1, generator=torch.Generator().manual_seed(9)
        )
    model.freeze_backbone()
    z = small_latent(l=1, channels=4, seed=16).double()
    zr = small_latent(l=1, channels=4, seed=17).double()
    eps = small_latent(l=1, channels=4, seed=18).double()

    def loss_value():
        return torch.mean((model(z, 0.37, zr) - eps) ** 2)

    loss = loss_value()
    loss.backward()
    rng = np.random.default_rng(0)
    h = 1e-5
    for p in model.trainable_parameters():
        flat = p.detach().reshape(-1)
        grad = p.grad.reshape(-1)
        for idx in rng.choice(flat.numel(), size=min(3, flat.numel()), replace=False):
            orig = float(flat[idx])
            with torch.no_grad():
                flat[idx] = orig + h
                lp = float(loss_value())
                flat[idx] = orig - h
                lm = float(loss_value())
                flat[idx] = orig
            fd = (lp - lm) / (2 * h)
            scale = max(abs(fd), abs(float(grad[idx])), 1e-8)
            assert abs(fd - float(grad[idx])) / scale < 1e-4


# --- sampler --------------------------------------------------------------------------

def test_ddim_deterministic():
    torch.manual_seed(7)
    model = ConditionedDiT(DiTBackbone(SMALL))
    zT = small_latent(seed=19)
    zr = small_latent(seed=20)
    a = ddim_sample(model, zT, zr, steps=5)
    b = ddim_sample(model, zT, zr, steps=5)
    assert torch.equal(a, b)
    assert a.shape == zT.shape


def test_ddim_single_step_formula():
    torch.manual_seed(8)
    backbone = DiTBackbone(SMALL)
    zT = small_latent(seed=21)
    out = ddim_sample(backbone, zT, None, steps=1)
    sched = CosineSchedule()
    with torch.no_grad():
        eps_hat = backbone(zT, 1.0)
    x0_hat = (zT - sched.sigma(1.0) * eps_hat) / max(sched.alpha(1.0), 0.05)
    expected = sched.alpha(0.0) * x0_hat + sched.sigma(0.0) * eps_hat
    assert torch.allclose(out, expected, atol=1e-6)


def test_ddim_input_validation():
    model = ConditionedDiT(DiTBackbone(SMALL))
    zT = small_latent()
    with pytest.raises(ValueError):
        ddim_sample(model, zT, zT, steps=0)
    with pytest.raises(ShapeMismatch):
        ddim_sample(model, zT, small_latent(h=8, w=8), steps=2)


# --- checkpoint -----------------------------------------------------------------------

def test_checkpoint_round_trip(tmp_path):
    torch.manual_seed(9)
    model = ConditionedDiT(DiTBackbone(SMALL))
    path = tmp_path / "model.gsck"
    save_checkpoint(model, path)
    back = load_checkpoint(path)
    assert back.cfg == model.cfg
    z = small_latent(seed=22)
    zr = small_latent(seed=23)
    with torch.no_grad():
        assert torch.equal(back(z, 0.5, zr), model(z, 0.5, zr))


def test_checkpoint_bad_magic(tmp_path):
    path = tmp_path / "bad.gsck"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(BadMagic):
        load_checkpoint(path)


def test_checkpoint_truncated(tmp_path):
    torch.manual_seed(10)
    model = ConditionedDiT(DiTBackbone(SMALL))
    path = tmp_path / "model.gsck"
    save_checkpoint(model, path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) // 2])
    with pytest.raises(TruncatedFile):
        load_checkpoint(path)


# --- training loop mechanics -----------------------------------------------------------

def tiny_dataset(seed=0, nan=False):
    gen = torch.Generator().manual_seed(seed)
    gt = torch.rand(3, 2, 3, 16, 16, generator=gen)
    render = torch.rand(3, 2, 3, 16, 16, generator=gen)
    if nan:
        gt[0, 0, 0, 0, 0] = float("nan")
    return ClipDataset(gt_videos=gt, render_videos=render)


def test_pretrain_deterministic():
    cfg = DiTConfig(num_layers=2, hidden_dim=16, patch_size=1, num_heads=2,
                    latent_channels=192)
    ds = tiny_dataset()
    _, l1 = pretrain_backbone(ds, cfg, steps=5, batch_size=2, seed=3)
    _, l2 = pretrain_backbone(ds, cfg, steps=5, batch_size=2, seed=3)
    assert l1 == l2
    assert len(l1) == 5


def test_nonfinite_loss_raises():
    cfg = DiTConfig(num_layers=2, hidden_dim=16, patch_size=1, num_heads=2,
                    latent_channels=192)
    with pytest.raises(NonFiniteLoss):
        pretrain_backbone(tiny_dataset(nan=True), cfg, steps=20, batch_size=3)
