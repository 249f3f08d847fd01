from .codec import CODEC_FACTOR, LATENT_CHANNELS, decode_latent, encode_latent
from .schedule import CosineSchedule, forward_noise
from .model import ConditionedDiT, DiTBackbone, DiTConfig
from .sample import ddim_sample
from .checkpoint import load_checkpoint, save_checkpoint
from .train import (
    ClipDataset,
    eval_eps_mse,
    make_dataset,
    pretrain_backbone,
    train_condition_encoder,
)

__all__ = [
    "CODEC_FACTOR",
    "LATENT_CHANNELS",
    "encode_latent",
    "decode_latent",
    "CosineSchedule",
    "forward_noise",
    "DiTConfig",
    "DiTBackbone",
    "ConditionedDiT",
    "ddim_sample",
    "save_checkpoint",
    "load_checkpoint",
    "ClipDataset",
    "make_dataset",
    "pretrain_backbone",
    "train_condition_encoder",
    "eval_eps_mse",
]
