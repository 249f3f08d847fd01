"""Shared fixtures.

The trained toy models are expensive (a few minutes of CPU training), so
they are built once per session and shared between the module tests and
the acceptance suite.
"""

import time

import pytest
import torch

from geoscaffold.diffusion.model import ConditionedDiT
from geoscaffold.diffusion.train import (
    make_dataset,
    pretrain_backbone,
    train_condition_encoder,
)

TRAIN_CLIPS = 200
VAL_CLIPS = 20
PRETRAIN_STEPS = 2000
ENCODER_STEPS = 2000


@pytest.fixture(scope="session")
def training_seconds():
    """Accumulated wall time of dataset generation and training."""
    return {"total": 0.0}


@pytest.fixture(scope="session")
def train_dataset(training_seconds):
    t0 = time.monotonic()
    ds = make_dataset(TRAIN_CLIPS, seed=1)
    training_seconds["total"] += time.monotonic() - t0
    return ds


@pytest.fixture(scope="session")
def val_dataset(training_seconds):
    t0 = time.monotonic()
    ds = make_dataset(VAL_CLIPS, seed=2)
    training_seconds["total"] += time.monotonic() - t0
    return ds


@pytest.fixture(scope="session")
def trained_backbone(train_dataset, training_seconds):
    t0 = time.monotonic()
    backbone, losses = pretrain_backbone(train_dataset, steps=PRETRAIN_STEPS)
    training_seconds["total"] += time.monotonic() - t0
    backbone.pretrain_losses = losses
    return backbone


@pytest.fixture(scope="session")
def conditioned_model(trained_backbone, train_dataset, training_seconds):
    torch.manual_seed(0)
    model = ConditionedDiT(trained_backbone)
    t0 = time.monotonic()
    losses = train_condition_encoder(model, train_dataset, steps=ENCODER_STEPS)
    training_seconds["total"] += time.monotonic() - t0
    model.encoder_losses = losses
    model.eval()
    return model
