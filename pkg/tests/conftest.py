"""
Shared fixtures for the runtime tests
"""
import numpy as np
import pytest

from app.models.network import ConvSpec, FcSpec, MaxPool, NetworkModel, Relu
from app.models.tensor import Tensor
from app.schemas.frames import FrameSourceSpec
from app.services import synthetic


@pytest.fixture
def rng():
    """Seeded random generator"""
    return np.random.default_rng(1234)


@pytest.fixture
def toy_model():
    """Two convs, a pool and an FC on 2x8x8 inputs"""
    r = np.random.default_rng(7)
    layers = (
        ConvSpec(r.standard_normal((4, 2, 3, 3)) * 0.3, r.uniform(-0.1, 0.1, 4), padding=1),
        Relu(),
        ConvSpec(r.standard_normal((4, 4, 3, 3)) * 0.3, r.uniform(-0.1, 0.1, 4), stride=2, padding=1),
        Relu(),
        MaxPool(2, 2),
        FcSpec(r.standard_normal((5, 16)) * 0.3, r.uniform(-0.1, 0.1, 5)),
    )
    return NetworkModel((2, 8, 8), layers)


@pytest.fixture
def walk_frames():
    """Short, slow random walk matching toy_model"""
    spec = FrameSourceSpec(kind="random-walk", channels=2, size=8, frames=12, motion=0.05, seed=3)
    return synthetic.generate_frames(spec)


@pytest.fixture
def square_spec():
    """Small shifting-square video"""
    return FrameSourceSpec(kind="shifting-square", channels=1, size=16, frames=16, motion=1.0, noise=0.02, seed=5)


def random_tensor(rng, shape, density=1.0):
    data = rng.standard_normal(shape)
    if density < 1.0:
        data = data * (rng.random(shape) < density)
    return Tensor(data)
