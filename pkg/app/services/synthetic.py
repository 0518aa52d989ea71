"""
Synthetic videos and random networks.

Stand-ins for real footage and pretrained weights: everything here is
deterministic given its seed.
"""
import logging
from typing import List, Optional, Sequence

import numpy as np

from app.core.exceptions import UsageError
from app.models.network import ConvSpec, FcSpec, LayerSpec, MaxPool, NetworkModel, Relu
from app.models.tensor import DTYPE, Shape, Tensor
from app.schemas.frames import STANDARD_PLAN, FrameSourceSpec

logger = logging.getLogger(__name__)


def _gradient_background(channels: int, size: int) -> np.ndarray:
    ramp = np.linspace(0.0, 1.0, size, dtype=np.float64)
    plane = 0.2 + 0.15 * (ramp[:, None] + ramp[None, :])
    return np.stack([plane * (1.0 - 0.1 * c) for c in range(channels)])


def shifting_square(spec: FrameSourceSpec) -> List[Tensor]:
    rng = np.random.default_rng(spec.seed)
    background = _gradient_background(spec.channels, spec.size)
    side = max(1, spec.size // 4)
    top = (spec.size - side) // 2
    frames = []
    for t in range(spec.frames):
        left = int(round(t * spec.motion))
        columns = (left + np.arange(side)) % spec.size
        frame = background.copy()
        frame[:, top:top + side, columns] = 1.0
        if spec.noise:
            frame += rng.uniform(-spec.noise, spec.noise, frame.shape)
        frames.append(Tensor(frame.astype(DTYPE)))
    return frames


def random_walk(spec: FrameSourceSpec) -> List[Tensor]:
    rng = np.random.default_rng(spec.seed)
    frame = rng.uniform(0.0, 1.0, spec.shape)
    frames = [Tensor(frame.astype(DTYPE))]
    for _ in range(spec.frames - 1):
        frame = frame + spec.motion * rng.standard_normal(spec.shape)
        frames.append(Tensor(frame.astype(DTYPE)))
    return frames


def static(spec: FrameSourceSpec) -> List[Tensor]:
    rng = np.random.default_rng(spec.seed)
    frame = Tensor(rng.uniform(0.0, 1.0, spec.shape).astype(DTYPE))
    return [frame] * spec.frames


GENERATORS = {
    "shifting-square": shifting_square,
    "random-walk": random_walk,
    "static": static,
}


def generate_frames(spec: FrameSourceSpec) -> List[Tensor]:
    frames = GENERATORS[spec.kind](spec)
    logger.debug(f"Generated {len(frames)} {spec.kind} frames of shape {spec.shape}")
    return frames


def _ints(token: str, parts: Sequence[str], required: int, defaults: Sequence[Optional[int]]) -> List[Optional[int]]:
    """Integers of a layer token, optional trailing ones filled from defaults"""
    if not required <= len(parts) <= required + len(defaults):
        raise UsageError(f"bad layer token {token!r}")
    try:
        values: List[Optional[int]] = [int(p) for p in parts]
    except ValueError as e:
        raise UsageError(f"bad layer token {token!r}: {e}") from e
    return values + list(defaults[len(parts) - required:])


def build_random_model(input_shape: Shape, plan: Sequence[str], seed: int = 0) -> NetworkModel:
    """He-initialised network for a plan such as ["conv:8:3", "relu", "fc:10"]"""
    rng = np.random.default_rng(seed)
    layers: List[LayerSpec] = []
    shape = tuple(input_shape)
    for token in plan:
        name, *parts = token.strip().lower().split(":")
        if name == "conv":
            out_channels, kernel, stride, padding = _ints(token, parts, 2, (1, None))
            if padding is None:
                padding = kernel // 2
            fan_in = shape[0] * kernel * kernel
            weights = rng.standard_normal((out_channels, shape[0], kernel, kernel)) * np.sqrt(2.0 / fan_in)
            layer = ConvSpec(weights, rng.uniform(-0.1, 0.1, out_channels), stride=stride, padding=padding)
        elif name == "fc":
            (out_features,) = _ints(token, parts, 1, ())
            fan_in = shape[0] * shape[1] * shape[2]
            weights = rng.standard_normal((out_features, fan_in)) * np.sqrt(2.0 / fan_in)
            layer = FcSpec(weights, rng.uniform(-0.1, 0.1, out_features))
        elif name == "relu" and not parts:
            layer = Relu()
        elif name == "pool":
            kernel, stride = _ints(token, parts, 1, (None,))
            layer = MaxPool(kernel=kernel, stride=stride or kernel)
        else:
            raise UsageError(f"unknown layer token {token!r}")
        shape = layer.output_shape(shape)
        layers.append(layer)
    return NetworkModel(tuple(input_shape), tuple(layers))


def standard_model(input_shape: Shape, seed: int = 0) -> NetworkModel:
    """Fixed five-linear-layer network used by sweeps and calibration"""
    return build_random_model(input_shape, STANDARD_PLAN, seed)
