"""
Binary model and frame files.

Model file (all integers u32, all floats f32, little-endian):

    "RRMM" | version | layer count | input C | input H | input W
    per layer: kind tag, then
        conv (1):    C_in C_out h_F w_F stride pad | weights[C_out][C_in][h_F][w_F] | bias[C_out]
        fc (2):      C_in C_out | weights[C_out][C_in] | bias[C_out]
        relu (3):    nothing
        maxpool (4): kernel stride

Frame file: C | H | W | data[C][H][W]
"""
import logging
import struct
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

from app.core.exceptions import (
    BadMagicError,
    DataFormatError,
    ShapeMismatchError,
    TrailingBytesError,
    TruncatedDataError,
    UnknownLayerKindError,
    UnsupportedVersionError,
    UsageError,
)
from app.models.network import ConvSpec, FcSpec, LayerSpec, MaxPool, NetworkModel, Relu
from app.models.tensor import Tensor

logger = logging.getLogger(__name__)

MAGIC = b"RRMM"
VERSION = 1
FRAME_SUFFIX = ".frame"

KIND_TAGS = {"conv": 1, "fc": 2, "relu": 3, "maxpool": 4}
TAG_KINDS = {tag: kind for kind, tag in KIND_TAGS.items()}

_F32 = np.dtype("<f4")

PathLike = Union[str, Path]


class _Reader:
    """Cursor over a byte buffer that names what it failed to read"""

    def __init__(self, data: bytes, source: str):
        self.data = data
        self.offset = 0
        self.source = source

    def take(self, count: int, what: str) -> bytes:
        end = self.offset + count
        if end > len(self.data):
            raise TruncatedDataError(
                f"{self.source}: truncated {what} at offset {self.offset}: "
                f"need {count} bytes, {len(self.data) - self.offset} left"
            )
        chunk = self.data[self.offset:end]
        self.offset = end
        return chunk

    def u32(self, count: int, what: str) -> Tuple[int, ...]:
        return struct.unpack(f"<{count}I", self.take(4 * count, what))

    def f32(self, count: int, what: str) -> np.ndarray:
        return np.frombuffer(self.take(4 * count, what), dtype=_F32).astype(np.float32)

    def finish(self):
        if self.offset != len(self.data):
            raise TrailingBytesError(
                f"{self.source}: {len(self.data) - self.offset} trailing bytes at offset {self.offset}"
            )


def _read_layer(reader: _Reader, index: int) -> LayerSpec:
    (tag,) = reader.u32(1, f"layer {index} kind tag")
    kind = TAG_KINDS.get(tag)
    if kind is None:
        raise UnknownLayerKindError(f"{reader.source}: unknown layer kind tag {tag} for layer {index}")

    if kind == "conv":
        c_in, c_out, kh, kw, stride, pad = reader.u32(6, f"layer {index} conv spec")
        weights = reader.f32(c_out * c_in * kh * kw, f"layer {index} conv weights").reshape(c_out, c_in, kh, kw)
        bias = reader.f32(c_out, f"layer {index} conv bias")
        return ConvSpec(weights, bias, stride=stride, padding=pad)
    if kind == "fc":
        c_in, c_out = reader.u32(2, f"layer {index} fc spec")
        weights = reader.f32(c_out * c_in, f"layer {index} fc weights").reshape(c_out, c_in)
        bias = reader.f32(c_out, f"layer {index} fc bias")
        return FcSpec(weights, bias)
    if kind == "maxpool":
        kernel, stride = reader.u32(2, f"layer {index} maxpool spec")
        return MaxPool(kernel=kernel, stride=stride)
    return Relu()


def parse_model(data: bytes, source: str = "<bytes>") -> NetworkModel:
    reader = _Reader(data, source)
    magic = reader.take(4, "magic")
    if magic != MAGIC:
        raise BadMagicError(f"{source}: bad magic {magic!r}, expected {MAGIC!r}")
    (version,) = reader.u32(1, "version")
    if version != VERSION:
        raise UnsupportedVersionError(f"{source}: unsupported model version {version}")
    (layer_count,) = reader.u32(1, "layer count")
    input_shape = reader.u32(3, "input shape")

    layers = []
    for index in range(layer_count):
        try:
            layers.append(_read_layer(reader, index))
        except (UsageError, ShapeMismatchError) as e:
            raise DataFormatError(f"{source}: invalid layer {index}: {e}") from e
    reader.finish()
    # raises LayerChainError when the chain does not fit the declared input
    return NetworkModel(tuple(input_shape), tuple(layers))


def load_model(path: PathLike) -> NetworkModel:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise UsageError(f"cannot read model file {path}: {e}") from e
    model = parse_model(data, str(path))
    logger.info(f"Loaded model {path}: {len(model.layers)} layers, input {model.input_shape}")
    return model


def serialize_model(model: NetworkModel) -> bytes:
    parts = [MAGIC, struct.pack("<5I", VERSION, len(model.layers), *model.input_shape)]
    for layer in model.layers:
        parts.append(struct.pack("<I", KIND_TAGS[layer.kind]))
        if isinstance(layer, ConvSpec):
            kh, kw = layer.kernel
            parts.append(struct.pack(
                "<6I", layer.in_channels, layer.out_channels, kh, kw, layer.stride, layer.padding
            ))
            parts.append(layer.weights.astype(_F32).tobytes())
            parts.append(layer.bias.astype(_F32).tobytes())
        elif isinstance(layer, FcSpec):
            parts.append(struct.pack("<2I", layer.in_features, layer.out_features))
            parts.append(layer.weights.astype(_F32).tobytes())
            parts.append(layer.bias.astype(_F32).tobytes())
        elif isinstance(layer, MaxPool):
            parts.append(struct.pack("<2I", layer.kernel, layer.stride))
    return b"".join(parts)


def save_model(model: NetworkModel, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(serialize_model(model))
    return path


def parse_frame(data: bytes, source: str = "<bytes>") -> Tensor:
    reader = _Reader(data, source)
    c, h, w = reader.u32(3, "frame header")
    values = reader.f32(c * h * w, "frame data")
    reader.finish()
    return Tensor(values.reshape(c, h, w))


def save_frame(frame: Tensor, path: PathLike) -> Path:
    path = Path(path)
    path.write_bytes(struct.pack("<3I", *frame.shape) + frame.data.astype(_F32).tobytes())
    return path


def save_frames(frames: Sequence[Tensor], directory: PathLike) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for index, frame in enumerate(frames):
        save_frame(frame, directory / f"frame_{index:06d}{FRAME_SUFFIX}")
    return directory


def load_frames(directory: PathLike) -> List[Tensor]:
    """All regular files of a directory, in lexicographic name order"""
    directory = Path(directory)
    if not directory.is_dir():
        raise UsageError(f"frame directory {directory} does not exist")
    frames: List[Tensor] = []
    for path in sorted(p for p in directory.iterdir() if p.is_file()):
        frame = parse_frame(path.read_bytes(), str(path))
        if frames and frame.shape != frames[0].shape:
            raise DataFormatError(f"{path}: frame shape {frame.shape} differs from {frames[0].shape}")
        frames.append(frame)
    if not frames:
        raise UsageError(f"frame directory {directory} holds no frames")
    logger.info(f"Loaded {len(frames)} frames of shape {frames[0].shape} from {directory}")
    return frames
