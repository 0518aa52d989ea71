"""
Calibration data for the error model: (e_t, measured feature error) pairs
collected by running the engine and a dense reference side by side with
keyframes disabled.
"""
import logging
from typing import Callable, List, Sequence, Tuple

from app.core.exceptions import UsageError
from app.models.network import NetworkModel
from app.models.tensor import Tensor
from app.services.metrics import l2_distance
from app.services.rrm_engine import RRMState, delta_forward, dense_forward, keyframe_forward

logger = logging.getLogger(__name__)

FeatureErrorMetric = Callable[[Tensor, Tensor], float]


def calibrate(
    model_net: NetworkModel,
    videos: Sequence[Sequence[Tensor]],
    epsilon: float,
    feature_error_metric: FeatureErrorMetric = l2_distance,
) -> List[Tuple[float, float]]:
    if not videos:
        raise UsageError("calibration needs at least one video")

    pairs: List[Tuple[float, float]] = []
    for video_index, video in enumerate(videos):
        state = RRMState()
        for frame in video:
            if state.initialized:
                result = delta_forward(model_net, frame, state, epsilon)
            else:
                result = keyframe_forward(model_net, frame, state)
            reference = dense_forward(model_net, frame)
            pairs.append((state.accumulator.e_t, feature_error_metric(result.features, reference)))
        logger.info(f"Calibration video {video_index}: {state.frame_index} frames, final e_t={state.accumulator.e_t:.4e}")
    return pairs
