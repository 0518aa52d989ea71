"""
Run Endpoints
Synthetic runs and threshold sweeps over HTTP
"""
import logging
from typing import Tuple

from fastapi import APIRouter, HTTPException

from app.core.exceptions import RRMError, UsageError
from app.models.network import NetworkModel
from app.schemas.frames import FrameSourceSpec, ModelPlan
from app.schemas.report import RunReport, SweepReport
from app.schemas.run import RunRequest, SweepRequest
from app.services import run_service, synthetic

logger = logging.getLogger(__name__)

router = APIRouter()


def _inputs(source: FrameSourceSpec, plan: ModelPlan) -> Tuple[NetworkModel, list]:
    frames = synthetic.generate_frames(source)
    model = synthetic.build_random_model(source.shape, plan.layers, seed=plan.seed)
    return model, frames


def _http_error(e: RRMError) -> HTTPException:
    status_code = 400 if e.exit_code == UsageError.exit_code else 422
    return HTTPException(status_code=status_code, detail=f"{type(e).__name__}: {e}")


@router.post("/runs", response_model=RunReport)
def create_run(request: RunRequest):
    """
    Process a synthetic video and return its run report.

    Args:
        request: Source spec, model plan and run options

    Returns:
        Run report (schema v1)
    """
    try:
        model, frames = _inputs(request.source, request.model)
        return run_service.cmd_run(
            model,
            frames,
            epsilon=request.epsilon,
            chunks=request.chunks,
            oracle=request.oracle,
            include_keyframes=request.include_keyframes,
            keyframe_interval=request.keyframe_interval,
            source=request.source,
        )
    except RRMError as e:
        logger.warning(f"Run rejected: {e}")
        raise _http_error(e)


@router.post("/sweeps", response_model=SweepReport)
def create_sweep(request: SweepRequest):
    """Run one oracle-checked pass per epsilon and return the sweep report"""
    try:
        model, frames = _inputs(request.source, request.model)
        return run_service.cmd_sweep(model, frames, request.epsilons, chunks=request.chunks, source=request.source)
    except RRMError as e:
        logger.warning(f"Sweep rejected: {e}")
        raise _http_error(e)
