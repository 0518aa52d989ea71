"""
Pydantic schemas for the run and sweep endpoints
"""
from typing import List, Optional
from pydantic import BaseModel, Field

from app.schemas.frames import FrameSourceSpec, ModelPlan


class RunRequest(BaseModel):
    """Schema for a synthetic run"""
    source: FrameSourceSpec = Field(default_factory=FrameSourceSpec)
    model: ModelPlan = Field(default_factory=ModelPlan)
    epsilon: Optional[float] = Field(default=None, ge=0.0)
    chunks: int = Field(default=1, ge=1, le=64)
    oracle: bool = False
    include_keyframes: bool = True
    keyframe_interval: Optional[int] = Field(default=None, ge=1)


class SweepRequest(BaseModel):
    """Schema for a threshold sweep"""
    source: FrameSourceSpec = Field(default_factory=FrameSourceSpec)
    model: ModelPlan = Field(default_factory=ModelPlan)
    epsilons: List[float] = Field(default_factory=lambda: [1e-2, 3e-2, 5e-2, 1e-1], min_length=1)
    chunks: int = Field(default=1, ge=1, le=64)
