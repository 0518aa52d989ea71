"""
Pydantic schemas for synthetic frame sources and model plans
"""
from typing import List, Literal, Tuple
from pydantic import BaseModel, Field

# five linear layers: three convs, two FCs
STANDARD_PLAN = (
    "conv:8:3", "relu",
    "conv:8:3", "relu", "pool:2:2",
    "conv:16:3", "relu",
    "fc:32", "relu",
    "fc:10",
)


class FrameSourceSpec(BaseModel):
    """Deterministic synthetic video"""
    kind: Literal["shifting-square", "random-walk", "static"] = "shifting-square"
    channels: int = Field(default=1, ge=1)
    size: int = Field(default=32, ge=2)
    frames: int = Field(default=24, ge=1)
    motion: float = Field(default=1.0, ge=0.0)  # pixels/frame for the square, step scale for the walk
    noise: float = Field(default=0.0, ge=0.0)  # per-frame uniform sensor noise amplitude
    seed: int = 0

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.channels, self.size, self.size


class ModelPlan(BaseModel):
    """Random network built from layer tokens: conv:C:k[:s[:p]], fc:C, relu, pool:k[:s]"""
    layers: List[str] = Field(default_factory=lambda: list(STANDARD_PLAN))
    seed: int = 0
