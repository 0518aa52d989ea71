"""
Health check utilities
"""
from typing import Dict, Any
import logging

import numpy as np

from app import __version__
from app.core.config import settings

logger = logging.getLogger(__name__)


def check_kernels() -> Dict[str, Any]:
    """
    Check that the sparse and dense conv kernels agree on a small random case.

    Returns:
        Dictionary with status and details
    """
    from app.models.network import ConvSpec
    from app.models.tensor import Tensor, densify, sparsify
    from app.services.kernels import dense_conv, sparse_conv

    try:
        rng = np.random.default_rng(0)
        spec = ConvSpec(rng.standard_normal((2, 2, 3, 3)), np.zeros(2), padding=1)
        delta, _ = sparsify(Tensor(rng.standard_normal((2, 5, 5))), 0.5)
        expected = dense_conv(spec, densify(delta)).data
        actual = sparse_conv(spec, delta).output.data
        deviation = float(np.max(np.abs(expected - actual)))
        if deviation > 1e-5:
            return {"status": "unhealthy", "message": f"Sparse/dense kernels disagree by {deviation:.2e}"}
        return {"status": "healthy", "message": "Sparse and dense kernels agree"}
    except Exception as e:
        logger.error(f"Kernel health check failed: {e}")
        return {"status": "unhealthy", "message": f"Kernel self-check failed: {str(e)}"}


async def get_health_status() -> Dict[str, Any]:
    """
    Get overall health status.

    Returns:
        Dictionary with health status of all components
    """
    kernels_status = check_kernels()

    return {
        "status": kernels_status["status"],
        "version": __version__,
        "environment": settings.ENVIRONMENT,
        "components": {
            "kernels": kernels_status,
        }
    }
