"""
FastAPI application entry point
"""
from fastapi import FastAPI, status
from fastapi.responses import JSONResponse
import logging

from app import __version__
from app.core.config import settings
from app.core.logging_config import setup_logging
from app.core.health import get_health_status
from app.api.v1 import runs

# Setup logging
setup_logging()
logger = logging.getLogger(__name__)

# Initialize Sentry for error tracking
if settings.SENTRY_DSN:
    try:
        import sentry_sdk
        from sentry_sdk.integrations.fastapi import FastApiIntegration

        sentry_sdk.init(
            dsn=settings.SENTRY_DSN,
            environment=settings.ENVIRONMENT,
            traces_sample_rate=0.1,
            integrations=[FastApiIntegration()],
        )
        logger.info("✅ Sentry error tracking initialized")
    except Exception as e:
        logger.error(f"❌ Sentry initialization failed: {e}", exc_info=True)

app = FastAPI(
    title=settings.APP_NAME,
    description="Recurrent residual inference for CNNs on video: sparse frame deltas, cost model, error control",
    version=__version__,
)

app.include_router(runs.router, prefix="/api/v1", tags=["runs"])


@app.get("/")
async def root():
    """Root endpoint"""
    return {
        "message": f"{settings.APP_NAME} API",
        "version": __version__,
        "status": "running",
        "endpoints": {
            "/health": "Health check",
            "/api/v1/runs": "Process a synthetic video",
            "/api/v1/sweeps": "Threshold sweep",
        }
    }


@app.get("/health")
async def health():
    """
    Health check endpoint.
    Returns status of all components.
    """
    health_status = await get_health_status()
    code = status.HTTP_200_OK if health_status["status"] == "healthy" else status.HTTP_503_SERVICE_UNAVAILABLE
    return JSONResponse(content=health_status, status_code=code)


@app.get("/health/live")
async def liveness():
    """Liveness probe"""
    return {"status": "alive"}


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(app, host="0.0.0.0", port=settings.PORT)
