"""
FastAPI application entry point.
"""

import logging

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from backend.api.routes import API_VERSION, router
from backend.core.settings import get_settings
from backend.core.utils import configure_logging

logger = logging.getLogger(__name__)

app = FastAPI(
    title="Eulerian Membrane FSI API",
    description="Stability analysis, verification and shear-flow runs of the Eulerian membrane solver.",
    version=API_VERSION,
    docs_url="/docs",
    redoc_url="/redoc",
)

# Add CORS middleware for local development
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(router)


@app.get("/")
async def root():
    """Root endpoint with basic info."""
    return {
        "name": "Eulerian Membrane FSI",
        "version": API_VERSION,
        "docs": "/docs",
        "endpoints": {
            "health": "GET /health",
            "amplification": "POST /stability1d/amplification",
            "classify": "POST /stability1d/classify",
            "convergence": "POST /verification/convergence",
            "hausdorff": "POST /contour/hausdorff",
            "shear": "POST /shear/run",
        },
    }


def serve() -> None:
    import uvicorn

    settings = get_settings()
    configure_logging(settings.log_level)
    logger.info("starting service on %s:%d", settings.host, settings.port)
    uvicorn.run(app, host=settings.host, port=settings.port, log_level=settings.log_level.lower())


if __name__ == "__main__":
    serve()
