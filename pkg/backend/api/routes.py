"""
FastAPI routes for the light solver workflows.
"""

import logging

from fastapi import APIRouter, HTTPException
from fastapi.concurrency import run_in_threadpool

from ..core.bench import run
from ..core.contour import ContourPolyline, hausdorff_distance
from ..core.exceptions import ConfigurationError, NumericalFailure
from ..core.models import (
    AmplificationRequest,
    AmplificationResponse,
    CaseConfig,
    ClassifyRequest,
    ClassifyResponse,
    ConvergenceRequest,
    ConvergenceResponse,
    HausdorffRequest,
    HausdorffResponse,
    HealthResponse,
    RunSummary,
)
from ..core.stability1d import amplification, march_report
from ..core.verification import convergence_orders, solve_ms

logger = logging.getLogger(__name__)

router = APIRouter()

API_VERSION = "1.0.0"


def _http_error(exc: Exception) -> HTTPException:
    if isinstance(exc, ConfigurationError):
        return HTTPException(status_code=400, detail=f"Configuration error: {exc}")
    if isinstance(exc, NumericalFailure):
        return HTTPException(status_code=422, detail=f"Numerical failure: {exc}")
    logger.exception("unexpected service error")
    return HTTPException(status_code=500, detail=f"Internal error: {exc}")


@router.get("/health", response_model=HealthResponse)
async def health_check() -> HealthResponse:
    """
    Health check endpoint.
    """
    return HealthResponse(status="ok", version=API_VERSION)


@router.post("/stability1d/amplification", response_model=AmplificationResponse)
async def stability_amplification(request: AmplificationRequest) -> AmplificationResponse:
    """
    Von Neumann amplification of one Fourier mode of the 1D model.

    **Request:**
    ```json
    {"params": {"mu": 1, "K": 1, "eps": 1, "dx": 1, "dt": 1}, "theta": 3.14159, "scheme": "SemiImplicit"}
    ```

    **Response:** α_θ, β_θ, A_θ, B_θ, the two eigenvalues of A_θ⁻¹B_θ as
    (real, imag) pairs, and the spectral radius.
    """
    try:
        return amplification(request.params, request.theta, request.scheme).to_response()
    except Exception as exc:
        raise _http_error(exc)


@router.post("/stability1d/classify", response_model=ClassifyResponse)
async def stability_classify(request: ClassifyRequest) -> ClassifyResponse:
    """
    March the 1D model for `horizon_steps` and classify it as Stable or
    Unstable from amplitude and energy growth.
    """
    try:
        return await run_in_threadpool(march_report, request.params, request.scheme,
                                       request.horizon_steps)
    except Exception as exc:
        raise _http_error(exc)


@router.post("/verification/convergence", response_model=ConvergenceResponse)
async def verification_convergence(request: ConvergenceRequest) -> ConvergenceResponse:
    """
    Manufactured-solution errors and observed orders on small meshes.
    """
    try:
        results = [await run_in_threadpool(solve_ms, n) for n in request.meshes]
        errors = [r.error for r in results]
        return ConvergenceResponse(meshes=request.meshes, errors=errors,
                                   orders=convergence_orders(errors, request.meshes))
    except Exception as exc:
        raise _http_error(exc)


@router.post("/contour/hausdorff", response_model=HausdorffResponse)
async def contour_hausdorff(request: HausdorffRequest) -> HausdorffResponse:
    """
    Symmetric Hausdorff distance between two polylines plus their shoelace areas.
    """
    try:
        first = ContourPolyline.from_model(request.first)
        second = ContourPolyline.from_model(request.second)
        if len(first.x) < 3 or len(second.x) < 3:
            raise ConfigurationError("polylines need at least three vertices")
        return HausdorffResponse(distance=hausdorff_distance(first, second),
                                 first_area=first.enclosed_area, second_area=second.enclosed_area)
    except Exception as exc:
        raise _http_error(exc)


@router.post("/shear/run", response_model=RunSummary)
async def shear_run(config: CaseConfig) -> RunSummary:
    """
    Run one shear-flow case to t_final and return its summary (areas,
    final contour, step count). Intended for coarse meshes.
    """
    try:
        report = await run_in_threadpool(run, config, None, None, False)
        return report.summary
    except Exception as exc:
        raise _http_error(exc)
