# app/routers/pricing.py
from fastapi import APIRouter, HTTPException
import logging
import time
from app.config import DEFAULT_SOLVER
from app.errors import ConfigurationError, MomentPricingError
from app.models.schemas import BoundsReport, HealthResponse, RunConfig
from app.services import pricing_service

logger = logging.getLogger(__name__)
router = APIRouter(prefix="/api/v1", tags=["Moment Bounds"])

@router.post("/bounds", response_model=BoundsReport)
def compute_bounds(config: RunConfig):
    """
    Solve the LP ladder N_min..N_max for one run configuration
    """
    start_time = time.time()
    logger.info(f"🔍 Bounds request: {config.example} N={config.N_min}..{config.N_max}")
    try:
        report = pricing_service.run(config)
        logger.info(f"✅ Bounds computed in {time.time() - start_time:.2f} seconds")
        return report
    except ConfigurationError as e:
        logger.warning(f"Configuration error: {e}")
        raise HTTPException(status_code=400, detail=str(e))
    except MomentPricingError as e:
        logger.error(f"❌ Pricing failed after {time.time() - start_time:.2f} seconds: {e}")
        raise HTTPException(status_code=500, detail=str(e))
    except Exception as e:
        logger.error(f"Unexpected error in bounds computation: {e}")
        raise HTTPException(status_code=500, detail="Internal server error during bounds computation")

@router.get("/health", response_model=HealthResponse)
def health_check():
    """Service health check"""
    return HealthResponse(status="ok", solver=DEFAULT_SOLVER)
