# app/main.py
import logging

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from starlette.requests import Request

from app.routers import pricing

logger = logging.getLogger(__name__)

# ──────────────────────────────────────────────────────────────────────────────
# FastAPI
# ──────────────────────────────────────────────────────────────────────────────
app = FastAPI(title="Moment Bounds API", version="1.0")

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(pricing.router)

# ──────────────────────────────────────────────────────────────────────────────
# Middleware: JSON on /api/*
# ──────────────────────────────────────────────────────────────────────────────
@app.middleware("http")
async def ensure_json_for_api(request: Request, call_next):
    if request.url.path.startswith("/api/"):
        try:
            return await call_next(request)
        except Exception as e:
            logger.error(f"❌ Unhandled error on {request.url.path}: {e}")
            return JSONResponse({"error": str(e)}, status_code=500)
    return await call_next(request)
