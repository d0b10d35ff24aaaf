import time
from contextlib import asynccontextmanager

import uvicorn
from fastapi import FastAPI, Request
from loguru import logger

from src import config
from src.utils import configure_logging

# Import routers
from src.routes.extraction import router as extraction_router
from src.routes.health import router as health_router


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Logs startup and shutdown of the service."""
    logger.info(f"🚀 Extraction service v{config.APP_VERSION} starting")
    yield  # Application runs here
    logger.info("🛑 FastAPI application is shutting down...")


def create_app() -> FastAPI:
    """Creates the FastAPI application with middleware and routes."""
    configure_logging("app")
    app = FastAPI(title="egraph-extract", version=config.APP_VERSION, lifespan=lifespan)

    # Middleware for logging requests
    @app.middleware("http")
    async def log_requests(request: Request, call_next):
        """Middleware to log incoming API requests and their responses."""
        start_time = time.time()
        response = None

        try:
            response = await call_next(request)
        except Exception as e:
            logger.error(f"❌ Unhandled error in request {request.method} {request.url}: {e}")
            raise
        finally:
            duration = round(time.time() - start_time, 3)
            status_code = response.status_code if response else 500
            logger.info(f"📤 {request.method} {request.url} - {status_code} [{duration}s]")

        return response

    # Register API routes
    for router in (health_router, extraction_router):
        app.include_router(router, prefix="")

    return app


app = create_app()


if __name__ == "__main__":
    uvicorn.run("src.api.main:app", host=config.APP_HOST, port=config.APP_PORT)
