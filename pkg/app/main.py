import logging

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .config import get_settings
from .routes.solver import router as solver_router
from .services.errors import SolverError

logging.basicConfig(level=get_settings().log_level)
logger = logging.getLogger(__name__)

app = FastAPI(title="coeffzero")
app.include_router(solver_router)


@app.exception_handler(SolverError)
async def solver_error_handler(request: Request, exc: SolverError) -> JSONResponse:
    logger.info("Rejected %s %s: %s", request.method, request.url.path, exc)
    return JSONResponse(status_code=422, content={"error_code": exc.code, "error_message": exc.message})

