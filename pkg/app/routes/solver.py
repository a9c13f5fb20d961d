from fastapi import APIRouter, HTTPException

from ..schemas.solver import SolveReport, SolveRequest, TableReport, TrackReport
from ..services.solver_service import run_solve, run_track
from ..services.tables import reproduce_table

router = APIRouter(prefix="/api/v1/eigen", tags=["eigen"])


@router.post("/solve", response_model=SolveReport)
def solve_levels(payload: SolveRequest) -> SolveReport:
    return run_solve(payload.to_run_config("solve"))


@router.post("/track", response_model=TrackReport)
def track_levels(payload: SolveRequest) -> TrackReport:
    return run_track(payload.to_run_config("track"))


@router.get("/tables/{which}", response_model=TableReport)
def get_table(which: int) -> TableReport:
    if which not in (1, 2, 3, 4):
        raise HTTPException(status_code=404, detail="Table not found.")
    return reproduce_table(which)
