from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..services.errors import InputError
from ..services.number_parser import parse_exact

COMMANDS = ("solve", "scan", "track", "wavefunction", "hill", "moments", "reproduce-table", "figure")
POTENTIALS = ("harmonic", "quartic", "doublewell", "sextic", "octic", "dectic", "exp", "rational", "singular")
FORMATS = ("text", "json", "csv")


def _exact(value: Optional[str]) -> Optional[str]:
    if value is None:
        return None
    try:
        parse_exact(value)
    except InputError as exc:
        raise ValueError(exc.message) from exc
    return value


def _increasing_orders(value: list[int]) -> list[int]:
    if not value:
        raise ValueError("at least one order is required")
    if any(order < 0 for order in value):
        raise ValueError("orders must be non-negative")
    if any(later <= earlier for earlier, later in zip(value, value[1:])):
        raise ValueError("orders must be strictly increasing")
    return value


class RunConfig(BaseModel):
    """Everything needed to re-run one invocation; numbers stay exact decimal strings."""

    model_config = ConfigDict(extra="forbid")

    command: Literal[COMMANDS] = "solve"
    potential: Literal[POTENTIALS] = "quartic"
    potential_file: Optional[str] = None
    g: Optional[str] = None
    z2: Optional[str] = None
    lam: Optional[str] = None
    truncation: Optional[int] = Field(default=None, ge=2)
    alpha: Optional[str] = None
    beta: Optional[str] = None
    sigma: Optional[int] = Field(default=None, ge=2, le=4)
    parity: Literal["even", "odd"] = "even"
    digits: int = Field(default=60, ge=30, le=2000)
    orders: list[int] = Field(default_factory=lambda: [10, 40, 160])
    emin: Optional[str] = None
    emax: Optional[str] = None
    grid: int = Field(default=64, ge=8)
    levels: int = Field(default=2, ge=1)
    target_digits: int = Field(default=10, ge=1)
    momentum_n: int = Field(default=60, ge=1)
    momentum_beta: str = "1/2"
    ms0: bool = False
    table: Optional[int] = Field(default=None, ge=1, le=4)
    figure: Optional[int] = Field(default=None, ge=1, le=3)
    x_max: str = "4"
    points: int = Field(default=81, ge=2)
    format: Literal[FORMATS] = "text"
    jobs: int = Field(default=1, ge=1)

    @field_validator("g", "z2", "lam", "alpha", "beta", "emin", "emax", "momentum_beta", "x_max")
    @classmethod
    def _must_be_exact(cls, value: Optional[str]) -> Optional[str]:
        return _exact(value)

    @field_validator("orders")
    @classmethod
    def _orders_increasing(cls, value: list[int]) -> list[int]:
        return _increasing_orders(value)


class OrderRoots(BaseModel):
    order: int
    roots: list[str]


class OrderEnergy(BaseModel):
    order: int
    energy: str


class TraceReport(BaseModel):
    level: int
    energy: str
    stabilized_digits: int
    converged: bool
    spurious: bool
    per_order: list[OrderEnergy]


class DroppedRoot(BaseModel):
    order: int
    energy: str


class SolveReport(BaseModel):
    potential: str
    parity: str
    digits: int
    method: str = "coefficient-zero"
    results: list[OrderRoots]


class ScanBracket(BaseModel):
    order: int
    low: str
    high: str


class ScanReport(BaseModel):
    potential: str
    parity: str
    digits: int
    grid_points: int
    brackets: list[ScanBracket]


class TrackReport(BaseModel):
    potential: str
    parity: str
    digits: int
    target_digits: int
    traces: list[TraceReport]
    dropped: list[DroppedRoot] = Field(default_factory=list)


class TableRow(BaseModel):
    label: str
    parity: str
    order: Optional[int] = None
    computed: Optional[str] = None
    published: str
    matched_digits: int
    printed_digits: int
    converged: bool


class TableReport(BaseModel):
    table: int
    caption: str
    digits: int
    rows: list[TableRow]


class HillReport(BaseModel):
    potential: str
    parity: str
    order: int
    digits: int
    roots: list[str]
    coefficient_roots: list[str]
    agreement_digits: list[int]


class SolveRequest(BaseModel):
    potential: Literal[POTENTIALS] = "quartic"
    g: Optional[str] = None
    z2: Optional[str] = None
    lam: Optional[str] = None
    truncation: Optional[int] = Field(default=None, ge=2)
    alpha: Optional[str] = None
    beta: Optional[str] = None
    sigma: Optional[int] = Field(default=None, ge=2, le=4)
    parity: Literal["even", "odd"] = "even"
    digits: int = Field(default=60, ge=30, le=400)
    orders: list[int] = Field(default_factory=lambda: [40])
    emin: Optional[str] = None
    emax: Optional[str] = None
    grid: int = Field(default=64, ge=8, le=4096)
    levels: int = Field(default=2, ge=1, le=20)
    target_digits: int = Field(default=10, ge=1)

    @field_validator("g", "z2", "lam", "alpha", "beta", "emin", "emax")
    @classmethod
    def _must_be_exact(cls, value: Optional[str]) -> Optional[str]:
        return _exact(value)

    @field_validator("orders")
    @classmethod
    def _orders_increasing(cls, value: list[int]) -> list[int]:
        return _increasing_orders(value)

    def to_run_config(self, command: str) -> RunConfig:
        return RunConfig(command=command, **self.model_dump())


class ErrorResponse(BaseModel):
    error_code: str
    error_message: str
