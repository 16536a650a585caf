# app/models/schemas.py
import configparser
import io
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from app.config import DEFAULT_SOLVER, MC_BATCH_SIZE, WORKERS
from app.errors import ConfigurationError

Example = Literal["gbm-dko", "vg-dko", "cir-corridor", "expvg-dnt", "custom"]
ParamValue = Union[float, str]

class MCConfig(BaseModel):
    paths: int = Field(100_000, ge=1, description="Number of simulated paths")
    steps_per_year: int = Field(1000, ge=1, description="Euler steps per unit of time")
    seed: int = Field(20240101, ge=0, lt=2**64, description="64-bit seed of the counter-based generator")
    antithetic: bool = Field(True, description="Pair every Gaussian draw with its negative")
    batch_size: int = Field(MC_BATCH_SIZE, ge=2, description="Paths per independent RNG stream")

class RunConfig(BaseModel):
    example: Example = Field(..., description="Case study or 'custom'")
    case: str = Field("", description="Free-text label, e.g. the table case")
    model: Dict[str, ParamValue] = Field(default_factory=dict, description="Model parameters")
    contract: Dict[str, ParamValue] = Field(default_factory=dict, description="Contract parameters")
    N_min: int = Field(4, description="Smallest moment degree")
    N_max: int = Field(12, description="Largest moment degree")
    solver: str = Field(DEFAULT_SOLVER, description="LP solver adapter")
    basis: Literal["unit", "monomial"] = Field("unit", description="Adjoint test-function family")
    workers: int = Field(WORKERS, ge=1, description="Concurrent per-N solves")
    p_star_shortcut: bool = Field(False, description="Apply the killing factor p* outside the LP")
    oracle: Literal["none", "mc", "exact"] = Field("none", description="Reference price source")
    reference: Optional[float] = Field(None, description="Known reference price (overrides the oracle)")
    mc: MCConfig = Field(default_factory=MCConfig, description="Monte Carlo settings")
    output: Literal["text", "csv"] = Field("text", description="Report format")

    @field_validator("N_min")
    @classmethod
    def _n_min(cls, v):
        if v < 2:
            raise ValueError("N_min must be at least 2")
        return v

    @field_validator("N_max")
    @classmethod
    def _n_max(cls, v):
        if v > 20:
            raise ValueError("N_max must be at most 20")
        return v

    @model_validator(mode="after")
    def _n_range(self):
        if self.N_min > self.N_max:
            raise ValueError(f"N_min={self.N_min} exceeds N_max={self.N_max}")
        if self.oracle == "exact" and self.example not in ("gbm-dko",) and self.reference is None:
            raise ValueError(f"no exact oracle for '{self.example}'; use oracle = mc or give a reference")
        return self

    @property
    def n_values(self) -> List[int]:
        return list(range(self.N_min, self.N_max + 1))

    # --- INI round trip -----------------------------------------------------
    def to_ini(self) -> str:
        parser = _parser()
        parser["run"] = {
            "example": self.example,
            "case": self.case,
            "N_min": str(self.N_min),
            "N_max": str(self.N_max),
            "output": self.output,
        }
        parser["model"] = {k: _format(v) for k, v in self.model.items()}
        parser["contract"] = {k: _format(v) for k, v in self.contract.items()}
        parser["solver"] = {
            "name": self.solver,
            "basis": self.basis,
            "workers": str(self.workers),
            "p_star_shortcut": str(self.p_star_shortcut).lower(),
        }
        parser["oracle"] = {
            "kind": self.oracle,
            "reference": "" if self.reference is None else repr(self.reference),
            "paths": str(self.mc.paths),
            "steps_per_year": str(self.mc.steps_per_year),
            "seed": str(self.mc.seed),
            "antithetic": str(self.mc.antithetic).lower(),
            "batch_size": str(self.mc.batch_size),
        }
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        parser = _parser()
        try:
            parser.read_string(text)
            run = parser["run"]
            solver = parser["solver"] if parser.has_section("solver") else {}
            oracle = parser["oracle"] if parser.has_section("oracle") else {}
            mc = {
                k: oracle[k]
                for k in ("paths", "steps_per_year", "seed", "antithetic", "batch_size")
                if k in oracle
            }
            reference = oracle.get("reference", "") if oracle else ""
            data: Dict[str, Any] = {
                "example": run["example"],
                "case": run.get("case", ""),
                "N_min": run.get("N_min", "4"),
                "N_max": run.get("N_max", "12"),
                "output": run.get("output", "text"),
                "model": {k: _scalar(v) for k, v in parser["model"].items()} if parser.has_section("model") else {},
                "contract": (
                    {k: _scalar(v) for k, v in parser["contract"].items()} if parser.has_section("contract") else {}
                ),
                "oracle": oracle.get("kind", "none") if oracle else "none",
                "reference": float(reference) if reference.strip() else None,
                "mc": mc,
            }
            for key, field in (("name", "solver"), ("basis", "basis"), ("workers", "workers"),
                               ("p_star_shortcut", "p_star_shortcut")):
                if key in solver:
                    data[field] = solver[key]
            return cls.model_validate(data)
        except ValidationError as e:
            raise ConfigurationError(f"invalid run configuration: {e}") from e
        except (configparser.Error, KeyError, ValueError) as e:
            raise ConfigurationError(f"malformed run configuration: {e}") from e

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"configuration file not found: {path}")
        return cls.from_ini(path.read_text(encoding="utf-8"))

def _parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str
    return parser

def _format(value: ParamValue) -> str:
    return repr(float(value)) if isinstance(value, (int, float)) else str(value)

def _scalar(text: str) -> ParamValue:
    try:
        return float(text)
    except ValueError:
        return text.strip()

class BoundsRow(BaseModel):
    N: int = Field(..., description="Moment degree")
    lower: Optional[float] = Field(None, description="Lower price bound")
    upper: Optional[float] = Field(None, description="Upper price bound")
    lower_status: str = Field(..., description="Solver status of the minimisation")
    upper_status: str = Field(..., description="Solver status of the maximisation")
    seconds: float = Field(..., description="Wall time of both solves")
    midpoint_rel_error: Optional[float] = Field(None, description="|midpoint - reference| / reference")
    lower_rel_error: Optional[float] = Field(None, description="|lower - reference| / reference")
    upper_rel_error: Optional[float] = Field(None, description="|upper - reference| / reference")

class BoundsReport(BaseModel):
    example: str = Field(..., description="Case study")
    case: str = Field("", description="Case label")
    reference: Optional[float] = Field(None, description="Reference price")
    reference_std_error: Optional[float] = Field(None, description="Standard error of a Monte Carlo reference")
    reference_source: str = Field("none", description="exact, mc, given or none")
    external_factor: float = Field(1.0, description="Factor applied to the LP optima (e.g. p*)")
    rows: List[BoundsRow] = Field(..., description="One row per moment degree")
    monotone: bool = Field(..., description="Lower bounds non-decreasing and upper bounds non-increasing on every row")
    monotonicity: Literal["yes", "no", "unverified"] = Field(
        "yes", description="unverified when failed rows leave part of the ladder unchecked"
    )
    failed: int = Field(0, description="Rows with a non-optimal solve")

class HealthResponse(BaseModel):
    status: str = Field(..., description="Service status")
    solver: str = Field(..., description="Default LP solver adapter")
