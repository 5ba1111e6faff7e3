from pydantic import BaseModel, Field, field_validator, model_validator
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union
import re

from utils.spaces import ProductMetricSpec

_RANGE = re.compile(r'^(?:dyadic:)?(-?\d+)\.\.(-?\d+)$')


def parse_range(value) -> List[int]:
    """'1..8', 'dyadic:2..8', '3', a list of ints or a comma list; inclusive, in the given order."""
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    if isinstance(value, int):
        return [value]
    text = str(value).strip()
    match = _RANGE.match(text)
    if match:
        start, stop = int(match.group(1)), int(match.group(2))
        if stop < start:
            raise ValueError(f"empty range: {text}")
        return list(range(start, stop + 1))
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValueError(f"Invalid range: {text}. Expected format: 1..8 or dyadic:2..8")


class TorusGridSpace(BaseModel):
    type: Literal["torus_grid"] = "torus_grid"
    n: int = Field(..., ge=1)
    j: int = Field(..., ge=1)
    metric: ProductMetricSpec = Field(default_factory=ProductMetricSpec)


class CantorSpace(BaseModel):
    type: Literal["cantor"] = "cantor"
    level: int = Field(..., ge=1)


class LogLinePoints(BaseModel):
    range: Tuple[float, float]
    count: int = Field(..., ge=2)

    @field_validator('range')
    def validate_range(cls, v):
        if not v[0] < v[1]:
            raise ValueError(f"log-line range must be increasing, got {v}")
        return v


class LogLineSpace(BaseModel):
    type: Literal["log_line"] = "log_line"
    points: LogLinePoints


class MatrixCsvSpace(BaseModel):
    type: Literal["matrix_csv"] = "matrix_csv"
    path: str


class MeasuredCsvSpace(BaseModel):
    type: Literal["measured_csv"] = "measured_csv"
    path: str


SpaceSpec = Annotated[
    Union[TorusGridSpace, CantorSpace, LogLineSpace, MatrixCsvSpace, MeasuredCsvSpace],
    Field(discriminator="type"),
]


class _LevelRange(BaseModel):
    l: List[int] = Field(..., description="exponents l of the dyadic radii 2^-l")

    @field_validator('l', mode='before')
    def validate_l(cls, v):
        values = parse_range(v)
        if not values:
            raise ValueError("at least one l is required")
        return values


class ValidateAnalysis(BaseModel):
    kind: Literal["validate"] = "validate"


class MetrizeAnalysis(BaseModel):
    kind: Literal["metrize"] = "metrize"
    chain_path: Optional[str] = Field(None, description="where to write the chain metric as CSV")
    q: Optional[float] = Field(None, gt=0, le=1, description="chain exponent; exponent_q(K) when omitted")


class PackingAnalysis(_LevelRange):
    kind: Literal["packing"] = "packing"
    exact: bool = False


class ProfileAnalysis(BaseModel):
    kind: Literal["profile"] = "profile"
    radii: List[float]
    centers: Optional[List[int]] = None
    exact: bool = False

    @field_validator('radii')
    def validate_radii(cls, v):
        if not v or any(not r > 0 for r in v):
            raise ValueError("profile radii must be a non-empty list of positive reals")
        return v


class DoublingAnalysis(_LevelRange):
    kind: Literal["doubling"] = "doubling"
    threshold: Optional[float] = Field(None, gt=0)


class BallTableAnalysis(BaseModel):
    kind: Literal["ball_table"] = "ball_table"


class Theorem2Analysis(BaseModel):
    kind: Literal["theorem2"] = "theorem2"
    n: int = Field(..., ge=1)
    j: List[int]
    metric: ProductMetricSpec = Field(default_factory=ProductMetricSpec)

    @field_validator('j', mode='before')
    def validate_j(cls, v):
        values = parse_range(v)
        if not values or any(j < 1 for j in values):
            raise ValueError("j values must be positive")
        return values


class Theorem3Analysis(BaseModel):
    kind: Literal["theorem3"] = "theorem3"
    n: int = Field(..., ge=1)
    j: int = Field(..., ge=1)
    metric: ProductMetricSpec = Field(default_factory=lambda: ProductMetricSpec(kind="sup"))
    resolution: Optional[int] = Field(None, ge=2)
    tol: float = Field(1e-3, gt=0)


AnalysisSpec = Annotated[
    Union[ValidateAnalysis, MetrizeAnalysis, PackingAnalysis, ProfileAnalysis, DoublingAnalysis,
          BallTableAnalysis, Theorem2Analysis, Theorem3Analysis],
    Field(discriminator="kind"),
]

SPACE_FREE = {"theorem2", "theorem3"}


class OutputSpec(BaseModel):
    path: Optional[str] = Field(None, description="report path; stdout when omitted")
    format: Literal["json", "csv"] = "json"
    svg: Optional[str] = Field(None, description="SVG plot path")


class ExperimentConfig(BaseModel):
    space: Optional[SpaceSpec] = None
    analyses: List[AnalysisSpec] = Field(default_factory=list)
    output: OutputSpec = Field(default_factory=OutputSpec)
    cap: Optional[int] = Field(None, ge=1, description="exact-search cap for this run")
    seed: int = 0

    @model_validator(mode="after")
    def check_space_requirements(self):
        for i, analysis in enumerate(self.analyses):
            if analysis.kind not in SPACE_FREE and self.space is None:
                raise ValueError(f"analysis {i} ({analysis.kind}) needs a space")
            if analysis.kind == "ball_table" and self.space.type != "cantor":
                raise ValueError(f"analysis {i} (ball_table) needs a cantor space")
        return self


class Provenance(BaseModel):
    tool: str = "doubleprobe"
    version: str
    seed: int
    tolerances: Dict[str, float]
    caps: Dict[str, int]


class Report(BaseModel):
    schema_version: int = Field(1, serialization_alias="schema")
    config: Dict[str, Any]
    space: Optional[Dict[str, Any]] = None
    results: List[Dict[str, Any]] = Field(default_factory=list)
    errors: List[Dict[str, Any]] = Field(default_factory=list)
    provenance: Provenance
