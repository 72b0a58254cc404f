from typing import Dict, List, Optional

from pydantic import BaseModel, Field


# --- Surfaces ---

class SurfaceSummary(BaseModel):
    p: int
    a4: List[int]
    a6: List[int]
    conductor: str
    deg_n: int
    squarefree: bool


class ScanReport(BaseModel):
    p: int
    examined: int
    accepted: List[SurfaceSummary] = Field(default_factory=list)
    rejected: Dict[str, int] = Field(default_factory=dict)


# --- Form values ---

class FormValue(BaseModel):
    point: str
    n: int
    S: str
    magnitude: float


# --- Heights ---

class CuspRecord(BaseModel):
    cusp: str
    hstar: int
    epeak: Dict[str, int]


class HeightReport(BaseModel):
    point: str
    cusps: List[CuspRecord] = Field(default_factory=list)
    complete: bool = False
    violations: List[dict] = Field(default_factory=list)
    gaps: List[dict] = Field(default_factory=list)
    checks: List[dict] = Field(default_factory=list)


# --- Bounds ---

class BoundValue(BaseModel):
    """An exact a + b*sqrt(q) together with its decimal shadow."""

    exact: str
    value: float


class BoundReport(BaseModel):
    point: str
    n: int
    S: str
    magnitude: float
    bounds: Dict[str, BoundValue] = Field(default_factory=dict)
    passed: Dict[str, bool] = Field(default_factory=dict)
    verified: bool = True
    worst_ratio: float = 0.0
    atkin_lehner_word: List[str] = Field(default_factory=list)


class SupnormReport(BaseModel):
    surface: SurfaceSummary
    n_max: int
    points: int
    sup: float
    argmax: Optional[str] = None
    violations: List[BoundReport] = Field(default_factory=list)
    unverified: int = 0
    bound_final: float
    envelope: float
    theorem_ratio: float
    chain: List[dict] = Field(default_factory=list)
    l_polynomial: Optional[dict] = None
    adjoint: Optional[dict] = None
    l2_constant: Optional[float] = None
    l2_envelope_ratio: Optional[float] = None
    elapsed_seconds: float = 0.0


# --- Identities and exploration ---

class IdentityReport(BaseModel):
    grid: str
    limits: str = ""
    results: List[dict] = Field(default_factory=list)
    passed: int = 0
    failed: int = 0


class L2Report(BaseModel):
    surface: SurfaceSummary
    support: Optional[int] = None
    per_n: List[dict] = Field(default_factory=list)
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    ratio: Optional[float] = None
    adjoint: Optional[dict] = None
    flags: List[str] = Field(default_factory=list)
