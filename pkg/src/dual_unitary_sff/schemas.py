from typing import Optional

from pydantic import BaseModel, Field


# Result records
class SffEstimate(BaseModel):
    t: int
    L: int
    n: int = 1
    n_samples: int
    mean: float
    std_error: float = Field(ge=0.0)
    seed: int
    heavy_tailed: bool = False

    @property
    def relative_error(self) -> float:
        return self.std_error / abs(self.mean) if self.mean else float("inf")


class SpectralReport(BaseModel):
    t: int
    d: int
    n: int = 1
    time_reversal: bool
    quadrature: str
    leading_moduli: list[float]
    spectral_radius: float
    unimodular_count: int
    ambiguous: bool
    trace_curve: list[dict] = []


class CommutantReport(BaseModel):
    label: str
    t: int
    d: int
    dimension: int
    zero_modes: list[float]
    gap: float
    method: str
    ambiguous: bool
    containment_residual: Optional[float] = None


class RankReport(BaseModel):
    rank: int
    size: int
    singular_values: list[float]
    threshold: float

    @property
    def full_rank(self) -> bool:
        return self.rank == self.size


class GateCheckReport(BaseModel):
    name: str
    unitary_residual: float
    dual_residual: float
    tol: float
    unitary: bool
    dual_unitary: bool


class CriterionResult(BaseModel):
    id: int
    tag: str
    passed: bool
    measured: dict = {}
    thresholds: dict = {}
    wall_time: float = 0.0
    note: str = ""
