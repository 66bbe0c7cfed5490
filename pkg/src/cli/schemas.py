import math
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from dual_unitary_sff.constants import SCHEMA_VERSION
from dual_unitary_sff.dual_gates import DisorderDistribution


def _side(matrix: list) -> int:
    """Side length of a square nested-list matrix, 0 when it is not square"""
    if not matrix or any(len(row) != len(matrix) for row in matrix):
        return 0
    return len(matrix)


class GateConfig(BaseModel):
    """swap, a random parametrized gate, explicit parameters or an explicit matrix.

    Matrices are nested lists of [re, im] pairs.
    """

    model_config = ConfigDict(extra="forbid")

    kind: Literal["swap", "random", "symmetric", "params", "matrix", "identity"] = "random"
    J: Optional[float] = Field(default=None, ge=0.0, le=math.pi)
    j_range: tuple[float, float] = (0.3, 2.84)
    seed: Optional[int] = None
    single_site: Optional[list[list[list[list[float]]]]] = None
    entries: Optional[list[list[list[float]]]] = None

    @model_validator(mode="after")
    def check_payload(self) -> "GateConfig":
        if self.kind == "params":
            if self.single_site is None or len(self.single_site) != 4:
                raise ValueError("kind 'params' needs exactly four single_site matrices")
            sides = {_side(u) for u in self.single_site}
            if 0 in sides or len(sides) != 1:
                raise ValueError("single_site matrices must be square and of one size")
        if self.kind == "matrix" and (self.entries is None or not _side(self.entries)):
            raise ValueError("kind 'matrix' needs square entries")
        return self

    def local_dimension(self) -> Optional[int]:
        """Qudit dimension implied by an explicit payload"""
        if self.kind == "params":
            return _side(self.single_site[0])
        if self.kind == "matrix":
            return math.isqrt(_side(self.entries))
        return None


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[SCHEMA_VERSION] = SCHEMA_VERSION
    d: int = Field(default=2, ge=2)
    gate_U: GateConfig = GateConfig()
    gate_W: GateConfig = GateConfig()
    check_gates: dict[str, GateConfig] = {}
    disorder: DisorderDistribution = DisorderDistribution()
    seed: int = 0
    n_samples: int = Field(default=2000, ge=2)
    moment: int = Field(default=1, ge=1)
    ts: list[int] = [1, 2]
    Ls: list[int] = [4, 6, 8]
    leading: int = Field(default=8, ge=1, le=32)
    quadrature: Literal["auto", "product", "mc"] = "auto"
    trace_method: Literal["auto", "dense", "sweep", "dual"] = "auto"
    unitarity_tol: Optional[float] = None
    threads: int = Field(default=1, ge=1)
    out: Optional[str] = None
    criteria: list[str] = []
    quick: bool = False

    @model_validator(mode="after")
    def check_gate_dimensions(self) -> "RunConfig":
        gates = {"gate_U": self.gate_U, "gate_W": self.gate_W, **self.check_gates}
        for name, gate in gates.items():
            local = gate.local_dimension()
            if gate.kind == "matrix" and local * local != len(gate.entries):
                raise ValueError(f"{name}: entries of side {len(gate.entries)} are not d^2 x d^2")
            if local is not None and local != self.d:
                raise ValueError(f"{name}: explicit gate acts on d={local}, config has d={self.d}")
        return self
