"""Two-site dual-unitary gates, the space-time reshuffle and single-site disorder fields."""

from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel, field_validator
from scipy.linalg import expm
from scipy.stats import unitary_group

from .config import get_rng, get_settings
from .constants import DEFAULT_NU
from .errors import GateValidationError, InvalidDimensionError
from .qudit_algebra import (
    as_operator,
    gell_mann_generators,
    is_unitary,
    spin_matrices,
    swap_gate,
    unitarity_residual,
)
from .utils import DenseOperator


@dataclass(frozen=True)
class DualGateParams:
    u1: DenseOperator
    u2: DenseOperator
    u3: DenseOperator
    u4: DenseOperator
    J: float

    @property
    def d(self) -> int:
        return self.u1.shape[0]

    @property
    def non_interacting(self) -> bool:
        return bool(np.isclose(self.J, 0.0))

    def validate(self, tol: float | None = None):
        for name in ("u1", "u2", "u3", "u4"):
            u = as_operator(getattr(self, name))
            if u.shape[0] != self.d:
                raise GateValidationError(f"{name} has dimension {u.shape[0]}, expected {self.d}")
            if not is_unitary(u, tol):
                raise GateValidationError(
                    f"{name} is not unitary (residual {unitarity_residual(u):.2e})"
                )
        if not np.isfinite(self.J) or not 0.0 <= self.J <= np.pi:
            raise GateValidationError(f"J must lie in [0, pi], got {self.J}")


@dataclass(frozen=True)
class DualityResiduals:
    unitary_residual: float
    dual_residual: float
    tol: float

    @property
    def is_dual_unitary(self) -> bool:
        return self.unitary_residual < self.tol and self.dual_residual < self.tol

    def __bool__(self) -> bool:
        return self.is_dual_unitary


def _ising_phase(J: float, d: int) -> DenseOperator:
    _, _, s3 = spin_matrices(d)
    return np.diag(np.exp(1j * J * np.kron(np.diag(s3), np.diag(s3)).real))


def build_dual_gate(p: DualGateParams, d: int | None = None) -> DenseOperator:
    """(u1 x u2) S exp(iJ s3 x s3) (u3 x u4)"""
    p.validate()
    d = p.d if d is None else d
    if d != p.d:
        raise GateValidationError(f"parameters are for d={p.d}, requested d={d}")
    if p.non_interacting:
        logger.debug("building non-interacting dual gate (J=0)")
    return np.kron(p.u1, p.u2) @ swap_gate(d) @ _ising_phase(p.J, d) @ np.kron(p.u3, p.u4)


def build_time_reversal_gate(u1, u2, J: float, d: int) -> DenseOperator:
    """Symmetric dual-unitary gate (u1 x u2) S exp(iJ s3 x s3) (u1^T x u2^T)"""
    u1, u2 = as_operator(u1), as_operator(u2)
    return build_dual_gate(DualGateParams(u1, u2, u1.T, u2.T, J), d)


def _local_dim(dim: int) -> int:
    d = int(round(np.sqrt(dim)))
    if d * d != dim:
        raise InvalidDimensionError(f"dimension {dim} is not a square of a local dimension")
    return d


def dual_reshuffle(o) -> DenseOperator:
    """O~[(j,l),(i,k)] = O[(i,j),(k,l)] with composite index i*d + j"""
    o = as_operator(o)
    d = _local_dim(o.shape[0])
    return o.reshape(d, d, d, d).transpose(1, 3, 0, 2).reshape(d * d, d * d)


def inverse_dual_reshuffle(o) -> DenseOperator:
    o = as_operator(o)
    d = _local_dim(o.shape[0])
    return o.reshape(d, d, d, d).transpose(2, 0, 3, 1).reshape(d * d, d * d)


def is_dual_unitary(o, tol: float | None = None) -> DualityResiduals:
    tol = get_settings().unitarity_tol if tol is None else tol
    o = as_operator(o)
    return DualityResiduals(
        unitary_residual=unitarity_residual(o),
        dual_residual=unitarity_residual(dual_reshuffle(o)),
        tol=tol,
    )


def haar_unitary(d: int, rng: np.random.Generator) -> DenseOperator:
    if d < 1:
        raise InvalidDimensionError(f"Haar unitary needs d >= 1, got {d}")
    if d == 1:
        return np.exp(2j * np.pi * rng.random()).reshape(1, 1)
    return np.asarray(unitary_group.rvs(d, random_state=rng), dtype=np.complex128)


def random_dual_params(
    d: int, rng: np.random.Generator, j_range: tuple[float, float] = (0.0, np.pi)
) -> DualGateParams:
    us = [haar_unitary(d, rng) for _ in range(4)]
    return DualGateParams(*us, J=float(rng.uniform(*j_range)))


def field_to_gates(theta, d: int, transposed: bool = False) -> DenseOperator:
    """exp(i theta . sigma), or exp(i theta . sigma^T) when transposed"""
    theta = np.asarray(theta, dtype=float)
    gens = gell_mann_generators(d)
    if theta.shape != (len(gens),):
        raise InvalidDimensionError(f"field must have length {len(gens)}, got {theta.shape}")
    h = np.tensordot(theta, np.array(gens), axes=1)
    return expm(1j * (h.T if transposed else h))


class DisorderDistribution(BaseModel):
    """On-site field density; nu is a scalar or a table indexed [a][iota][iota']"""

    kind: Literal["gaussian", "box", "singular-mask"] = "gaussian"
    nu: float | list[list[list[float]]] = DEFAULT_NU
    mask: Optional[list[int]] = None
    base: Literal["gaussian", "box"] = "gaussian"
    time_reversal: bool = False

    @field_validator("nu")
    @classmethod
    def _positive(cls, v):
        if np.any(np.asarray(v, dtype=float) <= 0.0):
            raise ValueError("variabilities must be positive")
        return v

    @property
    def density(self) -> str:
        return self.base if self.kind == "singular-mask" else self.kind

    def active(self, d: int) -> np.ndarray:
        n_gen = d * d - 1
        if self.kind != "singular-mask" or self.mask is None:
            return np.ones(n_gen, dtype=bool)
        active = np.zeros(n_gen, dtype=bool)
        for a in self.mask:
            if not 1 <= a <= n_gen:
                raise InvalidDimensionError(f"mask index {a} outside [1, {n_gen}]")
            active[a - 1] = True
        return active

    def nu_table(self, d: int) -> np.ndarray:
        """Array [a, iota, iota'] with inactive components set to exactly zero"""
        n_gen = d * d - 1
        if isinstance(self.nu, float | int):
            table = np.full((n_gen, 2, 2), float(self.nu))
        else:
            table = np.asarray(self.nu, dtype=float)
            if table.shape != (n_gen, 2, 2):
                raise InvalidDimensionError(f"nu table shape {table.shape} != {(n_gen, 2, 2)}")
        return np.where(self.active(d)[:, None, None], table, 0.0)

    @classmethod
    def clean(cls) -> "DisorderDistribution":
        """Delta measure at the identity"""
        return cls(kind="singular-mask", mask=[])


@dataclass(frozen=True)
class DisorderRealization:
    """theta[iota, doubled site, a] for iota in {0 (u), 1 (w)}"""

    theta: np.ndarray
    seed: int
    sample_idx: int = 0
    time_reversal: bool = False

    @property
    def L(self) -> int:
        return self.theta.shape[1] // 2

    def u(self, doubled: int, d: int) -> DenseOperator:
        return field_to_gates(self.theta[0, doubled], d)

    def w(self, doubled: int, d: int) -> DenseOperator:
        return field_to_gates(self.theta[1, doubled], d, transposed=True)


def sample_realization(
    dist: DisorderDistribution, L: int, d: int, seed: int, sample_idx: int = 0
) -> DisorderRealization:
    rng = get_rng(seed, sample_idx)
    n_gen = d * d - 1
    nu = dist.nu_table(d)
    # parity of each doubled site selects iota'
    scale = np.stack([nu[:, iota, np.arange(2 * L) % 2].T for iota in (0, 1)])
    if dist.density == "gaussian":
        draws = rng.standard_normal((2, 2 * L, n_gen))
    else:
        draws = rng.uniform(-1.0, 1.0, (2, 2 * L, n_gen))
    theta = draws * scale
    if dist.time_reversal:
        theta[1] = theta[0]
    return DisorderRealization(theta, seed, sample_idx, dist.time_reversal)


def gate_to_config(o: np.ndarray) -> list[list[list[float]]]:
    """Interleaved [re, im] entries, row by row"""
    o = as_operator(o)
    return np.stack([o.real, o.imag], axis=-1).tolist()


def gate_from_config(entries: Sequence) -> DenseOperator:
    arr = np.asarray(entries, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise InvalidDimensionError("gate entries must be a matrix of [re, im] pairs")
    return as_operator(arr[..., 0] + 1j * arr[..., 1])
