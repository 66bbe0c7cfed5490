"""Brickwork Floquet operator of a qudit chain and traces of its powers.

The chain has 2L qudits at positions p = 0..2L-1 (site x at position 2x). The first layer
applies (u_x x u_{x+1/2}) U_x on (2x, 2x+1), the second (w_{x-1/2} x w_x) W_x on (2x-1, 2x).
"""

from dataclasses import dataclass, field
from functools import reduce
from typing import Literal, Optional

import numpy as np
from joblib import Parallel, delayed
from loguru import logger

from .config import get_settings
from .constants import DENSE_TRACE_CAP, SWEEP_CHUNK
from .dual_gates import (
    DisorderDistribution,
    DisorderRealization,
    is_dual_unitary,
    sample_realization,
)
from .errors import ConfigValidationError, GateValidationError, InvalidDimensionError, ResourceCapError
from .qudit_algebra import apply_local, as_operator, check_dimension, is_unitary, swap_gate
from .transfer_spectral import dual_row_operator
from .utils import DenseOperator, max_abs, permutation_cycles

TraceMethod = Literal["auto", "dense", "sweep", "dual"]


@dataclass
class CircuitSpec:
    d: int
    L: int
    gates_U: list[DenseOperator]
    gates_W: list[DenseOperator]
    disorder: DisorderDistribution = field(default_factory=DisorderDistribution)
    time_reversal: bool = False
    dual_unitary: list[bool] = field(init=False)

    def __post_init__(self):
        if self.L < 1:
            raise InvalidDimensionError(f"L must be >= 1, got {self.L}")
        if len(self.gates_U) != self.L or len(self.gates_W) != self.L:
            raise ConfigValidationError("need one U and one W gate per unit cell")
        self.gates_U = [as_operator(g) for g in self.gates_U]
        self.gates_W = [as_operator(g) for g in self.gates_W]
        for g in self.gates_U + self.gates_W:
            if g.shape != (self.d**2, self.d**2):
                raise GateValidationError(f"gate shape {g.shape} does not match d={self.d}")
            if not is_unitary(g):
                raise GateValidationError("circuit gates must be unitary")
        if self.time_reversal != self.disorder.time_reversal:
            raise ConfigValidationError("time_reversal flag differs between circuit and disorder")
        self.dual_unitary = [bool(is_dual_unitary(g)) for g in self.gates_U + self.gates_W]

    @classmethod
    def homogeneous(
        cls,
        d: int,
        L: int,
        gate_U,
        gate_W,
        disorder: Optional[DisorderDistribution] = None,
    ) -> "CircuitSpec":
        disorder = disorder or DisorderDistribution()
        return cls(d, L, [gate_U] * L, [gate_W] * L, disorder, disorder.time_reversal)

    @property
    def dimension(self) -> int:
        return self.d ** (2 * self.L)

    @property
    def is_homogeneous(self) -> bool:
        return all(max_abs(g - self.gates_U[0]) == 0 for g in self.gates_U) and all(
            max_abs(g - self.gates_W[0]) == 0 for g in self.gates_W
        )

    @property
    def is_dual_unitary(self) -> bool:
        return all(self.dual_unitary)


@dataclass(frozen=True)
class SpectralSample:
    trace_value: complex
    t: int
    seed: int
    sample_idx: int = 0


Layer = list[tuple[DenseOperator, tuple[int, int]]]


def _fields(realization: Optional[DisorderRealization], L: int, d: int):
    eye = np.eye(d, dtype=np.complex128)
    if realization is None:
        return [eye] * (2 * L), [eye] * (2 * L)
    if realization.L != L:
        raise InvalidDimensionError(f"realization is for L={realization.L}, circuit has L={L}")
    us = [realization.u(h, d) for h in range(2 * L)]
    ws = [realization.w(h, d) for h in range(2 * L)]
    return us, ws


def floquet_layers(spec: CircuitSpec, realization: Optional[DisorderRealization]) -> tuple[Layer, Layer]:
    """Dressed two-site gates of both layers, in application order"""
    L, d = spec.L, spec.d
    us, ws = _fields(realization, L, d)
    n_pos = 2 * L
    first = [
        (np.kron(us[2 * x], us[2 * x + 1]) @ spec.gates_U[x], (2 * x, 2 * x + 1))
        for x in range(L)
    ]
    second = [
        (np.kron(ws[(2 * x - 1) % n_pos], ws[2 * x]) @ spec.gates_W[x], ((2 * x - 1) % n_pos, 2 * x))
        for x in range(L)
    ]
    return first, second


def _apply_layers(states: np.ndarray, layers: tuple[Layer, Layer], spec: CircuitSpec) -> np.ndarray:
    out = states
    for layer in layers:
        for op, positions in layer:
            out = apply_local(op, out, positions, 2 * spec.L, spec.d)
    return out


def floquet_operator(spec: CircuitSpec, realization: Optional[DisorderRealization] = None) -> DenseOperator:
    check_dimension(spec.dimension)
    return _apply_layers(np.eye(spec.dimension, dtype=np.complex128), floquet_layers(spec, realization), spec)


def apply_floquet(
    state: np.ndarray, spec: CircuitSpec, realization: Optional[DisorderRealization] = None
) -> np.ndarray:
    state = np.asarray(state, dtype=np.complex128)
    if state.shape[0] != spec.dimension:
        raise InvalidDimensionError(f"state length {state.shape[0]} != {spec.dimension}")
    return _apply_layers(state, floquet_layers(spec, realization), spec)


def time_reversal_operator(spec: CircuitSpec) -> DenseOperator:
    """Undressed first-layer gates; conjugates U into U^T for symmetric gates and w = u^T"""
    check_dimension(spec.dimension)
    out = np.eye(spec.dimension, dtype=np.complex128)
    for x in range(spec.L):
        out = apply_local(spec.gates_U[x], out, (2 * x, 2 * x + 1), 2 * spec.L, spec.d)
    return out


def _sweep_chunk(columns: np.ndarray, layers, spec: CircuitSpec, t: int) -> complex:
    states = np.zeros((spec.dimension, len(columns)), dtype=np.complex128)
    states[columns, np.arange(len(columns))] = 1.0
    for _ in range(t):
        states = _apply_layers(states, layers, spec)
    return complex(np.sum(states[columns, np.arange(len(columns))]))


def sweep_trace_power(
    spec: CircuitSpec, realization: Optional[DisorderRealization], t: int, threads: int | None = None
) -> complex:
    """tr U^t as a sum of diagonal matrix elements over the full basis"""
    settings = get_settings()
    if spec.dimension > settings.sweep_cap:
        raise ResourceCapError(f"basis sweep over {spec.dimension} states exceeds {settings.sweep_cap}")
    layers = floquet_layers(spec, realization)
    chunks = np.array_split(np.arange(spec.dimension), max(1, spec.dimension // SWEEP_CHUNK))
    parts = Parallel(n_jobs=threads or settings.threads)(
        delayed(_sweep_chunk)(c, layers, spec, t) for c in chunks
    )
    return complex(sum(parts))


def _site_column(even: DenseOperator, odd: DenseOperator, t: int) -> DenseOperator:
    """Single-site dressing of one dual column"""
    return reduce(np.kron, [even if r % 2 == 0 else odd for r in range(2 * t)])


def dual_trace_power(spec: CircuitSpec, realization: Optional[DisorderRealization], t: int) -> complex:
    """tr U^t as the trace of L space-direction column products on 2t time sites.

    Each unit cell x contributes W~_{x+1} E_{x+1/2} U~_x E_x, where E_x carries u_x^T on even
    and w_x on odd dual positions and E_{x+1/2} carries u_{x+1/2} and w_{x+1/2}^T.
    """
    if t == 0:
        return complex(spec.dimension)
    d, L = spec.d, spec.L
    check_dimension(d ** (2 * t))
    us, ws = _fields(realization, L, d)
    rows_U = [dual_row_operator(g, t, "U", require_unitary=False) for g in spec.gates_U]
    rows_W = [dual_row_operator(g, t, "W", require_unitary=False) for g in spec.gates_W]
    product = np.eye(d ** (2 * t), dtype=np.complex128)
    for x in range(L):
        integer = _site_column(us[2 * x].T, ws[2 * x], t)
        half = _site_column(us[2 * x + 1], ws[2 * x + 1].T, t)
        product = rows_W[(x + 1) % L] @ half @ rows_U[x] @ integer @ product
    return complex(np.trace(product))


def resolve_trace_method(dimension: int, method: TraceMethod = "auto") -> str:
    if method == "auto":
        return "dense" if dimension <= DENSE_TRACE_CAP else "dual"
    return method


def trace_work(d: int, L: int, t: int, method: TraceMethod = "auto") -> float:
    """Rough floating-point work of one tr U^t sample"""
    if t == 0:
        return 0.0
    method = resolve_trace_method(d ** (2 * L), method)
    if method == "dense":
        return float(d) ** (6 * L)
    if method == "sweep":
        return float(t * 2 * L) * float(d) ** (4 * L)
    if method == "dual":
        return float(L) * float(d) ** (6 * t)
    raise ConfigValidationError(f"unknown trace method {method}")


def trace_power(
    spec: CircuitSpec,
    realization: Optional[DisorderRealization],
    t: int,
    method: TraceMethod = "auto",
    threads: int | None = None,
) -> complex:
    if t < 0:
        raise InvalidDimensionError(f"t must be >= 0, got {t}")
    if t == 0:
        return complex(spec.dimension)
    method = resolve_trace_method(spec.dimension, method)
    logger.debug(f"trace_power L={spec.L} t={t} via {method}")
    if method == "dense":
        return complex(np.trace(np.linalg.matrix_power(floquet_operator(spec, realization), t)))
    if method == "sweep":
        return sweep_trace_power(spec, realization, t, threads)
    if method == "dual":
        return dual_trace_power(spec, realization, t)
    raise ConfigValidationError(f"unknown trace method {method}")


def trace_sample(
    spec: CircuitSpec, t: int, seed: int, sample_idx: int, method: TraceMethod = "auto"
) -> SpectralSample:
    realization = sample_realization(spec.disorder, spec.L, spec.d, seed, sample_idx)
    return SpectralSample(trace_power(spec, realization, t, method), t, seed, sample_idx)


def permutation_trace(spec: CircuitSpec, t: int) -> int:
    """Cycle-counting value of tr U^t for a clean circuit built from SWAP gates only"""
    swap = swap_gate(spec.d)
    if any(max_abs(g - swap) > 0 for g in spec.gates_U + spec.gates_W):
        raise GateValidationError("permutation_trace needs SWAP gates")
    n_pos = 2 * spec.L
    image = list(range(n_pos))
    for a, b in [(2 * x, 2 * x + 1) for x in range(spec.L)] + [
        ((2 * x - 1) % n_pos, 2 * x) for x in range(spec.L)
    ]:
        image = [b if p == a else a if p == b else p for p in image]
    power = list(range(n_pos))
    for _ in range(t):
        power = [image[p] for p in power]
    return spec.d ** permutation_cycles(power)
