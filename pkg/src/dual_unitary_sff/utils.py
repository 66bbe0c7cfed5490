import math
from typing import Callable, Iterable, Optional

import numpy as np
import numpy.typing as npt
from loguru import logger

from .constants import POWER_ITERATION_BUDGET, POWER_ITERATION_TOL
from .errors import ConvergenceError

DenseOperator = npt.NDArray[np.complex128]


def max_abs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def vec(a: np.ndarray) -> np.ndarray:
    """Row-major vectorization, so that (X kron Y*) vec(A) = vec(X A Y^dag)"""
    return np.ascontiguousarray(a).reshape(-1)


def unvec(v: np.ndarray) -> np.ndarray:
    n = math.isqrt(v.shape[0])
    return v.reshape(n, n)


def superoperator(x: np.ndarray, y: Optional[np.ndarray] = None) -> np.ndarray:
    """Dense matrix of A -> X A Y^dag on row-major vectorized operators"""
    y = x if y is None else y
    return np.kron(x, y.conj())


def permutation_cycles(perm: Iterable[int]) -> int:
    """Number of cycles of a permutation given as an image list"""
    perm = list(perm)
    seen = [False] * len(perm)
    cycles = 0
    for start in range(len(perm)):
        if seen[start]:
            continue
        cycles += 1
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
    return cycles


def power_iteration(
    apply: Callable[[np.ndarray], np.ndarray],
    dim: int,
    rng: np.random.Generator,
    budget: int = POWER_ITERATION_BUDGET,
    tol: float = POWER_ITERATION_TOL,
) -> float:
    """Largest eigenvalue of a positive semidefinite map by Rayleigh-quotient power iteration"""
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    estimate = 0.0
    for it in range(budget):
        w = apply(v)
        new = float(np.real(np.vdot(v, w)))
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(new - estimate) <= tol * max(1.0, abs(new)):
            logger.debug(f"power iteration converged after {it + 1} steps: {new:.12f}")
            return new
        estimate = new
    raise ConvergenceError("power iteration did not converge", abs(new - estimate))
