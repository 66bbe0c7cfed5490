"""Disorder-averaged spectral form factor and its higher moments, with circular-ensemble references."""

from typing import Callable, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from loguru import logger

from .circuit import CircuitSpec, TraceMethod, trace_sample
from .config import get_settings
from .constants import HEAVY_TAIL_RELATIVE_SE
from .errors import ConfigValidationError, InvalidDimensionError
from .schemas import SffEstimate

TRACE_COLUMNS = ["seed", "sample_idx", "t", "L", "re", "im"]
SFF_COLUMNS = ["t", "L", "n", "mean", "se", "n_samples", "seed", "cue_ref", "coe_ref"]


def trace_samples(
    spec: CircuitSpec,
    t: int,
    n_samples: int,
    seed: int,
    offset: int = 0,
    method: TraceMethod = "auto",
    threads: Optional[int] = None,
) -> np.ndarray:
    """tr U^t for sample indices offset .. offset + n_samples - 1, in index order"""
    n_jobs = threads or get_settings().threads
    samples = Parallel(n_jobs=n_jobs)(
        delayed(trace_sample)(spec, t, seed, offset + k, method) for k in range(n_samples)
    )
    return np.array([s.trace_value for s in samples], dtype=np.complex128)


def trace_frame(
    spec: CircuitSpec, t: int, n_samples: int, seed: int, offset: int = 0, **kwargs
) -> pd.DataFrame:
    traces = trace_samples(spec, t, n_samples, seed, offset, **kwargs)
    return pd.DataFrame(
        {
            "seed": seed,
            "sample_idx": np.arange(offset, offset + n_samples),
            "t": t,
            "L": spec.L,
            "re": traces.real,
            "im": traces.imag,
        },
        columns=TRACE_COLUMNS,
    )


def moment_from_traces(traces: np.ndarray, n: int) -> tuple[float, float]:
    values = np.abs(traces) ** (2 * n)
    se = float(np.std(values, ddof=1) / np.sqrt(len(values))) if len(values) > 1 else 0.0
    return float(np.mean(values)), se


def sff_moment(
    spec: CircuitSpec,
    t: int,
    n: int,
    n_samples: int,
    seed: int,
    offset: int = 0,
    method: TraceMethod = "auto",
    threads: Optional[int] = None,
) -> SffEstimate:
    """Sample average of |tr U^t|^{2n} over n_samples independent realizations"""
    if n < 1:
        raise InvalidDimensionError(f"moment order must be >= 1, got {n}")
    if n_samples < 2:
        raise ConfigValidationError(f"need at least two samples, got {n_samples}")
    if t == 0:
        exact = float(spec.dimension) ** (2 * n)
        return SffEstimate(t=0, L=spec.L, n=n, n_samples=n_samples, mean=exact, std_error=0.0, seed=seed)
    logger.info(f"K_{n}(t={t}, L={spec.L}) from {n_samples} samples, seed={seed}")
    mean, se = moment_from_traces(trace_samples(spec, t, n_samples, seed, offset, method, threads), n)
    estimate = SffEstimate(t=t, L=spec.L, n=n, n_samples=n_samples, mean=mean, std_error=se, seed=seed)
    if estimate.relative_error > HEAVY_TAIL_RELATIVE_SE:
        logger.warning(
            f"moment n={n} at t={t} is heavy-tailed: relative SE {estimate.relative_error:.2f}"
        )
        estimate.heavy_tailed = True
    return estimate


def sff_estimate(spec: CircuitSpec, t: int, n_samples: int, seed: int, **kwargs) -> SffEstimate:
    """K(t, L) = E|tr U^t|^2; the time-reversal variant follows from spec.disorder"""
    return sff_moment(spec, t, 1, n_samples, seed, **kwargs)


def batched_estimate(
    spec: CircuitSpec, t: int, n_batches: int, batch_size: int, seed: int, n: int = 1
) -> tuple[SffEstimate, list[SffEstimate]]:
    """Pooled estimate over seed-disjoint batches of sample indices, plus the per-batch estimates"""
    batches = [
        sff_moment(spec, t, n, batch_size, seed, offset=b * batch_size) for b in range(n_batches)
    ]
    pooled = sff_moment(spec, t, n, n_batches * batch_size, seed)
    return pooled, batches


def cue_sff(t: int, N: int) -> float:
    if t < 0 or N < 1:
        raise InvalidDimensionError(f"need t >= 0 and N >= 1, got t={t}, N={N}")
    if t == 0:
        return float(N * N)
    return float(min(t, N))


def coe_sff(t: int, N: int) -> float:
    if t < 0 or N < 1:
        raise InvalidDimensionError(f"need t >= 0 and N >= 1, got t={t}, N={N}")
    if t == 0:
        return float(N * N)
    lo, hi = min(t, N), max(t, N)
    m = np.arange(1, lo + 1)
    return float(2 * lo * (1.0 - np.sum(1.0 / (2 * m + 2 * hi - N - 1))))


def sff_row(spec: CircuitSpec, t: int, n: int, n_samples: int, seed: int, **kwargs) -> dict:
    """One SFF table row with the CUE and COE references at N = d^{2L}"""
    est = sff_moment(spec, t, n, n_samples, seed, **kwargs)
    return {
        "t": t,
        "L": spec.L,
        "n": n,
        "mean": est.mean,
        "se": est.std_error,
        "n_samples": n_samples,
        "seed": seed,
        "cue_ref": cue_sff(t, spec.dimension),
        "coe_ref": coe_sff(t, spec.dimension),
    }


def sff_grid(
    build_spec: Callable[[int], CircuitSpec],
    ts: Sequence[int],
    Ls: Sequence[int],
    n_samples: int,
    seed: int,
    n: int = 1,
    **kwargs,
) -> pd.DataFrame:
    rows = [sff_row(build_spec(L), t, n, n_samples, seed, **kwargs) for L in Ls for t in ts]
    return pd.DataFrame(rows, columns=SFF_COLUMNS)
