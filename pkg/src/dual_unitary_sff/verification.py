"""Acceptance suite: every criterion is a function returning (passed, measured, thresholds)."""

import time
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional

import numpy as np
import pandas as pd
from loguru import logger

from .circuit import CircuitSpec, resolve_trace_method
from .commutant_lab import (
    build_M_set,
    build_Mn_set,
    build_MT_set,
    commutant_dimension,
    cyclic_projectors,
    dihedral_rank,
    momentum_state,
    singular_disorder_ranks,
)
from .config import get_rng
from .dual_gates import (
    DisorderDistribution,
    DualGateParams,
    build_dual_gate,
    build_time_reversal_gate,
    haar_unitary,
    random_dual_params,
)
from .qudit_algebra import swap_gate
from .schemas import CriterionResult
from .sff_monte_carlo import cue_sff, coe_sff, sff_moment
from .transfer_spectral import (
    build_transfer_context,
    inhomogeneous_block_norm,
    inhomogeneous_trace,
    jordan_growth,
    site_contexts,
    spectral_radius,
    trace_curve,
    trace_transfer_power,
    unimodular_count,
)

INTERACTING = (0.3, np.pi - 0.3)


@dataclass(frozen=True)
class Profile:
    commutant_cases: tuple = ((2, 1), (2, 2), (2, 3), (3, 1), (3, 2))
    coe_ts: tuple = (1, 2, 3)
    dihedral_ts: tuple = (1, 2, 3, 4, 5)
    limit_ts: tuple = (1, 2)
    limit_Ls: tuple = tuple(range(50, 501, 50))
    oracle_ts: tuple = (1, 2)
    oracle_Ls: tuple = (4, 6, 8)
    n_samples: int = 2000
    n_contexts: int = 20
    k_max: int = 1000
    n_pairs: int = 10
    n_draws: int = 100
    nu: float = 0.2
    block_Ls: tuple = (2, 4, 6, 8, 10, 12)
    threads: int = 1

    @classmethod
    def quick(cls) -> "Profile":
        return cls(
            commutant_cases=((2, 1), (2, 2), (3, 1)),
            coe_ts=(1, 2),
            dihedral_ts=(1, 2, 3),
            limit_ts=(1,),
            oracle_ts=(1,),
            oracle_Ls=(4,),
            n_samples=200,
            n_contexts=4,
            k_max=100,
            n_pairs=2,
            n_draws=20,
            block_Ls=(2, 4, 6),
        )


def random_interacting_gate(rng: np.random.Generator, d: int = 2):
    return build_dual_gate(random_dual_params(d, rng, INTERACTING))


def random_symmetric_gate(rng: np.random.Generator, d: int = 2):
    u1, u2 = haar_unitary(d, rng), haar_unitary(d, rng)
    return build_time_reversal_gate(u1, u2, float(rng.uniform(*INTERACTING)), d)


def swap_like_gate(rng: np.random.Generator, d: int = 2):
    """Dual-unitary gate with J = 0"""
    us = [haar_unitary(d, rng) for _ in range(4)]
    return build_dual_gate(DualGateParams(*us, J=0.0))


def commutant_count(profile: Profile, seed: int):
    dims = {f"d={d},t={t}": commutant_dimension(build_M_set(t, d), seed) for d, t in profile.commutant_cases}
    passed = all(r.dimension == r.t and not r.ambiguous for r in dims.values())
    measured = {k: {"dimension": r.dimension, "gap": r.gap} for k, r in dims.items()}
    return passed, measured, {"expected": "t", "gap_floor": 1e-4}


def coe_count(profile: Profile, seed: int):
    dims = {f"t={t}": commutant_dimension(build_MT_set(t, 2), seed) for t in profile.coe_ts}
    passed = all(r.dimension == 2 * r.t and not r.ambiguous for r in dims.values())
    measured = {k: {"dimension": r.dimension, "gap": r.gap} for k, r in dims.items()}
    return passed, measured, {"expected": "2t", "gap_floor": 1e-4}


def dihedral_independence(profile: Profile, seed: int):
    ranks = {t: dihedral_rank(t, 2) for t in profile.dihedral_ts}
    witness = 0.0
    for t in profile.dihedral_ts:
        q, q_prime = cyclic_projectors(t, 2)
        zero, flip = momentum_state(1, 0, t, 2), momentum_state(1, t, t, 2)
        witness = max(
            witness,
            np.max(np.abs(q[0] @ zero - zero)),
            np.max(np.abs(q_prime[0] @ zero - zero)),
            np.max(np.abs(q[0] @ flip - flip)),
            np.max(np.abs(q_prime[0] @ flip + flip)),
        )
    passed = all(r == 2 * t for t, r in ranks.items()) and witness < 1e-10
    return passed, {"ranks": ranks, "witness_residual": float(witness)}, {"expected": "2t", "witness": 1e-10}


def cue_limit(profile: Profile, seed: int):
    rng = get_rng(seed, 4)
    dist = DisorderDistribution(nu=profile.nu)
    measured, passed = {}, True
    for t in profile.limit_ts:
        ctx = build_transfer_context(random_interacting_gate(rng), random_interacting_gate(rng), t, dist)
        curve = trace_curve(ctx, profile.limit_Ls)
        deviation = np.abs(curve["re"] + 1j * curve["im"] - t)
        count, ambiguous, evals = unimodular_count(ctx)
        subleading = float(np.abs(evals[count])) if count < len(evals) else 0.0
        ok = bool(deviation.min() < 1e-6) and count == t and not ambiguous and subleading < 1 - 1e-4
        passed &= ok
        measured[f"t={t}"] = {"min_deviation": float(deviation.min()), "count": count, "subleading": subleading}
    return passed, measured, {"deviation": 1e-6, "subleading": 1 - 1e-4}


def _oracle(gate_U, gate_W, dist, t: int, L: int, n: int, profile: Profile, seed: int):
    """Monte Carlo moment against tr T^L; the direct trace is dense whenever the dense cap allows"""
    spec = CircuitSpec.homogeneous(2, L, gate_U, gate_W, dist)
    method = resolve_trace_method(spec.dimension)
    est = sff_moment(spec, t, n, profile.n_samples, seed, method=method, threads=profile.threads)
    ctx = build_transfer_context(gate_U, gate_W, t, dist, n=n)
    exact = trace_transfer_power(ctx, L).real
    return est, exact, method


def duality_oracle(profile: Profile, seed: int):
    rng = get_rng(seed, 5)
    gate_U, gate_W = random_interacting_gate(rng), random_interacting_gate(rng)
    dist = DisorderDistribution(nu=profile.nu)
    measured, passed, methods = {}, True, set()
    for t in profile.oracle_ts:
        for L in profile.oracle_Ls:
            est, exact, method = _oracle(gate_U, gate_W, dist, t, L, 1, profile, seed)
            ok = abs(est.mean - exact) < 3 * est.std_error
            passed &= ok
            methods.add(method)
            measured[f"t={t},L={L}"] = {
                "mean": est.mean, "se": est.std_error, "transfer": exact, "trace_method": method,
            }
    # at least one point must come from a trace that never uses the dual picture
    passed &= "dense" in methods
    return passed, measured, {"se_multiple": 3, "independent_method": "dense"}


def coe_limit(profile: Profile, seed: int):
    rng = get_rng(seed, 6)
    gate_U, gate_W = random_symmetric_gate(rng), random_symmetric_gate(rng)
    dist = DisorderDistribution(nu=profile.nu, time_reversal=True)
    measured, passed = {}, True
    L = max(profile.oracle_Ls)
    for t in profile.oracle_ts:
        ctx = build_transfer_context(gate_U, gate_W, t, dist)
        count, ambiguous, _ = unimodular_count(ctx)
        est, exact, method = _oracle(gate_U, gate_W, dist, t, L, 1, profile, seed)
        ok = count == 2 * t and not ambiguous and abs(est.mean - exact) < 3 * est.std_error
        passed &= ok
        measured[f"t={t}"] = {
            "count": count, "mean": est.mean, "se": est.std_error, "transfer": exact, "trace_method": method,
        }
    return passed, measured, {"expected_count": "2t", "se_multiple": 3}


def non_expansive(profile: Profile, seed: int):
    rng = get_rng(seed, 7)
    dist = DisorderDistribution(nu=profile.nu)
    radius, growth = 0.0, 0.0
    for k in range(profile.n_contexts):
        t = 1 + k % 2
        ctx = build_transfer_context(random_interacting_gate(rng), random_interacting_gate(rng), t, dist)
        radius = max(radius, spectral_radius(ctx))
        v = rng.standard_normal(ctx.D) + 1j * rng.standard_normal(ctx.D)
        growth = max(growth, jordan_growth(ctx, v, profile.k_max))
    passed = radius <= 1 + 1e-8 and growth <= 1 + 1e-6
    return passed, {"spectral_radius": radius, "growth": growth}, {"radius": 1 + 1e-8, "growth": 1 + 1e-6}


def block_contraction(profile: Profile, seed: int):
    rng = get_rng(seed, 8)
    dist = DisorderDistribution(nu=profile.nu)
    norms = []
    for _ in range(profile.n_pairs):
        ctx_a = build_transfer_context(random_interacting_gate(rng), random_interacting_gate(rng), 2, dist)
        ctx_b = build_transfer_context(random_interacting_gate(rng), random_interacting_gate(rng), 2, dist)
        norms.append(inhomogeneous_block_norm(ctx_a, ctx_b, seed))
    swap_ctx = build_transfer_context(swap_gate(2), swap_gate(2), 2, dist)
    swap_norm = inhomogeneous_block_norm(swap_ctx, swap_ctx, seed)

    n_sites = max(profile.block_Ls)
    gates_U = [random_interacting_gate(rng) for _ in range(n_sites)]
    gates_W = [random_interacting_gate(rng) for _ in range(n_sites)]
    contexts = site_contexts(gates_U, gates_W, dist, 2)
    pair_norms = [
        inhomogeneous_block_norm(contexts[2 * j + 1], contexts[2 * j], seed) for j in range(n_sites // 2)
    ]
    D = contexts[0].D
    decay_ok, remainders, envelope, previous = True, {}, {}, None
    for L in profile.block_Ls:
        split = inhomogeneous_trace(contexts[:L])
        consistent = abs(split.raw - split.invariant_part - split.remainder) < 1e-8
        bounded = abs(split.remainder) <= min(
            D * np.prod(pair_norms[: L // 2]), np.sqrt(D) * split.remainder_norm
        ) + 1e-10
        # each added pair multiplies the envelope by at most its block norm
        shrinking = previous is None or split.remainder_norm <= pair_norms[L // 2 - 1] * previous + 1e-10
        decay_ok &= consistent and bounded and shrinking
        remainders[f"L={L}"] = abs(split.remainder)
        envelope[f"L={L}"] = split.remainder_norm
        previous = split.remainder_norm
    delta = 1 - max(norms)
    passed = delta > 0 and max(pair_norms) < 1 and abs(swap_norm - 1) < 1e-8 and decay_ok
    measured = {
        "delta": delta,
        "swap_norm": swap_norm,
        "pair_norms": pair_norms,
        "remainders": remainders,
        "remainder_envelope": envelope,
    }
    return passed, measured, {"swap_tol": 1e-8}


def moments(profile: Profile, seed: int):
    report = commutant_dimension(build_Mn_set(1, 2, 2), seed)
    rng = get_rng(seed, 9)
    gate_U, gate_W = random_interacting_gate(rng), random_interacting_gate(rng)
    dist = DisorderDistribution(nu=profile.nu)
    est, exact, method = _oracle(gate_U, gate_W, dist, 1, max(profile.oracle_Ls), 2, profile, seed)
    passed = (
        report.dimension >= 2
        and report.containment_residual < 1e-8
        and abs(est.mean - exact) < 3 * est.std_error
    )
    measured = {
        "dimension": report.dimension,
        "containment_residual": report.containment_residual,
        "K2": est.mean,
        "se": est.std_error,
        "transfer": exact,
        "trace_method": method,
    }
    return passed, measured, {"lower_bound": 2, "containment": 1e-8, "se_multiple": 3}


def singular_disorder(profile: Profile, seed: int):
    rng = get_rng(seed, 10)
    full = 0
    for _ in range(profile.n_draws):
        s1, s2 = singular_disorder_ranks(random_interacting_gate(rng), random_interacting_gate(rng), 2)
        full += s1.full_rank and s2.full_rank
    witness, _ = singular_disorder_ranks(random_interacting_gate(rng), swap_like_gate(rng), 2)
    fraction = full / profile.n_draws
    passed = fraction >= 0.9 and witness.rank < witness.size
    return passed, {"full_rank_fraction": fraction, "witness_rank": witness.rank}, {"fraction": 0.9}


def rmt_references(profile: Profile, seed: int):
    coe_one = max(abs(coe_sff(1, N) - 2 * N / (N + 1)) for N in (1, 10, 100))
    coe_large = max(abs(coe_sff(t, 10**4) - 2 * t) / (2 * t) for t in (1, 2, 3))
    passed = cue_sff(3, 2) == 2 and coe_one < 1e-12 and coe_large < 0.01
    return passed, {"cue_3_2": cue_sff(3, 2), "coe_t1": coe_one, "coe_relative": coe_large}, {"coe_t1": 1e-12}


CRITERIA: dict[int, tuple[str, Callable]] = {
    1: ("commutant-count", commutant_count),
    2: ("coe-count", coe_count),
    3: ("dihedral-rank", dihedral_independence),
    4: ("cue-limit", cue_limit),
    5: ("duality-oracle", duality_oracle),
    6: ("coe-limit", coe_limit),
    7: ("non-expansive", non_expansive),
    8: ("block-contraction", block_contraction),
    9: ("moments", moments),
    10: ("singular-disorder", singular_disorder),
    11: ("rmt-references", rmt_references),
}


def select_criteria(selection: Optional[Iterable[str]]) -> list[int]:
    """Criterion ids from a mix of ids and tags; all criteria when nothing is selected"""
    if not selection:
        return list(CRITERIA)
    by_tag = {tag: cid for cid, (tag, _) in CRITERIA.items()}
    ids = []
    for item in selection:
        item = str(item).strip()
        if item.isdigit() and int(item) in CRITERIA:
            ids.append(int(item))
        elif item in by_tag:
            ids.append(by_tag[item])
        else:
            raise KeyError(f"unknown criterion {item}")
    return sorted(set(ids))


def run_criterion(cid: int, profile: Profile, seed: int) -> CriterionResult:
    tag, fn = CRITERIA[cid]
    start = time.perf_counter()
    passed, measured, thresholds = fn(profile, seed)
    result = CriterionResult(
        id=cid,
        tag=tag,
        passed=bool(passed),
        measured=measured,
        thresholds=thresholds,
        wall_time=time.perf_counter() - start,
    )
    logger.info(f"criterion {cid} ({tag}): {'pass' if result.passed else 'FAIL'} in {result.wall_time:.1f}s")
    return result


def run_criteria(
    selection: Optional[Iterable[str]] = None, quick: bool = False, seed: int = 0, threads: int = 1
) -> list[CriterionResult]:
    profile = replace(Profile.quick() if quick else Profile(), threads=threads)
    return [run_criterion(cid, profile, seed) for cid in select_criteria(selection)]


def criteria_frame(results: list[CriterionResult]) -> pd.DataFrame:
    return pd.DataFrame(
        [{"id": r.id, "tag": r.tag, "passed": r.passed, "wall_time": r.wall_time} for r in results],
        columns=["id", "tag", "passed", "wall_time"],
    )
