"""Commutant dimensions and rank certificates for the magnetization generator sets.

The commutant of a set {X} is the null space of the positive semidefinite superoperator
C = sum_X ad_X^dag ad_X on row-major vectorized operators. It is found by a dense Hermitian
eigensolve for small operator spaces and, beyond that, in the eigenbasis of a random
Hermitian pivot from the real span of the set, where only same-cluster index pairs can carry
commutant weight.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd
from loguru import logger

from .config import get_rng, get_settings
from .constants import CLUSTER_TOL, DENSE_COMMUTANT_CAP, RANK_THRESHOLD
from .errors import InvalidDimensionError
from .qudit_algebra import (
    check_dimension,
    double_magnetization,
    full_lattice_magnetization,
    is_hermitian,
    raising_operator,
    reflection_operator,
    shift_operator,
    sublattice_magnetization,
    translation_family,
    translation_orders,
)
from .schemas import CommutantReport, RankReport
from .transfer_spectral import dual_row_operator
from .utils import DenseOperator, max_abs, permutation_cycles, vec

COMMUTANT_COLUMNS = ["t", "d", "set_label", "dimension", "gap", "ambiguous"]


@dataclass
class GeneratorSet:
    label: str
    operators: list[DenseOperator]
    t: int
    d: int
    n: int = 1
    hermitian: list[bool] = field(init=False)

    def __post_init__(self):
        dims = {op.shape for op in self.operators}
        if len(dims) != 1:
            raise InvalidDimensionError(f"generators of mixed shapes {sorted(dims)}")
        self.hermitian = [is_hermitian(op) for op in self.operators]

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    def __len__(self) -> int:
        return len(self.operators)

    def expected_span(self) -> Optional[list[DenseOperator]]:
        """Operators known to commute with every member, by label"""
        if self.label == "M":
            return translation_family(self.t, self.d)
        if self.label == "MT":
            return translation_family(self.t, self.d, reflections=True)
        if self.label == "Mn":
            return translation_family(self.t, self.d, self.n)
        return None


def _n_generators(d: int) -> int:
    return d * d - 1


def build_M_set(t: int, d: int) -> GeneratorSet:
    """{M_{a,iota}} and {M_{ab,iota}}: 2(d^2-1) + 2(d^2-1)^2 operators on d^{2t}"""
    if t < 1:
        raise InvalidDimensionError(f"t must be >= 1, got {t}")
    check_dimension(d ** (2 * t))
    g = range(1, _n_generators(d) + 1)
    singles = [sublattice_magnetization(a, iota, t, d) for iota in (0, 1) for a in g]
    doubles = [double_magnetization(a, b, iota, t, d) for iota in (0, 1) for a in g for b in g]
    return GeneratorSet("M", singles + doubles, t, d)


def build_MT_set(t: int, d: int) -> GeneratorSet:
    """{M_a} and {M_{ab,iota} + R M_{ab,iota} R}"""
    if t < 1:
        raise InvalidDimensionError(f"t must be >= 1, got {t}")
    check_dimension(d ** (2 * t))
    r = reflection_operator(2 * t, d)
    g = range(1, _n_generators(d) + 1)
    singles = [full_lattice_magnetization(a, t, d) for a in g]
    doubles = []
    for iota in (0, 1):
        for a in g:
            for b in g:
                m = double_magnetization(a, b, iota, t, d)
                doubles.append(m + r @ m @ r)
    return GeneratorSet("MT", singles + doubles, t, d)


def _coproduct(op: DenseOperator, n: int) -> DenseOperator:
    dim = op.shape[0]
    eye = np.eye(dim, dtype=np.complex128)
    total = np.zeros((dim**n, dim**n), dtype=np.complex128)
    for j in range(n):
        factors = [eye] * n
        factors[j] = op
        term = factors[0]
        for f in factors[1:]:
            term = np.kron(term, f)
        total += term
    return total


def build_Mn_set(t: int, d: int, n: int) -> GeneratorSet:
    """Coproducts over n copies of the members of build_M_set"""
    if n < 1:
        raise InvalidDimensionError(f"n must be >= 1, got {n}")
    check_dimension(d ** (2 * t * n))
    base = build_M_set(t, d)
    if n == 1:
        return GeneratorSet("Mn", base.operators, t, d, 1)
    return GeneratorSet("Mn", [_coproduct(op, n) for op in base.operators], t, d, n)


def folded_superoperator(gen: GeneratorSet) -> np.ndarray:
    """C = sum_X (X^dag - 1 x X^T)(X x 1 - 1 x X^T) written out in Kronecker form"""
    dim = gen.dim
    eye = np.eye(dim, dtype=np.complex128)
    a1 = sum(x.conj().T @ x for x in gen.operators)
    a2 = sum(x @ x.conj().T for x in gen.operators)
    c = np.kron(a1, eye) + np.kron(eye, a2.T)
    for x in gen.operators:
        c -= np.kron(x.conj().T, x.T) + np.kron(x, x.conj())
    return c


def _pivot_pairs(gen: GeneratorSet, seed: int) -> tuple[np.ndarray, list[DenseOperator]]:
    rng = get_rng(seed, 0)
    pivot = np.zeros((gen.dim, gen.dim), dtype=np.complex128)
    for x in gen.operators:
        c = rng.standard_normal(2)
        pivot += c[0] * (x + x.conj().T) + 1j * c[1] * (x - x.conj().T)
    evals, basis = np.linalg.eigh(pivot)
    scale = max(1.0, float(np.max(np.abs(evals))))
    cluster = np.concatenate([[0], np.cumsum(np.diff(evals) > CLUSTER_TOL * scale)])
    i, j = np.nonzero(cluster[:, None] == cluster[None, :])
    rotated = [basis.conj().T @ x @ basis for x in gen.operators]
    logger.debug(f"cluster reduction: {cluster[-1] + 1} clusters, {len(i)} index pairs of {gen.dim ** 2}")
    return np.stack([i, j]), rotated


def reduced_superoperator(gen: GeneratorSet, seed: int = 0) -> np.ndarray:
    """Compression of C onto same-cluster index pairs in the pivot eigenbasis"""
    (i, j), rotated = _pivot_pairs(gen, seed)
    a1 = sum(x.conj().T @ x for x in rotated)
    a2 = sum(x @ x.conj().T for x in rotated)
    same_i = i[:, None] == i[None, :]
    same_j = j[:, None] == j[None, :]
    g = a1[np.ix_(i, i)] * same_j + same_i * a2[np.ix_(j, j)].T
    for x in rotated:
        xd = x.conj().T
        g -= xd[np.ix_(i, i)] * x[np.ix_(j, j)].T + x[np.ix_(i, i)] * x[np.ix_(j, j)].conj()
    return g


def containment_residual(gen: GeneratorSet, span: list[DenseOperator]) -> float:
    return max(max_abs(x @ a - a @ x) for x in gen.operators for a in span)


def commutant_dimension(gen: GeneratorSet, seed: int = 0) -> CommutantReport:
    settings = get_settings()
    check_dimension(gen.dim)
    if gen.dim <= DENSE_COMMUTANT_CAP:
        evals, method = np.linalg.eigvalsh(folded_superoperator(gen)), "dense"
    else:
        evals, method = np.linalg.eigvalsh(reduced_superoperator(gen, seed)), "cluster-reduced"
    zero = evals < settings.zero_ceiling
    dimension = int(np.sum(zero))
    gap = float(evals[dimension]) if dimension < len(evals) else float("inf")
    ambiguous = gap < settings.gap_floor or dimension == 0
    if ambiguous:
        logger.warning(f"commutant of {gen.label} at t={gen.t}, d={gen.d}: gap {gap:.2e} is ambiguous")
    span = gen.expected_span()
    residual = containment_residual(gen, span) if span is not None else None
    logger.info(f"commutant {gen.label}(t={gen.t}, d={gen.d}, n={gen.n}) has dimension {dimension}")
    return CommutantReport(
        label=gen.label,
        t=gen.t,
        d=gen.d,
        dimension=dimension,
        zero_modes=evals[zero].tolist(),
        gap=gap,
        method=method,
        ambiguous=ambiguous,
        containment_residual=residual,
    )


def commutant_frame(reports: list[CommutantReport]) -> pd.DataFrame:
    rows = [
        {"t": r.t, "d": r.d, "set_label": r.label, "dimension": r.dimension, "gap": r.gap, "ambiguous": r.ambiguous}
        for r in reports
    ]
    return pd.DataFrame(rows, columns=COMMUTANT_COLUMNS)


def cyclic_projectors(t: int, d: int) -> tuple[list[DenseOperator], list[DenseOperator]]:
    """Momentum projectors Q_k and their reflected partners Q'_k, k = 0..t-1"""
    if t < 1:
        raise InvalidDimensionError(f"t must be >= 1, got {t}")
    family = translation_family(t, d, reflections=True)
    plain, reflected = family[:t], family[t:]
    phases = np.exp(2j * np.pi * np.outer(np.arange(t), np.arange(t)) / t)
    q = [sum(phases[k, tau] * plain[tau] for tau in range(t)) / t for k in range(t)]
    q_prime = [sum(phases[k, tau] * reflected[tau] for tau in range(t)) / t for k in range(t)]
    return q, q_prime


def _rank(matrix: np.ndarray, size: int) -> RankReport:
    sv = np.linalg.svd(matrix, compute_uv=False)
    threshold = RANK_THRESHOLD * (sv[0] if sv.size else 0.0)
    return RankReport(rank=int(np.sum(sv > threshold)), size=size, singular_values=sv.tolist(), threshold=threshold)


def dihedral_gram(t: int, d: int) -> np.ndarray:
    """tr((R^m Pi^{2tau})^dag R^m' Pi^{2tau'}) from cycle counts of the position permutations"""
    orders = translation_orders(t, reflections=True)
    gram = np.zeros((len(orders), len(orders)))
    for a, oa in enumerate(orders):
        inverse = np.argsort(oa)
        for b, ob in enumerate(orders):
            gram[a, b] = float(d) ** permutation_cycles(ob[inverse])
    return gram


def dihedral_rank(t: int, d: int) -> int:
    """Number of linearly independent operators among {R^m Pi^{2tau}}"""
    family = translation_family(t, d, reflections=True)
    gram = np.array([[np.vdot(a, b) for b in family] for a in family])
    report = _rank(gram, len(family))
    if not np.allclose(gram, dihedral_gram(t, d)):
        logger.warning(f"Gram matrix at t={t}, d={d} differs from the cycle-count values")
    return report.rank


def momentum_state(n: int, k: int, t: int, d: int) -> np.ndarray:
    """Normalized sum_j e^{i pi k j / t} Pi^j s_+^n |0...0> with the excitation at position 0"""
    if not 1 <= n <= d - 1:
        raise InvalidDimensionError(f"occupation must lie in [1, {d - 1}], got {n}")
    if not 0 <= k < 2 * t:
        raise InvalidDimensionError(f"momentum index must lie in [0, {2 * t}), got {k}")
    n_pos = 2 * t
    local = np.linalg.matrix_power(raising_operator(d), n)[:, 0]
    state = np.zeros(d**n_pos, dtype=np.complex128)
    state[: d ** (n_pos - 1) * d : d ** (n_pos - 1)] = local
    shift = shift_operator(n_pos, d)
    total = np.zeros_like(state)
    for j in range(n_pos):
        total += np.exp(1j * np.pi * k * j / t) * state
        state = shift @ state
    return total / np.linalg.norm(total)


def _commutator(a: DenseOperator, b: DenseOperator) -> DenseOperator:
    return a @ b - b @ a


def _singular_set(n_ops: list[DenseOperator], m3: list[DenseOperator]) -> list[DenseOperator]:
    """The fifteen commutator operators built from N_iota and M_{3,iota}"""
    ops = list(m3)
    ops += [_commutator(n_ops[i], m3[ip]) for i in (0, 1) for ip in (0, 1)]
    ops += [_commutator(_commutator(n_ops[i], m3[ip]), m3[ip]) for i in (0, 1) for ip in (0, 1)]
    ops += list(n_ops)
    ops += [
        _commutator(_commutator(n_ops[i], m3[ip]), n_ops[i]) for i, ip in ((0, 0), (0, 1), (1, 0))
    ]
    return ops


def singular_disorder_ranks(gate_U, gate_W, t: int) -> tuple[RankReport, RankReport]:
    """Numerical ranks of the commutator sets built from W~^dag M_3 W~ and U~ M_3 U~^dag, qubits only"""
    row_U = dual_row_operator(gate_U, t, "U")
    row_W = dual_row_operator(gate_W, t, "W")
    d = int(round(np.sqrt(np.asarray(gate_U).shape[0])))
    if d != 2:
        raise InvalidDimensionError(f"singular-disorder sets are defined for qubits, got d={d}")
    m3 = [sublattice_magnetization(3, iota, t, d) for iota in (0, 1)]
    n_w = [row_W.conj().T @ m @ row_W for m in m3]
    n_u = [row_U @ m @ row_U.conj().T for m in m3]
    reports = []
    for n_ops in (n_w, n_u):
        ops = _singular_set(n_ops, m3)
        reports.append(_rank(np.array([vec(op) for op in ops]), len(ops)))
    return reports[0], reports[1]
