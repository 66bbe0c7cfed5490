"""Space-time dual transfer matrix of the disorder-averaged SFF and its spectral diagnostics.

Vectors on the doubled dual space are row-major vectorized operators A on d^{2tn}, so that
(X kron Y*) vec A = vec(X A Y^dag). One application of the transfer matrix reads

    A -> W~ O_1( U~ O_0(A) U~^dag ) W~^dag,

where O_0 averages the integer-site dressing, generated by conjugated sublattice
magnetizations, and O_1 the half-odd-site dressing generated by the magnetizations
themselves. With n > 1 copies every factor is replaced by its n-fold tensor power.
"""

import itertools
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import Literal, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from loguru import logger
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.legendre import leggauss
from scipy.linalg import orth
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigs

from .config import get_memory, get_rng, get_settings
from .constants import MAX_LEADING_EIGS, SWEEP_CHUNK
from .dual_gates import DisorderDistribution, dual_reshuffle, is_dual_unitary
from .errors import (
    ConfigValidationError,
    ConvergenceError,
    GateValidationError,
    InvalidDimensionError,
    QuadratureConfigError,
    ResourceCapError,
)
from .qudit_algebra import (
    apply_local,
    as_operator,
    full_lattice_magnetization,
    sublattice_magnetization,
    translation_family,
)
from .utils import DenseOperator, power_iteration, superoperator, unvec, vec

Quadrature = Literal["auto", "product", "mc"]


def dual_row_operator(
    gate, t: int, layer: Literal["U", "W"] = "U", require_unitary: bool = True
) -> DenseOperator:
    """Reshuffled gate on every dual pair of one parity, later time slice as first factor.

    U rows act on pairs (2m, 2m+1), W rows on (2m+1, 2m+2) including the wrap (2t-1, 0).
    """
    gate = as_operator(gate)
    if require_unitary:
        check = is_dual_unitary(gate)
        if not check:
            raise GateValidationError(
                f"gate is not dual-unitary (dual residual {check.dual_residual:.2e})"
            )
    d = int(round(np.sqrt(gate.shape[0])))
    dual = dual_reshuffle(gate)
    n_pos = 2 * t
    offset = 0 if layer == "U" else 1
    out = np.eye(d**n_pos, dtype=np.complex128)
    for m in range(t):
        first = 2 * m + offset
        out = apply_local(dual, out, (first, (first + 1) % n_pos), n_pos, d)
    return out


@dataclass
class AveragingOperator:
    """Weighted node unitaries V_k realizing A -> sum_k w_k V_k A V_k^dag"""

    layer: int
    iota: Optional[int]
    nodes: np.ndarray
    weights: np.ndarray
    method: str

    @property
    def n_nodes(self) -> int:
        return len(self.weights)

    def apply(self, a: np.ndarray, adjoint: bool = False) -> np.ndarray:
        v = self.nodes.conj().transpose(0, 2, 1) if adjoint else self.nodes
        conjugated = (v @ a) @ v.conj().transpose(0, 2, 1)
        return np.tensordot(self.weights, conjugated, axes=1)

    def dense(self) -> np.ndarray:
        k, n, _ = self.nodes.shape
        flat = self.nodes.reshape(k, n * n)
        mixed = (self.weights[:, None] * flat).T @ flat.conj()
        return mixed.reshape(n, n, n, n).transpose(0, 2, 1, 3).reshape(n * n, n * n)


def _quadrature_grid(nu: np.ndarray, density: str, n_nodes: int):
    active = np.flatnonzero(nu > 0)
    if active.size == 0:
        return np.zeros((1, nu.size)), np.ones(1)
    if density == "gaussian":
        x, w = hermgauss(n_nodes)
        x, w = np.sqrt(2.0) * x, w / np.sqrt(np.pi)
    else:
        x, w = leggauss(n_nodes)
        w = w / 2.0
    points = np.array(list(itertools.product(x, repeat=active.size)))
    weights = np.prod(np.array(list(itertools.product(w, repeat=active.size))), axis=1)
    theta = np.zeros((len(points), nu.size))
    theta[:, active] = points * nu[active]
    return theta, weights


def _mc_grid(nu: np.ndarray, density: str, n_samples: int, rng: np.random.Generator):
    if density == "gaussian":
        draws = rng.standard_normal((n_samples, nu.size))
    else:
        draws = rng.uniform(-1.0, 1.0, (n_samples, nu.size))
    return draws * nu, np.full(n_samples, 1.0 / n_samples)


def _node_unitaries(generators: np.ndarray, theta: np.ndarray, n_copies: int) -> np.ndarray:
    """exp(i theta . G) from the Hermitian eigendecomposition on the d^{2t} space"""
    h = np.tensordot(theta, generators, axes=(1, 0))
    evals, evecs = np.linalg.eigh(h)
    v = np.einsum("kij,kj,klj->kil", evecs, np.exp(1j * evals), evecs.conj(), optimize=True)
    if n_copies > 1:
        v = np.array([reduce(np.kron, [vk] * n_copies) for vk in v])
    return v


def _build_averaging_operator(
    t: int,
    d: int,
    dist_json: str,
    layer: int,
    iota: Optional[int],
    n_copies: int,
    quadrature: Quadrature,
    n_nodes: int,
    mc_nodes: int,
    seed: int,
) -> AveragingOperator:
    dist = DisorderDistribution.model_validate_json(dist_json)
    n_gen = d * d - 1
    if iota is None:
        gens = [full_lattice_magnetization(a, t, d) for a in range(1, n_gen + 1)]
        nu = dist.nu_table(d)[:, 0, layer]
    else:
        gens = [sublattice_magnetization(a, iota, t, d) for a in range(1, n_gen + 1)]
        nu = dist.nu_table(d)[:, iota, layer]
    gens = np.array(gens)
    if layer == 0:
        gens = gens.conj()
    if quadrature == "auto":
        quadrature = "product" if d == 2 else "mc"
    if quadrature == "product":
        theta, weights = _quadrature_grid(nu, dist.density, n_nodes)
    elif quadrature == "mc":
        rng = get_rng(seed, 2 * layer + (0 if iota is None else iota))
        theta, weights = _mc_grid(nu, dist.density, mc_nodes, rng)
    else:
        raise QuadratureConfigError(f"unknown quadrature {quadrature}")
    logger.debug(f"averaging layer={layer} iota={iota}: {len(weights)} {quadrature} nodes")
    return AveragingOperator(layer, iota, _node_unitaries(gens, theta, n_copies), weights, quadrature)


@lru_cache(maxsize=64)
def _averaging_operator(*args) -> AveragingOperator:
    """In-process cache in front of the optional on-disk one"""
    return get_memory().cache(_build_averaging_operator)(*args)


@dataclass
class TransferContext:
    t: int
    d: int
    gate_U: DenseOperator
    gate_W: DenseOperator
    row_U: DenseOperator
    row_W: DenseOperator
    disorder: DisorderDistribution
    averaging: tuple[list[AveragingOperator], list[AveragingOperator]]
    n: int = 1
    quadrature: str = "product"
    n_nodes: int = 9
    _dense: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def time_reversal(self) -> bool:
        return self.disorder.time_reversal

    @property
    def op_dim(self) -> int:
        return self.d ** (2 * self.t * self.n)

    @property
    def D(self) -> int:
        return self.op_dim**2


def build_transfer_context(
    gate_U,
    gate_W,
    t: int,
    disorder: Optional[DisorderDistribution] = None,
    n: int = 1,
    quadrature: Quadrature = "auto",
    n_nodes: Optional[int] = None,
    mc_nodes: Optional[int] = None,
    seed: int = 0,
) -> TransferContext:
    settings = get_settings()
    if t < 1 or n < 1:
        raise InvalidDimensionError(f"need t >= 1 and n >= 1, got t={t}, n={n}")
    disorder = disorder or DisorderDistribution()
    gate_U, gate_W = as_operator(gate_U), as_operator(gate_W)
    d = int(round(np.sqrt(gate_U.shape[0])))
    # n-copy contexts are supported for the qubit t=1 case only
    if n > 1 and not (t == 1 and n <= 2 and d == 2):
        raise ResourceCapError(f"n-copy transfer needs t=1, n<=2, d=2; got t={t}, n={n}, d={d}")
    if d ** (2 * t * n) > settings.dense_cap:
        raise ResourceCapError(f"operator space d^(2tn) = {d ** (2 * t * n)} exceeds dense cap")
    n_nodes = settings.quadrature_nodes if n_nodes is None else n_nodes
    if n_nodes < 1:
        raise QuadratureConfigError("need at least one quadrature node per axis")
    mc_nodes = settings.mc_averaging_nodes if mc_nodes is None else mc_nodes
    dist_json = disorder.model_dump_json()
    iotas = [None] if disorder.time_reversal else [0, 1]
    averaging = tuple(
        [
            _averaging_operator(t, d, dist_json, layer, iota, n, quadrature, n_nodes, mc_nodes, seed)
            for iota in iotas
        ]
        for layer in (0, 1)
    )
    row_U = dual_row_operator(gate_U, t, "U")
    row_W = dual_row_operator(gate_W, t, "W")
    if n > 1:
        row_U, row_W = reduce(np.kron, [row_U] * n), reduce(np.kron, [row_W] * n)
    return TransferContext(
        t, d, gate_U, gate_W, row_U, row_W, disorder, averaging, n,
        averaging[0][0].method, n_nodes,
    )


def averaging_apply(v: np.ndarray, ctx: TransferContext, layer: int, adjoint: bool = False) -> np.ndarray:
    a = unvec(np.asarray(v, dtype=np.complex128))
    for op in ctx.averaging[layer]:
        a = op.apply(a, adjoint)
    return vec(a)


def transfer_apply(v: np.ndarray, ctx: TransferContext, adjoint: bool = False) -> np.ndarray:
    if v.shape[0] != ctx.D:
        raise InvalidDimensionError(f"vector length {v.shape[0]} != {ctx.D}")
    if adjoint:
        a = unvec(v)
        a = ctx.row_W.conj().T @ a @ ctx.row_W
        a = unvec(averaging_apply(vec(a), ctx, 1, adjoint=True))
        a = ctx.row_U.conj().T @ a @ ctx.row_U
        return averaging_apply(vec(a), ctx, 0, adjoint=True)
    a = unvec(averaging_apply(v, ctx, 0))
    a = ctx.row_U @ a @ ctx.row_U.conj().T
    a = unvec(averaging_apply(vec(a), ctx, 1))
    return vec(ctx.row_W @ a @ ctx.row_W.conj().T)


def _layer_dense(ops: list[AveragingOperator]) -> np.ndarray:
    return reduce(np.matmul, [op.dense() for op in ops])


def dense_transfer(ctx: TransferContext) -> np.ndarray:
    cap = get_settings().dense_transfer_cap
    if ctx.D > cap:
        raise ResourceCapError(f"dense transfer matrix of dimension {ctx.D} exceeds {cap}")
    if ctx._dense is None:
        sup_U, sup_W = superoperator(ctx.row_U), superoperator(ctx.row_W)
        ctx._dense = sup_W @ _layer_dense(ctx.averaging[1]) @ sup_U @ _layer_dense(ctx.averaging[0])
    return ctx._dense


def _sweep_chunk(columns: np.ndarray, ctx: TransferContext, L: int) -> complex:
    total = 0j
    for c in columns:
        v = np.zeros(ctx.D, dtype=np.complex128)
        v[c] = 1.0
        for _ in range(L):
            v = transfer_apply(v, ctx)
        total += v[c]
    return total


def trace_transfer_power(ctx: TransferContext, L: int, threads: Optional[int] = None) -> complex:
    """tr T^L, dense up to the transfer cap and by basis sweep beyond it"""
    if L < 1:
        raise InvalidDimensionError(f"L must be >= 1, got {L}")
    settings = get_settings()
    if ctx.D <= settings.dense_transfer_cap:
        return complex(np.trace(np.linalg.matrix_power(dense_transfer(ctx), L)))
    if ctx.D > settings.sweep_cap:
        raise ResourceCapError(f"transfer sweep over {ctx.D} states exceeds {settings.sweep_cap}")
    chunks = np.array_split(np.arange(ctx.D), max(1, ctx.D // SWEEP_CHUNK))
    parts = Parallel(n_jobs=threads or settings.threads)(
        delayed(_sweep_chunk)(c, ctx, L) for c in chunks
    )
    return complex(sum(parts))


def trace_curve(ctx: TransferContext, Ls: Sequence[int]) -> pd.DataFrame:
    """Long-format (L, re, im) rows of tr T^L"""
    tm = dense_transfer(ctx)
    rows, power, current = [], np.eye(ctx.D, dtype=np.complex128), 0
    for L in sorted(Ls):
        power = power @ np.linalg.matrix_power(tm, L - current)
        current = L
        value = np.trace(power)
        rows.append({"L": L, "re": float(value.real), "im": float(value.imag)})
    return pd.DataFrame(rows, columns=["L", "re", "im"])


def leading_spectrum(ctx: TransferContext, k: int = 8) -> np.ndarray:
    """Largest-magnitude eigenvalues, sorted by decreasing modulus"""
    if not 1 <= k <= MAX_LEADING_EIGS:
        raise InvalidDimensionError(f"k must lie in [1, {MAX_LEADING_EIGS}], got {k}")
    if ctx.D <= get_settings().dense_transfer_cap:
        evals = np.linalg.eigvals(dense_transfer(ctx))
    else:
        op = LinearOperator((ctx.D, ctx.D), matvec=lambda v: transfer_apply(v, ctx), dtype=np.complex128)
        try:
            evals = eigs(op, k=k, which="LM", return_eigenvectors=False, maxiter=50 * ctx.D)
        except ArpackNoConvergence as exc:
            raise ConvergenceError(
                f"Arnoldi found {len(exc.eigenvalues)} of {k} eigenvalues", float("nan")
            ) from exc
    return evals[np.argsort(-np.abs(evals))][:k]


def spectral_radius(ctx: TransferContext) -> float:
    return float(np.abs(leading_spectrum(ctx, 1)[0]))


def unimodular_count(ctx: TransferContext, k: int = MAX_LEADING_EIGS) -> tuple[int, bool, np.ndarray]:
    """Eigenvalues with |lambda| > 1 - 10 gap_floor; ambiguous when the split is not clean"""
    gap_floor = get_settings().gap_floor
    k = min(k, ctx.D)
    evals = leading_spectrum(ctx, k)
    mods = np.abs(evals)
    unimodular = mods > 1 - 10 * gap_floor
    count = int(np.sum(unimodular))
    ambiguous = bool(np.any(mods[unimodular] < 1 - 1e-6)) or (count == len(evals) and count < ctx.D)
    if ambiguous:
        logger.warning(f"unimodular count {count} is ambiguous at t={ctx.t}")
    return count, ambiguous, evals


def jordan_growth(ctx: TransferContext, v: np.ndarray, k_max: int = 1000) -> float:
    """sup_k ||T^k v|| / ||v|| over k <= k_max"""
    norm0 = np.linalg.norm(v)
    sup = 1.0
    for _ in range(k_max):
        v = transfer_apply(v, ctx)
        sup = max(sup, np.linalg.norm(v) / norm0)
    return float(sup)


def eigenspace_basis(ctx: TransferContext) -> np.ndarray:
    """Orthonormal columns spanning the vectorized translation family fixed by T"""
    family = translation_family(ctx.t, ctx.d, ctx.n, reflections=ctx.time_reversal)
    return orth(np.array([vec(op) for op in family]).T)


def eigenspace_projector(ctx: TransferContext) -> np.ndarray:
    b = eigenspace_basis(ctx)
    return b @ b.conj().T


def _complement(v: np.ndarray, basis: np.ndarray) -> np.ndarray:
    return v - basis @ (basis.conj().T @ v)


def inhomogeneous_block_norm(
    ctx_a: TransferContext, ctx_b: TransferContext, seed: int = 0
) -> float:
    """Spectral norm of (1-P) T_a T_b (1-P); exact up to the dense cap, power iteration on R^dag R beyond"""
    if (ctx_a.t, ctx_a.d, ctx_a.n) != (ctx_b.t, ctx_b.d, ctx_b.n):
        raise ConfigValidationError("contexts must share t, d and n")
    basis = eigenspace_basis(ctx_a)
    if ctx_a.D <= get_settings().dense_transfer_cap:
        r = dense_transfer(ctx_a) @ dense_transfer(ctx_b)
        r = r - basis @ (basis.conj().T @ r)
        r = r - (r @ basis) @ basis.conj().T
        return float(np.linalg.norm(r, 2))

    def block(v):
        w = transfer_apply(transfer_apply(_complement(v, basis), ctx_b), ctx_a)
        return _complement(w, basis)

    def block_adjoint(v):
        w = transfer_apply(_complement(v, basis), ctx_a, adjoint=True)
        return _complement(transfer_apply(w, ctx_b, adjoint=True), basis)

    top = power_iteration(lambda v: block_adjoint(block(v)), ctx_a.D, get_rng(seed, 0))
    return float(np.sqrt(max(top, 0.0)))


@dataclass(frozen=True)
class InhomogeneousTrace:
    raw: complex
    invariant_part: int
    remainder: complex
    remainder_norm: float


def site_contexts(
    gates_U: Sequence, gates_W: Sequence, disorder: DisorderDistribution, t: int, **kwargs
) -> list[TransferContext]:
    """One context per unit cell x, pairing U_x with W_{x+1}"""
    L = len(gates_U)
    return [
        build_transfer_context(gates_U[x], gates_W[(x + 1) % L], t, disorder, **kwargs)
        for x in range(L)
    ]


def inhomogeneous_trace(contexts: Sequence[TransferContext]) -> InhomogeneousTrace:
    """tr of T_{L-1} ... T_0 together with its split into invariant dimension plus remainder.

    remainder_norm is the Frobenius norm of the product of complement blocks; |remainder| never
    exceeds sqrt(D) times it.
    """
    L = len(contexts)
    if L == 0 or L % 2:
        raise ConfigValidationError(f"need an even number of site contexts, got {L}")
    mats = [dense_transfer(c) for c in contexts]
    basis = eigenspace_basis(contexts[0])
    complement = np.eye(contexts[0].D) - basis @ basis.conj().T
    raw = reduce(lambda acc, m: m @ acc, mats)
    blocks = [complement @ mats[2 * j + 1] @ mats[2 * j] @ complement for j in range(L // 2)]
    product = reduce(lambda acc, m: m @ acc, blocks)
    return InhomogeneousTrace(
        complex(np.trace(raw)),
        basis.shape[1],
        complex(np.trace(product)),
        float(np.linalg.norm(product)),
    )
