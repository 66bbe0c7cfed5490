"""Elementary qudit operators: generators, spins, shifts, reflections and embeddings.

Sites of the periodic half-integer lattice are encoded by doubled integers, so a chain of
n unit cells has 2n positions and the site x sits at position 2x. Basis states are ordered
row-major with the first position most significant.
"""

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .config import get_settings
from .errors import InvalidDimensionError, LatticeIndexError, ResourceCapError
from .utils import DenseOperator, max_abs


def as_operator(a) -> DenseOperator:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidDimensionError(f"operator must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidDimensionError("operator has non-finite entries")
    return a


def is_hermitian(a: np.ndarray, tol: float | None = None) -> bool:
    tol = get_settings().structure_tol if tol is None else tol
    return max_abs(a - a.conj().T) < tol


def is_unitary(a: np.ndarray, tol: float | None = None) -> bool:
    tol = get_settings().unitarity_tol if tol is None else tol
    return unitarity_residual(a) < tol


def unitarity_residual(a: np.ndarray) -> float:
    return max_abs(a.conj().T @ a - np.eye(a.shape[0]))


def is_traceless(a: np.ndarray, tol: float | None = None) -> bool:
    tol = get_settings().structure_tol if tol is None else tol
    return abs(np.trace(a)) < tol


def check_dimension(dim: int):
    cap = get_settings().dense_cap
    if dim > cap:
        raise ResourceCapError(
            f"dense dimension {dim} exceeds cap {cap}; use the matrix-free path"
        )


def _check_d(d: int):
    if d < 2:
        raise InvalidDimensionError(f"local dimension must be >= 2, got {d}")


@dataclass(frozen=True)
class HalfLatticeIndex:
    """Site x of the lattice of n unit cells, stored as doubled = 2x mod 2n"""

    doubled: int
    n: int

    def __post_init__(self):
        if self.n < 1 or not 0 <= self.doubled < 2 * self.n:
            raise LatticeIndexError(f"doubled index {self.doubled} outside [0, {2 * self.n})")

    @classmethod
    def from_site(cls, x: float, n: int) -> "HalfLatticeIndex":
        doubled = 2 * x
        if doubled != int(doubled):
            raise LatticeIndexError(f"{x} is not a half-integer site")
        return cls(int(doubled) % (2 * n), n)

    @property
    def is_integer(self) -> bool:
        return self.doubled % 2 == 0

    @property
    def site(self) -> float:
        return self.doubled / 2


@lru_cache(maxsize=None)
def _gell_mann(d: int) -> tuple:
    mats = []
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=np.complex128)
            sym[j, k] = sym[k, j] = 1.0
            anti = np.zeros((d, d), dtype=np.complex128)
            anti[j, k] = -1j
            anti[k, j] = 1j
            mats.extend([sym, anti])
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        mats.append(np.diag(np.sqrt(2.0 / (l * (l + 1))) * diag).astype(np.complex128))
    for m in mats:
        m.setflags(write=False)
    return tuple(mats)


def gell_mann_generators(d: int) -> list[DenseOperator]:
    """Generalized Gell-Mann matrices normalized to tr(s_a s_b) = 2 delta_ab; Pauli x, y, z at d=2"""
    _check_d(d)
    return list(_gell_mann(d))


def spin_matrices(d: int) -> tuple[DenseOperator, DenseOperator, DenseOperator]:
    """Spin-(d-1)/2 matrices with s3 = diag(-(d-1)/2, ..., (d-1)/2)"""
    _check_d(d)
    s = (d - 1) / 2
    m = -s + np.arange(d)
    raise_ = np.zeros((d, d), dtype=np.complex128)
    for k in range(d - 1):
        raise_[k + 1, k] = np.sqrt(s * (s + 1) - m[k] * (m[k] + 1))
    lower = raise_.conj().T
    s1 = (raise_ + lower) / 2
    s2 = (raise_ - lower) / 2j
    s3 = np.diag(m).astype(np.complex128)
    return s1, s2, s3


def raising_operator(d: int) -> DenseOperator:
    """s_+ = (s1 + i s2) / sqrt(2)"""
    s1, s2, _ = spin_matrices(d)
    return (s1 + 1j * s2) / np.sqrt(2)


def position_permutation(order: Sequence[int], d: int) -> DenseOperator:
    """Permutation matrix sending |j_0 ... j_{n-1}> to |j_{order[0]} ... j_{order[n-1]}>"""
    n = len(order)
    dim = d**n
    check_dimension(dim)
    digits = np.array(np.unravel_index(np.arange(dim), (d,) * n)).T
    out = np.ravel_multi_index(tuple(digits[:, list(order)].T), (d,) * n)
    p = np.zeros((dim, dim), dtype=np.complex128)
    p[out, np.arange(dim)] = 1.0
    return p


def shift_operator(n: int, d: int) -> DenseOperator:
    """Periodic shift |j1 ... jn> -> |jn j1 ... j_{n-1}>"""
    if n < 1:
        raise InvalidDimensionError(f"shift needs n >= 1, got {n}")
    return position_permutation(np.roll(np.arange(n), 1), d)


def reflection_operator(n: int, d: int) -> DenseOperator:
    """Reflection |j1 ... jn> -> |jn ... j1>"""
    if n < 1:
        raise InvalidDimensionError(f"reflection needs n >= 1, got {n}")
    return position_permutation(np.arange(n)[::-1], d)


def swap_gate(d: int) -> DenseOperator:
    return position_permutation([1, 0], d)


def apply_local(
    op: np.ndarray, states: np.ndarray, positions: Sequence[int], n_sites: int, d: int
) -> np.ndarray:
    """Act with a k-site operator on the given positions of one state or a batch of columns"""
    k = len(positions)
    dim = d**n_sites
    batch = states.shape[1:] if states.ndim == 2 else ()
    if states.shape[0] != dim:
        raise InvalidDimensionError(f"state length {states.shape[0]} != {dim}")
    psi = states.reshape((d,) * n_sites + batch)
    op_t = op.reshape((d,) * (2 * k))
    out = np.tensordot(op_t, psi, axes=(list(range(k, 2 * k)), list(positions)))
    out = np.moveaxis(out, list(range(k)), list(positions))
    return out.reshape(states.shape)


def embed_positions(op: np.ndarray, positions: Sequence[int], n_sites: int, d: int) -> DenseOperator:
    dim = d**n_sites
    check_dimension(dim)
    return apply_local(op, np.eye(dim, dtype=np.complex128), positions, n_sites, d)


def embed_local(op: np.ndarray, site: HalfLatticeIndex, d: int) -> DenseOperator:
    """Embed a one- or two-site operator into the chain of 2n qudits.

    Single-site operators act on position 2x. Two-site operators at x act on positions
    (2x - 1, 2x) with the first factor on 2x - 1, i.e. Pi^{2x-1} (O x 1) Pi^{-(2x-1)}.
    """
    op = as_operator(op)
    n_pos = 2 * site.n
    if op.shape[0] == d:
        return embed_positions(op, [site.doubled], n_pos, d)
    if op.shape[0] == d * d:
        start = (site.doubled - 1) % n_pos
        return embed_positions(op, [start, (start + 1) % n_pos], n_pos, d)
    raise InvalidDimensionError(f"embed_local supports 1 or 2 sites, got dim {op.shape[0]}")


def _generator(a: int, d: int) -> DenseOperator:
    gens = gell_mann_generators(d)
    if not 1 <= a <= len(gens):
        raise InvalidDimensionError(f"generator index {a} outside [1, {len(gens)}]")
    return gens[a - 1]


def sublattice_magnetization(a: int, iota: int, t: int, d: int) -> DenseOperator:
    """Sum of generator a over the integer (iota=0) or half-odd (iota=1) time sublattice of 2t sites"""
    sigma = _generator(a, d)
    n_pos = 2 * t
    check_dimension(d**n_pos)
    total = np.zeros((d**n_pos, d**n_pos), dtype=np.complex128)
    for p in range(iota, n_pos, 2):
        total += embed_positions(sigma, [p], n_pos, d)
    return total


def full_lattice_magnetization(a: int, t: int, d: int) -> DenseOperator:
    return sublattice_magnetization(a, 0, t, d) + sublattice_magnetization(a, 1, t, d)


def double_magnetization(a: int, b: int, iota: int, t: int, d: int) -> DenseOperator:
    """Sum over tau of sigma_a at tau times sigma_b at tau + 1/2, tau on sublattice iota"""
    pair = np.kron(_generator(a, d), _generator(b, d))
    n_pos = 2 * t
    check_dimension(d**n_pos)
    total = np.zeros((d**n_pos, d**n_pos), dtype=np.complex128)
    for p in range(iota, n_pos, 2):
        total += embed_positions(pair, [p, (p + 1) % n_pos], n_pos, d)
    return total


def translation_family(t: int, d: int, n: int = 1, reflections: bool = False) -> list[DenseOperator]:
    """Copy permutations times per-copy even translations Pi^{2tau} on n blocks of 2t positions.

    With reflections every per-copy factor also runs over R Pi^{2tau}. For n = 1 this is the
    list Pi^0, Pi^2, ..., followed by R Pi^0, R Pi^2, ... when reflections is set.
    """
    return [position_permutation(order, d) for order in translation_orders(t, n, reflections)]


def translation_orders(t: int, n: int = 1, reflections: bool = False) -> list[np.ndarray]:
    """Position orders of the translation family, in the convention of position_permutation"""
    if t < 1 or n < 1:
        raise InvalidDimensionError(f"need t >= 1 and n >= 1, got t={t}, n={n}")
    n_pos = 2 * t
    local = [np.roll(np.arange(n_pos), 2 * tau) for tau in range(t)]
    if reflections:
        local += [order[::-1] for order in local[:t]]
    orders = []
    for copies in itertools.permutations(range(n)):
        copy_order = np.concatenate([np.arange(n_pos) + n_pos * c for c in copies])
        for parts in itertools.product(local, repeat=n):
            within = np.concatenate([p + n_pos * c for c, p in enumerate(parts)])
            orders.append(within[copy_order])
    return orders
