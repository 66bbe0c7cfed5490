import numpy as np
import pytest

from dual_unitary_sff.circuit import CircuitSpec, trace_power
from dual_unitary_sff.config import get_rng
from dual_unitary_sff.dual_gates import DisorderDistribution, build_dual_gate, random_dual_params
from dual_unitary_sff.errors import (
    GateValidationError,
    InvalidDimensionError,
    QuadratureConfigError,
    ResourceCapError,
)
from dual_unitary_sff.qudit_algebra import is_unitary, reflection_operator, swap_gate, translation_family
from dual_unitary_sff.transfer_spectral import (
    averaging_apply,
    build_transfer_context,
    dense_transfer,
    dual_row_operator,
    eigenspace_projector,
    inhomogeneous_block_norm,
    inhomogeneous_trace,
    jordan_growth,
    leading_spectrum,
    site_contexts,
    spectral_radius,
    trace_curve,
    trace_transfer_power,
    transfer_apply,
    unimodular_count,
)
from dual_unitary_sff.utils import vec


def test_dual_rows_require_dual_unitary_gates(gate_pair):
    with pytest.raises(GateValidationError):
        dual_row_operator(np.eye(4), 2)
    assert is_unitary(dual_row_operator(gate_pair[0], 2, "U"))
    assert is_unitary(dual_row_operator(gate_pair[1], 2, "W"))


@pytest.mark.parametrize("t,L", [(1, 2), (1, 3), (2, 2)])
def test_clean_transfer_trace_is_squared_circuit_trace(gate_pair, clean, t, L):
    ctx = build_transfer_context(*gate_pair, t, clean)
    spec = CircuitSpec.homogeneous(2, L, *gate_pair, clean)
    expected = abs(trace_power(spec, None, t, method="dense")) ** 2
    assert trace_transfer_power(ctx, L) == pytest.approx(expected, abs=1e-8)
    moduli = np.abs(np.linalg.eigvals(dense_transfer(ctx)))
    np.testing.assert_allclose(moduli, 1.0, atol=1e-8)


def test_matrix_free_matches_dense(gate_pair, gaussian, rng):
    ctx = build_transfer_context(*gate_pair, 2, gaussian)
    v = rng.standard_normal(ctx.D) + 1j * rng.standard_normal(ctx.D)
    w = rng.standard_normal(ctx.D) + 1j * rng.standard_normal(ctx.D)
    tm = dense_transfer(ctx)
    np.testing.assert_allclose(transfer_apply(v, ctx), tm @ v, atol=1e-10)
    np.testing.assert_allclose(transfer_apply(w, ctx, adjoint=True), tm.conj().T @ w, atol=1e-10)


def test_translations_are_fixed_points(gate_pair, gaussian):
    ctx = build_transfer_context(*gate_pair, 3, gaussian)
    for op in translation_family(3, 2):
        np.testing.assert_allclose(transfer_apply(vec(op), ctx), vec(op), atol=1e-10)


def test_reflected_translations_are_fixed_under_time_reversal(symmetric_pair):
    ctx = build_transfer_context(*symmetric_pair, 2, DisorderDistribution(nu=0.5, time_reversal=True))
    r = reflection_operator(4, 2)
    for op in translation_family(2, 2):
        np.testing.assert_allclose(transfer_apply(vec(r @ op), ctx), vec(r @ op), atol=1e-10)
    assert np.trace(eigenspace_projector(ctx)).real == pytest.approx(4)


def test_eigenspace_projector(gate_pair, gaussian):
    ctx = build_transfer_context(*gate_pair, 3, gaussian)
    p = eigenspace_projector(ctx)
    np.testing.assert_allclose(p @ p, p, atol=1e-10)
    np.testing.assert_allclose(p, p.conj().T, atol=1e-12)
    assert np.trace(p).real == pytest.approx(3)


@pytest.mark.parametrize("t", [1, 2])
def test_unimodular_count_and_convergence(gate_pair, gaussian, t):
    ctx = build_transfer_context(*gate_pair, t, gaussian)
    count, ambiguous, evals = unimodular_count(ctx)
    assert count == t and not ambiguous
    assert spectral_radius(ctx) <= 1 + 1e-8
    curve = trace_curve(ctx, [10, 400])
    assert list(curve.columns) == ["L", "re", "im"]
    assert abs(curve["re"].iloc[-1] - t) < 1e-6
    assert abs(curve["im"].iloc[-1]) < 1e-6


def test_time_reversal_doubles_the_count(symmetric_pair):
    ctx = build_transfer_context(*symmetric_pair, 1, DisorderDistribution(nu=0.5, time_reversal=True))
    count, ambiguous, _ = unimodular_count(ctx)
    assert count == 2 and not ambiguous


def test_transfer_is_non_expansive(gate_pair, gaussian, rng):
    ctx = build_transfer_context(*gate_pair, 1, gaussian)
    v = rng.standard_normal(ctx.D) + 1j * rng.standard_normal(ctx.D)
    assert jordan_growth(ctx, v, 200) <= 1 + 1e-6


def test_sweep_and_arnoldi_paths(gate_pair, gaussian, settings_env):
    ctx = build_transfer_context(*gate_pair, 1, gaussian)
    dense_value = trace_transfer_power(ctx, 5)
    dense_top = np.abs(leading_spectrum(ctx, 4))
    settings_env(dense_transfer_cap=8)
    assert trace_transfer_power(ctx, 5) == pytest.approx(dense_value, abs=1e-10)
    assert np.abs(leading_spectrum(ctx, 4))[0] == pytest.approx(dense_top[0], abs=1e-8)


def test_moment_context_fixes_copy_permutations(gate_pair, gaussian):
    ctx = build_transfer_context(*gate_pair, 1, gaussian, n=2)
    assert ctx.op_dim == 16 and ctx.D == 256
    for op in translation_family(1, 2, n=2):
        np.testing.assert_allclose(transfer_apply(vec(op), ctx), vec(op), atol=1e-10)


def test_monte_carlo_averaging_for_qutrits():
    rng = get_rng(3, 0)
    gates = [build_dual_gate(random_dual_params(3, rng, (2.0, 2.8))) for _ in range(2)]
    ctx = build_transfer_context(*gates, 1, DisorderDistribution(nu=0.5), mc_nodes=256)
    assert ctx.quadrature == "mc"
    identity = vec(np.eye(9, dtype=np.complex128))
    np.testing.assert_allclose(transfer_apply(identity, ctx), identity, atol=1e-10)
    assert spectral_radius(ctx) <= 1 + 1e-8


def test_context_validation(gate_pair, gaussian):
    with pytest.raises(InvalidDimensionError):
        build_transfer_context(*gate_pair, 0, gaussian)
    with pytest.raises(ResourceCapError):
        build_transfer_context(*gate_pair, 9, gaussian)
    with pytest.raises(QuadratureConfigError):
        build_transfer_context(*gate_pair, 1, gaussian, n_nodes=0)
    with pytest.raises(QuadratureConfigError):
        build_transfer_context(*gate_pair, 1, gaussian, quadrature="simpson")


def test_block_norms(gate_pair, gaussian):
    rng = get_rng(11, 0)
    other = [build_dual_gate(random_dual_params(2, rng, (2.5, 2.9))) for _ in range(2)]
    ctx_a = build_transfer_context(*gate_pair, 2, gaussian)
    ctx_b = build_transfer_context(*other, 2, gaussian)
    assert inhomogeneous_block_norm(ctx_a, ctx_b) < 1 - 1e-4
    swap = build_transfer_context(swap_gate(2), swap_gate(2), 2, gaussian)
    assert inhomogeneous_block_norm(swap, swap) == pytest.approx(1.0, abs=1e-8)


def test_inhomogeneous_trace_split(gaussian):
    rng = get_rng(12, 0)
    gates_U = [build_dual_gate(random_dual_params(2, rng, (2.5, 2.9))) for _ in range(4)]
    gates_W = [build_dual_gate(random_dual_params(2, rng, (2.5, 2.9))) for _ in range(4)]
    contexts = site_contexts(gates_U, gates_W, gaussian, 1)
    assert len(contexts) == 4
    split = inhomogeneous_trace(contexts)
    assert split.invariant_part == 1
    assert split.raw == pytest.approx(split.invariant_part + split.remainder, abs=1e-10)


def _random_vector(ctx, seed):
    rng = get_rng(seed, 0)
    return rng.standard_normal(ctx.D) + 1j * rng.standard_normal(ctx.D)


def test_clean_averaging_is_identity(gate_pair, clean):
    ctx = build_transfer_context(*gate_pair, 2, clean)
    v = _random_vector(ctx, 1)
    for layer in (0, 1):
        np.testing.assert_allclose(averaging_apply(v, ctx, layer), v, atol=1e-12)
        np.testing.assert_allclose(averaging_apply(v, ctx, layer, adjoint=True), v, atol=1e-12)


@pytest.mark.parametrize("time_reversal", [False, True])
def test_averaging_never_expands(gate_pair, time_reversal):
    ctx = build_transfer_context(*gate_pair, 2, DisorderDistribution(nu=0.5, time_reversal=time_reversal))
    for seed in range(3):
        v = _random_vector(ctx, seed)
        for layer in (0, 1):
            assert np.linalg.norm(averaging_apply(v, ctx, layer)) <= np.linalg.norm(v) * (1 + 1e-12)
        assert np.linalg.norm(transfer_apply(v, ctx)) <= np.linalg.norm(v) * (1 + 1e-12)


def test_averaging_strictly_contracts_generic_vectors(gate_pair):
    ctx = build_transfer_context(*gate_pair, 2, DisorderDistribution(nu=0.2))
    v = _random_vector(ctx, 4)
    ratio = np.linalg.norm(averaging_apply(v, ctx, 0)) / np.linalg.norm(v)
    assert 0 < ratio < 0.99


def test_box_quadrature_converges_in_node_count(gate_pair):
    box = DisorderDistribution(kind="box", nu=0.2)
    coarse = build_transfer_context(*gate_pair, 2, box, n_nodes=9)
    fine = build_transfer_context(*gate_pair, 2, box, n_nodes=17)
    assert coarse.averaging[0][0].n_nodes == 9**3 and fine.averaging[0][0].n_nodes == 17**3
    assert abs(trace_transfer_power(coarse, 8) - trace_transfer_power(fine, 8)) < 1e-6


def test_multi_copy_contexts_are_limited_to_qubits_at_t1(gate_pair, gaussian):
    with pytest.raises(ResourceCapError):
        build_transfer_context(*gate_pair, 2, gaussian, n=2)
    with pytest.raises(ResourceCapError):
        build_transfer_context(*gate_pair, 1, gaussian, n=3)
    assert build_transfer_context(*gate_pair, 1, gaussian, n=2).op_dim == 16


def test_inhomogeneous_remainder_decays_with_length(gaussian):
    rng = get_rng(13, 0)
    gates_U = [build_dual_gate(random_dual_params(2, rng, (2.5, 2.9))) for _ in range(12)]
    gates_W = [build_dual_gate(random_dual_params(2, rng, (2.5, 2.9))) for _ in range(12)]
    contexts = site_contexts(gates_U, gates_W, gaussian, 2)
    pair_norms = [inhomogeneous_block_norm(contexts[2 * j + 1], contexts[2 * j]) for j in range(6)]
    assert max(pair_norms) < 1
    D, previous = contexts[0].D, None
    for L in range(2, 13, 2):
        split = inhomogeneous_trace(contexts[:L])
        assert split.raw == pytest.approx(split.invariant_part + split.remainder, abs=1e-8)
        assert abs(split.remainder) <= D * np.prod(pair_norms[: L // 2]) + 1e-10
        assert abs(split.remainder) <= np.sqrt(D) * split.remainder_norm + 1e-10
        if previous is not None:
            assert split.remainder_norm <= pair_norms[L // 2 - 1] * previous + 1e-10
            assert split.remainder_norm < previous
        previous = split.remainder_norm
