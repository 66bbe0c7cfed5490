import numpy as np
import pytest
from loguru import logger

from dual_unitary_sff import sff_monte_carlo
from dual_unitary_sff.circuit import CircuitSpec, trace_power
from dual_unitary_sff.dual_gates import DisorderDistribution
from dual_unitary_sff.errors import ConfigValidationError, InvalidDimensionError
from dual_unitary_sff.sff_monte_carlo import (
    SFF_COLUMNS,
    TRACE_COLUMNS,
    batched_estimate,
    coe_sff,
    cue_sff,
    moment_from_traces,
    sff_estimate,
    sff_grid,
    sff_moment,
    trace_frame,
    trace_samples,
)
from dual_unitary_sff.transfer_spectral import build_transfer_context, trace_transfer_power


def test_circular_ensemble_references():
    assert cue_sff(3, 16) == 3
    assert cue_sff(40, 16) == 16
    assert cue_sff(0, 16) == 256
    assert coe_sff(1, 16) == pytest.approx(2 * 16 / 17)
    assert coe_sff(0, 4) == 16
    assert coe_sff(2, 16) == pytest.approx(4 * (1 - 1 / 17 - 1 / 19))
    with pytest.raises(InvalidDimensionError):
        cue_sff(-1, 4)
    with pytest.raises(InvalidDimensionError):
        coe_sff(1, 0)


def test_zero_time_is_exact(gate_pair, gaussian):
    spec = CircuitSpec.homogeneous(2, 2, *gate_pair, gaussian)
    est = sff_moment(spec, 0, 2, 10, seed=1)
    assert est.mean == 16.0**4 and est.std_error == 0.0


def test_clean_distribution_has_no_spread(gate_pair, clean):
    spec = CircuitSpec.homogeneous(2, 2, *gate_pair, clean)
    est = sff_estimate(spec, 2, 8, seed=5, threads=1)
    assert est.std_error == pytest.approx(0.0, abs=1e-10)
    assert est.mean == pytest.approx(abs(trace_power(spec, None, 2)) ** 2)


def test_samples_are_reproducible(gate_pair, gaussian):
    spec = CircuitSpec.homogeneous(2, 2, *gate_pair, gaussian)
    first = trace_samples(spec, 2, 6, seed=9, threads=1)
    again = trace_samples(spec, 2, 6, seed=9, threads=1)
    np.testing.assert_array_equal(first, again)
    shifted = trace_samples(spec, 2, 3, seed=9, offset=3, threads=1)
    np.testing.assert_array_equal(first[3:], shifted)
    assert not np.allclose(first, trace_samples(spec, 2, 6, seed=10, threads=1))


def test_moment_from_traces():
    mean, se = moment_from_traces(np.array([1.0, 1j, -1.0, 2.0]), 1)
    assert mean == pytest.approx(7 / 4)
    assert se == pytest.approx(np.std([1, 1, 1, 4], ddof=1) / 2)


def test_batches_pool_to_the_full_estimate(gate_pair, gaussian):
    spec = CircuitSpec.homogeneous(2, 2, *gate_pair, gaussian)
    pooled, batches = batched_estimate(spec, 1, 3, 4, seed=2)
    assert len(batches) == 3
    assert pooled.n_samples == 12
    assert pooled.mean == pytest.approx(np.mean([b.mean for b in batches]))


def test_estimate_validation(gate_pair, gaussian):
    spec = CircuitSpec.homogeneous(2, 2, *gate_pair, gaussian)
    with pytest.raises(InvalidDimensionError):
        sff_moment(spec, 1, 0, 10, seed=0)
    with pytest.raises(ConfigValidationError):
        sff_moment(spec, 1, 1, 1, seed=0)


def test_frames(gate_pair, gaussian):
    frame = trace_frame(CircuitSpec.homogeneous(2, 2, *gate_pair, gaussian), 1, 4, seed=3, threads=1)
    assert list(frame.columns) == TRACE_COLUMNS
    assert frame["sample_idx"].tolist() == [0, 1, 2, 3]

    grid = sff_grid(
        lambda L: CircuitSpec.homogeneous(2, L, *gate_pair, gaussian), [1, 2], [2, 3], 4, seed=3, threads=1
    )
    assert list(grid.columns) == SFF_COLUMNS
    assert len(grid) == 4
    assert (grid["cue_ref"] == grid["t"]).all()


@pytest.mark.slow
@pytest.mark.parametrize("t,L", [(1, 4), (2, 3)])
def test_sample_average_matches_transfer_trace(gate_pair, gaussian, t, L):
    est = sff_estimate(CircuitSpec.homogeneous(2, L, *gate_pair, gaussian), t, 600, seed=21)
    ctx = build_transfer_context(*gate_pair, t, gaussian)
    exact = trace_transfer_power(ctx, L).real
    assert abs(est.mean - exact) < 5 * est.std_error + 1e-3


@pytest.mark.slow
def test_time_reversal_sample_average(symmetric_pair):
    dist = DisorderDistribution(nu=0.5, time_reversal=True)
    est = sff_estimate(CircuitSpec.homogeneous(2, 3, *symmetric_pair, dist), 1, 600, seed=22)
    exact = trace_transfer_power(build_transfer_context(*symmetric_pair, 1, dist), 3).real
    assert abs(est.mean - exact) < 5 * est.std_error + 1e-3


def test_heavy_tailed_moments_are_flagged(gate_pair, gaussian, monkeypatch):
    spec = CircuitSpec.homogeneous(2, 2, *gate_pair, gaussian)
    monkeypatch.setattr(sff_monte_carlo, "HEAVY_TAIL_RELATIVE_SE", 0.0)
    messages = []
    sink = logger.add(messages.append, level="WARNING")
    try:
        est = sff_moment(spec, 1, 2, 8, seed=3)
    finally:
        logger.remove(sink)
    assert est.heavy_tailed
    assert any("heavy-tailed" in m for m in messages)
