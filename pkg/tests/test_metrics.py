"""
Tests for the cost model, overall sparsity and speedup ratio
"""
import pytest

from app.core.exceptions import UsageError, ZeroWorkloadError
from app.services.metrics import (
    LayerWorkload,
    SequenceStats,
    delta_sparsity,
    layer_cost,
    network_cost,
    overall_sparsity,
    speedup_ratio,
    speedup_vs_dense_baseline,
)


def rows(dense_mults, densities, zero_fractions=None):
    zero_fractions = zero_fractions or [1.0 - d for d in densities]
    return [
        LayerWorkload(i, "conv", m, d, z)
        for i, (m, d, z) in enumerate(zip(dense_mults, densities, zero_fractions))
    ]


def test_layer_cost():
    """Test cost is density times dense multiplications"""
    assert layer_cost(LayerWorkload(0, "fc", 640, 0.25, 0.75)) == 160


def test_network_cost_hand_computed():
    """Test a three-layer toy network"""
    conv1 = 16 * 16 * 3 * 8 * 9
    conv2 = 8 * 8 * 8 * 16 * 9
    fc = 1024 * 10
    layers = rows([conv1, conv2, fc], [0.25, 0.5, 0.125])
    assert network_cost(layers) == 0.25 * conv1 + 0.5 * conv2 + 0.125 * fc
    assert network_cost(layers) == 13824 + 36864 + 1280


def test_speedup_ratio_constructed():
    """Test eta on constructed density vectors"""
    dense = rows([100, 300, 600], [0.5, 0.5, 0.5])
    rrm = rows([100, 300, 600], [0.25, 0.25, 0.25])
    assert speedup_ratio(dense, rrm) == pytest.approx(2.0, abs=1e-12)
    assert speedup_vs_dense_baseline(rrm) == pytest.approx(4.0, abs=1e-12)


def test_overall_sparsity_weighted():
    """Test S weights zero fractions by layer workload"""
    layers = rows([100, 300], [1.0, 0.2], [0.0, 0.8])
    assert overall_sparsity(layers) == pytest.approx(0.6, abs=1e-12)
    assert delta_sparsity(layers) == pytest.approx(0.6, abs=1e-12)


def test_ratios_are_scale_invariant():
    """Test scaling every dense_mults leaves S and eta unchanged"""
    dense = rows([120, 45, 900], [0.7, 0.4, 0.55])
    rrm = rows([120, 45, 900], [0.1, 0.3, 0.05])
    scaled_dense = rows([k * 7 for k in (120, 45, 900)], [0.7, 0.4, 0.55])
    scaled_rrm = rows([k * 7 for k in (120, 45, 900)], [0.1, 0.3, 0.05])
    assert speedup_ratio(scaled_dense, scaled_rrm) == pytest.approx(speedup_ratio(dense, rrm), rel=1e-12)
    assert overall_sparsity(scaled_dense) == pytest.approx(overall_sparsity(dense), rel=1e-12)


def test_zero_delta_workload():
    """Test an all-zero delta workload has no finite speedup"""
    dense = rows([100, 200], [0.5, 0.5])
    rrm = rows([100, 200], [0.0, 0.0])
    with pytest.raises(ZeroWorkloadError):
        speedup_ratio(dense, rrm)
    with pytest.raises(ZeroWorkloadError):
        speedup_vs_dense_baseline(rrm)


def test_speedup_needs_matching_layers():
    """Test dense and RRM rows must describe the same layers"""
    with pytest.raises(UsageError):
        speedup_ratio(rows([100, 200], [0.5, 0.5]), rows([100], [0.5]))
    with pytest.raises(UsageError):
        speedup_ratio(rows([100], [0.5]), rows([101], [0.5]))


def test_workload_validation():
    """Test densities stay in [0, 1] and dense cost is positive"""
    with pytest.raises(UsageError):
        LayerWorkload(0, "conv", 0, 0.5, 0.5)
    with pytest.raises(UsageError):
        LayerWorkload(0, "conv", 10, 1.5, 0.0)
    with pytest.raises(UsageError):
        overall_sparsity([])


def test_sequence_summary_and_keyframe_exclusion():
    """Test per-frame rows aggregate with and without keyframes"""
    stats = SequenceStats(
        dense=[rows([100], [0.5]), rows([100], [0.5])],
        rrm=[rows([100], [0.5]), rows([100], [0.1])],
        frame_indices=[0, 1],
        keyframes=[0],
        accumulated_error=[0.0, 0.2],
    )
    with_keyframes = stats.summary(include_keyframes=True)
    assert with_keyframes.speedup_ratio == pytest.approx(100 / 60)
    without = stats.summary(include_keyframes=False)
    assert without.speedup_ratio == pytest.approx(5.0)
    assert without.overall_sparsity_rrm == pytest.approx(0.9)


def test_summary_reports_unbounded_speedup():
    """Test a zero delta workload is flagged instead of raised"""
    stats = SequenceStats(
        dense=[rows([100], [0.5])],
        rrm=[rows([100], [0.0])],
        frame_indices=[1],
    )
    summary = stats.summary()
    assert summary.speedup_ratio is None
    assert summary.speedup_infinite


def test_merge_keeps_order():
    """Test chunk statistics concatenate in chunk order"""
    a = SequenceStats(dense=[rows([10], [1.0])], rrm=[rows([10], [1.0])], frame_indices=[0], keyframes=[0],
                      accumulated_error=[0.0], feature_error_l2=[0.0], feature_error_max=[0.0])
    b = SequenceStats(dense=[rows([10], [1.0])], rrm=[rows([10], [0.2])], frame_indices=[1], keyframes=[],
                      accumulated_error=[0.3], feature_error_l2=[0.1], feature_error_max=[0.05])
    merged = SequenceStats.merge([a, b])
    assert merged.frame_indices == [0, 1]
    assert merged.keyframes == [0]
    assert merged.accumulated_error == [0.0, 0.3]
    assert merged.feature_error_l2 == [0.0, 0.1]


def test_summary_charges_wasted_delta_work():
    """Test forced-keyframe waste adds to the RRM side unless keyframes are excluded"""
    stats = SequenceStats(
        dense=[rows([100], [0.5]), rows([100], [0.5]), rows([100], [0.5])],
        rrm=[rows([100], [0.5]), rows([100], [0.5]), rows([100], [0.1])],
        frame_indices=[0, 1, 2],
        keyframes=[0, 1],
        forced_keyframes=[1],
        wasted={1: 40},
    )
    summary = stats.summary()
    assert summary.rrm_cost == 150
    assert summary.speedup_ratio == pytest.approx(1.0)
    assert stats.summary(include_keyframes=False).speedup_ratio == pytest.approx(5.0)
    assert speedup_ratio(rows([100], [0.5]), rows([100], [0.1]), wasted_mults=15) == pytest.approx(2.0)

    merged = SequenceStats.merge([stats, SequenceStats(wasted={7: 3})])
    assert merged.wasted == {1: 40, 7: 3}
