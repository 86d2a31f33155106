"""Series container, splitting, scaling, and metric behavior."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from forecastlab.series import (
    IDENTITY_SCALER,
    Series,
    SplitSpec,
    ZScoreScaler,
    default_split_spec,
    mae,
    mape,
    metrics_pair,
    split,
)


def test_nan_normalizes_to_none():
    s = Series((1.0, float("nan"), 3.0))
    assert s.values == (1.0, None, 3.0)
    assert s.missing_indices() == (1,)


def test_infinite_value_rejected():
    with pytest.raises(ValueError):
        Series((1.0, float("inf")))


def test_empty_series_rejected():
    with pytest.raises(ValueError):
        Series(())


def test_dense_requires_complete():
    with pytest.raises(ValueError):
        Series((1.0, None)).dense()
    np.testing.assert_array_equal(Series((1.0, 2.0)).dense(), [1.0, 2.0])


def test_window_bounds_and_offset():
    s = Series(tuple(float(i) for i in range(10)))
    w = s.window(3, 7)
    assert w.values == (3.0, 4.0, 5.0, 6.0)
    assert w.start_index == 3
    with pytest.raises(ValueError):
        s.window(5, 5)
    with pytest.raises(ValueError):
        s.window(0, 11)


def test_default_split_spec_validation_cap():
    spec = default_split_spec(input_len=100, horizon=96)
    # horizon exceeds input_len // 4, so validation is capped at 25
    assert spec == SplitSpec(train_len=75, val_len=25, test_horizon=96)
    spec2 = default_split_spec(input_len=512, horizon=96)
    assert spec2 == SplitSpec(train_len=416, val_len=96, test_horizon=96)


def test_split_segments_are_contiguous():
    s = Series(tuple(float(i) for i in range(12)))
    train, val, test = split(s, SplitSpec(6, 3, 3))
    assert train.values == tuple(float(i) for i in range(6))
    assert val.values == (6.0, 7.0, 8.0)
    assert test.values == (9.0, 10.0, 11.0)


def test_split_rejects_missing_train_or_val():
    s = Series((1.0, None, 3.0, 4.0, 5.0, 6.0))
    with pytest.raises(ValueError):
        split(s, SplitSpec(3, 1, 2))
    # missing points in the test segment are allowed at split time
    s2 = Series((1.0, 2.0, 3.0, 4.0, None, 6.0))
    _, _, test = split(s2, SplitSpec(3, 1, 2))
    assert test.values == (None, 6.0)


def test_mae_basic():
    assert mae([1.0, 2.0, 3.0], [2.0, 2.0, 5.0]) == pytest.approx(1.0)


def test_mape_percent_units():
    assert mape([10.0, 20.0], [11.0, 18.0]) == pytest.approx(10.0)


def test_mape_excludes_near_zero_targets():
    # the zero target term is dropped, not divided through
    assert mape([0.0, 10.0], [5.0, 12.0]) == pytest.approx(20.0)


def test_mape_undefined_when_all_targets_tiny():
    with pytest.raises(ValueError):
        mape([0.0, 1e-12], [1.0, 1.0])


def test_metrics_pair_matches_components():
    pair = metrics_pair([1.0, 2.0], [1.5, 2.5])
    assert pair.mae == pytest.approx(0.5)
    assert pair.mape == pytest.approx(37.5)


def test_metric_shape_checks():
    with pytest.raises(ValueError):
        mae([1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        mae([], [])
    with pytest.raises(ValueError):
        mae([float("nan")], [1.0])


def test_scaler_roundtrip_and_degenerate():
    sc = ZScoreScaler.fit([2.0, 4.0, 6.0])
    x = np.array([1.0, 5.0, 9.0])
    np.testing.assert_allclose(sc.inverse(sc.transform(x)), x, atol=1e-12)
    flat = ZScoreScaler.fit([3.0, 3.0, 3.0])
    assert flat.scale == 1.0
    np.testing.assert_allclose(flat.transform([3.0]), [0.0])
    assert IDENTITY_SCALER.transform([7.0])[0] == 7.0


@given(
    st.lists(
        st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
        min_size=2,
        max_size=64,
    )
)
def test_scaler_roundtrip_property(data):
    sc = ZScoreScaler.fit(data)
    back = sc.inverse(sc.transform(data))
    np.testing.assert_allclose(back, data, atol=1e-6 * max(1.0, max(abs(v) for v in data)))


@given(
    st.lists(st.floats(min_value=-1e3, max_value=1e3, allow_nan=False), min_size=1, max_size=32),
    st.lists(st.floats(min_value=-1e3, max_value=1e3, allow_nan=False), min_size=1, max_size=32),
)
def test_mae_nonnegative_and_symmetric_shift(a, b):
    n = min(len(a), len(b))
    a, b = a[:n], b[:n]
    v = mae(a, b)
    assert v >= 0.0
    assert math.isclose(v, mae(b, a), rel_tol=1e-12, abs_tol=1e-12)
