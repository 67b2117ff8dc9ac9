import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from setupq import (
    BadBatchError,
    BatchDistribution,
    ModelParams,
    NonPositiveRateError,
    SetupPolicy,
    UnstableError,
    validate_params,
)
from conftest import batch_strategy, staggered


class TestBatchDistribution:
    def test_pgf_unit_batch(self):
        b = BatchDistribution.deterministic(1)
        assert b.pgf(0.5) == pytest.approx(0.5, abs=1e-15)

    def test_pgf_at_one_is_normalized(self):
        b = BatchDistribution.custom([(1, 0.2), (3, 0.5), (7, 0.3)])
        assert b.pgf(1.0) == pytest.approx(1.0, abs=1e-14)

    def test_pgf_two_point(self):
        b = BatchDistribution.custom([(1, 0.5), (2, 0.5)])
        # 0.5 * 0.5 + 0.5 * 0.25 by hand
        assert b.pgf(0.5) == pytest.approx(0.375, abs=1e-15)

    def test_factorial_derivative_unit(self):
        assert BatchDistribution.deterministic(1).factorial_derivative(1) == pytest.approx(1.0)

    def test_factorial_derivative_det3_order2(self):
        # 3 * 2 = 6
        assert BatchDistribution.deterministic(3).factorial_derivative(2) == pytest.approx(6.0)

    def test_factorial_derivative_mean(self):
        b = BatchDistribution.custom([(1, 0.5), (2, 0.5)])
        assert b.factorial_derivative(1) == pytest.approx(1.5)
        assert b.mean == pytest.approx(1.5)

    def test_factorial_derivative_order0(self):
        b = BatchDistribution.geometric(0.5)
        assert b.factorial_derivative(0) == 1.0

    def test_geometric_truncation_tail(self):
        b = BatchDistribution.geometric(0.4)
        assert 0.6**b.max_size < 1e-12
        assert math.fsum(b.probs) == pytest.approx(1.0, abs=1e-15)

    def test_geometric_mean_near_untruncated(self):
        b = BatchDistribution.geometric(0.4)
        assert b.mean == pytest.approx(2.5, rel=1e-9)

    def test_bad_sum_rejected(self):
        with pytest.raises(BadBatchError):
            BatchDistribution(sizes=(1, 2), probs=(0.5, 0.6))

    def test_zero_size_rejected(self):
        with pytest.raises(BadBatchError):
            BatchDistribution(sizes=(0, 1), probs=(0.5, 0.5))

    def test_custom_merges_duplicates(self):
        b = BatchDistribution.custom([(2, 0.25), (2, 0.25), (1, 0.5)])
        assert b.sizes == (1, 2)
        assert b.probs[1] == pytest.approx(0.5)

    def test_tail_probabilities(self):
        b = BatchDistribution.custom([(1, 0.5), (3, 0.5)])
        assert b.tail_probabilities() == pytest.approx((1.0, 0.5, 0.5))

    @given(batch=batch_strategy(), z=st.floats(0.0, 1.0))
    def test_pgf_in_unit_interval(self, batch, z):
        val = batch.pgf(z)
        assert -1e-12 <= val <= 1.0 + 1e-12

    @given(batch=batch_strategy())
    def test_pgf_monotone_convex_on_grid(self, batch):
        grid = [k / 40 for k in range(41)]
        vals = [batch.pgf(z) for z in grid]
        diffs = [b - a for a, b in zip(vals, vals[1:])]
        assert all(d >= -1e-12 for d in diffs)
        assert all(b - a >= -1e-12 for a, b in zip(diffs, diffs[1:]))

    @given(batch=batch_strategy())
    @settings(max_examples=40)
    def test_first_derivative_matches_numeric(self, batch):
        h = 1e-8
        numeric = (batch.pgf(1.0) - batch.pgf(1.0 - h)) / h
        assert batch.factorial_derivative(1) == pytest.approx(numeric, rel=1e-6)


class TestSetupPolicy:
    def test_staggered_expansion(self):
        assert SetupPolicy.staggered(1.5).rates(3) == (1.5, 1.5, 1.5)

    def test_vacation_expansion_exact(self):
        assert SetupPolicy.vacation(2.0).rates(3) == (6.0, 4.0, 2.0)

    def test_custom_length_checked(self):
        with pytest.raises(Exception):
            SetupPolicy.custom([1.0, 2.0]).rates(3)


class TestValidation:
    def test_stable_model_ok(self):
        validate_params(staggered(1.0, 1.0, 2, 1.0))

    def test_unstable_rejected(self):
        params = staggered(3.0, 1.0, 2, 1.0)
        with pytest.raises(UnstableError) as err:
            validate_params(params)
        assert err.value.rho == pytest.approx(1.5)
        assert "unstable" in str(err.value)

    def test_critical_load_rejected(self):
        with pytest.raises(UnstableError):
            validate_params(staggered(2.0, 1.0, 2, 1.0))

    def test_zero_alpha_rejected(self):
        params = ModelParams(
            arrival_rate=1.0,
            service_rate=1.0,
            servers=2,
            setup_rates=(1.0, 0.0),
            batch=BatchDistribution.deterministic(1),
        )
        with pytest.raises(NonPositiveRateError) as err:
            validate_params(params)
        assert "alpha_1" in str(err.value)

    def test_zero_lambda_rejected(self):
        with pytest.raises(NonPositiveRateError):
            validate_params(staggered(0.0, 1.0, 2, 1.0))

    def test_rho_property(self):
        params = staggered(1.0, 1.0, 2, 1.0, batch=BatchDistribution.deterministic(1))
        assert params.rho == pytest.approx(0.5)
        batchy = staggered(0.5, 1.0, 2, 1.0, batch=BatchDistribution.deterministic(2))
        assert batchy.rho == pytest.approx(0.5)
