import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from setupq import (
    BatchDistribution,
    LevelPolynomial,
    WrongBatchKindError,
    find_all_roots,
    find_root,
    single_arrival_root,
    tail_decay_rate,
)
from conftest import custom_rates, staggered


def quadratic_root(lam, mu, alpha, i):
    """Independent closed form: small root of lam z^2 - (lam+i mu+alpha) z + i mu."""
    s = lam + i * mu + alpha
    return (s - math.sqrt(s * s - 4.0 * i * lam * mu)) / (2.0 * lam)


class TestLevelPolynomial:
    def test_endpoint_signs(self):
        params = staggered(1.0, 2.0, 3, 0.7)
        for i in (1, 2):
            poly = LevelPolynomial(params, i)
            assert poly.value(0.0) == pytest.approx(-i * 2.0)
            assert poly.value(1.0) == pytest.approx(0.7)

    def test_top_level_vanishes_at_one(self):
        params = staggered(1.0, 2.0, 3, 0.7, batch=BatchDistribution.geometric(0.5))
        assert LevelPolynomial(params, 3).value(1.0) == pytest.approx(0.0, abs=1e-12)

    def test_derivative_matches_numeric(self):
        params = staggered(0.8, 1.1, 2, 0.4, batch=BatchDistribution.custom([(1, 0.3), (4, 0.7)]))
        poly = LevelPolynomial(params, 1)
        h = 1e-7
        numeric = (poly.value(0.6 + h) - poly.value(0.6 - h)) / (2 * h)
        assert poly.derivative(0.6) == pytest.approx(numeric, rel=1e-7)


class TestFindRoot:
    def test_known_root_small_case(self):
        # lam = mu = alpha = 1, level 1: root (3 - sqrt 5) / 2
        params = staggered(1.0, 1.0, 2, 1.0)
        z = find_root(params, 1)
        assert z == pytest.approx((3.0 - math.sqrt(5.0)) / 2.0, abs=1e-13)
        assert z == pytest.approx(0.3819660113, abs=1e-9)

    def test_known_root_level_two(self):
        # lam=1, mu=2, alpha_2=3 at level 2: (8 - sqrt 48) / 2
        params = custom_rates(1.0, 2.0, 3, [0.5, 1.0, 3.0])
        z = find_root(params, 2)
        assert z == pytest.approx((8.0 - math.sqrt(48.0)) / 2.0, abs=1e-13)
        assert z == pytest.approx(0.5358983849, abs=1e-9)

    def test_large_alpha_root(self):
        params = staggered(1.0, 1.0, 2, 100.0)
        z = find_root(params, 1)
        assert z == pytest.approx(quadratic_root(1.0, 1.0, 100.0, 1), abs=1e-14)
        # large-alpha scaling: close to mu / (lam + mu + alpha)
        assert z == pytest.approx(1.0 / 102.0, rel=2e-4)

    def test_residual_scaled_tolerance(self):
        params = staggered(0.9, 1.3, 4, 0.35, batch=BatchDistribution.geometric(0.6))
        for i in (1, 2, 3):
            z = find_root(params, i)
            scale = params.arrival_rate + i * params.service_rate + params.setup_rates[i]
            assert abs(LevelPolynomial(params, i).value(z)) < 1e-13 * scale
            assert 0.0 < z < 1.0

    def test_unique_sign_change_on_grid(self):
        cases = [
            staggered(1.0, 1.0, 3, 0.5),
            staggered(2.5, 1.0, 4, 3.0, batch=BatchDistribution.custom([(1, 0.5), (2, 0.5)])),
            custom_rates(0.4, 0.7, 3, [2.0, 0.3, 1.1], batch=BatchDistribution.geometric(0.5)),
        ]
        for params in cases:
            for i in range(1, params.servers):
                poly = LevelPolynomial(params, i)
                signs = [poly.value(k / 10_000.0) > 0 for k in range(1, 10_000)]
                changes = sum(1 for a, b in zip(signs, signs[1:]) if a != b)
                assert changes == 1

    def test_monotone_in_alpha(self):
        lo = staggered(1.0, 1.0, 2, 0.8)
        hi = staggered(1.0, 1.0, 2, 1.6)
        assert find_root(hi, 1) < find_root(lo, 1)

    @given(
        lam=st.floats(0.1, 5.0),
        mu=st.floats(0.2, 3.0),
        alpha=st.floats(0.05, 20.0),
        i=st.integers(1, 5),
    )
    @settings(max_examples=60)
    def test_closed_form_matches_bisection(self, lam, mu, alpha, i):
        params = staggered(lam, mu, i + 1, alpha)
        assert find_root(params, i) == pytest.approx(
            single_arrival_root(params, i), abs=1e-12
        )

    def test_closed_form_rejects_batches(self):
        params = staggered(0.5, 1.0, 2, 1.0, batch=BatchDistribution.deterministic(2))
        with pytest.raises(WrongBatchKindError):
            single_arrival_root(params, 1)

    def test_all_roots_count(self):
        params = staggered(1.0, 1.0, 4, 1.0)
        assert len(find_all_roots(params)) == 3
        assert find_all_roots(staggered(0.5, 1.0, 1, 1.0)) == ()


class TestTailDecay:
    def test_single_arrival_staggered(self):
        # singularities: (lam+alpha)/lam per level and 1/rho at the top
        params = staggered(1.0, 1.0, 2, 1.0)
        phi = tail_decay_rate(params)
        assert phi == pytest.approx(0.5, abs=1e-9)

    def test_slow_setup_dominates(self):
        # small alpha: the setup factor lam/(lam+alpha) decays slower than rho
        params = staggered(1.0, 1.0, 10, 0.1)
        assert tail_decay_rate(params) == pytest.approx(1.0 / 1.1, abs=1e-9)
