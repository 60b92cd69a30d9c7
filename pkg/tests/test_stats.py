import numpy as np
import pytest

from contactpy import (
    ENV,
    StreamId,
    binomial_sigma,
    bootstrap,
    derive,
    derive_path,
    mann_kendall,
    map_trials,
    paired_difference,
    run_trials,
    wilson,
)


def _draw(s: StreamId) -> float:
    return float(s.generator().random())


def test_streams_are_pure_functions_of_their_path():
    s = StreamId(5)
    assert _draw(derive(s, 3)) == _draw(derive(s, 3))
    assert _draw(derive(s, 3)) != _draw(derive(s, 4))
    assert _draw(derive(s, -1)) != _draw(derive(s, 1))
    assert derive_path(s, 1, 2) == derive(derive(s, 1), 2)
    assert derive(s, ENV).integer() == derive(s, ENV).integer()


def test_map_trials_is_independent_of_parallelism():
    s = StreamId(77)
    serial = map_trials(_draw, 40, s, parallelism=1)
    pooled = map_trials(_draw, 40, s, parallelism=4)
    assert serial == pooled
    assert serial[7] == _draw(derive(s, 7))


def test_map_trials_needs_a_trial():
    with pytest.raises(ValueError):
        map_trials(_draw, 0, StreamId(1))


def test_run_trials_counts_successes():
    result = run_trials(lambda s: _draw(s) < 0.3, 2000, StreamId(3))
    assert result.outcomes.shape == (2000,)
    assert result.estimate.point == result.successes / 2000
    assert abs(result.estimate.point - 0.3) < 4 * np.sqrt(0.21 / 2000)


@pytest.mark.parametrize("k, n", [(0, 50), (50, 50), (17, 40)])
def test_wilson_contains_the_point(k, n):
    est = wilson(k, n)
    assert 0.0 <= est.lo <= est.point <= est.hi <= 1.0
    assert est.n == n


def test_wilson_reference_value():
    # 5 of 10 at 95%
    est = wilson(5, 10)
    assert est.lo == pytest.approx(0.2366, abs=1e-4)
    assert est.hi == pytest.approx(0.7634, abs=1e-4)


def test_wilson_empty():
    est = wilson(0, 0)
    assert (est.lo, est.hi) == (0.0, 1.0)


def test_bootstrap_brackets_the_mean():
    rng = np.random.default_rng(0)
    sample = rng.normal(2.0, 1.0, 400)
    est = bootstrap([sample], np.mean, StreamId(8), n_resamples=300)
    assert est.method == "bootstrap"
    assert est.lo <= est.point <= est.hi
    assert est.point == pytest.approx(sample.mean())
    assert est.hi - est.lo < 0.5


def test_paired_difference():
    x = np.array([1.0, 1.0, 0.0, 1.0])
    y = np.array([0.0, 1.0, 0.0, 0.0])
    est = paired_difference(x, y)
    assert est.point == 0.5
    assert est.lo < 0.5 < est.hi


def test_mann_kendall_on_monotone_series():
    down = mann_kendall([5.0, 4.0, 3.0, 2.0, 1.0, 0.5])
    assert down.s == -15
    assert down.nonincreasing
    up = mann_kendall(np.arange(10.0))
    assert up.s == 45
    assert up.p_value < 0.05
    assert not up.nonincreasing


def test_mann_kendall_on_a_flat_series():
    flat = mann_kendall([1.0, 1.0, 1.0])
    assert flat.s == 0 and flat.p_value == 1.0


def test_binomial_sigma():
    assert binomial_sigma(0.5, 100) == pytest.approx(0.05)
    assert binomial_sigma(0.0, 10) == 0.0
    assert binomial_sigma(0.3, 0) == pytest.approx(np.sqrt(0.21))
