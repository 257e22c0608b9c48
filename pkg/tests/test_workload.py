import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from ccndtn.workload import (Catalog, draw_profiles, generate_schedule, request_rate, uniform_pmf, zipf_pmf)


def test_zipf_three_items_exact():
    h = Fraction(1) + Fraction(1, 2) + Fraction(1, 3)
    expected = [float(Fraction(1, k) / h) for k in (1, 2, 3)]
    assert np.allclose(zipf_pmf(3, 1.0), expected, rtol=0, atol=1e-15)
    assert expected == pytest.approx([6 / 11, 3 / 11, 2 / 11])


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 500), s=st.floats(0.1, 3.0))
def test_zipf_is_normalised_and_decreasing(n, s):
    p = zipf_pmf(n, s)
    assert p.sum() == pytest.approx(1.0)
    assert np.all(np.diff(p) <= 0)
    assert p[0] / p[-1] == pytest.approx(n ** s)


@pytest.mark.parametrize("n,s", [(0, 1.0), (5, 0.0), (5, -1.0)])
def test_zipf_rejects_bad_parameters(n, s):
    with pytest.raises(ValueError):
        zipf_pmf(n, s)


def test_uniform_pmf():
    assert np.allclose(uniform_pmf(4), 0.25)
    with pytest.raises(ValueError):
        uniform_pmf(0)


def test_zipf_draws_fit():
    pmf = zipf_pmf(50, 1.0)
    draws = np.random.default_rng(11).choice(50, size=50_000, p=pmf)
    counts = np.bincount(draws, minlength=50)
    assert chisquare(counts, pmf * counts.sum()).pvalue > 0.01


def test_catalog_popularity_and_pi():
    cat = Catalog(3)
    assert cat.pi(1) == pytest.approx(6 / 11)
    assert Catalog(4, "uniform").pi(4) == 0.25
    with pytest.raises(ValueError):
        Catalog(3, "pareto")


def test_profiles_in_unit_interval():
    prof = draw_profiles(range(1000), np.random.default_rng(0))
    u = np.array([p.u for p in prof.values()])
    assert np.all(u > 0) and np.all(u <= 1)


def test_request_rate():
    assert request_rate(0.5, 0.2) == pytest.approx(0.5 * 0.2 / 300)
    assert request_rate(1.0, 0.1, base_rate=2.0) == pytest.approx(0.2)


@settings(max_examples=50, deadline=None)
@given(duration=st.floats(0, 20_000), n_req=st.integers(0, 6), seed=st.integers(0, 99))
def test_schedule_count_and_shape(duration, n_req, seed):
    cat = Catalog(20)
    requesters = list(range(n_req))
    prof = draw_profiles(requesters, np.random.default_rng(seed))
    sched = generate_schedule(cat, prof, requesters, duration, np.random.default_rng(seed))
    assert len(sched) == math.floor(duration / 300) * n_req
    assert sched == sorted(sched)
    for m in requesters:
        mine = [r for r in sched if r.requester == m]
        epochs = [int(r.time // 300) for r in mine]
        assert epochs == list(range(len(mine)))
    assert all(1 <= r.content <= 20 and r.time < duration for r in sched)


def test_schedule_deterministic_per_seed():
    cat, req = Catalog(10), [0, 1]
    prof = draw_profiles(req, np.random.default_rng(1))
    a = generate_schedule(cat, prof, req, 3000, np.random.default_rng(5))
    b = generate_schedule(cat, prof, req, 3000, np.random.default_rng(5))
    assert a == b
