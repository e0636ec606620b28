import math
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eklab.arith import sieve_primes
from eklab.errors import BudgetError, ResolutionError, ValidationError
from eklab.kubilius import (
    EsseenConstants,
    KubiliusModel,
    binomial_moments,
    char_compare,
    char_exact,
    char_from_binomial,
    divisibility_density,
    esseen_bound,
    esseen_grid,
    quantitative_prime_set,
    recentring_distance,
    sample_model,
    truncated_omega_counts,
)
from eklab.reals import BeattySpec
from eklab.stats import empirical_dK, gaussian_cdf

from oracles import is_prime


def test_sample_examples():
    n = 40000
    x = sample_model(KubiliusModel((2,), seed=1), n)
    assert abs(x.mean() - 0.5) <= 4 / math.sqrt(n)
    y = sample_model(KubiliusModel((2, 3), seed=2), 5000)
    assert set(np.unique(y).tolist()) <= {0, 1, 2}
    m = KubiliusModel.up_to(1000, seed=2024)
    assert m.s == pytest.approx(math.fsum(1 / p for p in range(2, 1001) if is_prime(p)), abs=1e-12)
    z = sample_model(m, 10**5)
    assert abs(z.mean() - m.s) <= 0.05


def test_sample_determinism():
    m = KubiliusModel.up_to(200, seed=99)
    a = sample_model(m, 70000, threads=1)
    b = sample_model(m, 70000, threads=8)
    assert np.array_equal(a, b)
    # a prefix does not depend on how many draws follow
    assert np.array_equal(sample_model(m, 1000), a[:1000])
    assert not np.array_equal(sample_model(KubiliusModel.up_to(200, seed=100), 1000), a[:1000])


def test_sample_marginals():
    m = KubiliusModel((2, 3, 5, 7), seed=5)
    from eklab.kubilius import counter_bits
    draws = np.arange(200000, dtype=np.uint64)
    for j, p in enumerate(m.primes):
        u = counter_bits(m.seed, draws, j) >> np.uint64(11)
        hit = (u < np.uint64(-(-(1 << 53) // p))).mean()
        assert abs(hit - 1 / p) <= 4 * math.sqrt(1 / p / len(draws))


def test_model_validation():
    with pytest.raises(ValidationError):
        KubiliusModel(())
    with pytest.raises(ValidationError):
        KubiliusModel((3, 3))
    with pytest.raises(ValidationError):
        KubiliusModel((2,), seed=-1)


def test_char_examples():
    m = KubiliusModel.up_to(100)
    assert char_exact(m, 0) == 1
    assert char_exact(m, 1) == pytest.approx(1, abs=1e-15)
    assert abs(char_exact(KubiliusModel((2,)), 0.5)) < 1e-15


def test_char_brute_force():
    m = KubiliusModel((2, 3, 5, 7, 11))
    for t in (0.13, -0.4, 2.71):
        want = 0
        for k in range(6):
            for sub in combinations(m.primes, k):
                pr = math.prod(1 / p for p in sub) * math.prod(1 - 1 / p for p in m.primes if p not in sub)
                want += pr * complex(np.exp(2j * np.pi * t * k))
        assert abs(char_exact(m, t) - want) < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.floats(-50, 50, allow_nan=False))
def test_char_bounded_and_periodic(t):
    m = KubiliusModel.up_to(300)
    c = char_exact(m, t)
    assert abs(c) <= 1 + 1e-12
    assert abs(char_exact(m, t + 1) - c) < 1e-9


@pytest.mark.parametrize("limit", [10, 100, 1000, 10**4])
def test_tail_inequality(limit):
    m = KubiliusModel.up_to(limit)
    ts = np.linspace(-math.sqrt(m.s) / 2, math.sqrt(m.s) / 2, 1000)
    c = np.abs(char_exact(m, ts, standardized=True))
    assert np.all(c <= np.exp(-4 * ts**2))


@pytest.mark.parametrize("limit", [100, 1000, 10**4, 10**5])
def test_gaussian_proximity(limit):
    # in the e(t) convention the cubic term scales by 2 pi, so the range is s^(1/6) / (2 pi);
    # K = 8 covers the oracle maximum 6.98 over these prime sets
    m = KubiliusModel.up_to(limit)
    T = m.s ** (1 / 6) / (2 * math.pi)
    ts = np.linspace(-T, T, 1000)
    c = char_exact(m, ts, standardized=True)
    g = np.exp(-2 * np.pi**2 * ts**2)
    assert np.all(np.abs(c - g) <= 8 * g * ts**2 * (np.abs(ts) + 1) / math.sqrt(m.s) + 1e-15)


def test_char_compare():
    m = KubiliusModel.up_to(1000, seed=11)
    x = sample_model(m, 10**5)
    ts = np.linspace(-0.5, 0.5, 101)
    cmp = char_compare(m, x, ts)
    assert cmp.sup <= 0.02
    zero = cmp.rows()[50]
    assert zero["t"] == 0 and zero["diff"] == 0
    st_cmp = char_compare(m, x, ts, standardized=True)
    assert st_cmp.sup <= 0.02


def test_esseen_examples():
    A = 2.0
    ts = esseen_grid(A)
    gauss = [(t, math.exp(-2 * math.pi**2 * t * t)) for t in ts]
    c = EsseenConstants()
    assert esseen_bound(gauss, A) == pytest.approx(c.smoothing_prefactor / math.sqrt(2 * math.pi) / A, abs=1e-15)
    b = esseen_bound([(t, 1.0) for t in esseen_grid(1.0)], 1.0)
    assert b >= 0.5
    with pytest.raises(ResolutionError):
        esseen_bound([(t, 1.0) for t in np.linspace(-1, 1, 100)], 1.0)


@pytest.mark.parametrize("limit,seed", [(10**4, 0), (100, 1), (1000, 2), (5000, 3), (30, 4), (10**4, 5)])
def test_esseen_is_upper_bound(limit, seed):
    m = KubiliusModel.up_to(limit, seed=seed)
    A = math.sqrt(m.s) / 3
    ts = esseen_grid(A)
    bound = esseen_bound(list(zip(ts, char_exact(m, ts, standardized=True))), A)
    x = sample_model(m, 10**5)
    assert bound >= empirical_dK((x - m.s) / math.sqrt(m.s))


def test_binomial_examples():
    assert binomial_moments((2, 3), 1) == Fraction(5, 6)
    assert binomial_moments((2, 3), 2) == Fraction(1, 6)
    assert binomial_moments((2, 3), 3) == 0
    first18 = tuple(sieve_primes(61).tolist())
    assert len(first18) == 18
    assert binomial_moments(first18, 4) == binomial_moments(first18, 4, mode="brute")
    with pytest.raises(BudgetError):
        binomial_moments(tuple(sieve_primes(100).tolist()), 2, mode="brute")
    assert binomial_moments([0, 1, 2, 3], 2, mode="sample") == Fraction(0 + 0 + 1 + 3, 4)


def test_binomial_exact_equals_brute():
    rng = np.random.default_rng(0)
    pool = sieve_primes(200).tolist()
    for size in range(1, 19, 3):
        ps = tuple(sorted(rng.choice(pool, size, replace=False).tolist()))
        for ell in range(7):
            assert binomial_moments(ps, ell) == binomial_moments(ps, ell, mode="brute")


def test_binomial_sample_tracks_model():
    m = KubiliusModel.up_to(100, seed=3)
    x = sample_model(m, 10**5)
    for ell in (1, 2, 3):
        assert abs(float(binomial_moments(x, ell, mode="sample")) - float(binomial_moments(m, ell))) < 0.05


@pytest.mark.parametrize("t", [0.01, 0.05, -0.08, 0.1])
def test_binomial_to_char(t):
    m = KubiliusModel.up_to(100)
    exact = char_exact(m, t)
    errs = [abs(char_from_binomial(m, t, L) - exact) for L in range(31)]
    assert errs[-1] < 1e-12
    assert all(b <= a + 1e-15 for a, b in zip(errs, errs[1:]))


def test_density_examples():
    one = BeattySpec.parse("rational:1")
    d = divisibility_density(1, one, 1000)
    assert d.empirical == 1 and d.deviation == 0
    d = divisibility_density(3, one, 3 * 10**5)
    assert d.empirical == pytest.approx(1 / 3) and d.deviation == 0
    d = divisibility_density(7, BeattySpec.parse("sqrt:2"), 10**6)
    assert d.deviation <= 0.01


def test_recentring():
    assert recentring_distance(0, 1) == 0
    assert recentring_distance(0.1, 1) == pytest.approx(gaussian_cdf(0.05) - gaussian_cdf(-0.05), abs=1e-9)
    # densities of N(0,1) and N(0,4) cross at x^2 = 8 ln 2 / 3
    x = math.sqrt(8 * math.log(2) / 3)
    closed = gaussian_cdf(x) - gaussian_cdf(x / 2)
    assert recentring_distance(0, 2) == pytest.approx(closed, abs=1e-9)
    grid = np.linspace(-20, 20, 400001)
    assert recentring_distance(0.3, 0.7) == pytest.approx(
        np.abs(gaussian_cdf(grid) - gaussian_cdf((grid - 0.3) / 0.7)).max(), abs=1e-8)


def test_quantitative_primes():
    q = quantitative_prime_set("sqrt:2", 10**6)
    assert q.gamma == Fraction(4, 3) and q.R == 193 and q.bad == (2,)
    assert q.primes == tuple(p for p in range(3, 194) if is_prime(p))
    spec = BeattySpec.parse("sqrt:2")
    counts = truncated_omega_counts(spec, 2000, q.primes)
    floors = [math.floor(math.sqrt(2) * n) for n in range(1, 2001)]
    assert counts.tolist() == [sum(1 for p in q.primes if f % p == 0) for f in floors]
