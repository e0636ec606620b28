"""Independent prime-divisor model: sampling, characteristic functions, smoothing bounds."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from ._parallel import ordered_map
from .arith import prime_factors, prime_reciprocal_sum, sieve_primes
from .errors import BudgetError, ResolutionError, ValidationError
from .reals import BeattySpec, as_real, best_rational_of_height, floor_linear_array
from .stats import gaussian_cdf

BRUTE_PRIME_CAP = 20
SAMPLE_CHUNK = 1 << 15
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MASK64 = (1 << 64) - 1


# counter-based generator ----------------------------------------------------

def _mix(z: np.ndarray) -> np.ndarray:
    """splitmix64 finaliser on a uint64 array (wrapping arithmetic)."""
    z = z.copy()
    z ^= z >> np.uint64(30)
    z *= np.uint64(0xBF58476D1CE4E5B9)
    z ^= z >> np.uint64(27)
    z *= np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    return z


def counter_bits(seed: int, draws: np.ndarray, stream: int) -> np.ndarray:
    """64 random bits for each (seed, draw index, stream index)."""
    with np.errstate(over="ignore"):
        key = _mix(np.array([(seed + (stream + 1) * 0x9E3779B97F4A7C15) & _MASK64], dtype=np.uint64))
        return _mix(key + draws.astype(np.uint64) * _GOLDEN)


def _check_seed(seed: int):
    if not 0 <= int(seed) <= _MASK64:
        raise ValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")


# model -----------------------------------------------------------------------

@dataclass(frozen=True)
class KubiliusModel:
    primes: tuple
    seed: int = 0
    s: float = field(init=False)

    def __post_init__(self):
        ps = tuple(sorted(int(p) for p in self.primes))
        if not ps:
            raise ValidationError("prime set is empty")
        if len(set(ps)) != len(ps):
            raise ValidationError("primes must be distinct")
        if ps[0] < 2:
            raise ValidationError("primes must be >= 2")
        _check_seed(self.seed)
        object.__setattr__(self, "primes", ps)
        object.__setattr__(self, "s", prime_reciprocal_sum(ps))

    @classmethod
    def up_to(cls, limit: int, seed: int = 0) -> "KubiliusModel":
        return cls(tuple(sieve_primes(limit).tolist()), seed)


def _sample_chunk(model: KubiliusModel, start: int, stop: int) -> np.ndarray:
    draws = np.arange(start, stop, dtype=np.uint64)
    total = np.zeros(stop - start, dtype=np.int64)
    for j, p in enumerate(model.primes):
        # top 53 bits uniform on [0, 2^53); success iff below ceil(2^53 / p)
        u = counter_bits(model.seed, draws, j) >> np.uint64(11)
        total += u < np.uint64(-(-(1 << 53) // p))
    return total


def sample_model(model: KubiliusModel, count: int, threads=None) -> np.ndarray:
    """``count`` draws of sum_p Bernoulli(1/p); draw i depends only on (seed, i, p)."""
    if count < 1:
        raise ValidationError("count must be >= 1")
    bounds = [(a, min(count, a + SAMPLE_CHUNK)) for a in range(0, count, SAMPLE_CHUNK)]
    parts = ordered_map(lambda b: _sample_chunk(model, *b), bounds, threads)
    return np.concatenate(parts)


def char_exact(model: KubiliusModel, t, standardized: bool = False):
    """prod_p (1 + (e(t) - 1)/p); standardized gives E e(t (X - s)/sqrt(s))."""
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    root = math.sqrt(model.s)
    u = t / root if standardized else t
    inv = 1.0 / np.array(model.primes, dtype=float)
    z = np.exp(2j * np.pi * (u - np.floor(u))) - 1.0
    out = np.empty(len(t), dtype=complex)
    for a in range(0, len(t), 4096):
        block = z[a:a + 4096, None] * inv[None, :] + 1.0
        out[a:a + 4096] = np.prod(block, axis=1)
    if standardized:
        # phase e(-t s / sqrt(s)) = e(-t sqrt(s))
        ph = t * root
        out *= np.exp(-2j * np.pi * (ph - np.floor(ph)))
    return complex(out[0]) if scalar else out


def empirical_char(values, t, center: float = 0.0, scale: float = 1.0):
    v = (np.asarray(values, dtype=float) - center) / scale
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(len(t), dtype=complex)
    for i, ti in enumerate(t.tolist()):
        ph = ti * v
        out[i] = np.exp(2j * np.pi * (ph - np.floor(ph))).mean()
    return out


@dataclass
class CharComparison:
    t: np.ndarray
    exact: np.ndarray
    empirical: np.ndarray

    @property
    def diff(self):
        return np.abs(self.exact - self.empirical)

    @property
    def sup(self):
        return float(self.diff.max())

    def rows(self):
        return [
            {"t": float(t), "exact_re": e.real, "exact_im": e.imag, "emp_re": m.real, "emp_im": m.imag, "diff": float(d)}
            for t, e, m, d in zip(self.t, self.exact, self.empirical, self.diff)
        ]


def char_compare(model: KubiliusModel, empirical, t_grid, standardized: bool = False) -> CharComparison:
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if t.size == 0:
        raise ValidationError("t grid is empty")
    exact = char_exact(model, t, standardized)
    if standardized:
        emp = empirical_char(empirical, t, model.s, math.sqrt(model.s))
    else:
        emp = empirical_char(empirical, t)
    return CharComparison(t=t, exact=exact, empirical=emp)


# smoothing inequality ------------------------------------------------------

GAUSS_DENSITY_SUP = 1 / math.sqrt(2 * math.pi)


@dataclass(frozen=True)
class EsseenConstants:
    integral_prefactor: float = 1 / math.pi
    smoothing_prefactor: float = 24 / math.pi


def esseen_bound(char_values, A: float, density_sup: float = GAUSS_DENSITY_SUP,
                 constants: EsseenConstants = EsseenConstants()) -> float:
    """Upper bound on d_K(X, N(0,1)) from samples (t, E e(tX)) covering [-A, A].

    prefactor * integral_{-A}^{A} |(phi(t) - exp(-2 pi^2 t^2)) / t| dt
    + smoothing_prefactor * density_sup / A, by the trapezoid rule.
    """
    if A <= 0:
        raise ValidationError("A must be positive")
    pts = sorted((float(t), complex(c)) for t, c in char_values)
    ts = np.array([p[0] for p in pts])
    cs = np.array([p[1] for p in pts])
    keep = (ts >= -A) & (ts <= A)
    ts, cs = ts[keep], cs[keep]
    if len(ts) < 2:
        raise ResolutionError("fewer than two grid points inside [-A, A]")
    step = np.diff(ts).max()
    if step > A / 512 or ts[0] > -A + A / 512 or ts[-1] < A - A / 512:
        raise ResolutionError(f"grid spacing {step:.3g} too coarse for A={A} (need <= A/512 covering [-A, A])")
    g = np.abs(cs - np.exp(-2 * np.pi**2 * ts**2))
    with np.errstate(divide="ignore", invalid="ignore"):
        f = g / np.abs(ts)
    zero = ts == 0
    if zero.any():
        # removable point: take the larger neighbouring value
        for i in np.flatnonzero(zero).tolist():
            nb = [f[j] for j in (i - 1, i + 1) if 0 <= j < len(f) and not zero[j]]
            f[i] = max(nb) if nb else 0.0
    integral = float(np.sum((f[1:] + f[:-1]) * np.diff(ts)) / 2)
    return constants.integral_prefactor * integral + constants.smoothing_prefactor * density_sup / A


def esseen_grid(A: float, points: int = 2049) -> np.ndarray:
    if points < 1025:
        raise ResolutionError("need at least 1025 points for spacing A/512")
    return np.linspace(-A, A, points)


# binomial moments ----------------------------------------------------------

def elementary_symmetric(values: Sequence[Fraction], ell: int) -> Fraction:
    """e_ell(values) by the one-pass recurrence e_j <- e_j + x e_{j-1}."""
    e = [Fraction(1)] + [Fraction(0)] * ell
    for x in values:
        for j in range(ell, 0, -1):
            e[j] += x * e[j - 1]
    return e[ell]


def binomial_moments(source, ell: int, mode: str = "model_exact"):
    """E binom(X, ell) for the model (exact, or brute over subsets) or a sample average."""
    if ell < 0:
        raise ValidationError("ell must be >= 0")
    if mode == "sample":
        v = np.asarray(source, dtype=np.int64)
        if v.size == 0:
            raise ValidationError("empty sample")
        counts = np.bincount(v - v.min()) if v.min() >= 0 else None
        if counts is None:
            raise ValidationError("sample values must be non-negative")
        base = int(v.min())
        total = sum(int(c) * math.comb(base + i, ell) for i, c in enumerate(counts.tolist()) if c)
        return Fraction(total, v.size)
    primes = source.primes if isinstance(source, KubiliusModel) else tuple(source)
    if mode == "model_exact":
        return elementary_symmetric([Fraction(1, p) for p in primes], ell)
    if mode == "brute":
        if len(primes) > BRUTE_PRIME_CAP:
            raise BudgetError(f"brute enumeration capped at {BRUTE_PRIME_CAP} primes", count=len(primes))
        return sum((Fraction(1, math.prod(c)) for c in itertools.combinations(primes, ell)), Fraction(0))
    raise ValidationError(f"unknown mode {mode!r}")


def char_from_binomial(model: KubiliusModel, t: float, L: int) -> complex:
    """Partial sum sum_{ell <= L} (e(t) - 1)^ell E binom(X, ell)."""
    z = complex(np.exp(2j * np.pi * (t - math.floor(t)))) - 1
    e = [Fraction(1)] + [Fraction(0)] * L
    for p in model.primes:
        x = Fraction(1, p)
        for j in range(L, 0, -1):
            e[j] += x * e[j - 1]
    return sum(z**j * float(e[j]) for j in range(L + 1))


# Beatty divisibility ------------------------------------------------------

@dataclass(frozen=True)
class Density:
    empirical: float
    deviation: float
    count: int


def divisibility_density(d: int, spec: BeattySpec, N: int, floors=None) -> Density:
    """Fraction of n <= N with d | floor(alpha n + beta), and its distance from 1/d."""
    if d < 1:
        raise ValidationError("d must be >= 1")
    if floors is None:
        floors = floor_linear_array(spec.alpha, spec.beta, np.arange(1, N + 1, dtype=np.int64))
    c = int(np.count_nonzero(floors % d == 0))
    frac = Fraction(c, N)
    return Density(empirical=float(frac), deviation=float(abs(frac - Fraction(1, d))), count=c)


# Gaussian recentring ----------------------------------------------------------

def _golden_max(f, a, b, tol=1e-12):
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return max(fc, fd)


def recentring_distance(mu: float, sigma: float) -> float:
    """sup_x |Phi(x) - Phi((x - mu)/sigma)|."""
    if sigma <= 0:
        raise ValidationError("sigma must be positive")
    if mu == 0 and sigma == 1:
        return 0.0
    f = lambda x: abs(gaussian_cdf(x) - gaussian_cdf((x - mu) / sigma))
    span = 12 * max(1.0, sigma) + abs(mu)
    xs = np.linspace(-span, span, 4001)
    vals = np.abs(gaussian_cdf(xs) - gaussian_cdf((xs - mu) / sigma))
    best = float(vals.max())
    for i in np.flatnonzero((vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:])).tolist():
        best = max(best, _golden_max(f, xs[i], xs[i + 2]))
    return best


# quantitative pipeline prime set ------------------------------------------

@dataclass(frozen=True)
class QuantitativePrimes:
    gamma: Fraction
    R: int
    bad: tuple
    primes: tuple


def quantitative_prime_set(alpha, N: int, R: Optional[int] = None) -> QuantitativePrimes:
    """gamma = a/b nearest alpha with height <= N^(1/8); primes <= R avoiding 2 and the factors of a."""
    alpha = as_real(alpha)
    if N < 16:
        raise ValidationError(f"N must be >= 16, got {N}")
    h = max(1, math.floor(N ** 0.125 + 1e-9))
    while (h + 1) ** 8 <= N:
        h += 1
    while h > 1 and h**8 > N:
        h -= 1
    gamma = best_rational_of_height(alpha, h)
    if R is None:
        R = math.ceil(N ** (1 / math.log(math.log(N))))
    bad = {2}
    bad.update(prime_factors(abs(gamma.numerator)) if gamma.numerator else [])
    primes = tuple(p for p in sieve_primes(R).tolist() if p not in bad)
    return QuantitativePrimes(gamma=gamma, R=R, bad=tuple(sorted(bad)), primes=primes)


def truncated_omega_counts(spec: BeattySpec, N: int, primes: Sequence[int]) -> np.ndarray:
    """sum_{p in primes} 1_{p | floor(alpha n + beta)} for n = 1..N."""
    x = floor_linear_array(spec.alpha, spec.beta, np.arange(1, N + 1, dtype=np.int64))
    out = np.zeros(N, dtype=np.int64)
    for p in primes:
        out += x % p == 0
    return out
