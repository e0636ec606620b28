"""Standardized omega samples, Kolmogorov distances and mixed moments."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr

from .arith import cached_omega_range, omega_range, omega_values
from .errors import EmptyDomainError, RangeError, ValidationError
from .harmonic import E_direct, PrimeTuple
from .reals import BeattySpec, as_real, floor_linear_array

MAGNITUDE_CAP = 1e3
MAX_SIEVE_SPAN = 1 << 28


def gaussian_cdf(x):
    """Standard normal CDF; scalars go through math.erfc, arrays through ndtr."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(-float(x) / math.sqrt(2))
    return ndtr(np.asarray(x, dtype=float))


def loglog(N: float) -> float:
    if N < 16:
        raise ValidationError(f"N must be >= 16, got {N}")
    return math.log(math.log(N))


# omega along Beatty sequences -----------------------------------------------

def beatty_floors(spec: BeattySpec, N: int) -> np.ndarray:
    return floor_linear_array(spec.alpha, spec.beta, np.arange(1, N + 1, dtype=np.int64))


def omega_of(values, cache_dir=None) -> np.ndarray:
    """omega(|v|) for an integer array, with omega(0) = omega(1) = 0.

    Uses one sieve over [min, max] when that span is affordable and falls
    back to trial division otherwise.
    """
    v = np.abs(np.asarray(values, dtype=np.int64))
    out = np.zeros(v.shape, dtype=np.int64)
    mask = v >= 2
    if not mask.any():
        return out
    w = v[mask]
    lo, hi = int(w.min()), int(w.max())
    if hi - lo < MAX_SIEVE_SPAN:
        table = cached_omega_range(lo, hi + 1, cache_dir) if cache_dir else omega_range(lo, hi + 1)
        out[mask] = table.omega[w - lo]
    else:
        out[mask] = omega_values(w)
    return out


def beatty_omega(spec: BeattySpec, N: int, cache_dir=None) -> np.ndarray:
    return omega_of(beatty_floors(spec, N), cache_dir)


# standardized samples -----------------------------------------------------

@dataclass
class StandardizedSample:
    k: int
    values: np.ndarray  # shape (count, k)
    N: int
    center: float
    scale: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[1] != self.k:
            raise ValidationError(f"values have {v.shape[1]} columns, expected {self.k}")
        if not self.scale > 0:
            raise ValidationError("scale must be positive")
        self.values = v

    def __len__(self):
        return len(self.values)

    def column(self, i: int = 0) -> np.ndarray:
        return self.values[:, i]


def standardize(raw, N: int, center: Optional[float] = None, scale: Optional[float] = None) -> StandardizedSample:
    """(raw - log log N) / sqrt(log log N) unless center/scale are given."""
    raw = np.asarray(raw, dtype=float)
    if raw.ndim == 1:
        raw = raw[:, None]
    ll = loglog(N)
    c = ll if center is None else center
    s = math.sqrt(ll) if scale is None else scale
    return StandardizedSample(k=raw.shape[1], values=(raw - c) / s, N=N, center=c, scale=s)


def _as_values(sample):
    if isinstance(sample, StandardizedSample):
        return sample.values
    v = np.asarray(sample, dtype=float)
    return v[:, None] if v.ndim == 1 else v


def empirical_dK(sample) -> float:
    """sup_x |F_emp(x) - Phi(x)| from the sorted sample."""
    v = _as_values(sample)
    if v.shape[1] != 1:
        raise ValidationError("empirical_dK needs a one-dimensional sample")
    x = np.sort(v[:, 0])
    n = len(x)
    if n == 0:
        raise EmptyDomainError("empty sample")
    phi = gaussian_cdf(x)
    i = np.arange(1, n + 1)
    # ties: only the last copy of a repeated value reaches i/n, the first copy starts from (i-1)/n
    last = np.r_[x[1:] != x[:-1], True]
    first = np.r_[True, x[1:] != x[:-1]]
    up = np.abs(i[last] / n - phi[last]).max()
    down = np.abs((i[first] - 1) / n - phi[first]).max()
    return float(max(up, down))


@dataclass(frozen=True)
class GridDistance:
    """Grid maximum (a lower bound on the sup) and a Lipschitz-corrected upper estimate."""

    lower: float
    upper: float
    grid: int


def multivariate_dK(sample, grid: int = 64, lo: float = -4.0, hi: float = 4.0) -> GridDistance:
    """max over grid corners x of |P(V <= x) - prod Phi(x_i)|, orthants taken lower-left."""
    v = _as_values(sample)
    n, k = v.shape
    if n == 0:
        raise EmptyDomainError("empty sample")
    if grid < 8:
        raise ValidationError("grid must be >= 8")
    if (grid + 1) ** k > 5 * 10**7:
        raise ValidationError(f"grid {grid} too fine for k={k}")
    xs = np.linspace(lo, hi, grid)
    # V_i <= x_g  iff  g >= searchsorted(xs, V_i, 'left')
    idx = np.stack([np.searchsorted(xs, v[:, i], side="left") for i in range(k)], axis=1)
    flat = np.ravel_multi_index(idx.T, (grid + 1,) * k)
    cube = np.bincount(flat, minlength=(grid + 1) ** k).reshape((grid + 1,) * k)
    for axis in range(k):
        cube = np.cumsum(cube, axis=axis)
    F = cube[(slice(0, grid),) * k] / n
    G = np.ones((grid,) * k)
    phi = gaussian_cdf(xs)
    for axis in range(k):
        shape = [1] * k
        shape[axis] = grid
        G = G * phi.reshape(shape)
    lower = float(np.abs(F - G).max())
    h = (hi - lo) / (grid - 1)
    slack = k * h / math.sqrt(2 * math.pi) + k * gaussian_cdf(lo)
    return GridDistance(lower=lower, upper=min(1.0, lower + slack), grid=grid)


# moments -----------------------------------------------------------------

def gaussian_mixed_moment(idx: Sequence[int]) -> Fraction:
    """E prod Z_i^l_i for independent standard normals: prod of (l-1)!! over even l, else 0."""
    out = Fraction(1)
    for l in idx:
        if l < 0:
            raise ValidationError("moment orders must be non-negative")
        if l % 2:
            return Fraction(0)
        out *= Fraction(math.factorial(l), 2 ** (l // 2) * math.factorial(l // 2))
    return out


def mixed_moment_empirical(sample, idx: Sequence[int]) -> float:
    v = _as_values(sample)
    if len(idx) != v.shape[1]:
        raise ValidationError("moment index does not match sample dimension")
    if len(v) == 0:
        raise EmptyDomainError("empty sample")
    if np.abs(v).max() > MAGNITUDE_CAP:
        raise RangeError(f"sample magnitude exceeds {MAGNITUDE_CAP}")
    prod = np.ones(len(v))
    for i, l in enumerate(idx):
        if l:
            prod = prod * v[:, i] ** l
    return math.fsum(prod.tolist()) / len(v)


def truncated_omega(spec: BeattySpec, N: int, primes: Sequence[int], normalise: bool = True) -> np.ndarray:
    """sum_{p in primes} (1_{p | floor(alpha n + beta)} - 1/p), optionally over sqrt(log log N)."""
    x = beatty_floors(spec, N)
    out = np.zeros(N)
    for p in primes:
        out += (x % p == 0) - 1.0 / p
    return out / math.sqrt(loglog(N)) if normalise else out


def truncated_mixed_moment(specs: Sequence[BeattySpec], N: int, primes: Sequence[int], idx: Sequence[int]) -> float:
    cols = np.stack([truncated_omega(s, N, primes) for s in specs], axis=1)
    return mixed_moment_empirical(cols, idx)


def decomposed_mixed_moment(specs: Sequence[BeattySpec], N: int, primes: Sequence[int], idx: Sequence[int]) -> float:
    """The same moment expanded as (log log N)^(-l/2) times a sum of E_direct over all tuples."""
    ell = sum(idx)
    total = Fraction(0)
    per_row = [list(itertools.product(primes, repeat=l)) for l in idx]
    for rows in itertools.product(*per_row):
        total += E_direct(PrimeTuple(rows), specs, N)
    return float(total) / loglog(N) ** (ell / 2)


@dataclass(frozen=True)
class CoprimalityResult:
    rate: float
    coprime: int
    counted: int
    excluded_zero: int


def coprimality_rate(alpha, N: int) -> CoprimalityResult:
    """Share of n <= N with gcd(n, floor(alpha n)) = 1; n with floor(alpha n) = 0 are excluded."""
    alpha = as_real(alpha)
    spec = BeattySpec(alpha, as_real("rational:0"))
    ns = np.arange(1, N + 1, dtype=np.int64)
    x = floor_linear_array(spec.alpha, spec.beta, ns)
    zero = x == 0
    g = np.gcd(ns[~zero], x[~zero])
    counted = int((~zero).sum())
    coprime = int((g == 1).sum())
    return CoprimalityResult(rate=coprime / counted if counted else float("nan"), coprime=coprime,
                             counted=counted, excluded_zero=int(zero.sum()))


def cdf_curve(sample, points: Optional[int] = None):
    """Rows (x, F_emp(x), Phi(x)) at the sorted sample values, thinned to ``points`` if given."""
    v = _as_values(sample)[:, 0]
    x = np.sort(v)
    n = len(x)
    F = np.arange(1, n + 1) / n
    keep = np.r_[x[1:] != x[:-1], True]
    x, F = x[keep], F[keep]
    if points and len(x) > points:
        sel = np.unique(np.linspace(0, len(x) - 1, points).round().astype(int))
        x, F = x[sel], F[sel]
    return x, F, gaussian_cdf(x)


def cdf_on_grid(sample, points: int, pad: float = 0.5):
    """F_emp and Phi on ``points`` evenly spaced x covering the sample range plus ``pad``."""
    v = np.sort(_as_values(sample)[:, 0])
    if len(v) == 0:
        raise EmptyDomainError("empty sample")
    if points < 2:
        raise ValidationError("need at least two grid points")
    x = np.linspace(v[0] - pad, v[-1] + pad, points)
    F = np.searchsorted(v, x, side="right") / len(v)
    return x, F, gaussian_cdf(x)
