"""Prime generation and exact prime-factor counts over integer ranges."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ._parallel import ordered_map
from .errors import CapacityError, EmptyDomainError, RangeError, ValidationError

DEFAULT_SEGMENT = 1 << 20
MAX_TABLE_ENTRIES = 1 << 30
CACHE_MAGIC = b"EKLAB1\n"


def sieve_primes(limit: int) -> np.ndarray:
    """All primes ``<= limit`` in ascending order (int64 array)."""
    if limit < 2:
        raise EmptyDomainError(f"no primes below {limit}")
    if limit > 1 << 34:
        raise CapacityError(f"prime sieve to {limit} exceeds memory budget")
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    is_p[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if is_p[p]:
            is_p[p * p :: 2 * p] = False
    return np.flatnonzero(is_p).astype(np.int64)


@dataclass(frozen=True)
class FactorTable:
    """omega and Omega for every n in [lo, hi)."""

    lo: int
    hi: int
    omega: np.ndarray
    big_omega: np.ndarray

    def __post_init__(self):
        if len(self.omega) != self.hi - self.lo or len(self.big_omega) != self.hi - self.lo:
            raise ValidationError("table length does not match range")
        self.omega.setflags(write=False)
        self.big_omega.setflags(write=False)

    def __len__(self):
        return self.hi - self.lo

    def __getitem__(self, n):
        return int(self.omega[n - self.lo]), int(self.big_omega[n - self.lo])

    def lookup(self, values) -> np.ndarray:
        """omega at each integer of ``values`` (all inside the range)."""
        values = np.asarray(values, dtype=np.int64)
        if values.size and (values.min() < self.lo or values.max() >= self.hi):
            raise RangeError(f"values outside table range [{self.lo}, {self.hi})")
        return self.omega[values - self.lo]

    def restrict(self, lo: int, hi: int) -> "FactorTable":
        if not (self.lo <= lo < hi <= self.hi):
            raise RangeError(f"[{lo}, {hi}) not inside [{self.lo}, {self.hi})")
        a, b = lo - self.lo, hi - self.lo
        return FactorTable(lo, hi, self.omega[a:b].copy(), self.big_omega[a:b].copy())


def _sieve_segment(a: int, b: int, primes: np.ndarray):
    rem = np.arange(a, b, dtype=np.int64)
    omega = np.zeros(b - a, dtype=np.uint8)
    big = np.zeros(b - a, dtype=np.uint8)
    for p in primes.tolist():
        if p * p >= b:
            break
        start = (-a) % p
        if start >= b - a:
            continue
        omega[start::p] += 1
        pk = p
        while pk < b:
            s = (-a) % pk
            if s < b - a:
                big[s::pk] += 1
                rem[s::pk] //= p
            if pk > (b - 1) // p:
                break
            pk *= p
    leftover = rem > 1
    omega += leftover
    big += leftover
    return omega, big


def omega_range(lo: int, hi: int, segment_size: int = DEFAULT_SEGMENT, threads=None) -> FactorTable:
    """Exact omega(n) and Omega(n) for n in [lo, hi) by segmented sieving.

    Segments are independent and may run on worker threads; the merge is
    by range order so the output never depends on scheduling.
    """
    if lo < 1:
        raise RangeError(f"lo must be >= 1, got {lo}")
    if hi <= lo:
        raise RangeError(f"empty range [{lo}, {hi})")
    if hi > 1 << 63:
        raise CapacityError(f"hi={hi} exceeds the 64-bit word size")
    if hi - lo > MAX_TABLE_ENTRIES:
        raise CapacityError(f"{hi - lo} entries exceed the table budget {MAX_TABLE_ENTRIES}")
    root = math.isqrt(hi - 1)
    primes = sieve_primes(root) if root >= 2 else np.zeros(0, dtype=np.int64)
    bounds = [(a, min(a + segment_size, hi)) for a in range(lo, hi, segment_size)]
    parts = ordered_map(lambda ab: _sieve_segment(ab[0], ab[1], primes), bounds, threads)
    omega = np.concatenate([p[0] for p in parts])
    big = np.concatenate([p[1] for p in parts])
    return FactorTable(lo, hi, omega, big)


def omega_values(values) -> np.ndarray:
    """omega(v) for an arbitrary array of positive integers below 2**62.

    Vectorised trial division; entries drop out once their cofactor is 1 or
    provably prime.
    """
    vals = np.asarray(values, dtype=np.int64).ravel()
    if vals.size == 0:
        return np.zeros(0, dtype=np.uint8)
    if vals.min() < 1:
        raise ValidationError("omega is only defined for positive integers")
    out = np.zeros(vals.size, dtype=np.uint8)
    rem = vals.copy()
    active = np.flatnonzero(rem > 1)
    root = math.isqrt(int(vals.max()))
    if root >= 2:
        primes = sieve_primes(root)
        for i, p in enumerate(primes.tolist()):
            if active.size == 0:
                break
            r = rem[active]
            hit = r % p == 0
            if hit.any():
                idx = active[hit]
                out[idx] += 1
                q = rem[idx] // p
                while True:
                    more = q % p == 0
                    if not more.any():
                        break
                    q[more] //= p
                rem[idx] = q
            if i % 16 == 15:
                r = rem[active]
                active = active[(r > 1) & (r >= p * p)]
    out += (rem > 1).astype(np.uint8)
    return out.reshape(np.shape(values))


def prime_reciprocal_sum(primes: Iterable[int]) -> float:
    """Sum of 1/p over distinct primes, ascending, with compensated summation."""
    ps = sorted(int(p) for p in primes)
    if len(set(ps)) != len(ps):
        raise ValidationError("duplicate primes in reciprocal sum")
    return math.fsum(1.0 / p for p in ps)


def prime_factors(n: int) -> list[int]:
    """Distinct prime factors of |n| by trial division (small inputs)."""
    n = abs(int(n))
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out.append(n)
    return out


@dataclass(frozen=True)
class PrimeSets:
    R: int
    good: tuple
    bad: tuple


def build_prime_sets(N: float, R: int, gammas: Sequence[Fraction]) -> PrimeSets:
    """Split primes <= R into the good set and the bad set.

    The bad set collects every prime factor of the gammas' numerators and
    denominators together with all primes <= log N.
    """
    if R < 2:
        raise ValidationError(f"R must be >= 2, got {R}")
    bad = set()
    for g in gammas:
        g = Fraction(g)
        bad.update(prime_factors(g.numerator))
        bad.update(prime_factors(g.denominator))
    logn = math.log(N)
    if logn >= 2:
        bad.update(sieve_primes(int(math.floor(logn))).tolist())
    good = tuple(p for p in sieve_primes(R).tolist() if p not in bad)
    return PrimeSets(R=R, good=good, bad=tuple(sorted(bad)))


def write_sieve_cache(path, table: FactorTable) -> None:
    path = Path(path)
    pairs = np.empty(2 * len(table), dtype=np.uint8)
    pairs[0::2] = table.omega
    pairs[1::2] = table.big_omega
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(f"{table.lo} {table.hi}\n".encode("ascii"))
        fh.write(pairs.tobytes())


def read_sieve_cache(path) -> FactorTable:
    with open(path, "rb") as fh:
        if fh.read(len(CACHE_MAGIC)) != CACHE_MAGIC:
            raise ValidationError(f"{path}: not an EKLAB1 sieve cache")
        header = fh.readline().decode("ascii").split()
        lo, hi = int(header[0]), int(header[1])
        raw = np.frombuffer(fh.read(), dtype=np.uint8)
    if raw.size != 2 * (hi - lo):
        raise ValidationError(f"{path}: truncated cache ({raw.size} bytes for {hi - lo} entries)")
    return FactorTable(lo, hi, raw[0::2].copy(), raw[1::2].copy())


def cached_omega_range(lo: int, hi: int, cache_dir=None) -> FactorTable:
    """``omega_range`` backed by an exact-match (lo, hi) file cache."""
    if cache_dir is None:
        return omega_range(lo, hi)
    path = Path(cache_dir) / f"sieve_{lo}_{hi}.bin"
    if path.exists():
        return read_sieve_cache(path)
    table = omega_range(lo, hi)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    write_sieve_cache(tmp, table)
    tmp.replace(path)
    return table
