"""Window functions, exponential sums and the E-family of tuple estimators.

Fourier transforms use the convention fhat(y) = integral f(x) e(-xy) dx
with e(x) = exp(2 pi i x).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .arith import prime_factors
from .errors import BudgetError, TruncationError, TupleTypeError, ValidationError
from .reals import BeattySpec, as_real, floor_linear_array

TAIL_TOLERANCE = 1e-12
DEFAULT_CONVOLUTION_BUDGET = 2 * 10**8


# schedule ----------------------------------------------------------------

@dataclass(frozen=True)
class Schedule:
    """Cut-offs L, J, R, T and window width epsilon attached to a size N."""

    N: int
    L: int
    J: int
    R: int
    T: int
    epsilon: float

    @classmethod
    def default(cls, N: int, **overrides) -> "Schedule":
        if N < 16:
            raise ValidationError(f"N must be >= 16, got {N}")
        ll = math.log(math.log(N))
        pick = lambda key, default: default if overrides.get(key) is None else overrides[key]
        J = pick("J", max(64, math.ceil(N ** (1 / 25))))
        vals = dict(
            L=pick("L", math.ceil(ll)),
            J=J,
            R=pick("R", math.ceil(N ** (1 / ll))),
            T=pick("T", math.ceil(J ** (1 / 8)) if J > 0 else 1),
            epsilon=pick("epsilon", J ** -0.5 if J > 0 else 1.0),
        )
        if vals["L"] < 1 or vals["T"] < 1 or vals["R"] < 2:
            raise ValidationError(f"need L >= 1, T >= 1 and R >= 2, got {vals}")
        if vals["R"] > N:
            raise ValidationError(f"R={vals['R']} exceeds N={N}")
        if vals["J"] < 64:
            raise ValidationError(f"J must be >= 64, got {vals['J']}")
        if not 0 < vals["epsilon"] <= 0.5:
            raise ValidationError(f"epsilon must lie in (0, 1/2], got {vals['epsilon']}")
        return cls(N=N, **vals)

    def to_json(self):
        return {"N": self.N, "L": self.L, "J": self.J, "R": self.R, "T": self.T, "epsilon": self.epsilon}


def interval_bounds(u: int, N: int):
    """Inclusive bounds of S_u: width isqrt(N), the last interval takes the remainder."""
    w = math.isqrt(N)
    U = N // w
    if not 1 <= u <= U:
        raise ValidationError(f"interval index {u} outside [1, {U}]")
    lo = (u - 1) * w + 1
    hi = N if u == U else u * w
    return lo, hi


def interval_count(N: int) -> int:
    return N // math.isqrt(N)


# windows -----------------------------------------------------------------

def _check_eps(kind, epsilon):
    if kind not in ("tent", "plus", "minus"):
        raise ValidationError(f"unknown window {kind!r}")
    if kind != "tent" and not 0 < epsilon <= 0.5:
        raise ValidationError(f"epsilon must lie in (0, 1/2], got {epsilon}")


def window_eval(kind: str, x, epsilon: float = 0.1):
    """Piecewise-linear windows: tent = max(0, 2-|x|), plus/minus approximate 1_[0,1)."""
    _check_eps(kind, epsilon)
    x = np.asarray(x, dtype=float)
    if kind == "tent":
        out = np.maximum(0.0, 2.0 - np.abs(x))
    else:
        # |[x-1, x] intersect [a, a+eps]| / eps
        a = 0.0 if kind == "plus" else -epsilon
        out = (np.minimum(x, a + epsilon) - np.maximum(x - 1.0, a)).clip(min=0.0) / epsilon
    return out[()] if out.ndim == 0 else out


def _sinc(z):
    """sin(pi z)/(pi z) with the removable point handled by its series."""
    z = np.asarray(z, dtype=float)
    pz = np.pi * z
    small = np.abs(pz) < 1e-4
    safe = np.where(small, 1.0, pz)
    return np.where(small, 1.0 - pz * pz / 6.0 + pz**4 / 120.0, np.sin(safe) / safe)


def window_fourier(kind: str, y, epsilon: float = 0.1):
    _check_eps(kind, epsilon)
    y = np.asarray(y, dtype=float)
    if kind == "tent":
        out = (2.0 * _sinc(2.0 * y)) ** 2 + 0j
    else:
        shift = (1.0 + epsilon) / 2 if kind == "plus" else (1.0 - epsilon) / 2
        out = np.exp(-2j * np.pi * shift * y) * _sinc(y) * _sinc(epsilon * y)
    return out[()] if out.ndim == 0 else out


def window_fourier_abs(kind: str, y, epsilon: float = 0.1):
    _check_eps(kind, epsilon)
    y = np.asarray(y, dtype=float)
    if kind == "tent":
        return (2.0 * _sinc(2.0 * y)) ** 2
    return np.abs(_sinc(y) * _sinc(epsilon * y))


def periodised_window(kind: str, x, p: int, epsilon: float = 0.1):
    """sum over m of window(x - p m), the p-periodisation."""
    x = np.asarray(x, dtype=float)
    r = np.mod(x, p)
    reach = 3
    out = sum(window_eval(kind, r - p * m, epsilon) for m in range(-reach, reach + 1))
    return out


# exponential sums --------------------------------------------------------

def _frac(x):
    if isinstance(x, (Fraction, int)):
        return Fraction(x) - math.floor(Fraction(x))
    return x - math.floor(x)


def _phase(x, n: int) -> complex:
    return complex(np.exp(2j * np.pi * float(_frac(x * n))))


def _sin_pi(y) -> float:
    """sin(pi y) with y reduced mod 2 first (exactly for rationals)."""
    y = y - 2 * round(y / 2)
    return math.sin(math.pi * float(y))


def _geometric(x, start: int, stop: int) -> complex:
    """sum_{n=start}^{stop} e(n x) as e(x (start+stop)/2) sin(pi count x) / sin(pi x)."""
    count = stop - start + 1
    r = x - round(x)
    if r == 0:
        return complex(count)
    centre = r * (start + stop) / 2 if isinstance(r, Fraction) else r * (start + stop) * 0.5
    if abs(float(r)) * count < 1e-6:
        # series of sin(pi c r) / sin(pi r); also keeps subnormal r accurate
        rf = float(r)
        return _phase(centre, 1) * count * (1 - (math.pi * rf) ** 2 * (count * count - 1) / 6)
    return _phase(centre, 1) * _sin_pi(r * count) / _sin_pi(r)


def dirichlet_theta(x, N: int, u: Optional[int] = None) -> complex:
    """N^-1 sum_{n<=N} e(nx), or N^-1/2 sum_{n in S_u} e(nx) when u is given."""
    if N < 1:
        raise ValidationError(f"N must be >= 1, got {N}")
    if u is None:
        return _geometric(x, 1, N) / N
    lo, hi = interval_bounds(u, N)
    return _geometric(x, lo, hi) / math.sqrt(N)


def theta_bound(x, N: int) -> float:
    """The classical bound min(1, 1/(2 N ||x||))."""
    f = float(_frac(x))
    d = min(f, 1 - f)
    return 1.0 if d == 0 else min(1.0, 1 / (2 * N * d))


def periodised_gaussian(x, epsilon: float, tail_terms: int, side: str = "space") -> float:
    """sum over integers m of exp(-(x - m)^2 / (2 eps^2)), truncated at |m| <= tail_terms.

    The frequency side evaluates sqrt(2 pi) eps sum_m e(mx) exp(-2 pi^2 eps^2 m^2).
    Either way the discarded tail is bounded and must not exceed 1e-12.
    """
    if epsilon <= 0 or tail_terms < 1:
        raise ValidationError("need epsilon > 0 and tail_terms >= 1")
    x = float(_frac(x))
    if x >= 0.5:
        x -= 1.0
    T = tail_terms
    ms = np.arange(-T, T + 1, dtype=float)
    if side == "space":
        # |x - m| >= |m| - 1/2, successive ratio at most exp(-(T+1)/eps^2)
        lead = math.exp(-((T + 0.5) ** 2) / (2 * epsilon**2))
        tail = 2 * lead / (1 - math.exp(-(T + 1) / epsilon**2))
        vals = np.exp(-((x - ms) ** 2) / (2 * epsilon**2))
    elif side == "frequency":
        c = 2 * math.pi**2 * epsilon**2
        lead = math.exp(-c * (T + 1) ** 2)
        tail = math.sqrt(2 * math.pi) * epsilon * 2 * lead / (1 - math.exp(-c * (2 * T + 3)))
        vals = math.sqrt(2 * math.pi) * epsilon * np.cos(2 * np.pi * ms * x) * np.exp(-c * ms**2)
    else:
        raise ValidationError(f"unknown side {side!r}")
    if tail > TAIL_TOLERANCE:
        raise TruncationError(f"{tail_terms} terms leave a tail of {tail:.3g}", required_bits=None)
    return math.fsum(vals.tolist())


# prime tuples --------------------------------------------------------------

def _is_prime(p: int) -> bool:
    return p >= 2 and prime_factors(p) == [p]


@dataclass(frozen=True)
class PrimeTuple:
    """Primes p_ij grouped by coordinate i; ``entries[i]`` lists p_i1..p_il_i."""

    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(int(p) for p in row) for row in self.entries)
        object.__setattr__(self, "entries", rows)
        for row in rows:
            for p in row:
                if not _is_prime(p):
                    raise ValidationError(f"{p} is not prime")

    @property
    def shape(self):
        return tuple(len(r) for r in self.entries)

    @property
    def length(self):
        return sum(self.shape)

    def flat(self):
        """(i, p) pairs in row-major order."""
        return [(i, p) for i, row in enumerate(self.entries) for p in row]

    def primes(self):
        return sorted({p for row in self.entries for p in row})


def classify_tuple(t: PrimeTuple) -> str:
    """'A', 'B', 'C' or 'D' by the pairing pattern of the primes."""
    counts = Counter(p for _, p in t.flat())
    if any(c == 1 for c in counts.values()):
        return "C"
    if all(c == 2 for c in counts.values()):
        homes = {}
        for i, p in t.flat():
            homes.setdefault(p, set()).add(i)
        return "A" if all(len(h) == 1 for h in homes.values()) else "B"
    return "D"


def type_A_prediction(t: PrimeTuple) -> Fraction:
    if classify_tuple(t) != "A":
        raise TupleTypeError(f"tuple {t.entries} is type {classify_tuple(t)}, not A")
    out = Fraction(1)
    for p in t.primes():
        out *= Fraction(1, p) - Fraction(1, p * p)
    return out


def enumerate_tuples(primes: Sequence[int], shape: Sequence[int]):
    """Every PrimeTuple of the given shape with entries drawn from ``primes``."""
    import itertools

    total = sum(shape)
    for combo in itertools.product(primes, repeat=total):
        rows, pos = [], 0
        for l in shape:
            rows.append(combo[pos:pos + l])
            pos += l
        yield PrimeTuple(tuple(rows))


# interval goodness ---------------------------------------------------------

@dataclass
class GoodnessReport:
    u: int
    bounds: tuple
    epsilon: Fraction
    hits_plus: list
    hits_minus: list
    verdicts: list

    @property
    def size(self):
        return self.bounds[1] - self.bounds[0] + 1

    @property
    def good(self):
        return all(v != "bad" for v in self.verdicts)

    def fractions(self):
        return [(hp / self.size, hm / self.size) for hp, hm in zip(self.hits_plus, self.hits_minus)]


def hit_counts(spec: BeattySpec, ns, epsilon: Fraction):
    """Certified counts of frac(alpha n + beta) in [0, eps) and in (1 - eps, 1)."""
    eps = Fraction(epsilon)
    ns = np.asarray(ns, dtype=np.int64)
    base = floor_linear_array(spec.alpha, spec.beta, ns)
    below = floor_linear_array(spec.alpha, spec.beta, ns, offset=-eps)
    plus = int(np.count_nonzero(below != base))
    # frac > 1 - eps  <=>  floor(-x - eps) < -floor(x) - 1
    neg = floor_linear_array(spec.alpha, -spec.beta, -ns, offset=-eps)
    minus = int(np.count_nonzero(neg < -base - 1))
    return plus, minus


def interval_goodness(specs: Sequence[BeattySpec], u: int, N: int, epsilon) -> GoodnessReport:
    eps = Fraction(epsilon).limit_denominator(10**12) if isinstance(epsilon, float) else Fraction(epsilon)
    if not 0 < eps < 1:
        raise ValidationError("epsilon must lie in (0, 1)")
    lo, hi = interval_bounds(u, N)
    ns = np.arange(lo, hi + 1, dtype=np.int64)
    size = len(ns)
    hp, hm, verdicts = [], [], []
    for spec in specs:
        plus, minus = hit_counts(spec, ns, eps)
        hp.append(plus)
        hm.append(minus)
        # count/size <= eps^(1/4), compared exactly after raising to the 4th power
        if Fraction(plus, size) ** 4 <= eps:
            verdicts.append("plus")
        elif Fraction(minus, size) ** 4 <= eps:
            verdicts.append("minus")
        else:
            verdicts.append("bad")
    return GoodnessReport(u=u, bounds=(lo, hi), epsilon=eps, hits_plus=hp, hits_minus=hm, verdicts=verdicts)


# direct estimator ----------------------------------------------------------

def E_direct(t: PrimeTuple, specs: Sequence[BeattySpec], N: int, u: Optional[int] = None) -> Fraction:
    """Exact average over n of prod_ij (1_{p_ij | floor(alpha_i n + beta_i)} - 1/p_ij)."""
    if len(specs) != len(t.entries):
        raise ValidationError(f"tuple has {len(t.entries)} coordinates but {len(specs)} specs given")
    lo, hi = (1, N) if u is None else interval_bounds(u, N)
    flat = t.flat()
    if not flat:
        return Fraction(1)
    ns = np.arange(lo, hi + 1, dtype=np.int64)
    floors = [beatty_floor_array_cached(spec, ns) for spec in specs]
    code = np.zeros(len(ns), dtype=np.int64)
    for bit, (i, p) in enumerate(flat):
        code |= (floors[i] % p == 0).astype(np.int64) << bit
    counts = np.bincount(code, minlength=1 << len(flat))
    total = Fraction(0)
    for pattern in np.flatnonzero(counts).tolist():
        term = Fraction(int(counts[pattern]))
        for bit, (_, p) in enumerate(flat):
            term *= (1 - Fraction(1, p)) if pattern >> bit & 1 else -Fraction(1, p)
        total += term
    return total / len(ns)


def beatty_floor_array_cached(spec: BeattySpec, ns):
    return floor_linear_array(spec.alpha, spec.beta, ns)


# restricted Fourier sums ---------------------------------------------------

@dataclass(frozen=True)
class BoundedValue:
    """A truncated sum together with a bound on the discarded tail."""

    value: float
    tail: float

    def __float__(self):
        return float(self.value)

    @property
    def interval(self):
        return (self.value - self.tail, self.value + self.tail)


def _lcm(a, b):
    return a * b // math.gcd(a, b)


def E_restricted_sum(t: PrimeTuple, gamma, J: int, variant: str = "triple", epsilon: float = 0.1,
                     sign: str = "plus", budget: int = DEFAULT_CONVOLUTION_BUDGET) -> BoundedValue:
    """Truncated sum over frequencies m_ij in p_ij^-1 Z, |m_ij| <= J, with sum m_ij gamma_i integral.

    ``variant='prime'`` weights each frequency by phi(m)/p with the tent
    transform; ``variant='triple'`` drops integer frequencies and weights by
    |phi_+-(m)|/p.  The integrality constraint is tracked exactly as a
    residue modulo a common denominator D, so the sum is an exact cyclic
    convolution of per-coordinate residue profiles.
    """
    gammas = [Fraction(g) for g in (gamma.gammas if hasattr(gamma, "gammas") else gamma)]
    if len(gammas) != len(t.entries):
        raise ValidationError("gamma length does not match tuple coordinates")
    if variant not in ("prime", "triple"):
        raise ValidationError(f"unknown variant {variant!r}")
    if J < 1:
        raise ValidationError("J must be >= 1")
    for _, p in t.flat():
        for g in gammas:
            if g.numerator % p == 0 or g.denominator % p == 0:
                raise ValidationError(f"tuple prime {p} divides a gamma entry {g}")
    flat = t.flat()
    if not flat:
        return BoundedValue(1.0, 0.0)
    kind = "tent" if variant == "prime" else sign
    D = 1
    for i, p in flat:
        D = _lcm(D, (gammas[i] / p).denominator)
    sizes = [2 * J * p + 1 for _, p in flat]
    work = D * sum(sizes)
    if work > budget:
        raise BudgetError(f"residue convolution needs about {work} operations", count=work)

    profiles, partials, tails = [], [], []
    for i, p in flat:
        a = np.arange(-J * p, J * p + 1, dtype=np.int64)
        if variant == "triple":
            a = a[a % p != 0]
        w = window_fourier_abs(kind, a / p, epsilon) / p
        step = gammas[i] / p * D  # integer: residue contributed by a = 1
        step = int(step.numerator) % D
        res = (a % D) * step % D if D < (1 << 31) else np.array([(int(x) * step) % D for x in a])
        prof = np.zeros(D)
        np.add.at(prof, res, w)
        profiles.append(prof)
        partials.append(math.fsum(w.tolist()))
        if variant == "prime":
            tails.append(2 / (math.pi**2 * J))
        else:
            tails.append(2 / (math.pi**2 * epsilon * J))

    acc = profiles[0]
    for prof in profiles[1:]:
        nxt = np.zeros(D)
        for r in np.flatnonzero(prof).tolist():
            nxt += prof[r] * np.roll(acc, r)
        acc = nxt
    value = float(acc[0])

    tail = 0.0
    for i in range(len(flat)):
        term = tails[i]
        for j in range(len(flat)):
            if j != i:
                term *= partials[j] + tails[j]
        tail += term
    return BoundedValue(value, tail)
