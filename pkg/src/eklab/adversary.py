"""A Liouville-type coefficient that defeats any fixed convergence rate.

alpha = sum_i 1/a_i with rapidly growing a_i.  On n = b_m n' the value
alpha g(n) with g(n) = (n - 1) n^(d-1) collapses to the integer
alpha_m g(b_m n'), which is divisible by n'(b_m n' - 1) and therefore has
many prime factors.  That surplus mass at the top of the omega
distribution is a lower bound on the Kolmogorov distance.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .arith import omega_range, omega_values
from .errors import BudgetError, CounterexampleError, ValidationError
from .stats import empirical_dK, gaussian_cdf

TAIL_CAP = 1 << 4096
DEFAULT_SEARCH_LIMIT = 10**7


@dataclass(frozen=True)
class Relaxation:
    """Desk-scale constants replacing the astronomically large ones.

    growth:       log N_{m+1} >= growth * b_m
    eta_power:    eta_N = (log N)^-eta_power, requiring 1/eta_{N_{m+1}} >= m b_m
    theta_level:  omega threshold as a multiple of log log N_{m+1}
    theta_prob:   allowed share of n at or below that threshold
    """

    a1_min: int = 4
    growth: float = 2.5
    eta_power: float = 1.0
    theta_level: float = 0.5
    theta_prob: float = 0.5


@dataclass(frozen=True)
class Level:
    a: int
    b: int
    N: int
    alpha: Fraction


def iroot(x: int, d: int) -> int:
    """floor(x^(1/d)) for non-negative integers."""
    if x < 0 or d < 1:
        raise ValidationError("iroot needs x >= 0, d >= 1")
    if x < 2:
        return x
    r = int(round(x ** (1.0 / d)))
    while r**d > x:
        r -= 1
    while (r + 1) ** d <= x:
        r += 1
    return r


def g_poly(n: int, d: int) -> int:
    return (n - 1) * n ** (d - 1)


@dataclass
class AdversarySchedule:
    d: int
    levels: list
    relaxation: Relaxation = field(default_factory=Relaxation)

    def __post_init__(self):
        if self.d < 2:
            raise ValidationError("d must be >= 2")
        prev = 0
        b = 1
        alpha = Fraction(0)
        for lv in self.levels:
            b *= lv.a
            alpha += Fraction(1, lv.a)
            if lv.a <= prev or lv.b != b or lv.N != iroot(lv.a, self.d) // 2 or lv.alpha != alpha:
                raise ValidationError(f"inconsistent level {lv}")
            prev = lv.a

    def next_a_lower_bound(self) -> int:
        """Smallest a_{L+1} the growth law allows after the last level (capped at 2^4096)."""
        last = self.levels[-1]
        r = self.relaxation
        exponent = r.growth * last.b
        if exponent > 4096 * math.log(2):
            return TAIL_CAP
        nmin = math.ceil(math.exp(exponent))
        return max(2 * last.a, min(TAIL_CAP, (2 * nmin) ** self.d))

    def alpha_enclosure(self):
        """[alpha_L, alpha_L + 2/A] with A a lower bound for every later a_i's first term."""
        lo = self.levels[-1].alpha
        return lo, lo + Fraction(2, self.next_a_lower_bound())

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "relaxation": asdict(self.relaxation),
            "levels": [{"a": lv.a, "b": lv.b, "N": lv.N, "alpha": str(lv.alpha)} for lv in self.levels],
        }

    @classmethod
    def from_json(cls, doc) -> "AdversarySchedule":
        if isinstance(doc, str):
            doc = json.loads(doc)
        levels = [Level(int(l["a"]), int(l["b"]), int(l["N"]), Fraction(l["alpha"])) for l in doc["levels"]]
        return cls(d=int(doc["d"]), levels=levels, relaxation=Relaxation(**doc.get("relaxation", {})))


# construction ----------------------------------------------------------------

def _loglog(N: int) -> float:
    return math.log(math.log(N))


class _ShareCounter:
    """Shares of n <= M with omega(n) resp. omega(b n - 1) at most k, via cached prefix counts."""

    def __init__(self, b: int):
        self.b = b
        self.M = 0
        self.w1 = self.w2 = None
        self.prefix = {}

    def _grow(self, M: int):
        M = max(M, 2 * self.M, 1024)
        table = omega_range(1, self.b * M + 1)
        ns = np.arange(1, M + 1)
        self.w1 = table.omega[ns - 1]
        self.w2 = table.omega[self.b * ns - 2]  # index of b n - 1 in a table starting at 1
        self.M = M
        self.prefix = {}

    def shares(self, M: int, k: int):
        if M > self.M:
            self._grow(M)
        if k not in self.prefix:
            self.prefix[k] = (np.cumsum(self.w1 <= k), np.cumsum(self.w2 <= k))
        c1, c2 = self.prefix[k]
        return float(c1[M - 1]) / M, float(c2[M - 1]) / M


def _small_omega_share(N: int, b: int, r: Relaxation, counter: _ShareCounter = None):
    """Shares of n <= N/b with omega(n) resp. omega(b n - 1) at or below the threshold."""
    M = N // b
    if M < 1:
        return 1.0, 1.0
    k = math.floor(r.theta_level * _loglog(N))
    return (counter or _ShareCounter(b)).shares(M, k)


def _conditions(N: int, m: int, b: int, r: Relaxation, counter: _ShareCounter = None):
    """Which relaxed conditions fail for a candidate N_{m+1} (empty list means all hold)."""
    failed = []
    if N < 3 or math.log(N) < r.growth * b:
        failed.append("growth")
    if N >= 3 and math.log(N) ** r.eta_power < m * b:
        failed.append("rate")
    if not failed:
        s1, s2 = _small_omega_share(N, b, r, counter)
        if s1 > r.theta_prob:
            failed.append("omega(n)")
        if s2 > r.theta_prob:
            failed.append("omega(bn-1)")
    return failed


def construct_sequence(d: int = 2, levels: int = 2, relaxation: Relaxation = Relaxation(),
                       search_limit: int = DEFAULT_SEARCH_LIMIT) -> AdversarySchedule:
    """Each a_{m+1} is the smallest value meeting the relaxed conditions and a_{m+1} >= 2 a_m."""
    if d < 2 or levels < 1:
        raise ValidationError("need d >= 2 and levels >= 1")
    r = relaxation
    a = max(r.a1_min, 1)
    out = [Level(a=a, b=a, N=iroot(a, d) // 2, alpha=Fraction(1, a))]
    for m in range(1, levels):
        prev = out[-1]
        b = prev.b
        start = math.exp(r.growth * b) if r.growth * b < 700 else math.inf
        if start > search_limit:
            raise BudgetError(f"growth condition needs N > {search_limit} at level {m + 1}", count=search_limit)
        N = max(3, math.ceil(start))
        counter = _ShareCounter(b)
        while True:
            if N > search_limit:
                raise BudgetError(f"conditions {failed} still fail at N = {search_limit} (level {m + 1})",
                                  count=search_limit)
            a = max((2 * N) ** d, 2 * prev.a)
            N = iroot(a, d) // 2
            failed = _conditions(N, m, b, r, counter)
            if not failed:
                break
            N += 1
        out.append(Level(a=a, b=b * a, N=N, alpha=prev.alpha + Fraction(1, a)))
    return AdversarySchedule(d=d, levels=out, relaxation=r)


# verification -----------------------------------------------------------------

@dataclass
class CollapseReport:
    m: int
    checked: int
    floor_identity: bool
    divisibility: bool
    coprime: bool
    superadditive: bool

    @property
    def passed(self):
        return self.floor_identity and self.divisibility and self.coprime and self.superadditive


def _floors(schedule: AdversarySchedule, values):
    """Certified floor(alpha g(v)) from the enclosure of alpha; None where it is undecided."""
    lo, hi = schedule.alpha_enclosure()
    out = []
    for v in values:
        gv = g_poly(v, schedule.d)
        f_lo = lo.numerator * gv // lo.denominator
        f_hi = hi.numerator * gv // hi.denominator
        # alpha > lo strictly, so an exact integer lo*g still floors to itself
        out.append(f_lo if f_lo == f_hi else None)
    return out


def collapse_check(schedule: AdversarySchedule, m: int) -> CollapseReport:
    """Exhaustive check over n <= N_{m+1}/b_m; raises on the smallest failing n."""
    L = len(schedule.levels)
    if not 1 <= m < L:
        raise ValidationError(f"m must lie in [1, {L - 1}]")
    lv, nxt = schedule.levels[m - 1], schedule.levels[m]
    b, alpha_m, d = lv.b, lv.alpha, schedule.d
    M = nxt.N // b
    lo, hi = schedule.alpha_enclosure()
    gap_lo, gap_hi = lo - alpha_m, hi - alpha_m
    if gap_lo <= 0:
        raise CounterexampleError("alpha does not exceed alpha_m", n=0)
    if M < 1:
        return CollapseReport(m, 0, True, True, True, True)
    table = omega_range(1, b * M)
    collapsed = []
    for n in range(1, M + 1):
        v = b * n
        gv = g_poly(v, d)
        if not gap_hi * gv < 1:
            raise CounterexampleError(f"(alpha - alpha_m) g(b n) may reach 1 at n={n}", n=n)
        K = alpha_m * gv
        if K.denominator != 1:
            raise CounterexampleError(f"alpha_m g(b n) not integral at n={n}", n=n)
        K = K.numerator
        if K % (n * (v - 1)):
            raise CounterexampleError(f"n(bn-1) does not divide the floor at n={n}", n=n)
        if math.gcd(n, v - 1) != 1:
            raise CounterexampleError(f"gcd(n, bn-1) > 1 at n={n}", n=n)
        collapsed.append(K)
    wK = omega_values(np.array(collapsed, dtype=np.int64)) if max(collapsed) < 1 << 62 else \
        np.array([len(set(_pf(k))) for k in collapsed])
    ns = np.arange(1, M + 1)
    w_sum = table.omega[ns - 1].astype(np.int64) + table.omega[b * ns - 2]
    bad = np.flatnonzero(wK < w_sum)
    if bad.size:
        n = int(bad[0]) + 1
        raise CounterexampleError(f"omega superadditivity fails at n={n}", n=n)
    return CollapseReport(m, M, True, True, True, True)


def _pf(k):
    from .arith import prime_factors
    return prime_factors(k)


@dataclass
class AdversaryOutcome:
    m: int
    N: int
    loglog: float
    empirical_dK: float
    mass_shift: float
    gaussian_tail: float
    bound: float
    count_high: int
    count_high_on_multiples: int
    multiples: int


def adversary_experiment(schedule: AdversarySchedule, m: int) -> AdversaryOutcome:
    """omega(floor(alpha g(n))) over n <= N_{m+1} and the mass above 1.8 log log N."""
    L = len(schedule.levels)
    if not 1 <= m < L:
        raise ValidationError(f"m must lie in [1, {L - 1}]")
    b = schedule.levels[m - 1].b
    N = schedule.levels[m].N
    if N < 16:
        raise ValidationError(f"N_(m+1) = {N} too small to standardize")
    floors = _floors(schedule, range(1, N + 1))
    if any(f is None for f in floors):
        n = floors.index(None) + 1
        raise CounterexampleError(f"floor undecided by the alpha enclosure at n={n}", n=n)
    arr = np.array(floors, dtype=np.int64)
    w = np.zeros(N, dtype=np.int64)
    pos = arr >= 2
    w[pos] = omega_values(arr[pos])
    ll = _loglog(N)
    z = (w - ll) / math.sqrt(ll)
    high = z >= 0.8 * math.sqrt(ll)
    mass = float(np.mean(high))
    tail = 1.0 - gaussian_cdf(0.8 * math.sqrt(ll))
    mult = np.arange(b, N + 1, b)
    return AdversaryOutcome(
        m=m,
        N=N,
        loglog=ll,
        empirical_dK=empirical_dK(z),
        mass_shift=mass,
        gaussian_tail=tail,
        bound=abs(mass - tail),
        count_high=int(high.sum()),
        count_high_on_multiples=int(high[mult - 1].sum()),
        multiples=len(mult),
    )
