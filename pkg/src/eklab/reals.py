"""Certified real parameters and exact Beatty floors.

A ``CertifiedReal`` is one of three closed forms: an exact rational, a real
quadratic surd ``(p + q*sqrt(d)) / r``, or a finite decimal string whose
true value is only known to within one unit of its last digit.  Every
query goes through ``refine(k)``, which returns a rational enclosure of
width at most ``2**-k``.
"""

from __future__ import annotations

import math
import re
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import (
    AmbiguousFloorError,
    ArcAmbiguityError,
    ParseError,
    PrecisionError,
    ValidationError,
)

PRECISION_LADDER = (64, 128, 256, 512)
EXACT_BIT_CAP = 1 << 14


def _squarefree_split(d: int):
    """Write d = s*s*f with f squarefree; returns (s, f)."""
    s, f = 1, 1
    n = d
    p = 2
    while p * p <= n:
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        s *= p ** (e // 2)
        f *= p ** (e % 2)
        p += 1 if p == 2 else 2
    return s, f * n


class CertifiedReal:
    """A real number that can be enclosed to any requested precision."""

    __slots__ = ("kind", "_value", "_p", "_q", "_r", "_d", "_digits", "_lock", "_cache")

    def __init__(self, kind, *, value=None, p=0, q=0, r=1, d=1, digits=None):
        self.kind = kind
        self._value = value
        self._p, self._q, self._r, self._d = p, q, r, d
        self._digits = digits
        self._lock = threading.Lock()
        self._cache = {}

    # constructors ---------------------------------------------------
    @classmethod
    def rational(cls, a, b=1) -> "CertifiedReal":
        b = int(b) if not isinstance(b, Fraction) else b
        if b == 0:
            raise ValidationError("zero denominator")
        return cls("rational", value=Fraction(a) / Fraction(b))

    @classmethod
    def quadratic(cls, p: int, q: int, r: int, d: int) -> "CertifiedReal":
        """(p + q*sqrt(d)) / r; normalises to a rational when sqrt(d) is."""
        if r == 0:
            raise ValidationError("zero denominator")
        if d < 0:
            raise ValidationError(f"sqrt of negative number {d}")
        if r < 0:
            p, q, r = -p, -q, -r
        s, f = _squarefree_split(d) if d > 0 else (0, 1)
        q = q * s
        if f == 1 or q == 0:
            return cls.rational(Fraction(p + q * (1 if d > 0 else 0), r))
        g = math.gcd(math.gcd(p, q), r)
        return cls("quadratic", p=p // g, q=q // g, r=r // g, d=f)

    @classmethod
    def sqrt(cls, d: int) -> "CertifiedReal":
        return cls.quadratic(0, 1, 1, d)

    @classmethod
    def decimal(cls, text: str) -> "CertifiedReal":
        m = re.fullmatch(r"([+-]?)(\d+)(?:\.(\d*))?", text.strip())
        if not m:
            raise ParseError(f"malformed decimal {text!r}", token=text)
        sign, whole, frac = m.group(1), m.group(2), m.group(3) or ""
        value = Fraction(int(whole + frac), 10 ** len(frac))
        if sign == "-":
            value = -value
        return cls("decimal", value=value, digits=len(frac))

    # properties ------------------------------------------------------
    @property
    def is_exact(self) -> bool:
        return self.kind != "decimal"

    @property
    def exact_value(self) -> Optional[Fraction]:
        return self._value if self.kind == "rational" else None

    def surd_terms(self) -> Optional[dict]:
        """Exact coordinates {squarefree d: coefficient} over Q(sqrt(d)); None for decimals."""
        if self.kind == "rational":
            return {1: self._value} if self._value else {}
        if self.kind == "quadratic":
            out = {self._d: Fraction(self._q, self._r)}
            if self._p:
                out[1] = Fraction(self._p, self._r)
            return out
        return None

    def available_bits(self) -> Optional[int]:
        """Largest k for which ``refine(k)`` succeeds (None means unbounded)."""
        if self.kind != "decimal":
            return None
        # enclosure width is 2 * 10**-digits
        return max(0, math.floor(self._digits * math.log2(10)) - 1)

    # refinement ------------------------------------------------------
    def refine(self, k: int):
        """Rational enclosure (lo, hi) with hi - lo <= 2**-k."""
        if k < 0:
            raise ValidationError("precision must be non-negative")
        if self.kind == "rational":
            return self._value, self._value
        if self.kind == "decimal":
            half = Fraction(1, 10 ** self._digits)
            if 2 * half > Fraction(1, 1 << k):
                need = math.ceil((k + 1) / math.log2(10))
                raise PrecisionError(
                    f"decimal with {self._digits} digits cannot reach 2^-{k}; "
                    f"supply at least {need} fractional digits",
                    required_bits=k,
                )
            return self._value - half, self._value + half
        with self._lock:
            hit = self._cache.get(k)
            if hit is None:
                hit = self._quadratic_enclosure(k)
                self._cache[k] = hit
            return hit

    def _quadratic_enclosure(self, k: int):
        p, q, r, d = self._p, self._q, self._r, self._d
        # |q|*sqrt(d)*2^K lies in [s, s+1]; scaling by 1/(r 2^K) keeps width <= 2^-k
        K = k
        s = math.isqrt(q * q * d << (2 * K))
        scale = Fraction(1, r << K)
        if q > 0:
            lo_n, hi_n = s, s + 1
        else:
            lo_n, hi_n = -(s + 1), -s
        base = p << K
        return (base + lo_n) * scale, (base + hi_n) * scale

    def __neg__(self) -> "CertifiedReal":
        if self.kind == "quadratic":
            return CertifiedReal("quadratic", p=-self._p, q=-self._q, r=self._r, d=self._d)
        return CertifiedReal(self.kind, value=-self._value, digits=self._digits)

    def __float__(self):
        if self.kind == "rational":
            return float(self._value)
        lo, hi = self.refine(min(64, self.available_bits() or 64))
        return float((lo + hi) / 2)

    def __repr__(self):
        return f"CertifiedReal({self.to_text()!r})"

    def to_text(self) -> str:
        if self.kind == "rational":
            v = self._value
            return f"rational:{v.numerator}/{v.denominator}"
        if self.kind == "quadratic":
            sign = "+" if self._q >= 0 else "-"
            return f"quadratic:({self._p}{sign}{abs(self._q)}*sqrt:{self._d})/{self._r}"
        v = self._value
        neg = v < 0
        scaled = abs(v) * 10 ** self._digits
        whole, frac = divmod(int(scaled), 10 ** self._digits)
        body = f"{whole}.{frac:0{self._digits}d}" if self._digits else str(whole)
        return f"decimal:{'-' if neg else ''}{body}"


_INT = r"[+-]?\d+"


def parse_real(text: str) -> CertifiedReal:
    """Parse ``rational:a/b``, ``sqrt:d``, ``quadratic:(p+q*sqrt:d)/r`` or ``decimal:x``."""
    text = text.strip()
    kind, sep, body = text.partition(":")
    if not sep:
        raise ParseError(f"missing kind prefix in {text!r}", token=text)
    if kind == "rational":
        m = re.fullmatch(rf"({_INT})(?:/(\d+))?", body)
        if not m:
            raise ParseError(f"malformed rational {body!r}", token=body)
        den = int(m.group(2) or 1)
        if den == 0:
            raise ParseError("zero denominator", token=body)
        return CertifiedReal.rational(int(m.group(1)), den)
    if kind == "sqrt":
        if not re.fullmatch(r"\d+", body):
            raise ParseError(f"sqrt argument must be a non-negative integer, got {body!r}", token=body)
        return CertifiedReal.sqrt(int(body))
    if kind == "quadratic":
        m = re.fullmatch(rf"\(\s*({_INT})\s*([+-])\s*(\d+)\s*\*\s*sqrt:(\S+?)\s*\)(?:\s*/\s*(\S+))?", body)
        if not m:
            raise ParseError(f"malformed quadratic {body!r}", token=body)
        d_tok, r_tok = m.group(4), m.group(5) or "1"
        if not re.fullmatch(r"\d+", d_tok):
            raise ParseError(f"sqrt argument must be a non-negative integer, got {d_tok!r}", token=d_tok)
        if not re.fullmatch(r"[+-]?\d+", r_tok) or int(r_tok) == 0:
            raise ParseError(f"bad denominator {r_tok!r}", token=r_tok)
        q = int(m.group(3)) * (1 if m.group(2) == "+" else -1)
        return CertifiedReal.quadratic(int(m.group(1)), q, int(r_tok), int(d_tok))
    if kind == "decimal":
        return CertifiedReal.decimal(body)
    raise ParseError(f"unknown real kind {kind!r}", token=kind)


def as_real(x) -> CertifiedReal:
    if isinstance(x, CertifiedReal):
        return x
    if isinstance(x, str):
        return parse_real(x)
    if isinstance(x, (int, Fraction)):
        return CertifiedReal.rational(x)
    raise ValidationError(f"cannot interpret {x!r} as a certified real")


# exact sign decisions ------------------------------------------------------

def _combine_terms(pairs):
    out = {}
    for coeff, real in pairs:
        terms = real.surd_terms()
        if terms is None:
            return None
        for d, c in terms.items():
            out[d] = out.get(d, 0) + coeff * c
    return {d: c for d, c in out.items() if c}


def exact_linear_value(pairs, offset=Fraction(0)):
    """Exact sum of coeff*real (+ offset) as {d: coeff}, or None if any real is a decimal."""
    terms = _combine_terms(pairs)
    if terms is None:
        return None
    if offset:
        terms[1] = terms.get(1, 0) + Fraction(offset)
        if not terms[1]:
            del terms[1]
    return terms


def linear_enclosure(pairs, offset, k):
    lo = hi = Fraction(offset)
    for coeff, real in pairs:
        a, b = real.refine(k)
        if coeff >= 0:
            lo += coeff * a
            hi += coeff * b
        else:
            lo += coeff * b
            hi += coeff * a
    return lo, hi


def _ladder_for(pairs, ladder):
    caps = [r.available_bits() for _, r in pairs]
    caps = [c for c in caps if c is not None]
    if not caps:
        return list(ladder)
    cap = min(caps)
    steps = [k for k in ladder if k <= cap]
    if cap not in steps and (not steps or cap > steps[-1]):
        steps.append(cap)
    return steps


def certified_floor(pairs, offset=Fraction(0), ladder=PRECISION_LADDER) -> int:
    """Exact floor of sum(coeff*real) + offset."""
    steps = _ladder_for(pairs, ladder)
    candidate = None
    for k in steps:
        lo, hi = linear_enclosure(pairs, offset, k)
        f = math.floor(lo)
        if hi < f + 1:
            return f
        candidate = f + 1
    exact = exact_linear_value(pairs, offset)
    if exact is not None:
        if set(exact) <= {1}:
            return math.floor(exact.get(1, Fraction(0)))
        if len(set(exact) - {1}) == 1:
            return candidate if _surd_sign(exact, -candidate) >= 0 else candidate - 1
        # several independent surds: the value is irrational, so more bits always separate it
        k = steps[-1]
        while k < EXACT_BIT_CAP:
            k *= 2
            lo, hi = linear_enclosure(pairs, offset, k)
            f = math.floor(lo)
            if hi < f + 1:
                return f
    raise AmbiguousFloorError(
        f"enclosure still straddles {candidate} after {steps[-1] if steps else 0} bits",
        integer=candidate,
    )


def _surd_sign(terms, shift=0) -> int:
    """Sign of a + b*sqrt(d) where terms = {1: a, d: b} (plus integer shift)."""
    a = terms.get(1, Fraction(0)) + shift
    (d, b), = [(d, c) for d, c in terms.items() if d != 1]
    # compare a with -b sqrt(d)
    if a >= 0 and b >= 0:
        return 1 if (a or b) else 0
    if a <= 0 and b <= 0:
        return -1
    lhs, rhs = a * a, b * b * d
    if a > 0:
        return 1 if lhs > rhs else -1
    return 1 if rhs > lhs else -1


def _is_positive(x: CertifiedReal) -> bool:
    terms = x.surd_terms()
    if terms is None:
        return x.refine(x.available_bits())[0] > 0
    if not terms:
        return False
    if set(terms) <= {1}:
        return terms[1] > 0
    return _surd_sign(terms) > 0


# Beatty sequences -----------------------------------------------------------

@dataclass(frozen=True)
class BeattySpec:
    alpha: CertifiedReal
    beta: CertifiedReal

    def __post_init__(self):
        if not _is_positive(self.alpha):
            raise ValidationError(f"alpha must be > 0, got {self.alpha.to_text()}")

    @classmethod
    def parse(cls, alpha, beta="rational:0") -> "BeattySpec":
        return cls(as_real(alpha), as_real(beta))

    def to_text(self):
        return f"{self.alpha.to_text()},{self.beta.to_text()}"


def beatty_floor(spec: BeattySpec, n: int, ladder=PRECISION_LADDER) -> int:
    """Exact floor(alpha*n + beta)."""
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    return certified_floor([(Fraction(n), spec.alpha), (Fraction(1), spec.beta)], ladder=ladder)


def _float_model(real: CertifiedReal):
    """A double near ``real`` and a bound on its distance from it."""
    bits = real.available_bits()
    k = 64 if bits is None else min(64, bits)
    lo, hi = real.refine(k)
    mid = (lo + hi) / 2
    f = float(mid)
    err = abs(Fraction(f) - mid) + (hi - lo) / 2
    return f, float(err) * (1 + 2.0**-40) + 1e-300


def floor_linear_array(alpha: CertifiedReal, beta: CertifiedReal, ns, offset=Fraction(0),
                       ladder=PRECISION_LADDER) -> np.ndarray:
    """Vectorised exact floor(alpha*n + beta + offset) for an int array of n.

    Doubles give the floor directly wherever the computed value sits
    farther from an integer than a rigorous error bound; the few
    remaining n go through ``certified_floor``.
    """
    ns = np.asarray(ns, dtype=np.int64)
    if ns.size == 0:
        return ns.copy()
    if np.abs(ns).max() >= 1 << 50:
        raise ValidationError("n too large for the vectorised floor")
    if alpha.kind == "rational" and beta.kind == "rational":
        a = alpha.exact_value
        c = beta.exact_value + Fraction(offset)
        den = a.denominator * c.denominator // math.gcd(a.denominator, c.denominator)
        slope, shift = int(a * den), int(c * den)
        if abs(slope) * int(np.abs(ns).max()) + abs(shift) < 1 << 62:
            return (ns * slope + shift) // den
        return np.array([(int(n) * slope + shift) // den for n in ns.tolist()], dtype=np.int64)
    af, aerr = _float_model(alpha)
    bf, berr = _float_model(beta)
    off = float(offset)
    offerr = abs(float(Fraction(off) - Fraction(offset)))
    nf = ns.astype(np.float64)
    y = af * nf + bf + off
    mag = np.abs(af) * np.abs(nf) + abs(bf) + abs(off) + 1.0
    bound = aerr * np.abs(nf) + berr + offerr + mag * 2.0**-50
    fl = np.floor(y)
    safe = (y - fl > bound) & (fl + 1.0 - y > bound) & (np.abs(y) < 2.0**52)
    out = fl.astype(np.int64)
    for i in np.flatnonzero(~safe).tolist():
        n = int(ns[i])
        out[i] = certified_floor([(Fraction(n), alpha), (Fraction(1), beta)], Fraction(offset), ladder)
    return out


def beatty_floor_array(spec: BeattySpec, ns) -> np.ndarray:
    return floor_linear_array(spec.alpha, spec.beta, ns)


# rational approximation --------------------------------------------------

def _distance_enclosure(x: CertifiedReal, r: Fraction, k: int):
    lo, hi = x.refine(k)
    a, b = lo - r, hi - r
    if a >= 0:
        return a, b
    if b <= 0:
        return -b, -a
    return Fraction(0), max(-a, b)


def best_rational_of_height(x: CertifiedReal, h: int, ladder=PRECISION_LADDER) -> Fraction:
    """The rational of height <= h nearest x.

    Ties go to the smaller denominator, then the smaller |numerator|.
    """
    if h < 1:
        raise ValidationError(f"height must be >= 1, got {h}")
    x = as_real(x)
    cands = set()
    k0 = min(64, x.available_bits() if x.available_bits() is not None else 64)
    lo, hi = x.refine(k0)
    for b in range(1, h + 1):
        for a in (math.floor(lo * b), math.ceil(hi * b), math.floor(hi * b), math.ceil(lo * b)):
            a = max(-h, min(h, a))
            if math.gcd(a, b) == 1:
                cands.add(Fraction(a, b))
    if 0 not in cands:
        cands.add(Fraction(0))

    def key(r):
        return (r.denominator, abs(r.numerator))

    exact = x.exact_value
    if exact is not None:
        return min(cands, key=lambda r: (abs(exact - r), key(r)))
    steps = _ladder_for([(1, x)], ladder)
    if x.is_exact:
        # irrational: distinct rationals are never equidistant, so enough bits always decide
        while steps[-1] < EXACT_BIT_CAP:
            steps.append(steps[-1] * 2)
    for k in steps:
        enc = {r: _distance_enclosure(x, r, k) for r in cands}
        best_hi = min(v[1] for v in enc.values())
        contenders = [r for r, v in enc.items() if v[0] <= best_hi]
        if len(contenders) == 1:
            return contenders[0]
        cands = set(contenders)
    raise PrecisionError(f"cannot certify nearest rational of height {h} to {x.to_text()}")


def continued_fraction_convergents(x: CertifiedReal, count: int, ladder=PRECISION_LADDER) -> list:
    """First ``count`` continued-fraction convergents of x (fewer if x is rational)."""
    if count < 1:
        raise ValidationError("count must be >= 1")
    x = as_real(x)
    exact = x.exact_value
    if exact is not None:
        terms = []
        v = exact
        while len(terms) < count:
            a = math.floor(v)
            terms.append(a)
            frac = v - a
            if frac == 0:
                break
            v = 1 / frac
        return _convergents(terms)
    steps = list(_ladder_for([(1, x)], ladder))
    if x.is_exact:
        steps += [steps[-1] * 2 ** i for i in range(1, 8)]
    best_terms = []
    for k in steps:
        lo, hi = x.refine(k)
        terms = []
        while len(terms) < count:
            a, b = math.floor(lo), math.floor(hi)
            if a != b or lo == a or hi == b:
                break
            terms.append(a)
            lo, hi = 1 / (hi - a), 1 / (lo - a)
        if len(terms) >= count:
            return _convergents(terms[:count])
        best_terms = terms
    raise PrecisionError(
        f"only {len(best_terms)} continued-fraction terms of {x.to_text()} are certifiable",
    )


def _convergents(terms):
    out = []
    p0, q0, p1, q1 = 1, 0, terms[0], 1
    out.append(Fraction(p1, q1))
    for a in terms[1:]:
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        out.append(Fraction(p1, q1))
    return out


# major / minor arcs ------------------------------------------------------

@dataclass(frozen=True)
class Major:
    a: int
    b: int


@dataclass(frozen=True)
class Minor:
    pass


def _within_arc(x: CertifiedReal, r: Fraction, N: int, ladder) -> bool:
    # |x - r| <= N^(-1/3)  <=>  N * |x - r|^3 <= 1
    exact = x.exact_value
    if exact is not None:
        return N * abs(exact - r) ** 3 <= 1
    for k in _ladder_for([(1, x)], ladder):
        lo, hi = _distance_enclosure(x, r, k)
        if N * hi ** 3 <= 1:
            return True
        if N * lo ** 3 > 1:
            return False
    raise PrecisionError(f"cannot decide arc membership of {x.to_text()} near {r}")


def classify_arc(x: CertifiedReal, T: int, N: int, ladder=PRECISION_LADDER):
    """``Major(a, b)`` if x is within N**(-1/3) of a reduced a/b with b <= T, else ``Minor()``."""
    if T < 1 or N < 8:
        raise ValidationError("classify_arc needs T >= 1 and N >= 8")
    x = as_real(x)
    k0 = min(64, x.available_bits() if x.available_bits() is not None else 64)
    lo, hi = x.refine(k0)
    hits = set()
    for b in range(1, T + 1):
        for a in {math.floor(lo * b), math.ceil(hi * b), math.floor(hi * b), math.ceil(lo * b)}:
            r = Fraction(a, b)
            if r.denominator == b and _within_arc(x, r, N, ladder):
                hits.add(r)
    if len(hits) > 1:
        raise ArcAmbiguityError(f"{sorted(hits)} are all within N^(-1/3) of {x.to_text()}; N too small")
    if hits:
        r = hits.pop()
        return Major(r.numerator, r.denominator)
    return Minor()
