"""Exact linear algebra over Q and the rational surrogate vector gamma.

Given reals alpha_1..alpha_k, ``find_near_relations`` enumerates integer
relations (m_1, ..., m_k, m) with sum(alpha_i m_i) + m certified small,
and ``gamma_vector`` picks rationals gamma_i near alpha_i that satisfy
every such relation exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .arith import prime_factors, sieve_primes
from .errors import (
    BudgetError,
    DegenerateRelationsError,
    PrecisionError,
    RankDeficiencyError,
    ValidationError,
)
from .reals import (
    PRECISION_LADDER,
    CertifiedReal,
    _ladder_for,
    as_real,
    exact_linear_value,
    linear_enclosure,
)

DEFAULT_BUDGET = 10**8


class RationalMatrix:
    """Dense matrix of Fractions (always in lowest terms)."""

    def __init__(self, rows):
        rows = [[Fraction(x) for x in row] for row in rows]
        widths = {len(r) for r in rows}
        if len(widths) > 1:
            raise ValidationError("ragged matrix")
        self.entries = rows
        self.rows = len(rows)
        self.cols = widths.pop() if widths else 0

    def __matmul__(self, v):
        return [sum((a * Fraction(b) for a, b in zip(row, v)), Fraction(0)) for row in self.entries]

    def __repr__(self):
        return f"RationalMatrix({[[str(x) for x in r] for r in self.entries]})"


def _as_matrix(M) -> RationalMatrix:
    return M if isinstance(M, RationalMatrix) else RationalMatrix(M)


def rref(M):
    """Reduced row echelon form; returns (rows, pivot columns)."""
    A = [list(r) for r in _as_matrix(M).entries]
    ncols = len(A[0]) if A else 0
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(A)) if A[i][c] != 0), None)
        if pivot is None:
            continue
        A[r], A[pivot] = A[pivot], A[r]
        inv = 1 / A[r][c]
        A[r] = [x * inv for x in A[r]]
        for i in range(len(A)):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == len(A):
            break
    return A[:r], pivots


def rank(M) -> int:
    return len(rref(M)[1])


def _primitive(v):
    den = 1
    for x in v:
        den = den * x.denominator // math.gcd(den, x.denominator)
    ints = [int(x * den) for x in v]
    g = 0
    for x in ints:
        g = math.gcd(g, x)
    ints = [x // g for x in ints] if g else ints
    lead = next((x for x in ints if x), 0)
    if lead < 0:
        ints = [-x for x in ints]
    return [Fraction(x) for x in ints]


def kernel_basis(M) -> list:
    """Integer basis of the nullspace, each vector primitive with a positive leading entry."""
    M = _as_matrix(M)
    if M.rows == 0:
        raise ValidationError("kernel of a matrix with no rows needs an explicit column count")
    R, pivots = rref(M)
    free = [c for c in range(M.cols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * M.cols
        v[f] = Fraction(1)
        for row, pc in zip(R, pivots):
            v[pc] = -row[f]
        basis.append(_primitive(v))
    return basis


def solve(A, b):
    """Exact solution of a square nonsingular system."""
    n = len(A)
    aug = [list(map(Fraction, row)) + [Fraction(x)] for row, x in zip(A, b)]
    R, pivots = rref(aug)
    if pivots[:n] != list(range(n)) or len(pivots) > n:
        raise RankDeficiencyError("singular system")
    return [R[i][n] for i in range(n)]


def dual_basis(vectors) -> list:
    """Vectors v'_i in span(vectors) with <v'_i, v_j> = delta_ij."""
    V = [[Fraction(x) for x in v] for v in vectors]
    if not V:
        return []
    r = len(V)
    if rank(V) < r:
        raise RankDeficiencyError("input vectors are linearly dependent")
    gram = [[sum((a * b for a, b in zip(vi, vj)), Fraction(0)) for vj in V] for vi in V]
    out = []
    for i in range(r):
        e = [Fraction(int(i == j)) for j in range(r)]
        coeff = solve(gram, e)
        out.append([sum((c * V[j][t] for j, c in enumerate(coeff)), Fraction(0)) for t in range(len(V[0]))])
    return out


# relations ---------------------------------------------------------------

@dataclass
class RelationSet:
    k: int
    tuples: list
    height_bound: int
    tolerance: Fraction
    support: tuple = (1,)

    def to_json(self):
        return {
            "k": self.k,
            "height_bound": self.height_bound,
            "tolerance": str(self.tolerance),
            "support": list(self.support),
            "tuples": [[str(x) for x in t] for t in self.tuples],
        }

    @classmethod
    def from_json(cls, doc):
        return cls(
            k=doc["k"],
            tuples=[tuple(Fraction(x) for x in t) for t in doc["tuples"]],
            height_bound=doc["height_bound"],
            tolerance=Fraction(doc["tolerance"]),
            support=tuple(doc.get("support", (1,))),
        )


def coefficient_grid(J: int, support) -> list:
    """All rationals a/p of height <= J with p in ``support`` (1 meaning integers)."""
    out = set()
    for p in support:
        p = int(p)
        if p < 1:
            raise ValidationError(f"support entries must be positive, got {p}")
        # p^-1 Z contains the integers, so multiples of p reach height J as well
        for a in range(-J * p, J * p + 1):
            r = Fraction(a, p)
            if max(abs(r.numerator), r.denominator) <= J:
                out.add(r)
    out.add(Fraction(0))
    return sorted(out)


def _certify(alphas, ms, tol, ladder):
    """Integers m with |sum alpha_i m_i + m| <= tol, certified."""
    pairs = [(mi, a) for mi, a in zip(ms, alphas) if mi]
    exact = exact_linear_value(pairs)
    if exact is not None and set(exact) <= {1}:
        s = exact.get(1, Fraction(0))
        return [m for m in range(math.floor(-s - tol), math.ceil(-s + tol) + 1) if abs(s + m) <= tol]
    found = None
    for k in _ladder_for(pairs, ladder) if pairs else [0]:
        lo, hi = linear_enclosure(pairs, Fraction(0), k)
        out, undecided = [], False
        for m in range(math.floor(-hi - tol), math.ceil(-lo + tol) + 1):
            # |S + m| <= tol with S in [lo, hi]
            inner_lo, inner_hi = lo + m, hi + m
            if max(abs(inner_lo), abs(inner_hi)) <= tol:
                out.append(m)
            elif inner_lo > tol or inner_hi < -tol:
                continue
            else:
                undecided = True
        if not undecided:
            return out
        found = out
    if exact is not None and tol == 0:
        return []  # irrational combination is never an integer
    raise PrecisionError(f"cannot certify relation {ms} at tolerance {tol}; partial {found}")


def find_near_relations(alphas, J: int, tolerance, denom_support=(1,), budget=DEFAULT_BUDGET,
                        ladder=PRECISION_LADDER) -> RelationSet:
    """Exhaustive (m_1..m_k, m) with m_i on the support grid of height <= J and
    |sum alpha_i m_i + m| <= tolerance, each certified by interval arithmetic."""
    if J < 1:
        raise ValidationError("J must be >= 1")
    tol = Fraction(tolerance)
    if tol < 0:
        raise ValidationError("tolerance must be non-negative")
    alphas = [as_real(a) for a in alphas]
    k = len(alphas)
    grid = coefficient_grid(J, denom_support)
    count = len(grid) ** k
    if count > budget:
        raise BudgetError(f"{count} candidate tuples exceed budget {budget}", count=count)
    # double-precision prefilter with a rigorous slack; survivors are certified exactly
    af = np.array([float(a) for a in alphas])
    gf = np.array([float(g) for g in grid])
    gmax = float(max(abs(g) for g in grid))
    slack = 1e-9 * (1 + k * gmax * (1 + np.abs(af).max())) + float(tol) * 1e-12
    tuples = []
    for idx in _index_chunks(len(grid), k):
        s = (gf[idx] * af).sum(axis=1)
        dist = np.abs(s - np.round(s))
        keep = np.flatnonzero(dist <= float(tol) + slack)
        for row in idx[keep]:
            ms = [grid[j] for j in row]
            for m in _certify(alphas, ms, tol, ladder):
                tuples.append(tuple(ms) + (Fraction(m),))
    return RelationSet(k=k, tuples=tuples, height_bound=J, tolerance=tol, support=tuple(int(p) for p in denom_support))


def _index_chunks(n, k, chunk=1 << 18):
    total = n ** k
    for start in range(0, total, chunk):
        flat = np.arange(start, min(total, start + chunk), dtype=np.int64)
        cols = []
        for _ in range(k):
            cols.append(flat % n)
            flat = flat // n
        yield np.stack(cols[::-1], axis=1) if k else np.zeros((len(flat), 0), dtype=np.int64)


# gamma ---------------------------------------------------------------------

@dataclass
class GammaVector:
    gammas: list
    provenance: RelationSet = field(repr=False)
    basis_rows: list = field(default_factory=list, repr=False)

    def check_exact(self) -> bool:
        for t in self.provenance.tuples:
            *ms, m = t
            if sum((g * mi for g, mi in zip(self.gammas, ms)), Fraction(0)) + m != 0:
                return False
        return True


def greedy_basis(rows):
    """Independent subset of ``rows`` chosen greedily in input order."""
    chosen = []
    for r in rows:
        if rank(chosen + [list(r)]) > len(chosen):
            chosen.append(list(r))
    return chosen


def gamma_vector(relations: RelationSet, alphas, grid_height: int, precision: int = 64) -> GammaVector:
    """Rationals gamma_i near alpha_i with sum gamma_i m_i + m = 0 for every relation.

    The relation span is cut down to a greedy basis M; u = (alpha, 1) is
    projected onto ker M, the projection coefficients are rounded to the
    grid 1/grid_height, and the result is rescaled so its last coordinate is 1.
    """
    if grid_height < 1:
        raise ValidationError("grid_height must be >= 1")
    alphas = [as_real(a) for a in alphas]
    k = len(alphas)
    if relations.k != k:
        raise ValidationError("relation arity does not match alphas")
    rows = [list(t) for t in relations.tuples if any(t)]
    basis = greedy_basis(rows)
    if basis:
        ker = kernel_basis(basis)
    else:
        ker = [[Fraction(int(i == j)) for j in range(k + 1)] for i in range(k + 1)]
    if not ker or all(v[k] == 0 for v in ker):
        raise DegenerateRelationsError("relations force the last coordinate of every kernel vector to 0")
    u = []
    for a in alphas:
        bits = a.available_bits()
        lo, hi = a.refine(precision if bits is None else min(precision, bits))
        u.append((lo + hi) / 2)
    u.append(Fraction(1))
    gram = [[sum((x * y for x, y in zip(vi, vj)), Fraction(0)) for vj in ker] for vi in ker]
    rhs = [sum((x * y for x, y in zip(vi, u)), Fraction(0)) for vi in ker]
    coeff = solve(gram, rhs)
    rounded = [Fraction(round(c * grid_height), grid_height) for c in coeff]
    u1 = [sum((c * v[t] for c, v in zip(rounded, ker)), Fraction(0)) for t in range(k + 1)]
    if u1[k] == 0:
        # rounding killed the normalising coordinate; fall back to the unrounded projection
        u1 = [sum((c * v[t] for c, v in zip(coeff, ker)), Fraction(0)) for t in range(k + 1)]
        if u1[k] == 0:
            raise DegenerateRelationsError("projection of (alpha, 1) has zero last coordinate")
    gammas = [x / u1[k] for x in u1[:k]]
    gv = GammaVector(gammas=gammas, provenance=relations, basis_rows=basis)
    if not gv.check_exact():
        raise DegenerateRelationsError("gamma fails exact re-substitution")
    return gv


def bad_prime_set(gamma, N: float) -> list:
    """Primes dividing any gamma numerator or denominator, plus all primes <= log N."""
    gammas = gamma.gammas if isinstance(gamma, GammaVector) else list(gamma)
    bad = set()
    for g in gammas:
        g = Fraction(g)
        if g == 0:
            raise ValidationError("gamma entries must be nonzero")
        bad.update(prime_factors(g.numerator))
        bad.update(prime_factors(g.denominator))
    logn = math.log(N)
    if logn >= 2:
        bad.update(sieve_primes(int(math.floor(logn))).tolist())
    return sorted(bad)


def coprime_to(p: int, x: Fraction) -> bool:
    """Membership of x in the ring of rationals whose reduced denominator avoids p."""
    return Fraction(x).denominator % p != 0
