import math
import random
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eklab.errors import AmbiguousFloorError, ArcAmbiguityError, ParseError, PrecisionError, ValidationError
from eklab.reals import (
    BeattySpec,
    CertifiedReal,
    Major,
    Minor,
    beatty_floor,
    beatty_floor_array,
    best_rational_of_height,
    classify_arc,
    continued_fraction_convergents,
    floor_linear_array,
    parse_real,
)

from oracles import brute_best_rational

mpmath.mp.prec = 256
PI50 = "decimal:3.14159265358979323846264338327950288419716939937511"


def test_refine_rational():
    lo, hi = CertifiedReal.rational(22, 7).refine(40)
    assert lo == hi == Fraction(22, 7)


def test_refine_sqrt2_width_and_containment():
    lo, hi = CertifiedReal.sqrt(2).refine(20)
    assert hi - lo <= Fraction(1, 2**20)
    # integer square-root oracle: lo^2 <= 2 <= hi^2
    assert lo * lo <= 2 <= hi * hi


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 10**6), st.integers(0, 300))
def test_refine_nested(d, k):
    x = CertifiedReal.sqrt(d)
    a = x.refine(k)
    b = x.refine(k + 7)
    assert a[0] <= b[0] <= b[1] <= a[1]
    assert b[1] - b[0] <= Fraction(1, 2 ** (k + 7))


def test_decimal_exhausted():
    with pytest.raises(PrecisionError) as e:
        parse_real("decimal:3.14").refine(30)
    assert e.value.required_bits == 30


def test_quadratic_square_normalises():
    x = parse_real("quadratic:(1+2*sqrt:4)/5")
    assert x.kind == "rational" and x.exact_value == 1


@pytest.mark.parametrize("text,token", [("sqrt:-1", "-1"), ("rational:1/0", None), ("foo:3", "foo"), ("decimal:1.2.3", None)])
def test_parse_errors(text, token):
    with pytest.raises((ParseError, ValidationError)) as e:
        parse_real(text)
    if token is not None:
        assert isinstance(e.value, ParseError) and token in str(e.value.token)


def test_text_roundtrip():
    for t in ["rational:22/7", "sqrt:2", "quadratic:(1+2*sqrt:3)/5", "quadratic:(1-2*sqrt:3)/5", PI50]:
        x = parse_real(t)
        y = parse_real(x.to_text())
        assert x.refine(100) == y.refine(100) if x.kind != "decimal" else x.to_text() == y.to_text()


def test_beatty_examples():
    assert beatty_floor(BeattySpec.parse("rational:1/2"), 7) == 3
    assert beatty_floor(BeattySpec.parse("sqrt:2"), 10) == 14
    assert beatty_floor(BeattySpec.parse("sqrt:2", PI50), 1) == 4


def test_alpha_positive():
    with pytest.raises(ValidationError):
        BeattySpec.parse("rational:0")
    with pytest.raises(ValidationError):
        BeattySpec.parse("quadratic:(1-1*sqrt:2)/1")
    BeattySpec.parse("rational:1/10000")
    BeattySpec.parse("decimal:0.00010")
    # written to 4 digits, 0.0001 may be 0
    with pytest.raises(ValidationError):
        BeattySpec.parse("decimal:0.0001")


def test_decimal_integer_is_ambiguous():
    spec = BeattySpec.parse("decimal:0.5")
    with pytest.raises(AmbiguousFloorError) as e:
        beatty_floor(spec, 2)
    assert e.value.integer == 1


def test_exact_integrality_quadratic():
    # (sqrt2 * n) + (2 - sqrt2) at n = 1 is exactly 2
    spec = BeattySpec(CertifiedReal.sqrt(2), CertifiedReal.quadratic(2, -1, 1, 2))
    assert beatty_floor(spec, 1) == 2


def test_rational_floor_integer_division():
    spec = BeattySpec.parse("rational:7/3")
    ns = np.arange(1, 100001)
    assert np.array_equal(beatty_floor_array(spec, ns), (7 * ns) // 3)


def test_array_matches_scalar_and_monotone():
    spec = BeattySpec.parse("sqrt:3", "rational:-1/3")
    ns = np.arange(1, 3000)
    arr = beatty_floor_array(spec, ns)
    assert [beatty_floor(spec, int(n)) for n in ns[:300]] == arr[:300].tolist()
    assert np.all(np.diff(arr) >= 0)


def test_floor_oracle_256bit():
    rng = random.Random(5)
    spec = BeattySpec.parse("sqrt:2", PI50)
    ns = np.array([rng.randint(1, 10**9) for _ in range(500)])
    got = beatty_floor_array(spec, ns)
    pi = mpmath.mpf("3.14159265358979323846264338327950288419716939937511")
    want = [int(mpmath.floor(mpmath.sqrt(2) * int(n) + pi)) for n in ns]
    assert got.tolist() == want


def test_floor_offset_negative_alpha():
    a = CertifiedReal.sqrt(5)
    ns = np.arange(-500, 500)
    got = floor_linear_array(-a, CertifiedReal.rational(1, 3), ns, offset=Fraction(-1, 10))
    want = [int(mpmath.floor(-mpmath.sqrt(5) * int(n) + mpmath.mpf(1) / 3 - mpmath.mpf(1) / 10)) for n in ns]
    assert got.tolist() == want


def test_best_rational_examples():
    assert best_rational_of_height(CertifiedReal.rational(1, 3), 10) == Fraction(1, 3)
    # height max(|a|, b) <= h: 7/5 and 22/7 are not admissible at h = 5 and h = 10
    assert best_rational_of_height(CertifiedReal.sqrt(2), 5) == Fraction(4, 3)
    assert best_rational_of_height(parse_real(PI50), 10) == Fraction(3)
    assert best_rational_of_height(parse_real(PI50), 22) == Fraction(22, 7)


def test_best_rational_brute_force():
    rng = random.Random(11)
    for _ in range(100):
        h = rng.randint(1, 50)
        x = Fraction(rng.randint(-3000, 3000), rng.randint(1, 997))
        got = best_rational_of_height(CertifiedReal.rational(x), h)
        assert got == brute_best_rational(x, h, lambda r: abs(r - x))
    for d in (2, 3, 5, 7, 11):
        for h in (5, 17, 40):
            got = best_rational_of_height(CertifiedReal.sqrt(d), h)
            s = mpmath.sqrt(d)
            assert got == brute_best_rational(None, h, lambda r: abs(mpmath.mpf(r.numerator) / r.denominator - s))


def test_convergents():
    assert continued_fraction_convergents(CertifiedReal.sqrt(2), 4) == [1, Fraction(3, 2), Fraction(7, 5), Fraction(17, 12)]
    assert continued_fraction_convergents(CertifiedReal.rational(22, 7), 3) == [3, Fraction(22, 7)]
    assert continued_fraction_convergents(parse_real("decimal:1.6180339887"), 3) == [1, 2, Fraction(3, 2)]


def test_convergent_quality():
    x = CertifiedReal.sqrt(7)
    s = mpmath.sqrt(7)
    cs = continued_fraction_convergents(x, 12)
    signs = []
    for c in cs:
        diff = mpmath.mpf(c.numerator) / c.denominator - s
        assert abs(diff) < mpmath.mpf(1) / c.denominator**2
        signs.append(diff > 0)
    assert all(a != b for a, b in zip(signs, signs[1:]))


def test_classify_arc():
    x = CertifiedReal.rational(Fraction(1, 3) + Fraction(1, 10**7))
    assert classify_arc(x, 10, 10**6) == Major(1, 3)
    assert classify_arc(CertifiedReal.sqrt(2), 10, 10**6) == Minor()
    assert classify_arc(CertifiedReal.rational(22, 7), 10, 10**6) == Major(22, 7)
    with pytest.raises(ArcAmbiguityError):
        classify_arc(CertifiedReal.rational(1, 2), 10, 8)


def test_arc_matches_brute_force():
    rng = random.Random(3)
    N, T = 10**6, 10
    radius = mpmath.mpf(N) ** (-mpmath.mpf(1) / 3)
    for _ in range(60):
        v = Fraction(rng.randint(1, 10**6), 10**5)
        near = {Fraction(a, b) for b in range(1, T + 1) for a in range(int(v * b) - 1, int(v * b) + 3)
                if abs(mpmath.mpf(a) / b - mpmath.mpf(v.numerator) / v.denominator) <= radius}
        try:
            arc = classify_arc(CertifiedReal.rational(v), T, N)
        except ArcAmbiguityError:
            assert len(near) > 1
            continue
        if isinstance(arc, Major):
            assert near == {Fraction(arc.a, arc.b)}
        else:
            assert not near
