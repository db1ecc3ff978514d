import json
import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kextract.params import (
    BoundsInput,
    Params,
    advice_lower_bound,
    chernoff_upper_tail,
    existence_log_bound,
    theorem4_params,
    validate,
)


def names(report):
    return [v.constraint for v in report]


def test_validate_micro_is_clean():
    assert validate(Params(n=3, n1=2, m=2, k=1, d=2, delta=1)) == []


def test_validate_color_density_over_palette():
    assert "D <= M" in names(validate(Params(n=3, n1=2, m=2, k=1, d=3, delta=1)))


def test_validate_k_exceeds_n():
    report = validate(Params(n=3, n1=2, m=2, k=4, d=1, delta=1))
    assert "K <= N" in names(report)
    assert report[0].values == {"K": 16, "N": 8}


def test_validate_fractional_d_and_small_delta():
    assert "d is an integer" in names(validate(Params(3, 2, 2, 1, 1.5, 1)))
    assert "Delta >= 1" in names(validate(Params(3, 2, 2, 1, 1, -0.5)))
    assert "m < n" in names(validate(Params(2, 2, 2, 1, 1, 1)))


def test_fractional_delta_rounds_up_to_dyadic():
    p = Params(3, 2, 2, 1, 2, 1.5)
    scaled = p.Delta * 2**32
    assert scaled.denominator == 1
    exact = mpmath.power(2, mpmath.mpf(1.5) + 32)
    assert 0 <= int(scaled) - exact < 1
    assert Params(3, 2, 2, 1, 2, 3).Delta == 8


def test_chernoff_vacuous_cases():
    assert chernoff_upper_tail(1, 3) == 1.0
    assert chernoff_upper_tail(0, 10) == 1.0
    assert chernoff_upper_tail(4, 2) == 1.0


def test_chernoff_value_against_mpmath():
    mpmath.mp.dps = 40
    oracle = mpmath.exp(-6 * mpmath.log(mpmath.mpf(6) / 3) * 5)
    assert chernoff_upper_tail(5, 6) == pytest.approx(float(oracle), rel=1e-12)
    assert chernoff_upper_tail(5, 6) == pytest.approx(9.313225746154785e-10, rel=1e-12)


def test_chernoff_domain():
    with pytest.raises(ValueError):
        chernoff_upper_tail(-1, 4)


@given(st.floats(0, 50), st.floats(1, 100))
def test_chernoff_is_a_probability(mu, t):
    assert 0.0 <= chernoff_upper_tail(mu, t) <= 1.0


@given(st.floats(0.01, 20), st.floats(0.01, 5), st.floats(3.01, 100))
def test_chernoff_decreasing_in_mu(mu, step, t):
    assert chernoff_upper_tail(mu + step, t) < chernoff_upper_tail(mu, t) or chernoff_upper_tail(mu, t) == 0.0


def test_existence_bound_delta_four_never_certifies():
    p = Params(n=6, n1=8, m=3, k=2, d=1, delta=2)
    bound = existence_log_bound(p)
    expected = 4 * math.log(64) + 4 * (1 + math.log(2))
    assert bound.value == pytest.approx(expected, abs=1e-12)
    assert not bound.meaningful


def test_existence_bound_delta_two_is_flagged_vacuous():
    bound = existence_log_bound(Params(n=6, n1=8, m=3, k=2, d=1, delta=1))
    assert not bound.meaningful
    assert bound.value > 0


def test_existence_bound_reference_value():
    mpmath.mp.dps = 50
    N, N1, M, K, D, Dl = map(mpmath.mpf, (64, 256, 8, 4, 2, 16))
    oracle = mpmath.log(N**K) + (M / D) * (1 + mpmath.log(D)) - (Dl - 1) * mpmath.log((Dl - 1) / 3) * K * N1 / D
    bound = existence_log_bound(Params(n=6, n1=8, m=3, k=2, d=1, delta=4))
    assert abs(bound.value - float(oracle)) < 1e-9
    assert bound.value == pytest.approx(-12337.075046438212, abs=1e-9)
    assert bound.meaningful and bound.certifies


def test_existence_bound_rejects_delta_one():
    with pytest.raises(ValueError):
        existence_log_bound(Params(3, 2, 2, 1, 2, 0))


@settings(max_examples=200)
@given(
    n=st.integers(2, 12),
    n1=st.integers(0, 12),
    k=st.integers(0, 4),
    d=st.integers(0, 3),
    delta=st.floats(math.log2(3 * math.e + 1) + 0.01, 10),
)
def test_existence_bound_monotone(n, n1, k, d, delta):
    p = Params(n=n, n1=n1, m=max(d, 1), k=min(k, n), d=d, delta=delta)
    base = existence_log_bound(p).value
    assert existence_log_bound(p.with_(n1=n1 + 1)).value < base
    assert existence_log_bound(p.with_(delta=delta + 0.25)).value < base


def test_advice_bound_examples():
    res = advice_lower_bound(BoundsInput(Fraction(1, 2), 1, 1024, 512))
    assert res.main_term == Fraction(1, 6)
    assert res.correction == pytest.approx(11 / 512)
    res = advice_lower_bound(BoundsInput(0.99, 0, 2**20, 2**19))
    assert res.main_term == Fraction(1, 100)
    assert res.correction == 20 / 2**19


def test_advice_bound_vanishes_as_sigma_approaches_one():
    terms = [advice_lower_bound(BoundsInput(1 - 10.0**-j, 2, 100, 50)).main_term for j in range(1, 8)]
    assert all(a > b for a, b in zip(terms, terms[1:]))
    assert terms[-1] < 1e-7


@given(st.fractions(min_value=Fraction(1, 1000), max_value=Fraction(999, 1000)), st.integers(0, 40))
def test_advice_main_term_ratio(sigma, h):
    a = advice_lower_bound(BoundsInput(sigma, h, 1000, 10)).main_term
    b = advice_lower_bound(BoundsInput(sigma, h + 1, 1000, 10)).main_term
    H, H1 = 2 ** (h + 1) - 1, 2 ** (h + 2) - 1
    assert b / a == Fraction(H, H1)
    # (2^(h+1) - 1) / (2^(h+2) - 1) sits just under one half
    assert Fraction(1, 3) <= b / a < Fraction(1, 2)


def test_bounds_input_rejects_bad_sigma():
    with pytest.raises(ValueError):
        BoundsInput(1.0, 1, 10, 5)


def test_advice_regime_examples():
    p = theorem4_params(16, 8, m=4, c=1)
    assert (p.delta, p.d, p.n1, p.k) == (1, 2, 8, 4)
    p = theorem4_params(64, 12, m=8, c=1)
    assert (p.delta, p.d, p.n1) == (1, 2, 12)


def test_zero_advice_regime_is_flagged():
    p = theorem4_params(16, 0, m=4, c=1)
    assert (p.delta, p.d) == (16, 17)
    assert "D <= M" in names(validate(p))


@given(st.integers(0, 6), st.integers(1, 20), st.data())
def test_advice_regime_params_are_valid(half_h, mult, data):
    h = 2 * half_h
    n = mult * 2**half_h
    d = n // 2**half_h + 1
    if d >= n:
        return
    m = data.draw(st.integers(d, n - 1))
    assert validate(theorem4_params(n, h, m=m, c=1)) == []


def test_params_json_roundtrip(tmp_path):
    p = Params(5, 3, 2, 1, 1, 2.5, c_lemma1=2)
    path = tmp_path / "p.json"
    path.write_text(json.dumps(p.to_json()))
    assert Params.load(path) == p
