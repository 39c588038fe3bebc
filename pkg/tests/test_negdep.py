from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from qmcdep.errors import BaseMismatch, DomainError
from qmcdep.negdep import (
    INFINITY,
    KVector,
    c_value,
    cqe_check,
    criterion,
    default_norm_bound,
    enumerate_k_family,
    gamma,
    gamma_columns,
    m_count,
    net_closed_form,
    projection_profile,
    projections,
)
from qmcdep.numth import DigitVector
from qmcdep.sequences import PointSet, faure_set, halton_set, to_reals


def _dv(x, b=2, K=53):
    return DigitVector.from_int(int(Fraction(x) * b**K), b, K)


def _pointset(xs):
    xs = np.asarray(xs, dtype=np.float64)
    digits = np.array([[int(Fraction(float(v)) * 2**53) for v in row] for row in xs], dtype=np.uint64)
    return PointSet(digits, (2,) * xs.shape[1], (53,) * xs.shape[1])


FOUR = _pointset([(0, 0), (0.5, 0.5), (0.25, 0.75), (0.75, 0.25)])


def test_gamma_examples():
    assert gamma(_dv(0.3), _dv(0.3)) is INFINITY
    assert gamma(_dv(0.25), _dv(0.30)) == 4
    assert gamma(_dv(0.0), _dv(0.5)) == 0
    with pytest.raises(BaseMismatch):
        gamma(_dv(0.25), _dv(0.25, 3, 34))


def test_gamma_columns_matches_scalar():
    P = halton_set(60, 2)
    col = P.column(1)
    got = gamma_columns(col[:, None], col[None, :], 3, P.ndigits[1])
    for i in range(0, 60, 7):
        for j in range(60):
            g = gamma(P.digit_vector(i, 1), P.digit_vector(j, 1))
            assert got[i, j] == (P.ndigits[1] if g is INFINITY else g)


def test_m_count_examples():
    assert m_count(FOUR, (1, 1)) == 0
    assert c_value(FOUR, (1, 1)) == 0.0
    assert m_count(FOUR, (0, 0)) == 12
    assert c_value(FOUR, (0, 0)) == 1.0
    same = _pointset([(0.3, 0.6)] * 5)
    assert m_count(same, (7, 9)) == 20
    assert c_value(same, (2, 1)) == 2**3


def test_net_closed_form_examples():
    assert net_closed_form(5, 3, 0) == 1.0
    assert net_closed_form(5, 3, 3) == 0.0 and net_closed_form(5, 3, 4) == 0.0
    assert net_closed_form(5, 5, 2) == pytest.approx(3100 / 3124, abs=1e-15)
    with pytest.raises(DomainError):
        net_closed_form(5, 0, 1)


@pytest.mark.parametrize("b,s,m", [(5, 4, 3), (3, 3, 4), (13, 4, 2)])
def test_net_matches_closed_form(b, s, m):
    F = faure_set(b**m, s, b)
    for k in product(range(m + 2), repeat=s):
        if sum(k) <= m + 1:
            assert c_value(F, k) == pytest.approx(net_closed_form(b, m, sum(k)), abs=1e-12)


def _brute_m(P, k, bases):
    # exact route: points share k_j leading digits iff floor(x b**k_j) agree;
    # x is the stored fraction in its own base, else the double it rounds to
    x = to_reals(P)
    fr = [[Fraction(int(P.digits[i, j]), P.bases[j] ** P.ndigits[j]) if bases[j] == P.bases[j]
           else Fraction(float(x[i, j])) for j in range(P.s)] for i in range(P.n)]
    n = len(fr)
    keys = [tuple(int(fr[i][j] * bases[j] ** k[j]) for j in range(len(k))) for i in range(n)]
    return sum(1 for i in range(n) for j in range(n) if i != j and keys[i] == keys[j])


def test_m_count_matches_brute_force_oracle():
    rng = np.random.default_rng(7)
    mismatches = 0
    for _ in range(200):
        n = int(rng.integers(2, 65))
        s = int(rng.integers(1, 5))
        cons = tuple(int(rng.choice([2, 3, 5])) for _ in range(s))
        crit = tuple(int(rng.choice([2, 3, 5])) for _ in range(s))
        ndig = tuple(int(np.ceil(53 / np.log2(b))) for b in cons)
        # coarse digits force shared prefixes and exact duplicates
        coarse = [rng.integers(0, b**3, n).astype(np.uint64) * np.uint64(b ** (K - 3)) for b, K in zip(cons, ndig)]
        P = PointSet(np.stack(coarse, axis=1), cons, ndig)
        k = tuple(int(v) for v in rng.integers(0, 5, s))
        if m_count(P, k, crit) != _brute_m(P, k, crit):
            mismatches += 1
    assert mismatches == 0


def test_gamma_route_agrees_with_grouping():
    P = halton_set(40, 3, start_index=5)
    for k in [(1, 1, 0), (2, 1, 1), (3, 0, 2), (0, 2, 1)]:
        brute = 0
        for i in range(P.n):
            for j in range(P.n):
                if i != j and all(gamma(P.digit_vector(i, c), P.digit_vector(j, c)) >= k[c] for c in range(3)):
                    brute += 1
        assert m_count(P, k) == brute


def test_enumerate_k_family_examples():
    got = [k.components for k in enumerate_k_family(4, 2, 2, 2)]
    assert sorted(got) == sorted([(1, 1, 0, 0), (1, 0, 1, 0), (0, 1, 1, 0), (0, 1, 0, 1), (0, 0, 1, 1)])
    assert got == sorted(got)
    assert {k.components for k in enumerate_k_family(2, 2, 2, 3)} == {(1, 1), (1, 2), (2, 1)}
    for k in enumerate_k_family(6, 3, 3, 5):
        assert 2 <= k.nonzero_count <= 3 and k.range <= 3 and 2 <= k.norm <= 5
    with pytest.raises(DomainError):
        list(enumerate_k_family(3, 4, 2, 3))


def test_kvector():
    k = KVector((0, 2, 0, 3))
    assert k.norm == 5 and k.support == (1, 3) and k.range == 2 and str(k) == "(0,2,0,3)"
    with pytest.raises(DomainError):
        KVector((1, -1))


def test_default_norm_bound():
    assert default_norm_bound(3125, 5) == 5
    assert default_norm_bound(3126, 5) == 6
    assert default_norm_bound(2, 2) == 2


def test_projections_window():
    assert projections(4, 2, 1) == [(0, 1), (1, 2), (2, 3)]
    assert len(projections(12, 2, 12)) == 66


def test_projection_criterion_matches_brute_maximum():
    P = faure_set(125, 4, 5, start_index=1)
    rep = criterion(P, bases=2, d=2, L=6)
    assert rep.mode == "projection" and rep.size == 6
    for u, v in zip(rep.projections, rep.values):
        best = 0.0
        for a in range(7):
            for b in range(7 - a):
                if a + b == 0:
                    continue
                k = [0] * 4
                k[u[0]], k[u[1]] = a, b
                best = max(best, c_value(P, k, 2))
        assert v == pytest.approx(best, rel=1e-15)
    assert rep.c == max(rep.values) and rep.cbar == pytest.approx(np.mean(rep.values))


def test_projection_profile_is_cumulative():
    P = halton_set(300, 4, start_index=2)
    _, projs, values, ks = projection_profile(P, 2, 2, 4, 10)
    assert np.all(np.diff(values[:, 1:], axis=1) >= 0)
    rep = criterion(P, 2, 2, 4, 7)
    assert np.array_equal(rep.values, values[:, 7])


def test_family_mode_average():
    P = faure_set(125, 3, 5)
    rep = criterion(P, bases=5, d=2, L=3, mode="family")
    ks = list(enumerate_k_family(3, 2, 3, 3))
    assert rep.ks == ks
    want = [c_value(P, k, 5) for k in ks]
    assert rep.values.tolist() == want
    # within a (0,3,3)-net in its own base every C with |k| <= 3 follows the closed form
    assert rep.c == pytest.approx(net_closed_form(5, 3, 2))


def test_criterion_thread_independent():
    P = halton_set(500, 6, start_index=2)
    a = criterion(P, 2, 2, None, 9, threads=1)
    b = criterion(P, 2, 2, None, 9, threads=4)
    assert a.to_csv() == b.to_csv() and a.to_json() == b.to_json()


def test_criterion_errors():
    P = faure_set(10, 3, 3)
    with pytest.raises(DomainError):
        criterion(P, mode="bogus")
    with pytest.raises(DomainError):
        criterion(P.head(1))
    with pytest.raises(DomainError):
        criterion(P, d=4)


@pytest.mark.parametrize("n", [50, 125, 625])
def test_cqe_faure(n):
    assert cqe_check(faure_set(n, 4, 5)).ok


def test_cqe_small_examples():
    assert cqe_check(faure_set(125, 3, 5), L=3).ok
    assert cqe_check(halton_set(8, 2)).ok
    res = cqe_check(_pointset([(0.2, 0.7)] * 6), L=4)
    assert not res.ok
    nonzero = [k for k, _ in res.violations]
    assert len(nonzero) == res.checked - 1  # only k = 0 gives C = 1
