import numpy as np
import pytest

from qmcdep.errors import DomainError
from qmcdep.negdep import gamma_columns
from qmcdep.numth import ModMatrix, digit_budget
from qmcdep.randomize import (
    KINDS,
    RandomizerSpec,
    derive_stream,
    digital_shift,
    linear_matrix,
    linear_scramble,
    owen_scramble,
    randomize,
)
from qmcdep.sequences import PointSet, faure_set, halton_set, to_reals


def test_derive_stream_golden_and_deterministic():
    assert derive_stream(0, 0, 0) == 3000338775055215999
    assert derive_stream(12, 3, 4) == derive_stream(12, 3, 4)


def test_derive_stream_no_collisions():
    keys = {derive_stream(s, v, c) for s in range(10) for v in range(100) for c in range(100)}
    assert len(keys) == 100_000


def test_shift_example_and_zero_shift():
    P = PointSet(np.array([[0b10]], dtype=np.uint64), (2,), (2,))
    out = digital_shift(P, RandomizerSpec("digital_shift"), shifts=[[1, 1]])
    assert int(out.digits[0, 0]) == 0b01
    F = faure_set(50, 3, 3)
    K = F.ndigits[0]
    assert digital_shift(F, RandomizerSpec("digital_shift"), shifts=[[0] * K] * 3) == F


def test_linear_identity_is_identity():
    F = faure_set(50, 3, 3)
    K = F.ndigits[0]
    eye = [ModMatrix.identity(3, K)] * 3
    assert linear_scramble(F, RandomizerSpec("linear_scramble"), eye, [[0] * K] * 3) == F


def test_linear_matrix_is_lower_triangular_nonsingular():
    for key in range(20):
        M = linear_matrix(key, 5, 12)
        assert M.is_lower_triangular() and np.all(np.diag(M.entries) != 0)


def test_linear_needs_prime_bases():
    P = halton_set(10, 2, bases=(4, 3))
    with pytest.raises(DomainError):
        linear_scramble(P, RandomizerSpec("linear_scramble"))


def test_unknown_kind():
    with pytest.raises(DomainError):
        RandomizerSpec("bogus")


def _gamma_matrix(P, j):
    col = P.column(j)
    return gamma_columns(col[:, None], col[None, :], P.bases[j], P.ndigits[j])


@pytest.mark.parametrize("kind", KINDS)
def test_randomizers_preserve_gamma(kind):
    F = faure_set(125, 3, 5)
    for seed in (1, 99):
        R = randomize(F, RandomizerSpec(kind, seed, 2))
        assert R != F
        for j in range(3):
            assert np.array_equal(_gamma_matrix(R, j), _gamma_matrix(F, j))


@pytest.mark.parametrize("kind", KINDS)
def test_single_point_marginally_uniform(kind):
    P = faure_set(1, 2, 3, start_index=5)
    K = P.ndigits[0]
    first = np.array([int(randomize(P, RandomizerSpec(kind, 7, v)).digits[0, 1]) // 3 ** (K - 1)
                      for v in range(3000)])
    counts = np.bincount(first, minlength=3)
    chi2 = float(((counts - 1000) ** 2 / 1000).sum())
    assert chi2 < 13.8  # 0.999 quantile, 2 degrees of freedom


def test_owen_permutations_depend_on_prefix():
    # two points agreeing in digit 1 keep the same digit-2 map; different prefixes need not
    b = 5
    K = digit_budget(b)
    ys = np.array([(a * b + c) * b ** (K - 2) for a in range(b) for c in range(b)], dtype=np.uint64)
    P = PointSet(ys[:, None], (b,), (K,))
    z = owen_scramble(P, RandomizerSpec("owen_scramble", 3)).column(0)
    second = (z // np.uint64(b ** (K - 2)) % np.uint64(b)).reshape(b, b)
    maps = {tuple(row.tolist()) for row in second}
    assert all(sorted(m) == list(range(b)) for m in maps)
    assert len(maps) > 1


def test_randomized_reals_stay_in_unit_cube():
    P = halton_set(400, 5)
    for kind in KINDS:
        x = to_reals(randomize(P, RandomizerSpec(kind, 11, 0)))
        assert x.min() >= 0.0 and x.max() < 1.0
