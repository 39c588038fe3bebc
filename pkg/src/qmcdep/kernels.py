"""Hot digit-level kernels, each with a numba and a pure-numpy implementation.

Every coordinate of a point set is stored as a single ``uint64`` digit
integer ``Y = sum_r d_r * b**(K-1-r)``, where ``d_0`` is the most significant
fractional digit.  The kernels below take and return arrays of such integers.

The numba path is used when numba imports and the environment variable
``QMCDEP_DISABLE_NUMBA`` is unset (or ``0``).  Both paths are bit-identical;
``tests/test_kernels.py`` checks this and ``benchmarks/bench_kernels.py``
times them against each other.

Pseudo-random numbers come from the splitmix64 output function used as a
counter-based generator::

    mix64(z):  z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
               z ^= z >> 27; z *= 0x94D049BB133111EB
               return z ^ (z >> 31)
    prf(key, i) = mix64(key + (i + 1) * 0x9E3779B97F4A7C15)   (mod 2**64)

A random permutation of Z_b keyed by ``key`` maps ``a`` to the rank of
``prf(key, a)`` among ``prf(key, 0..b-1)`` (ties broken by symbol).
"""
import math
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda func: func


USE_NUMBA = HAVE_NUMBA and os.environ.get("QMCDEP_DISABLE_NUMBA", "0") in ("", "0")

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)

# rows processed per block in the vectorized paths (bounds n x b temporaries)
_CHUNK = 1 << 14


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def mix64(z):
    z = np.uint64(z)
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, nogil=True)
def _mul128(a, b):
    a_lo = a & _LO32
    a_hi = a >> _S32
    b_lo = b & _LO32
    b_hi = b >> _S32
    p0 = a_lo * b_lo
    p1 = a_lo * b_hi
    p2 = a_hi * b_lo
    p3 = a_hi * b_hi
    mid = (p0 >> _S32) + (p1 & _LO32) + (p2 & _LO32)
    hi = p3 + (p1 >> _S32) + (p2 >> _S32) + (mid >> _S32)
    lo = (mid << _S32) | (p0 & _LO32)
    return hi, lo


@njit(cache=True, nogil=True)
def _radical_inverse_nb(m, base, ndig):
    ub = np.uint64(base)
    out = np.empty(m.shape[0], np.uint64)
    for i in range(m.shape[0]):
        q = m[i]
        acc = np.uint64(0)
        for _ in range(ndig):
            acc = acc * ub + q % ub
            q //= ub
        out[i] = acc
    return out


@njit(cache=True, nogil=True)
def _digit_map_nb(y, base, ndig, table):
    ub = np.uint64(base)
    out = np.empty(y.shape[0], np.uint64)
    dig = np.empty(ndig, np.int64)
    for i in range(y.shape[0]):
        q = y[i]
        for r in range(ndig - 1, -1, -1):
            dig[r] = np.int64(q % ub)
            q //= ub
        acc = np.uint64(0)
        for r in range(ndig):
            acc = acc * ub + np.uint64(table[r, dig[r]])
        out[i] = acc
    return out


@njit(cache=True, nogil=True)
def _digit_matvec_nb(y, base, ndig, mat):
    ub = np.uint64(base)
    out = np.empty(y.shape[0], np.uint64)
    dig = np.empty(ndig, np.int64)
    for i in range(y.shape[0]):
        q = y[i]
        for r in range(ndig - 1, -1, -1):
            dig[r] = np.int64(q % ub)
            q //= ub
        acc = np.uint64(0)
        for r in range(ndig):
            s = 0
            for l in range(ndig):
                s += mat[r, l] * dig[l]
            acc = acc * ub + np.uint64(s % base)
        out[i] = acc
    return out


@njit(cache=True, nogil=True)
def _owen_nb(y, base, ndig, seed):
    ub = np.uint64(base)
    out = np.empty(y.shape[0], np.uint64)
    dig = np.empty(ndig, np.int64)
    for i in range(y.shape[0]):
        q = y[i]
        for r in range(ndig - 1, -1, -1):
            dig[r] = np.int64(q % ub)
            q //= ub
        # prefix code b**r + (digits 0..r-1) is unique over all depths
        prefix = np.uint64(1)
        acc = np.uint64(0)
        for r in range(ndig):
            key = mix64(seed ^ mix64(prefix))
            d = dig[r]
            hd = mix64(key + np.uint64(d + 1) * GAMMA)
            rank = 0
            for a in range(base):
                ha = mix64(key + np.uint64(a + 1) * GAMMA)
                if ha < hd or (ha == hd and a < d):
                    rank += 1
            acc = acc * ub + np.uint64(rank)
            prefix = prefix * ub + np.uint64(d)
        out[i] = acc
    return out


@njit(cache=True, nogil=True)
def _rebase_nb(x, scale):
    out = np.empty(x.shape[0], np.uint64)
    for i in range(x.shape[0]):
        xi = x[i]
        if xi <= 0.0:
            out[i] = np.uint64(0)
            continue
        f, e = math.frexp(xi)
        mant = np.uint64(f * 9007199254740992.0)
        t = 53 - e
        hi, lo = _mul128(mant, scale)
        if t >= 128:
            out[i] = np.uint64(0)
        elif t >= 64:
            out[i] = hi >> np.uint64(t - 64)
        else:
            out[i] = (hi << np.uint64(64 - t)) | (lo >> np.uint64(t))
    return out


@njit(cache=True, nogil=True)
def _count_pairs_nb(key, radix):
    n = key.shape[0]
    total = 0
    if radix > 0:
        counts = np.zeros(radix, np.int64)
        for i in range(n):
            counts[key[i]] += 1
        for c in counts:
            total += c * (c - 1)
        return total
    srt = np.sort(key)
    run = 1
    for i in range(1, n):
        if srt[i] == srt[i - 1]:
            run += 1
        else:
            total += run * (run - 1)
            run = 1
    if n > 0:
        total += run * (run - 1)
    return total


# ---------------------------------------------------------------------------
# numpy kernels
# ---------------------------------------------------------------------------

def mix64_np(z):
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _mul128_np(a, b):
    a_lo, a_hi = a & _LO32, a >> _S32
    b_lo, b_hi = b & _LO32, b >> _S32
    with np.errstate(over="ignore"):
        p0 = a_lo * b_lo
        p1 = a_lo * b_hi
        p2 = a_hi * b_lo
        p3 = a_hi * b_hi
        mid = (p0 >> _S32) + (p1 & _LO32) + (p2 & _LO32)
        hi = p3 + (p1 >> _S32) + (p2 >> _S32) + (mid >> _S32)
        lo = (mid << _S32) | (p0 & _LO32)
    return hi, lo


def split_digits(y, base, ndig):
    """Return the (n, ndig) int64 digit matrix of digit integers ``y``."""
    q = np.array(y, dtype=np.uint64, copy=True)
    ub = np.uint64(base)
    dig = np.empty((q.shape[0], ndig), dtype=np.int64)
    for r in range(ndig - 1, -1, -1):
        dig[:, r] = q % ub
        q //= ub
    return dig


def join_digits(dig, base):
    ub = np.uint64(base)
    acc = np.zeros(dig.shape[0], dtype=np.uint64)
    for r in range(dig.shape[1]):
        acc = acc * ub + dig[:, r].astype(np.uint64)
    return acc


def _radical_inverse_np(m, base, ndig):
    q = np.array(m, dtype=np.uint64, copy=True)
    ub = np.uint64(base)
    acc = np.zeros(q.shape[0], dtype=np.uint64)
    for _ in range(ndig):
        acc = acc * ub + q % ub
        q //= ub
    return acc


def _digit_map_np(y, base, ndig, table):
    dig = split_digits(y, base, ndig)
    mapped = table[np.arange(ndig)[None, :], dig]
    return join_digits(mapped, base)


def _digit_matvec_np(y, base, ndig, mat):
    out = np.empty(y.shape[0], dtype=np.uint64)
    mt = np.ascontiguousarray(mat.T)
    for lo in range(0, y.shape[0], _CHUNK):
        dig = split_digits(y[lo:lo + _CHUNK], base, ndig)
        out[lo:lo + _CHUNK] = join_digits((dig @ mt) % base, base)
    return out


def _owen_np(y, base, ndig, seed):
    seed = np.uint64(seed)
    ub = np.uint64(base)
    with np.errstate(over="ignore"):
        sym = (np.arange(base, dtype=np.uint64) + np.uint64(1)) * GAMMA
    out = np.empty(y.shape[0], dtype=np.uint64)
    ar = np.arange(base)
    for lo in range(0, y.shape[0], _CHUNK):
        dig = split_digits(y[lo:lo + _CHUNK], base, ndig)
        m = dig.shape[0]
        rows = np.arange(m)
        prefix = np.ones(m, dtype=np.uint64)
        acc = np.zeros(m, dtype=np.uint64)
        for r in range(ndig):
            d = dig[:, r]
            key = mix64_np(seed ^ mix64_np(prefix))
            with np.errstate(over="ignore"):
                h = mix64_np(key[:, None] + sym[None, :])
            hd = h[rows, d][:, None]
            rank = (h < hd).sum(axis=1) + ((h == hd) & (ar[None, :] < d[:, None])).sum(axis=1)
            with np.errstate(over="ignore"):
                acc = acc * ub + rank.astype(np.uint64)
                prefix = prefix * ub + d.astype(np.uint64)
        out[lo:lo + _CHUNK] = acc
    return out


def _rebase_np(x, scale):
    x = np.asarray(x, dtype=np.float64)
    f, e = np.frexp(x)
    mant = (f * 9007199254740992.0).astype(np.uint64)
    t = 53 - e.astype(np.int64)
    hi, lo = _mul128_np(mant, np.uint64(scale))
    small = np.clip(t, 1, 63).astype(np.uint64)
    mid = np.clip(t - 64, 0, 63).astype(np.uint64)
    res_small = (hi << (np.uint64(64) - small)) | (lo >> small)
    res_mid = hi >> mid
    out = np.where(t < 64, res_small, np.where(t < 128, res_mid, np.uint64(0)))
    out[x <= 0.0] = 0
    return out.astype(np.uint64)


def _count_pairs_np(key, radix):
    if key.shape[0] == 0:
        return 0
    if radix > 0:
        c = np.bincount(key.astype(np.int64), minlength=radix).astype(np.int64)
    else:
        _, c = np.unique(key, return_counts=True)
        c = c.astype(np.int64)
    return int(np.dot(c, c - 1))


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

NUMBA = {
    "radical_inverse": _radical_inverse_nb,
    "digit_map": _digit_map_nb,
    "digit_matvec": _digit_matvec_nb,
    "owen": _owen_nb,
    "rebase": _rebase_nb,
    "count_pairs": _count_pairs_nb,
}
NUMPY = {
    "radical_inverse": _radical_inverse_np,
    "digit_map": _digit_map_np,
    "digit_matvec": _digit_matvec_np,
    "owen": _owen_np,
    "rebase": _rebase_np,
    "count_pairs": _count_pairs_np,
}


def backend(name=None):
    """Return the kernel table for ``name`` ("numba"/"numpy"; default: active)."""
    if name is None:
        name = "numba" if USE_NUMBA else "numpy"
    return NUMBA if name == "numba" else NUMPY


def _u64(a):
    return np.ascontiguousarray(a, dtype=np.uint64)


def radical_inverse(m, base, ndig, impl=None):
    """Reverse the base-``base`` digits of integers ``m`` into digit integers."""
    return backend(impl)["radical_inverse"](_u64(m), int(base), int(ndig))


def digit_map(y, base, ndig, table, impl=None):
    """Apply ``table[r, d]`` to digit ``r`` of every digit integer."""
    table = np.ascontiguousarray(table, dtype=np.int64)
    return backend(impl)["digit_map"](_u64(y), int(base), int(ndig), table)


def digit_matvec(y, base, ndig, mat, impl=None):
    """Multiply each digit vector by ``mat`` modulo ``base``."""
    mat = np.ascontiguousarray(mat, dtype=np.int64)
    return backend(impl)["digit_matvec"](_u64(y), int(base), int(ndig), mat)


def owen(y, base, ndig, seed, impl=None):
    """Nested uniform scrambling with permutations keyed by digit prefix."""
    return backend(impl)["owen"](_u64(y), int(base), int(ndig), np.uint64(seed))


def rebase(x, scale, impl=None):
    """Exact ``floor(x * scale)`` for doubles ``x`` in [0, 1) and ``scale < 2**64``."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    return backend(impl)["rebase"](x, np.uint64(scale))


def count_pairs(key, radix=0, impl=None):
    """Sum of c*(c-1) over groups of equal keys.

    With ``radix > 0`` the keys are known to lie in ``range(radix)`` and are
    tallied directly instead of sorted.
    """
    return int(backend(impl)["count_pairs"](_u64(key), int(radix)))


def prf(key, count, start=0):
    """``count`` consecutive counter-based 64-bit outputs for ``key``."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64_np(np.uint64(key) + idx * GAMMA)


def uniform01(key, count, start=0):
    """Doubles in [0, 1) with 53 random bits each."""
    return (prf(key, count, start) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def below(key, count, bound, start=0):
    """Integers in ``range(bound)`` (bound < 2**32), one per counter step."""
    hi = prf(key, count, start) >> _S32
    return ((hi * np.uint64(bound)) >> _S32).astype(np.int64)
