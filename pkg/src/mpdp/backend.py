"""Vectorized modular arithmetic on arrays of field elements.

Three strategies, picked by modulus size:

* p < 2^31: plain uint64 numpy (products fit in 64 bits).
* p = 2^61 - 1: Mersenne-prime splitting, JIT-compiled with numba when
  available (single pass, no 128-bit intermediates), numpy fallback otherwise.
* anything else below 2^61: Python-int object arrays (correct, slow).

All arrays hold canonical representatives in [0, p).
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

M61 = (1 << 61) - 1

try:
    from numba import njit, prange

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False


if _HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _mul_m61_numba(a, b, out):
        m = np.uint64(M61)
        for i in prange(a.size):
            x = a[i]
            y = b[i]
            x_hi = x >> np.uint64(31)
            x_lo = x & np.uint64(0x7FFFFFFF)
            y_hi = y >> np.uint64(31)
            y_lo = y & np.uint64(0x7FFFFFFF)
            hh = x_hi * y_hi
            mid = x_hi * y_lo + x_lo * y_hi
            ll = x_lo * y_lo
            r = hh << np.uint64(1)
            mid_lo = mid & np.uint64(0x3FFFFFFF)
            mid_hi = mid >> np.uint64(30)
            r2 = mid_hi + (mid_lo << np.uint64(31))
            r3 = (ll >> np.uint64(61)) + (ll & m)
            s = r + r2 + r3
            s = (s >> np.uint64(61)) + (s & m)
            if s >= m:
                s -= m
            out[i] = s

    @njit(cache=True, parallel=True)
    def _mul_scalar_m61_numba(a, y, out):
        m = np.uint64(M61)
        y_hi = y >> np.uint64(31)
        y_lo = y & np.uint64(0x7FFFFFFF)
        for i in prange(a.size):
            x = a[i]
            x_hi = x >> np.uint64(31)
            x_lo = x & np.uint64(0x7FFFFFFF)
            hh = x_hi * y_hi
            mid = x_hi * y_lo + x_lo * y_hi
            ll = x_lo * y_lo
            r = hh << np.uint64(1)
            mid_lo = mid & np.uint64(0x3FFFFFFF)
            mid_hi = mid >> np.uint64(30)
            r2 = mid_hi + (mid_lo << np.uint64(31))
            r3 = (ll >> np.uint64(61)) + (ll & m)
            s = r + r2 + r3
            s = (s >> np.uint64(61)) + (s & m)
            if s >= m:
                s -= m
            out[i] = s


def _mul_m61_numpy(a, b):
    # same splitting as the numba kernel, with array temporaries
    m = np.uint64(M61)
    x_hi = a >> np.uint64(31)
    x_lo = a & np.uint64(0x7FFFFFFF)
    y_hi = b >> np.uint64(31)
    y_lo = b & np.uint64(0x7FFFFFFF)
    hh = x_hi * y_hi
    mid = x_hi * y_lo + x_lo * y_hi
    ll = x_lo * y_lo
    r = hh << np.uint64(1)
    r2 = (mid >> np.uint64(30)) + ((mid & np.uint64(0x3FFFFFFF)) << np.uint64(31))
    r3 = (ll >> np.uint64(61)) + (ll & m)
    s = r + r2 + r3
    s = (s >> np.uint64(61)) + (s & m)
    return np.where(s >= m, s - m, s)


class Backend:
    """Elementwise mod-p operations on share arrays."""

    def __init__(self, p: int):
        if p < 2 or p.bit_length() > 61:
            raise ConfigError(f"modulus must fit 61 bits, got {p}")
        self.p = p
        self._small = p < (1 << 31)
        self._mersenne = p == M61
        self._object = not (self._small or self._mersenne)
        self.dtype = object if self._object else np.uint64

    def asarray(self, x) -> np.ndarray:
        if self._object:
            arr = np.array(x, dtype=object)
            return arr % self.p
        arr = np.asarray(x)
        if arr.dtype != np.uint64:
            arr = np.mod(arr, self.p).astype(np.uint64)
        return arr

    def zeros(self, shape) -> np.ndarray:
        if self._object:
            out = np.zeros(shape, dtype=object)
            out += 0
            return out
        return np.zeros(shape, dtype=np.uint64)

    def add(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self._object:
            return (a + b) % self.p
        s = a + b  # both < p <= 2^61 - 1, no uint64 overflow
        return np.where(s >= self.p, s - np.uint64(self.p), s)

    def sub(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self._object:
            return (a - b) % self.p
        return np.where(a >= b, a - b, a + np.uint64(self.p) - b)

    def neg(self, a: np.ndarray) -> np.ndarray:
        if self._object:
            return (-a) % self.p
        return np.where(a == 0, a, np.uint64(self.p) - a)

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self._object:
            return (a * b) % self.p
        if self._small:
            return (a * b) % np.uint64(self.p)
        if _HAVE_NUMBA and a.shape == b.shape:
            out = np.empty(a.shape, dtype=np.uint64)
            _mul_m61_numba(a.ravel(), b.ravel(), out.ravel())
            return out
        a, b = np.broadcast_arrays(a, b)
        return _mul_m61_numpy(a, b)

    def mul_scalar(self, a: np.ndarray, s: int) -> np.ndarray:
        s = s % self.p
        if self._object:
            return (a * s) % self.p
        if self._small:
            return (a * np.uint64(s)) % np.uint64(self.p)
        if _HAVE_NUMBA:
            out = np.empty(a.shape, dtype=np.uint64)
            _mul_scalar_m61_numba(a.ravel(), np.uint64(s), out.ravel())
            return out
        return _mul_m61_numpy(a, np.uint64(s))

    def add_scalar(self, a: np.ndarray, s: int) -> np.ndarray:
        s = s % self.p
        if self._object:
            return (a + s) % self.p
        t = a + np.uint64(s)
        return np.where(t >= self.p, t - np.uint64(self.p), t)

    def sum_axis(self, a: np.ndarray, axis: int = 0) -> np.ndarray:
        """Modular sum along one axis (folded pairwise to avoid overflow)."""
        if self._object:
            return np.sum(a, axis=axis) % self.p
        if self._small:
            # sums of < 2^31 terms times < 2^31 values stay in range for
            # realistic axis lengths; chunk defensively anyway
            total = np.sum(a.astype(np.uint64), axis=axis) % np.uint64(self.p)
            return total
        work = np.moveaxis(a, axis, 0)
        while work.shape[0] > 1:
            k = work.shape[0]
            half = k // 2
            folded = self.add(work[:half], work[half: 2 * half])
            if k % 2:
                folded = np.concatenate([folded, work[-1:]], axis=0)
            work = folded
        return work[0]

    def random(self, rng: np.random.Generator, shape) -> np.ndarray:
        """Uniform elements of [0, p)."""
        if self._object:
            vals = rng.integers(0, self.p, size=shape, dtype=np.uint64)
            return vals.astype(object) % self.p
        return rng.integers(0, self.p, size=shape, dtype=np.uint64)

    def to_int_list(self, a: np.ndarray) -> list:
        return [int(v) for v in np.asarray(a).ravel()]
