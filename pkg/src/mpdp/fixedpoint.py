"""Fixed-point encoding of reals into the prime field.

A real x is stored as round(x * 2^f) in two's-complement style: nonnegative
raws live in [0, 2^(k-1)), negatives as p - |raw|. ``k`` is the total bit
width and ``f`` the number of fractional bits, so the representable range is
|x| < 2^(k-f-1) with resolution 2^-f.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class FixedPointFormat:
    total_bits: int = 40
    frac_bits: int = 20

    def __post_init__(self):
        if not (0 < self.frac_bits < self.total_bits):
            raise ConfigError(
                f"need 0 < frac_bits < total_bits, got {self.frac_bits}/{self.total_bits}"
            )

    @property
    def scale(self) -> int:
        return 1 << self.frac_bits

    @property
    def resolution(self) -> float:
        return 2.0 ** -self.frac_bits

    @property
    def max_abs(self) -> float:
        """Strict bound on representable magnitude, 2^(k-f-1)."""
        return float(1 << (self.total_bits - self.frac_bits - 1))

    @property
    def max_raw(self) -> int:
        return 1 << (self.total_bits - 1)

    def encode(self, x: float, p: int) -> int:
        """Field representative of x; OverflowError outside the range."""
        raw = round(float(x) * self.scale)
        if abs(raw) >= self.max_raw:
            raise OverflowError(f"{x} outside fixed-point range +/-{self.max_abs}")
        return raw % p

    def decode(self, r: int, p: int) -> float:
        """Real value of a field representative (signed around p/2)."""
        r = int(r)
        if r > p // 2:
            r -= p
        return r / self.scale

    def encode_array(self, x: np.ndarray, p: int) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        raw = np.rint(x * self.scale)
        if np.any(~np.isfinite(raw)) or np.any(np.abs(raw) >= self.max_raw):
            raise OverflowError("value outside fixed-point range")
        raw = raw.astype(np.int64)
        out = np.where(raw < 0, raw + p, raw)
        return out.astype(np.uint64) if p.bit_length() <= 61 else out.astype(object)

    def decode_array(self, r: np.ndarray, p: int) -> np.ndarray:
        r = np.asarray(r)
        if r.dtype == object:
            signed = np.array([v - p if v > p // 2 else int(v) for v in r.ravel()],
                              dtype=np.float64).reshape(r.shape)
            return signed / self.scale
        signed = r.astype(np.int64)
        signed = np.where(r > p // 2, signed - p, signed)
        return signed / float(self.scale)

    def signed_raw_array(self, r: np.ndarray, p: int) -> np.ndarray:
        """Raw integers with the sign unfolded (no division by the scale)."""
        r = np.asarray(r)
        if r.dtype == object:
            return np.array([v - p if v > p // 2 else int(v) for v in r.ravel()],
                            dtype=np.int64).reshape(r.shape)
        signed = r.astype(np.int64)
        return np.where(r > p // 2, signed - p, signed)
