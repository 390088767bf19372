"""Prime-field arithmetic and the local mathematics of threshold secret sharing.

Values are plain Python ints in [0, p); the field context is a small frozen
object carrying the modulus. Shamir sharing encodes a secret as the constant
term of a random degree-t polynomial; any t+1 evaluations reconstruct it and
any t reveal nothing. All of this is non-interactive: the message-passing
engine lives in :mod:`mpdp.engine`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DomainError, InsufficientShares, IntegrityError

#: Default modulus: the Mersenne prime 2^61 - 1. Fits vectorized uint64
#: arithmetic (see mpdp.backend) and leaves headroom over the default
#: 40-bit fixed-point range.
DEFAULT_PRIME = (1 << 61) - 1


@dataclass(frozen=True)
class PrimeField:
    """Arithmetic context for the prime field of order ``p``."""

    p: int

    def __post_init__(self):
        if self.p < 2:
            raise ConfigError(f"modulus must be >= 2, got {self.p}")

    def reduce(self, a: int) -> int:
        """Canonical representative of a mod p."""
        return a % self.p

    def add(self, a: int, b: int) -> int:
        """(a + b) mod p."""
        return (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        """(a - b) mod p."""
        return (a - b) % self.p

    def mul(self, a: int, b: int) -> int:
        """(a * b) mod p."""
        return (a * b) % self.p

    def neg(self, a: int) -> int:
        """(-a) mod p."""
        return (-a) % self.p

    def inv(self, a: int) -> int:
        """Multiplicative inverse via Fermat: a^(p-2) mod p."""
        if a % self.p == 0:
            raise DomainError("cannot invert zero")
        return pow(a, self.p - 2, self.p)

    def rand_element(self, rng) -> int:
        """Uniform element of [0, p) from a numpy Generator."""
        return int(rng.integers(0, self.p))


def field_arith(field: PrimeField, op: str, a: int, b: int | None = None) -> int:
    """Dispatch table over the basic field operations.

    ``op`` is one of add/sub/mul/inv/neg; ``b`` is required for the binary ops.
    """
    if op == "add":
        return field.add(a, b)
    if op == "sub":
        return field.sub(a, b)
    if op == "mul":
        return field.mul(a, b)
    if op == "neg":
        return field.neg(a)
    if op == "inv":
        return field.inv(a)
    raise ConfigError(f"unknown field operation {op!r}")


@dataclass(frozen=True)
class Share:
    """One evaluation point of a degree-``degree`` sharing polynomial.

    ``index`` is the party index and also the public abscissa the polynomial
    was evaluated at (we fix alpha_i = i).
    """

    index: int
    value: int
    degree: int


#: A full sharing: one Share per party, all of the same secret and degree.
ShareVector = list


def poly_eval(field: PrimeField, coeffs: Sequence[int], x: int) -> int:
    """Evaluate sum(coeffs[k] * x^k) by Horner's rule, coefficients low-first."""
    acc = 0
    for c in reversed(coeffs):
        acc = field.add(field.mul(acc, x), c)
    return acc


def lagrange_weights(field: PrimeField, xs: Sequence[int], at: int = 0) -> list:
    """Lagrange basis coefficients L_i(at) for the abscissas ``xs``.

    Interpolating f from points (xs[i], ys[i]) gives
    f(at) = sum_i ys[i] * L_i(at).
    """
    if len(set(xs)) != len(xs):
        raise ConfigError("abscissas must be distinct")
    weights = []
    for i, xi in enumerate(xs):
        num, den = 1, 1
        for j, xj in enumerate(xs):
            if j == i:
                continue
            num = field.mul(num, field.sub(at, xj))
            den = field.mul(den, field.sub(xi, xj))
        weights.append(field.mul(num, field.inv(den)))
    return weights


def shamir_share(field: PrimeField, secret: int, t: int, n: int, rng) -> ShareVector:
    """Split ``secret`` into n shares with threshold t.

    The sharing polynomial has t uniformly random coefficients above the
    constant term, so any t shares are jointly uniform and any t+1
    reconstruct. Requires 0 < t < n < p.
    """
    if not (0 < t < n):
        raise ConfigError(f"need 0 < t < n, got t={t}, n={n}")
    if n >= field.p:
        raise ConfigError(f"need n < p, got n={n}, p={field.p}")
    secret = field.reduce(secret)
    coeffs = [secret] + [field.rand_element(rng) for _ in range(t)]
    return [Share(i, poly_eval(field, coeffs, i), t) for i in range(1, n + 1)]


def shamir_reconstruct(field: PrimeField, shares: Iterable[Share], at: int = 0) -> int:
    """Recover the secret (the polynomial at ``at``) from >= t+1 shares.

    When more than t+1 shares are supplied the redundancy is checked: all
    shares must lie on the degree-t polynomial interpolated from the first
    t+1, otherwise IntegrityError. No error correction is attempted.
    """
    shares = list(shares)
    if not shares:
        raise InsufficientShares("no shares supplied")
    t = shares[0].degree
    if any(s.degree != t for s in shares):
        raise ConfigError("shares carry mixed degrees")
    if len({s.index for s in shares}) != len(shares):
        raise ConfigError("duplicate party indices")
    if len(shares) < t + 1:
        raise InsufficientShares(f"need {t + 1} shares, got {len(shares)}")

    head = shares[: t + 1]
    xs = [s.index for s in head]
    ws = lagrange_weights(field, xs, at)
    value = 0
    for s, w in zip(head, ws):
        value = field.add(value, field.mul(s.value, w))

    for extra in shares[t + 1:]:
        ws_x = lagrange_weights(field, xs, extra.index)
        pred = 0
        for s, w in zip(head, ws_x):
            pred = field.add(pred, field.mul(s.value, w))
        if pred != extra.value:
            raise IntegrityError(
                f"share at index {extra.index} is inconsistent with the others"
            )
    return value


def share_linear(field: PrimeField, c0: int,
                 terms: Sequence[tuple]) -> ShareVector:
    """Affine combination c0 + sum(c_k * sharing_k), computed share-wise.

    Purely local: adding the public constant c0 corresponds to adding the
    constant polynomial, so every share gets it. All sharings must agree on
    degree and party indices. The result never raises the polynomial degree.
    """
    if not terms:
        raise ConfigError("need at least one sharing term")
    first = terms[0][1]
    indices = [s.index for s in first]
    degree = first[0].degree
    for _, sv in terms:
        if [s.index for s in sv] != indices or any(s.degree != degree for s in sv):
            raise ConfigError("mismatched sharing parameters")
    c0 = field.reduce(c0)
    out = []
    for pos, idx in enumerate(indices):
        acc = c0
        for coeff, sv in terms:
            acc = field.add(acc, field.mul(field.reduce(coeff), sv[pos].value))
        out.append(Share(idx, acc, degree))
    return out


def default_rng(seed: int | None = None) -> np.random.Generator:
    """Deterministic generator used by the scalar sharing helpers."""
    return np.random.default_rng(seed)
