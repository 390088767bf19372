"""Fixed-point real arithmetic on shared values, plus the numeric kernels.

``SecretFixed`` wraps a shared field array together with the fixed-point
format. Linear operations stay local; multiplication is the interactive
product followed by a trusted truncation gate; division, comparison,
exponentiation, square root and logarithm are trusted ideal gates (the
engine's stand-ins for the assumed fixed-point sub-protocols).

The two kernels the samplers need are here as well: a composite trapezoidal
integral of a function spec from 0 to a shared upper limit (nodes scale with
the limit, step times node count is pinned to one), and a bisection solver
that inverts a nondecreasing map on shares without opening any intermediate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .engine import Engine, SharedValue
from .errors import BracketError, ConfigError, DomainError

__all__ = [
    "SecretFixed", "FuncSpec", "sf_const", "sf_input", "sf_open", "sf_arith",
    "sf_exp", "sf_sqrt", "sf_ln", "sf_div", "sf_lt", "sf_abs", "sf_mux",
    "normal_density", "trapezoid_integral", "bisect_inverse",
]


@dataclass
class SecretFixed:
    """A secret-shared fixed-point real (one share per party)."""

    shares: SharedValue

    @property
    def engine(self) -> Engine:
        return self.shares.engine

    @property
    def lane(self) -> tuple:
        return self.shares.lane

    # -------------------------------------------------- linear (local) ops

    def __add__(self, other: "SecretFixed") -> "SecretFixed":
        eng = self.engine
        return SecretFixed(eng.linear(0, [(1, self.shares), (1, other.shares)]))

    def __sub__(self, other: "SecretFixed") -> "SecretFixed":
        eng = self.engine
        return SecretFixed(eng.linear(0, [(1, self.shares), (-1, other.shares)]))

    def __neg__(self) -> "SecretFixed":
        return SecretFixed(self.engine.linear(0, [(-1, self.shares)]))

    def add_const(self, c: float) -> "SecretFixed":
        eng = self.engine
        enc = eng.fmt.encode(c, eng.cfg.prime)
        return SecretFixed(eng.linear(enc, [(1, self.shares)]))

    def scale_by(self, c: float) -> "SecretFixed":
        """Multiply by a public constant.

        Integer constants stay local; fractional ones need one truncation
        gate because the raw value picks up an extra scale factor.
        """
        eng = self.engine
        if float(c).is_integer():
            return SecretFixed(eng.linear(0, [(int(c), self.shares)]))
        enc = eng.fmt.encode(c, eng.cfg.prime)
        wide = eng.linear(0, [(enc, self.shares)])
        return SecretFixed(_trunc(eng, wide))

    def scale_by_array(self, coeffs: np.ndarray) -> "SecretFixed":
        """Per-lane public coefficients (fixed-point encoded), one truncation."""
        eng = self.engine
        enc = eng.fmt.encode_array(coeffs, eng.cfg.prime)
        wide = eng.linear(0, [(enc, self.shares)])
        return SecretFixed(_trunc(eng, wide))

    # ------------------------------------------------------ interactive ops

    def __mul__(self, other: "SecretFixed") -> "SecretFixed":
        eng = self.engine
        wide = eng.mul(self.shares, other.shares)
        return SecretFixed(_trunc(eng, wide))

    # ----------------------------------------------------------- structure

    def expand_lane(self, reps: int) -> "SecretFixed":
        return SecretFixed(self.shares.expand_lane(reps))

    def sum_lanes(self, axis: int = 0) -> "SecretFixed":
        return SecretFixed(self.engine.sum_lanes(self.shares, axis=axis))


def sf_const(engine: Engine, x, lane_reps: int | None = None) -> SecretFixed:
    """Public constant (or per-lane array) as a shared fixed-point value."""
    enc = engine.fmt.encode_array(np.asarray(x, dtype=np.float64),
                                  engine.cfg.prime)
    if enc.ndim == 0:
        enc = np.broadcast_to(enc, engine.lane).copy()
    sv = engine.share_const(enc)
    if lane_reps is not None:
        sv = sv.expand_lane(lane_reps)
    return SecretFixed(sv)


def sf_input(engine: Engine, party_index: int, x) -> SecretFixed:
    """A party's private real input, encoded and shared by its owner."""
    enc = engine.fmt.encode_array(np.asarray(x, dtype=np.float64),
                                  engine.cfg.prime)
    if enc.ndim == 0:
        enc = np.broadcast_to(enc, engine.lane).copy()
    return SecretFixed(engine.input_secret(party_index, enc))


def sf_open(engine: Engine, x: SecretFixed) -> np.ndarray:
    """Open and decode to floats (every party learns the value)."""
    raw = engine.open(x.shares)
    return engine.fmt.decode_array(raw, engine.cfg.prime)


# --------------------------------------------------------------- ideal gates

def _trunc(engine: Engine, wide: SharedValue) -> SharedValue:
    """Trusted truncation: rescale a raw carrying 2^(2f) back to 2^f."""
    fmt, p = engine.fmt, engine.cfg.prime
    half = 1 << (fmt.frac_bits - 1)

    def fn(vals):
        signed = fmt.signed_raw_array(vals[0], p)
        rounded = np.floor_divide(signed + half, fmt.scale)
        if np.any(np.abs(rounded) >= fmt.max_raw):
            raise OverflowError("fixed-point overflow in truncation")
        return [np.where(rounded < 0, rounded + p, rounded).astype(vals[0].dtype)]

    return engine.ideal_gate("trunc", [wide], fn)


def _unary_gate(kind: str, np_fn, domain_check=None):
    def op(x: SecretFixed) -> SecretFixed:
        eng = x.engine
        fmt, p = eng.fmt, eng.cfg.prime

        def fn(vals):
            v = fmt.decode_array(vals[0], p)
            if domain_check is not None:
                domain_check(v, fmt)
            return [fmt.encode_array(np_fn(v), p)]

        return SecretFixed(eng.ideal_gate(kind, [x.shares], fn))

    return op


def _check_exp(v, fmt):
    if np.any(v > math.log(fmt.max_abs)):
        raise DomainError("exp argument too large for the fixed-point range")


def _check_sqrt(v, fmt):
    if np.any(v < -fmt.resolution):
        raise DomainError("sqrt of negative value")


def _check_ln(v, fmt):
    if np.any(v < fmt.resolution):
        raise DomainError("log of non-positive value")


sf_exp = _unary_gate("exp", np.exp, _check_exp)
sf_sqrt = _unary_gate("sqrt", lambda v: np.sqrt(np.maximum(v, 0.0)), _check_sqrt)
sf_ln = _unary_gate("ln", np.log, _check_ln)


def sf_div(a: SecretFixed, b: SecretFixed) -> SecretFixed:
    """Trusted division gate; denominator must stay away from zero."""
    eng = a.engine
    fmt, p = eng.fmt, eng.cfg.prime

    def fn(vals):
        num = fmt.decode_array(vals[0], p)
        den = fmt.decode_array(vals[1], p)
        if np.any(np.abs(den) < fmt.resolution):
            raise DomainError("division by value below fixed-point resolution")
        return [fmt.encode_array(num / den, p)]

    return SecretFixed(eng.ideal_gate("div", [a.shares, b.shares], fn))


def sf_lt(a: SecretFixed, b: SecretFixed) -> SharedValue:
    """Comparison gate: sharing of 1 if a < b else 0 (an unscaled bit)."""
    eng = a.engine
    fmt, p = eng.fmt, eng.cfg.prime

    def fn(vals):
        x = fmt.signed_raw_array(vals[0], p)
        y = fmt.signed_raw_array(vals[1], p)
        return [(x < y).astype(np.uint64)]

    return eng.ideal_gate("lt", [a.shares, b.shares], fn)


def _require_true(engine: Engine, bit: SharedValue, message: str) -> None:
    """Trusted predicate check; raises without leaking the bit to any view."""

    def fn(vals):
        if np.any(vals[0] != 1):
            raise BracketError(message)
        return [vals[0]]

    engine.ideal_gate("require", [bit], fn)


def sf_mux(bit: SharedValue, a: SecretFixed, b: SecretFixed) -> SecretFixed:
    """Oblivious select: a where bit is 1, b where 0. One multiplication."""
    eng = a.engine
    diff = a - b
    picked = eng.mul(bit, diff.shares)  # bit is unscaled, no truncation needed
    return SecretFixed(eng.linear(0, [(1, b.shares), (1, picked)]))


def sf_abs(a: SecretFixed) -> SecretFixed:
    neg = sf_lt(a, sf_const(a.engine, 0.0, _reps_like(a)))
    return sf_mux(neg, -a, a)


def _reps_like(x: SecretFixed) -> int | None:
    lane = x.lane
    return None if len(lane) == 1 else lane[0]


def sf_not(bit: SharedValue) -> SharedValue:
    return bit.engine.linear(1, [(-1, bit)])


def sf_arith(op: str, a: SecretFixed, b: SecretFixed | None = None):
    """Dispatch over the shared fixed-point operations."""
    table = {
        "add": lambda: a + b,
        "sub": lambda: a - b,
        "mul": lambda: a * b,
        "div": lambda: sf_div(a, b),
        "lt": lambda: sf_lt(a, b),
        "exp": lambda: sf_exp(a),
        "sqrt": lambda: sf_sqrt(a),
    }
    if op not in table:
        raise ConfigError(f"unknown fixed-point operation {op!r}")
    return table[op]()


# ------------------------------------------------------------------ FuncSpec

@dataclass
class FuncSpec:
    """A univariate function evaluable at a shared fixed-point point.

    ``on_shares`` computes f(t) through engine gates. ``plain`` is the
    plaintext mirror used by tests and demos. CDF specs for inversion
    sampling carry either a closed-form quantile (``inverse_on_shares``) or
    the density whose running integral defines them (``density`` plus the
    public probability mass ``cdf_at_zero`` below zero).
    """

    name: str
    on_shares: Callable | None = None
    plain: Callable | None = None
    inverse_on_shares: Callable | None = None
    inverse_plain: Callable | None = None
    density: "FuncSpec | None" = None
    cdf_at_zero: float | None = None
    bracket: tuple | None = None

    def __call__(self, t: SecretFixed) -> SecretFixed:
        if self.on_shares is None:
            raise ConfigError(f"{self.name} has no share-level evaluation")
        return self.on_shares(t)


_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def normal_density() -> FuncSpec:
    """Standard normal density, evaluated through square/exp/scale gates."""

    def on_shares(t: SecretFixed) -> SecretFixed:
        half_sq = (t * t).scale_by(-0.5)
        return sf_exp(half_sq).scale_by(_INV_SQRT_2PI)

    return FuncSpec("normal-density", on_shares,
                    plain=lambda x: _INV_SQRT_2PI * math.exp(-0.5 * x * x))


# ------------------------------------------------------------------ kernels

def trapezoid_integral(engine: Engine, f: FuncSpec, upper: SecretFixed,
                       nodes: int | None = None) -> SecretFixed:
    """Composite trapezoidal integral of f from 0 to a shared upper limit.

    The step length h and node count k satisfy k*h = 1 and the actual nodes
    are the scaled points (i/k) * upper, so the rule follows the limit's
    sign; the result is h * upper * (f(0) + f(upper) + 2 sum f(nodes)) / 2.
    All nodes are evaluated in one vectorized pass over an extra lane axis.
    """
    k = nodes if nodes is not None else engine.cfg.trapezoid_nodes
    if k < 2:
        raise ConfigError("trapezoid rule needs at least 2 intervals")
    if len(upper.lane) != 1:
        raise ConfigError("upper limit must have a flat lane")

    # node coefficients 0, 1/k, ..., (k-1)/k, 1 and weights 1, 2, ..., 2, 1
    coeffs = np.arange(k + 1, dtype=np.float64) / k
    tiled = upper.expand_lane(k + 1)
    points = tiled.scale_by_array(coeffs[:, None])
    values = f(points)
    weights = np.full(k + 1, 2, dtype=np.int64)
    weights[0] = weights[-1] = 1
    weighted = SecretFixed(engine.linear(0, [(weights[:, None], values.shares)]))
    total = weighted.sum_lanes(axis=0)
    return (upper * total).scale_by(1.0 / (2.0 * k))


def bisect_inverse(engine: Engine, g: Callable, target: SecretFixed,
                   bracket: tuple | None = None,
                   tol_x: float | None = None,
                   max_doublings: int = 40):
    """Solve g(t) = target for nondecreasing g, entirely on shares.

    ``bracket`` is a public float pair straddling the root; without one the
    interval [-1, 1] is doubled obliviously ``max_doublings`` times. The
    bracket precondition g(a) <= target <= g(b) is enforced by a trusted
    check that reveals nothing on success. The loop runs the analytic
    iteration count ceil(log2(width / tol_x)) with oblivious interval
    updates; no value is opened. Returns (root, iterations).
    """
    tol = tol_x if tol_x is not None else engine.cfg.bisect_tol
    reps = _reps_like(target)

    if bracket is not None:
        lo, hi = float(bracket[0]), float(bracket[1])
        if not hi > lo:
            raise ConfigError("bracket must satisfy a < b")
        a = sf_const(engine, lo, reps)
        b = sf_const(engine, hi, reps)
        width = hi - lo
    else:
        a = sf_const(engine, -1.0, reps)
        b = sf_const(engine, 1.0, reps)
        for _ in range(max_doublings):
            need_lo = sf_lt(target, g(a))   # target below g(a): stretch left
            need_hi = sf_lt(g(b), target)   # target above g(b): stretch right
            a = sf_mux(need_lo, a.scale_by(2.0), a)
            b = sf_mux(need_hi, b.scale_by(2.0), b)
        width = 2.0 ** (max_doublings + 1)

    ok_lo = sf_not(sf_lt(target, g(a)))     # g(a) <= target
    ok_hi = sf_not(sf_lt(g(b), target))     # target <= g(b)
    both = engine.mul(ok_lo, ok_hi)
    _require_true(engine, both, "bisection bracket does not straddle the target")

    iterations = max(1, math.ceil(math.log2(width / tol)))
    for _ in range(iterations):
        mid = (a + b).scale_by(0.5)
        go_right = sf_lt(g(mid), target)    # g(mid) < target: root is right
        a = sf_mux(go_right, mid, a)
        b = sf_mux(go_right, b, mid)
    root = (a + b).scale_by(0.5)
    return root, iterations
