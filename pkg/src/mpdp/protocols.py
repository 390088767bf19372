"""Multiparty random-variate generation on the simulated engine.

Five samplers, each oblivious by construction because every bit of protocol
randomness enters through the XOR-combined per-party coins of the Bernoulli
protocol: an unbiased shared bit, a standard Gaussian built from a scaled
bit-sum (central limit construction), a uniform obtained by pushing that
Gaussian through its own distribution function (integrated on shares), the
generic inversion sampler with closed-form or bisection quantiles, and the
polar sampler for spherically symmetric exponential vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import Engine, SharedValue
from .errors import ConfigError, DomainError
from .secure_real import (
    FuncSpec,
    SecretFixed,
    bisect_inverse,
    normal_density,
    sf_abs,
    sf_const,
    sf_div,
    sf_exp,
    sf_ln,
    sf_lt,
    sf_mux,
    sf_not,
    sf_sqrt,
    trapezoid_integral,
)

__all__ = [
    "mp_bernoulli", "mp_gaussian01", "mp_uniform01", "mp_inverse_sample",
    "mp_radial_polar", "laplace_cdf", "exponential_cdf", "gamma_radial_cdf",
    "SamplerResult", "PolarSample",
]


@dataclass
class SamplerResult:
    """A sampler's opened output plus its per-party seed-bit cost."""

    values: np.ndarray
    seed_cost: dict
    iterations: int | None = None


@dataclass
class PolarSample:
    """Output of the polar sampler, with its radius/direction factors."""

    vector: list
    radius: SecretFixed
    direction: list


def mp_bernoulli(engine: Engine, count: int = 1) -> SharedValue:
    """Shared unbiased bit(s): XOR of one fresh coin from every party.

    The XOR is computed arithmetically (a + b - 2ab), so the result stays
    uniform as long as at least one party's coin is. Costs exactly ``count``
    seed bits per party. Output lane is (count, batch).
    """
    if engine.cfg.n_parties < 2:
        raise ConfigError("need at least two parties")
    acc = None
    for i in range(1, engine.cfg.n_parties + 1):
        bits = engine.seed_bits(i, count)
        acc = bits if acc is None else engine.xor(acc, bits)
    return acc


def mp_gaussian01(engine: Engine, clt_width: int | None = None) -> SecretFixed:
    """Approximate standard normal from a scaled sum of shared coins.

    With k coins, (sum - k/2) / (sqrt(k)/2) has mean 0 and variance 1 and
    converges to N(0,1); the output is supported on a lattice of spacing
    2/sqrt(k) inside [-sqrt(k), sqrt(k)].
    """
    k = clt_width if clt_width is not None else engine.cfg.clt_width
    if k < 16:
        raise ConfigError("clt_width must be >= 16")
    bits = mp_bernoulli(engine, count=k)
    total = engine.sum_lanes(bits, axis=0)
    fmt, p = engine.fmt, engine.cfg.prime
    coeff = fmt.encode(2.0 / math.sqrt(k), p)
    offset = fmt.encode(-math.sqrt(k), p)
    return SecretFixed(engine.linear(offset, [(coeff, total)]))


def mp_uniform01(engine: Engine, clt_width: int | None = None,
                 nodes: int | None = None, clamp: bool = True) -> SecretFixed:
    """Uniform draw on (0,1): a shared normal pushed through its own CDF.

    The CDF value is 1/2 plus the integral of the normal density from 0 to
    the draw, evaluated with the composite trapezoidal rule on shares. The
    result is optionally clamped one resolution step away from {0,1} so
    downstream quantile transforms stay finite.
    """
    xi = mp_gaussian01(engine, clt_width)
    mass = trapezoid_integral(engine, normal_density(), xi, nodes)
    u = mass.add_const(0.5)
    if clamp:
        res = engine.fmt.resolution
        lo = sf_const(engine, res)
        hi = sf_const(engine, 1.0 - res)
        u = sf_mux(sf_lt(u, lo), lo, u)
        u = sf_mux(sf_lt(hi, u), hi, u)
    return u


# ----------------------------------------------------------- distributions

def laplace_cdf(scale: float) -> FuncSpec:
    """Laplace(0, scale) CDF with its closed-form quantile on shares."""
    if scale <= 0:
        raise DomainError("scale must be positive")

    def inverse(u: SecretFixed) -> SecretFixed:
        eng = u.engine
        v = u.add_const(-0.5)
        negative = sf_lt(v, sf_const(eng, 0.0, _reps(u)))
        absv = sf_mux(negative, -v, v)
        w = absv.scale_by(-2.0).add_const(1.0)      # 1 - 2|u - 1/2|
        magnitude = sf_ln(w).scale_by(-scale)
        sign = eng.linear(1, [(-2, negative)])      # +1 or -1, unscaled
        return SecretFixed(eng.mul(sign, magnitude.shares))

    def density(t: SecretFixed) -> SecretFixed:
        return sf_exp(sf_abs(t).scale_by(-1.0 / scale)).scale_by(0.5 / scale)

    return FuncSpec(
        "laplace",
        plain=lambda t: 0.5 * math.exp(t / scale) if t < 0
        else 1.0 - 0.5 * math.exp(-t / scale),
        inverse_on_shares=inverse,
        inverse_plain=lambda q: -scale * math.copysign(1.0, q - 0.5)
        * math.log1p(-2.0 * abs(q - 0.5)),
        density=FuncSpec("laplace-density", density,
                         plain=lambda t: math.exp(-abs(t) / scale) / (2 * scale)),
        cdf_at_zero=0.5,
        bracket=(-15.0 * scale, 15.0 * scale),
    )


def exponential_cdf(rate: float) -> FuncSpec:
    """Exponential(rate) CDF with its closed-form quantile on shares."""
    if rate <= 0:
        raise DomainError("rate must be positive")

    def inverse(u: SecretFixed) -> SecretFixed:
        w = u.scale_by(-1.0).add_const(1.0)          # 1 - u
        return sf_ln(w).scale_by(-1.0 / rate)

    def density(t: SecretFixed) -> SecretFixed:
        return sf_exp(t.scale_by(-rate)).scale_by(rate)

    return FuncSpec(
        "exponential",
        plain=lambda t: 0.0 if t < 0 else 1.0 - math.exp(-rate * t),
        inverse_on_shares=inverse,
        inverse_plain=lambda q: -math.log1p(-q) / rate,
        density=FuncSpec("exponential-density", density,
                         plain=lambda t: rate * math.exp(-rate * t) if t >= 0 else 0.0),
        cdf_at_zero=0.0,
        bracket=(0.0, 15.0 / rate),
    )


def gamma_radial_cdf(shape: int, rate) -> FuncSpec:
    """CDF of the radius with density proportional to r^(shape-1) e^(-rate r).

    No closed-form quantile, so inversion goes through the bisection kernel
    against the running integral of the (un-normalized) density. ``rate``
    may be public or secret-shared.
    """
    if shape < 1:
        raise DomainError("shape must be a positive integer")
    secret_rate = isinstance(rate, SecretFixed)
    if not secret_rate and rate <= 0:
        raise DomainError("rate must be positive")

    def density(t: SecretFixed) -> SecretFixed:
        if secret_rate:
            reps = _reps(t)
            lam = rate.expand_lane(reps) if reps is not None else rate
            value = sf_exp(-(t * lam))
        else:
            value = sf_exp(t.scale_by(-float(rate)))
        for _ in range(shape - 1):
            value = value * t
        return value

    def density_plain(t):
        lam = None if secret_rate else float(rate)
        if t < 0 or lam is None:
            return 0.0
        return t ** (shape - 1) * math.exp(-lam * t)

    # far tail of the radius (mean + many deviations); keeping the bracket
    # tight matters because the quadrature step scales with its width
    upper = None if secret_rate else (shape + 9.0 * math.sqrt(shape)) / float(rate)
    return FuncSpec(
        "gamma-radial",
        density=FuncSpec("gamma-radial-density", density, plain=density_plain),
        cdf_at_zero=0.0,
        bracket=None if upper is None else (0.0, upper),
    )


def _reps(x: SecretFixed) -> int | None:
    return x.lane[0] if len(x.lane) > 1 else None


# --------------------------------------------------------------- inversion

def mp_inverse_sample(engine: Engine, dist: FuncSpec,
                      bracket: tuple | None = None,
                      u: SecretFixed | None = None,
                      nodes: int | None = None,
                      tol_x: float | None = None):
    """Draw from ``dist`` by inverting its CDF at a shared uniform.

    A closed-form quantile is applied directly when the spec has one.
    Otherwise the draw solves

        integral(density, 0..t) = u * total_mass + mass_below_zero

    with the bisection kernel; the masses come from the same trapezoidal
    integral, so nothing is normalized in plaintext and no value is opened.
    Returns (value, bisection iteration count or None).
    """
    if u is None:
        u = mp_uniform01(engine)
    if dist.inverse_on_shares is not None:
        return dist.inverse_on_shares(u), None

    if dist.density is None:
        raise ConfigError(f"{dist.name} has neither a quantile nor a density")
    br = bracket if bracket is not None else dist.bracket

    def running_mass(t: SecretFixed) -> SecretFixed:
        return trapezoid_integral(engine, dist.density, t, nodes)

    if br is not None:
        lo, hi = float(br[0]), float(br[1])
        mass_lo = (running_mass(sf_const(engine, lo, _reps(u)))
                   if lo != 0.0 else sf_const(engine, 0.0, _reps(u)))
        mass_hi = running_mass(sf_const(engine, hi, _reps(u)))
        total = mass_hi - mass_lo
        target = (u * total) + mass_lo
        root, iters = bisect_inverse(engine, running_mass, target,
                                     bracket=(lo, hi), tol_x=tol_x)
        return root, iters

    # no bracket anywhere: assume a normalized density and let the kernel
    # stretch its interval obliviously
    if dist.cdf_at_zero is None:
        raise ConfigError(f"{dist.name} needs a bracket or a zero-mass anchor")
    target = u.add_const(-dist.cdf_at_zero)
    root, iters = bisect_inverse(engine, running_mass, target,
                                 bracket=None, tol_x=tol_x)
    return root, iters


# ------------------------------------------------------------ polar method

def mp_radial_polar(engine: Engine, d: int, rate,
                    nodes: int | None = None,
                    tol_x: float | None = None) -> PolarSample:
    """Spherically symmetric vector with density proportional to e^(-rate*|x|).

    Direction: d independent shared normals, normalized. Radius: one draw
    from the density proportional to r^(d-1) e^(-rate r) via inversion. The
    product radius*direction has the target density. A degenerate direction
    (all lattice normals exactly zero) is obliviously replaced by the first
    basis vector; the event has vanishing probability mass.
    """
    if d < 1:
        raise DomainError("dimension must be >= 1")
    if not isinstance(rate, SecretFixed) and rate <= 0:
        raise DomainError("rate must be positive")

    normals = [mp_gaussian01(engine) for _ in range(d)]
    sq = None
    for nrm in normals:
        term = nrm * nrm
        sq = term if sq is None else sq + term
    tiny = sf_lt(sq, sf_const(engine, 2.0 ** -12))
    e_first = sf_const(engine, 1.0)
    zero = sf_const(engine, 0.0)
    one = sf_const(engine, 1.0)
    normals = [sf_mux(tiny, e_first if i == 0 else zero, nrm)
               for i, nrm in enumerate(normals)]
    sq = sf_mux(tiny, one, sq)
    norm = sf_sqrt(sq)
    direction = [sf_div(nrm, norm) for nrm in normals]

    radius, _ = mp_inverse_sample(engine, gamma_radial_cdf(d, rate),
                                  nodes=nodes, tol_x=tol_x)
    return PolarSample([radius * x for x in direction], radius, direction)
