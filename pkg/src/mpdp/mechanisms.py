"""Multiparty differential-privacy mechanisms built on the samplers.

Calibrated Gaussian noise from scaled shared coins, Laplace noise through the
inversion sampler, the discrete exponential mechanism by oblivious sequential
search, and its high-dimensional continuous counterpart via coordinate-wise
Gibbs resampling. A run-local budget ledger records (epsilon, delta) charges
and composes them additively.

The Gaussian noise construction scales the centered mean of k coins by
2*sqrt(k), which yields per-coordinate standard deviation sigma. The scaling
without the factor 2 (kept available as ``paper_literal``) produces sigma/2
because a fair coin has variance 1/4; both modes are tested so the
discrepancy stays documented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .engine import Engine, SharedValue
from .errors import ConfigError, DomainError
from .protocols import laplace_cdf, mp_bernoulli, mp_inverse_sample, mp_uniform01
from .secure_real import (
    FuncSpec,
    SecretFixed,
    sf_const,
    sf_exp,
    sf_input,
    sf_lt,
    sf_mux,
    sf_open,
)

__all__ = [
    "gaussian_sigma", "BudgetLedger", "accountant_compose",
    "CountingQuery", "ValueQuery",
    "mp_gaussian_mechanism", "mp_laplace_mechanism",
    "mp_exp_mechanism_discrete", "mp_exp_mechanism_gibbs",
    "MultivariateDensity", "spherical_gaussian_density",
]


def gaussian_sigma(eps: float, delta: float, l2_sens: float) -> float:
    """Noise scale sqrt(2 ln(1.25/delta)) * sens / eps, with a 0.1% margin.

    The bound is a strict infimum, so the returned value sits a hair above
    it rather than on it.
    """
    if eps <= 0:
        raise DomainError("epsilon must be positive")
    if not (0 < delta < 1):
        raise DomainError("delta must lie in (0, 1)")
    if l2_sens <= 0:
        raise DomainError("sensitivity must be positive")
    return 1.001 * math.sqrt(2.0 * math.log(1.25 / delta)) * l2_sens / eps


# ------------------------------------------------------------- accounting

@dataclass
class BudgetLedger:
    """Run-local record of privacy charges; totals are plain sums."""

    charges: list = dc_field(default_factory=list)

    def charge(self, eps: float, delta: float = 0.0, label: str = "") -> None:
        if eps < 0 or delta < 0:
            raise DomainError("charges must be nonnegative")
        self.charges.append({"eps": float(eps), "delta": float(delta),
                             "label": label})

    @property
    def totals(self) -> tuple:
        return accountant_compose([(c["eps"], c["delta"]) for c in self.charges])

    def to_dict(self) -> dict:
        eps, delta = self.totals
        return {"charges": list(self.charges),
                "eps_total": eps, "delta_total": delta}


def accountant_compose(charges) -> tuple:
    """Sequential composition: charge sums, exactly as accumulated."""
    eps = 0.0
    delta = 0.0
    for e, d in charges:
        eps += e
        delta += d
    return eps, delta


# ----------------------------------------------------------------- queries

class CountingQuery:
    """How many of the parties' scores clear a public threshold.

    Each score enters as a private fixed-point input; the per-score indicator
    comes from one comparison gate and the indicators sum locally. Worst-case
    change from one score is 1, hence unit sensitivity.
    """

    dims = 1
    sensitivity_l1 = 1.0
    sensitivity_l2 = 1.0

    def __init__(self, threshold: float):
        self.threshold = threshold

    def evaluate(self, engine: Engine, inputs: dict) -> list:
        counted = None
        thr = sf_const(engine, self.threshold)
        for party, scores in sorted(inputs.items()):
            for score in scores:
                s = sf_input(engine, party, float(score))
                below = sf_lt(s, thr)
                hit = engine.linear(1, [(-1, below)])  # score >= threshold
                counted = hit if counted is None else engine.linear(
                    0, [(1, counted), (1, hit)])
        if counted is None:
            raise ConfigError("counting query needs at least one score")
        # unscaled count -> fixed-point value
        raw = engine.linear(0, [(engine.fmt.scale, counted)])
        return [SecretFixed(raw)]

    def plain_value(self, inputs: dict) -> float:
        return float(sum((np.asarray(v) >= self.threshold).sum()
                         for v in inputs.values()))


class ValueQuery:
    """Coordinate-wise sum of per-party real vectors (declared sensitivity)."""

    def __init__(self, dims: int, l1_sens: float, l2_sens: float):
        self.dims = dims
        self.sensitivity_l1 = l1_sens
        self.sensitivity_l2 = l2_sens

    def evaluate(self, engine: Engine, inputs: dict) -> list:
        out = []
        for j in range(self.dims):
            acc = None
            for party, vec in sorted(inputs.items()):
                x = sf_input(engine, party, float(vec[j]))
                acc = x if acc is None else acc + x
            out.append(acc)
        return out

    def plain_value(self, inputs: dict) -> np.ndarray:
        return np.sum([np.asarray(v, dtype=float) for v in inputs.values()],
                      axis=0)


# -------------------------------------------------------------- mechanisms

def mp_gaussian_mechanism(engine: Engine, query, inputs: dict, sigma: float,
                          paper_literal: bool = False,
                          clt_width: int | None = None,
                          ledger: BudgetLedger | None = None,
                          eps: float | None = None,
                          delta: float | None = None) -> np.ndarray:
    """Open query values plus centered coin-sum noise of scale sigma.

    Everything after the coins is affine, so the noise costs k seed bits per
    party per coordinate and no extra interaction.
    """
    if sigma < 0:
        raise DomainError("sigma must be nonnegative")
    k = clt_width if clt_width is not None else engine.cfg.clt_width
    fx = query.evaluate(engine, inputs)
    fmt, p = engine.fmt, engine.cfg.prime
    outs = []
    for f_j in fx:
        bits = mp_bernoulli(engine, count=k)
        total = engine.sum_lanes(bits, axis=0)
        if paper_literal:
            c1, c0 = sigma / math.sqrt(k), -sigma * math.sqrt(k) / 2.0
        else:
            c1, c0 = 2.0 * sigma / math.sqrt(k), -sigma * math.sqrt(k)
        noise = SecretFixed(engine.linear(fmt.encode(c0, p),
                                          [(fmt.encode(c1, p), total)]))
        outs.append(sf_open(engine, f_j + noise))
    if ledger is not None and eps is not None:
        ledger.charge(eps, delta if delta is not None else 0.0, "gaussian")
    return np.stack(outs, axis=0)


def mp_laplace_mechanism(engine: Engine, query, inputs: dict, eps: float,
                         l1_sens: float | None = None,
                         clt_width: int | None = None,
                         ledger: BudgetLedger | None = None) -> np.ndarray:
    """Open query values plus Laplace(sens/eps) noise from inversion."""
    if eps <= 0:
        raise DomainError("epsilon must be positive")
    sens = l1_sens if l1_sens is not None else query.sensitivity_l1
    scale = sens / eps
    fx = query.evaluate(engine, inputs)
    outs = []
    for f_j in fx:
        u = mp_uniform01(engine, clt_width)
        noise, _ = mp_inverse_sample(engine, laplace_cdf(scale), u=u)
        outs.append(sf_open(engine, f_j + noise))
    if ledger is not None:
        ledger.charge(eps, 0.0, "laplace")
    return np.stack(outs, axis=0)


def mp_exp_mechanism_discrete(engine: Engine, utilities: list, eps: float,
                              du: float,
                              clt_width: int | None = None,
                              ledger: BudgetLedger | None = None) -> np.ndarray:
    """Sample an index from {1..R} with weight exp(eps*u_i / (2 du)).

    Oblivious sequential search: one shared uniform scaled by the weight sum,
    then R-1 comparison gates accumulate the opened index. Utilities are
    shifted by their shared maximum before exponentiation (the weights are
    shift-invariant), which keeps the exponent inside the narrow fixed-point
    range.
    """
    if eps <= 0 or du <= 0:
        raise DomainError("epsilon and utility sensitivity must be positive")
    if len(utilities) < 1:
        raise ConfigError("need at least one candidate")
    rate = eps / (2.0 * du)

    top = utilities[0]
    for cand in utilities[1:]:
        better = sf_lt(top, cand)
        top = sf_mux(better, cand, top)
    weights = [sf_exp((u_i - top).scale_by(rate)) for u_i in utilities]

    total = weights[0]
    for w in weights[1:]:
        total = total + w
    u = mp_uniform01(engine, clt_width)
    threshold = u * total

    index = engine.share_const(1)
    partial = weights[0]
    for k in range(2, len(utilities) + 1):
        step = sf_lt(partial, threshold)
        index = engine.linear(0, [(1, index), (1, step)])
        partial = partial + weights[k - 1]
    out = engine.open(index)
    if ledger is not None:
        ledger.charge(eps, 0.0, "exponential-discrete")
    return out


# --------------------------------------------------------- gibbs mechanism

@dataclass
class MultivariateDensity:
    """Un-normalized density over R^dims, evaluable coordinate-wise on shares."""

    dims: int
    on_shares: callable
    plain: callable | None = None


def spherical_gaussian_density(dims: int, coeff: float = 1.0) -> MultivariateDensity:
    """Density proportional to exp(-coeff * sum of squares)."""

    def on_shares(coords):
        total = None
        for c in coords:
            sq = c * c
            total = sq if total is None else total + sq
        return sf_exp(total.scale_by(-coeff))

    def plain(xs):
        return math.exp(-coeff * sum(x * x for x in xs))

    return MultivariateDensity(dims, on_shares, plain)


def mp_exp_mechanism_gibbs(engine: Engine, density: MultivariateDensity,
                           sweeps: int, init, support_box,
                           nodes: int | None = None,
                           tol_x: float | None = None,
                           clt_width: int | None = None,
                           eps: float | None = None,
                           ledger: BudgetLedger | None = None) -> np.ndarray:
    """Gibbs chain over the shared density; returns the final opened sweep.

    Coordinates resample in order from their full conditionals; each draw is
    one inversion against the running integral of the conditional slice over
    the public support box (the un-normalized mass cancels through the
    uniform scaling, so no plaintext normalization happens anywhere).
    """
    k = density.dims
    if sweeps < 0:
        raise ConfigError("sweep count must be nonnegative")
    if len(support_box) != k:
        raise ConfigError("support box must give bounds per dimension")
    init = list(init)
    if len(init) != k - 1:
        raise ConfigError("initial point fixes the first dims-1 coordinates")

    coords = [sf_const(engine, float(v)) for v in init] + [None]

    def conditional(j: int) -> FuncSpec:
        def on_shares(t: SecretFixed) -> SecretFixed:
            reps = t.lane[0] if len(t.lane) > 1 else None
            slice_coords = []
            for idx in range(k):
                if idx == j:
                    slice_coords.append(t)
                else:
                    c = coords[idx]
                    slice_coords.append(c.expand_lane(reps)
                                        if reps is not None else c)
            return density.on_shares(slice_coords)

        return FuncSpec(f"conditional-{j}",
                        density=FuncSpec(f"conditional-{j}-density", on_shares))

    def resample(j: int) -> None:
        lo, hi = support_box[j]
        u = mp_uniform01(engine, clt_width)
        value, _ = mp_inverse_sample(engine, conditional(j),
                                     bracket=(float(lo), float(hi)),
                                     u=u, nodes=nodes, tol_x=tol_x)
        coords[j] = value

    resample(k - 1)
    for _ in range(sweeps):
        for j in range(k):
            resample(j)

    out = np.stack([sf_open(engine, c) for c in coords], axis=0)
    if ledger is not None and eps is not None:
        ledger.charge(eps, 0.0, "exponential-gibbs")
    return out
