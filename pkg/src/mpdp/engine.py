"""Simulated n-party honest-but-curious execution over Shamir sharing.

One Engine instance is one protocol run. Values are secret-shared across n
simulated parties; interactive gates (multiplication, opening) exchange
messages that are recorded into per-party views, and the real-number
primitives the protocols assume (comparison, division, exponentiation, ...)
are realized as trusted ideal-functionality gates that reshare their result
without exposing plaintext to any view.

Everything is deterministic given (config, master seed, inputs): each party
owns counter-based generators keyed by (master seed, party index, stream), so
re-running a configuration reproduces outputs and transcripts bit for bit.

A trailing batch dimension lets B independent protocol instances execute in
lock step on vectorized share arrays; per-instance semantics are unchanged.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .backend import Backend
from .errors import ConfigError, IntegrityError
from .field import PrimeField, lagrange_weights, DEFAULT_PRIME
from .fixedpoint import FixedPointFormat

_STREAM_SEED = 0
_STREAM_PROTO = 1
_STREAM_TRUSTED = 2


@dataclass(frozen=True)
class EngineConfig:
    """Public parameters of a run; echoed into every transcript."""

    n_parties: int = 3
    threshold: int = 1
    prime: int = DEFAULT_PRIME
    total_bits: int = 40
    frac_bits: int = 20
    clt_width: int = 1024
    trapezoid_nodes: int = 64
    bisect_tol: float = 2.0 ** -16
    master_seed: int = 0
    check_seed_bits: bool = False
    scheduler: str = "sequential"
    record_views: bool = True
    verify_openings: bool = True

    def validate(self) -> None:
        if not (0 < self.threshold < self.n_parties):
            raise ConfigError(
                f"need 0 < t < n, got t={self.threshold}, n={self.n_parties}")
        if 2 * self.threshold >= self.n_parties:
            raise ConfigError(
                "multiplication needs 2t < n "
                f"(t={self.threshold}, n={self.n_parties})")
        if self.n_parties >= self.prime:
            raise ConfigError("need n < p")
        # Shares of fixed-point values must leave statistical headroom above
        # the raw range; 20 slack bits keeps the default prime admissible.
        if self.prime <= (1 << (self.total_bits + 20)):
            raise ConfigError(
                f"prime must exceed 2^(total_bits+20) = 2^{self.total_bits + 20}")
        if self.scheduler not in ("sequential", "threads"):
            raise ConfigError(f"unknown scheduler {self.scheduler!r}")
        if self.trapezoid_nodes < 2:
            raise ConfigError("trapezoid_nodes must be >= 2")
        if not (0 < self.bisect_tol < 1):
            raise ConfigError("bisect_tol must be in (0, 1)")
        FixedPointFormat(self.total_bits, self.frac_bits)  # validates itself

    def to_dict(self) -> dict:
        return {
            "n_parties": self.n_parties,
            "threshold": self.threshold,
            "prime": self.prime,
            "total_bits": self.total_bits,
            "frac_bits": self.frac_bits,
            "clt_width": self.clt_width,
            "trapezoid_nodes": self.trapezoid_nodes,
            "bisect_tol": self.bisect_tol,
            "master_seed": self.master_seed,
            "check_seed_bits": self.check_seed_bits,
            "scheduler": self.scheduler,
        }


class SeedLedger:
    """Per-party count of consumed seed bits (per protocol instance)."""

    def __init__(self, n: int):
        self.counts = {i: 0 for i in range(1, n + 1)}

    def charge(self, party: int, bits: int) -> None:
        self.counts[party] += bits

    def snapshot(self) -> dict:
        return dict(self.counts)

    def delta(self, before: dict) -> dict:
        return {i: self.counts[i] - before.get(i, 0) for i in self.counts}


@dataclass
class PartyView:
    """What one party sees during a run: its inputs, seed, traffic, output."""

    index: int
    inputs: list = dc_field(default_factory=list)
    seed_bits: list = dc_field(default_factory=list)
    received: list = dc_field(default_factory=list)
    opened: list = dc_field(default_factory=list)
    gate_events: list = dc_field(default_factory=list)
    output: object = None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "inputs": [_jsonable(v) for v in self.inputs],
            "seed_bits": [_jsonable(v) for v in self.seed_bits],
            "received": [_jsonable(v) for v in self.received],
            "opened": [_jsonable(v) for v in self.opened],
            "gate_events": [_jsonable(v) for v in self.gate_events],
            "output": _jsonable(self.output),
        }


class Party:
    """Simulated participant: index, deterministic bit sources, view."""

    def __init__(self, index: int, master_seed: int,
                 seed_override: Sequence[int] | None = None):
        self.index = index
        self.seed_rng = _make_rng(master_seed, index, _STREAM_SEED)
        self.proto_rng = _make_rng(master_seed, index, _STREAM_PROTO)
        self.view = PartyView(index)
        if seed_override is not None:
            pattern = np.asarray(list(seed_override), dtype=np.uint64)
            if pattern.size == 0 or np.any(pattern > 1):
                raise ConfigError("seed override must be a nonempty bit pattern")
            self.seed_override = pattern
        else:
            self.seed_override = None
        self._override_cursor = 0

    def draw_seed_bits(self, count: int, lane: tuple) -> np.ndarray:
        """Next ``count`` seed bits, one (count, *lane) block.

        With an override installed the party's stream is replaced by the
        frozen pattern (cycled), identical across batch lanes.
        """
        if self.seed_override is None:
            return self.seed_rng.integers(0, 2, size=(count,) + lane,
                                          dtype=np.uint64)
        idx = (self._override_cursor + np.arange(count)) % self.seed_override.size
        self._override_cursor = int((self._override_cursor + count)
                                    % self.seed_override.size)
        bits = self.seed_override[idx]
        return np.broadcast_to(bits.reshape((count,) + (1,) * len(lane)),
                               (count,) + lane).copy()


def _make_rng(master_seed: int, party: int, stream: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(party, stream))
    return np.random.Generator(np.random.Philox(seq))


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


class SharedValue:
    """Handle to a secret-shared array: row i-1 holds party i's shares.

    ``data`` has shape (n, *lane). Lane axes are per-instance payload; all
    gates act elementwise over them.
    """

    __slots__ = ("engine", "handle", "data")

    def __init__(self, engine: "Engine", handle: int, data: np.ndarray):
        self.engine = engine
        self.handle = handle
        self.data = data

    @property
    def lane(self) -> tuple:
        return self.data.shape[1:]

    def reshape_lane(self, shape: tuple) -> "SharedValue":
        n = self.data.shape[0]
        return self.engine._register(self.data.reshape((n,) + tuple(shape)),
                                     kind="reshape", parents=[self.handle])

    def squeeze_lane(self, axis: int = 0) -> "SharedValue":
        n = self.data.shape[0]
        return self.engine._register(self.data.reshape(
            (n,) + self.lane[:axis] + self.lane[axis + 1:]),
            kind="reshape", parents=[self.handle])

    def expand_lane(self, reps: int) -> "SharedValue":
        """Tile a (B,)-lane sharing to (reps, B); shares stay valid."""
        data = np.broadcast_to(self.data[:, None, ...],
                               (self.data.shape[0], reps) + self.lane).copy()
        return self.engine._register(data, kind="reshape", parents=[self.handle])


class Engine:
    """One simulated multiparty run (optionally batched over instances)."""

    def __init__(self, config: EngineConfig, batch: int = 1,
                 seed_overrides: dict | None = None):
        config.validate()
        self.cfg = config
        self.batch = int(batch)
        self.lane = (self.batch,)
        self.be = Backend(config.prime)
        self.field = PrimeField(config.prime)
        self.fmt = FixedPointFormat(config.total_bits, config.frac_bits)
        n = config.n_parties
        overrides = seed_overrides or {}
        bad = set(overrides) - set(range(1, n + 1))
        if bad:
            raise ConfigError(f"seed override for unknown parties {sorted(bad)}")
        self.parties = [Party(i, config.master_seed, overrides.get(i))
                        for i in range(1, n + 1)]
        self.trusted_rng = _make_rng(config.master_seed, 0, _STREAM_TRUSTED)
        self.ledger = SeedLedger(n)
        self.gates: list[dict] = []
        self.outputs: object = None
        self._next_handle = 0
        self._abscissas = list(range(1, n + 1))
        # recombination weights for degree-(<= n-1) interpolation at 0
        self._w_all = lagrange_weights(self.field, self._abscissas, 0)
        head = self._abscissas[: config.threshold + 1]
        self._w_open = lagrange_weights(self.field, head, 0)
        self._w_verify = [
            lagrange_weights(self.field, head, x)
            for x in self._abscissas[config.threshold + 1:]
        ]
        if config.scheduler == "threads":
            self._pool = ThreadPoolExecutor(max_workers=n)
        else:
            self._pool = None

    # ------------------------------------------------------------------ util

    def _register(self, data: np.ndarray, kind: str, parents: list,
                  meta: dict | None = None) -> SharedValue:
        sv = SharedValue(self, self._next_handle, data)
        self._next_handle += 1
        entry = {"id": len(self.gates), "kind": kind,
                 "in": list(parents), "out": sv.handle}
        if meta:
            entry["meta"] = meta
        self.gates.append(entry)
        return sv

    def _log(self, kind: str, parents: list, meta: dict | None = None) -> dict:
        entry = {"id": len(self.gates), "kind": kind, "in": list(parents)}
        if meta:
            entry["meta"] = meta
        self.gates.append(entry)
        return entry

    def _map_parties(self, fn: Callable, args: list) -> list:
        """Run one pure task per party; order of results is by party index.

        Tasks must not touch engine state; with the thread scheduler they run
        concurrently and the transcript must come out identical.
        """
        if self._pool is None:
            return [fn(a) for a in args]
        return list(self._pool.map(fn, args))

    def _fresh_sharing(self, values: np.ndarray, rng) -> np.ndarray:
        """Dealer-side sharing of a plaintext lane array (degree t)."""
        t = self.cfg.threshold
        coeffs = [self.be.random(rng, values.shape) for _ in range(t)]
        rows = []
        for x in self._abscissas:
            acc = values
            xp = 1
            for c in coeffs:
                xp = self.field.mul(xp, x)
                acc = self.be.add(acc, self.be.mul_scalar(c, xp))
            rows.append(acc)
        return np.stack(rows, axis=0)

    def _reconstruct(self, data: np.ndarray) -> np.ndarray:
        """Interpolate lane values at 0 from the first t+1 rows.

        When more rows exist and opening verification is on, they are checked
        against the interpolated polynomial (no error correction).
        """
        t = self.cfg.threshold
        acc = self.be.mul_scalar(data[0], self._w_open[0])
        for row, w in zip(data[1: t + 1], self._w_open[1:]):
            acc = self.be.add(acc, self.be.mul_scalar(row, w))
        if self.cfg.verify_openings:
            for extra, ws in zip(data[t + 1:], self._w_verify):
                pred = self.be.mul_scalar(data[0], ws[0])
                for row, w in zip(data[1: t + 1], ws[1:]):
                    pred = self.be.add(pred, self.be.mul_scalar(row, w))
                if not np.array_equal(pred, extra):
                    raise IntegrityError("shares do not lie on one polynomial")
        return acc

    # ----------------------------------------------------------------- gates

    def input_secret(self, party_index: int, values) -> SharedValue:
        """Stage-I input: the owner deals a fresh sharing of its private value."""
        party = self.parties[party_index - 1]
        values = self._lane_array(values)
        data = self._fresh_sharing(values, party.proto_rng)
        sv = self._register(data, "input", [], {"party": party_index})
        if self.cfg.record_views:
            party.view.inputs.append({"handle": sv.handle, "values": values})
        return sv

    def share_const(self, value) -> SharedValue:
        """Public constant as the constant polynomial (every share equals it)."""
        values = self._lane_array(value)
        data = np.stack([values] * self.cfg.n_parties, axis=0)
        return self._register(data, "const", [])

    def _lane_array(self, values) -> np.ndarray:
        arr = self.be.asarray(values)
        if arr.ndim == 0:
            arr = np.broadcast_to(arr, self.lane).copy()
        return arr

    def linear(self, c0, terms: Sequence[tuple]) -> SharedValue:
        """Local affine gate: c0 + sum(coeff_k * sharing_k).

        Coefficients are public ints (or arrays broadcastable over the lane);
        no communication happens and the degree does not grow.
        """
        if not terms:
            out = self.share_const(c0)
            return out
        lane = terms[0][1].lane
        for _, sv in terms:
            if sv.data.shape[0] != self.cfg.n_parties:
                raise ConfigError("sharing has wrong party count")
        acc = None
        for coeff, sv in terms:
            if np.isscalar(coeff) or isinstance(coeff, int):
                contrib = self.be.mul_scalar(sv.data, int(coeff))
            else:
                coeff = self.be.asarray(coeff)
                contrib = self.be.mul(sv.data, np.broadcast_to(
                    coeff, sv.data.shape).copy())
            acc = contrib if acc is None else self.be.add(acc, contrib)
        if not (np.isscalar(c0) and c0 == 0):
            acc = self.be.add(acc, np.broadcast_to(
                self._lane_array(c0), acc.shape))
        return self._register(acc, "linear",
                              [sv.handle for _, sv in terms])

    def mul(self, a: SharedValue, b: SharedValue) -> SharedValue:
        """Interactive product: local degree-2t product, reshare, recombine.

        One communication round: each party deals a fresh degree-t sharing of
        its local product and everyone linearly recombines the received
        shares with the public interpolation weights.
        """
        n, t = self.cfg.n_parties, self.cfg.threshold
        if 2 * t >= n:
            raise ConfigError("multiplication needs 2t < n")
        if a.lane != b.lane:
            raise ConfigError(f"lane mismatch {a.lane} vs {b.lane}")

        def phase1(i):
            local = self.be.mul(a.data[i], b.data[i])
            return self._fresh_sharing(local, self.parties[i].proto_rng)

        resharings = self._map_parties(phase1, list(range(n)))
        gate = self._log("mul", [a.handle, b.handle])
        if self.cfg.record_views:
            for sender in range(n):
                for recipient in range(n):
                    self.parties[recipient].view.received.append({
                        "gate": gate["id"], "from": sender + 1,
                        "payload": resharings[sender][recipient],
                    })

        def phase2(j):
            acc = None
            for i in range(n):
                contrib = self.be.mul_scalar(resharings[i][j], self._w_all[i])
                acc = contrib if acc is None else self.be.add(acc, contrib)
            return acc

        rows = self._map_parties(phase2, list(range(n)))
        out = SharedValue(self, self._next_handle, np.stack(rows, axis=0))
        self._next_handle += 1
        gate["out"] = out.handle
        return out

    def open(self, a: SharedValue) -> np.ndarray:
        """Broadcast all shares so every party learns the value."""
        value = self._reconstruct(a.data)
        self._log("open", [a.handle])
        if self.cfg.record_views:
            for party in self.parties:
                party.view.opened.append({"handle": a.handle, "values": value})
        return value

    def seed_bits(self, party_index: int, count: int) -> SharedValue:
        """The party draws ``count`` uniform bits and shares each of them.

        Output lane is (count, batch). The seed ledger is charged ``count``
        bits (per protocol instance). Part of the party's own view.
        """
        if count < 1:
            raise ConfigError("count must be >= 1")
        party = self.parties[party_index - 1]
        bits = party.draw_seed_bits(count, self.lane)
        self.ledger.charge(party_index, count)
        data = self._fresh_sharing(self.be.asarray(bits), party.proto_rng)
        sv = self._register(data, "seed", [], {"party": party_index,
                                               "bits": count})
        if self.cfg.record_views:
            party.view.seed_bits.append({"handle": sv.handle, "bits": bits})
        if self.cfg.check_seed_bits:
            self.bit_check(sv)
        return sv

    def local_seed_bits(self, party_index: int, count: int) -> np.ndarray:
        """Seed bits the party keeps local (no sharing). Ledger still charged."""
        if count < 1:
            raise ConfigError("count must be >= 1")
        party = self.parties[party_index - 1]
        bits = party.draw_seed_bits(count, self.lane)
        self.ledger.charge(party_index, count)
        self._log("seed-local", [], {"party": party_index, "bits": count})
        if self.cfg.record_views:
            party.view.seed_bits.append({"handle": None, "bits": bits})
        return bits

    def bit_check(self, sv: SharedValue) -> None:
        """Verify a shared value satisfies x^2 = x by opening the difference."""
        sq = self.mul(sv, sv)
        diff = self.linear(0, [(1, sq), (-1, sv)])
        self.gates[-1]["kind"] = "bit-check"
        value = self.open(diff)
        if np.any(value != 0):
            raise IntegrityError("shared input is not a bit (x^2 != x)")

    def xor(self, a: SharedValue, b: SharedValue) -> SharedValue:
        """XOR of shared bits, arithmetically: a + b - 2ab."""
        prod = self.mul(a, b)
        return self.linear(0, [(1, a), (1, b), (-2, prod)])

    def ideal_gate(self, kind: str, inputs: Sequence[SharedValue],
                   fn: Callable, n_out: int = 1,
                   meta: dict | None = None):
        """Trusted evaluation of ``fn`` over the reconstructed inputs.

        The evaluator sees plaintext invisibly to all parties, computes, and
        returns fresh random sharings. Only the gate kind and handles are
        logged; values never enter any view. Stand-in for the assumed
        fixed-point sub-protocols.
        """
        plain = [self._reconstruct(sv.data) for sv in inputs]
        results = fn(plain)
        if not isinstance(results, (list, tuple)):
            results = [results]
        if len(results) != n_out:
            raise ConfigError(f"ideal gate {kind} returned {len(results)} values,"
                              f" expected {n_out}")
        outs = []
        gate = self._log(f"ideal:{kind}", [sv.handle for sv in inputs], meta)
        for values in results:
            data = self._fresh_sharing(self.be.asarray(values), self.trusted_rng)
            sv = SharedValue(self, self._next_handle, data)
            self._next_handle += 1
            outs.append(sv)
        gate["out"] = [sv.handle for sv in outs]
        if self.cfg.record_views:
            for party in self.parties:
                party.view.gate_events.append(
                    {"gate": gate["id"], "kind": f"ideal:{kind}"})
        return outs[0] if n_out == 1 else outs

    def sum_lanes(self, sv: SharedValue, axis: int = 0) -> SharedValue:
        """Local modular sum over one lane axis (share of the sum)."""
        data = self.be.sum_axis(sv.data, axis=axis + 1)
        return self._register(data, "linear", [sv.handle], {"op": "lane-sum"})

    def set_output(self, values) -> None:
        """Record the public protocol output into every view (all equal)."""
        self.outputs = values
        if self.cfg.record_views:
            for party in self.parties:
                party.view.output = values

    # ------------------------------------------------------------ transcript

    def transcript(self) -> "Transcript":
        return Transcript(
            config=self.cfg.to_dict(),
            batch=self.batch,
            gates=self.gates,
            views={p.index: p.view for p in self.parties},
            seed_ledger=self.ledger.snapshot(),
            seed_overrides=sorted(p.index for p in self.parties
                                  if p.seed_override is not None),
            outputs=self.outputs,
            views_recorded=self.cfg.record_views,
        )


@dataclass
class Transcript:
    """Complete record of one run: gate log, per-party views, seed ledger."""

    config: dict
    batch: int
    gates: list
    views: dict
    seed_ledger: dict
    seed_overrides: list
    outputs: object
    views_recorded: bool

    def open_gate_inputs(self) -> set:
        """Handles that were ever fed to an opening gate."""
        return {h for g in self.gates if g["kind"] == "open" for h in g["in"]}

    def gate_kinds(self) -> list:
        return [g["kind"] for g in self.gates]

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "batch": self.batch,
            "gates": _jsonable(self.gates),
            "views": {i: v.to_dict() for i, v in self.views.items()},
            "seed_ledger": self.seed_ledger,
            "seed_overrides": self.seed_overrides,
            "outputs": _jsonable(self.outputs),
            "views_recorded": self.views_recorded,
        }

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=indent)


@dataclass
class ProtocolRun:
    outputs: object
    transcript: Transcript
    ledger: dict


def run_protocol(config: EngineConfig, program: Callable, inputs=None,
                 batch: int = 1, seed_overrides: dict | None = None) -> ProtocolRun:
    """Execute ``program(engine, inputs)`` inside a fresh engine.

    The program's return value becomes the public output, recorded into every
    party view. Returns the outputs together with the transcript and the
    final seed-ledger snapshot.
    """
    engine = Engine(config, batch=batch, seed_overrides=seed_overrides)
    outputs = program(engine, inputs) if inputs is not None else program(engine)
    engine.set_output(outputs)
    return ProtocolRun(outputs, engine.transcript(), engine.ledger.snapshot())
