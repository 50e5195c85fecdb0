"""Packet-pipelined scheme execution over the bit-exact channel.

The run is split into two layers:

* A *schedule builder* walks the four-phase timeline symbolically.  Every
  transmitted level is a set of payload-bit references (an XOR combination),
  receptions are computed through the same shift-and-superpose geometry as
  the value channel, and decoding is modelled as knowledge-set propagation:
  a node may learn a bit only from a reception in which every other
  contributing bit is already in its knowledge set.  The builder asserts
  causality and side-information soundness and emits an explicit list of
  decode steps.
* An *engine* evaluates the schedule on concrete payload bits, pushing real
  GfVec signals through first_hop/second_hop and executing the decode steps
  against the actually received vectors.  verify_trace replays a recorded
  trace through the same engine and reports the first point where the
  recording deviates from what the protocol would have produced.

Timeline (packet i): phase 1 at slot 2i-1 and phase 4 at slot 2i+2 are
hop-1 uses; phases 2 and 3 at slots 2i and 2i+1 are hop-2 uses.  Every slot
carries one hop-1 and one hop-2 transmission; consecutive packets overlap.
After the last phase-4 slot the relays drain their forwarding queues.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from .allocation import (
    ALL_SCHEMES,
    SCHEME_FBXW,
    SCHEME_NOFB_MID,
    SCHEME_RSS,
    SCHEME_RSW,
    BitAllocation,
    RegimeError,
    allocate,
    level_map,
)
from .channel import ChannelDomainError, ChannelParams, GfVec, first_hop, second_hop
from .midcode import MidCode, build_mid_code
from .rates import Regime, pos, r_nom, regime_of

SIGNALS = (
    "X_S1", "X_S2", "Y_R1", "Y_R2", "X_R1", "X_R2",
    "Y_D1", "Y_D2", "Y_S1", "Y_S2",
)
_TX_NODE = {"X_S1": "S1", "X_S2": "S2", "X_R1": "R1", "X_R2": "R2"}
_NODES = ("S1", "S2", "R1", "R2", "D1", "D2")

DEFAULT_SEED = 1009
WARMUP_PACKETS = 2


class PipelineError(AssertionError):
    """Internal scheduling invariant violated (a bug, not bad input)."""


# --- symbolic level algebra (mirrors channel.shift / superposition) --------

def _sym_shift(levels, k):
    return ((frozenset(),) * (len(levels) - k)) + tuple(levels[:k])


def _sym_add(a, b):
    return tuple(x ^ y for x, y in zip(a, b))


@dataclass(frozen=True)
class Emit:
    """One transmitted level: an XOR of payload bits plus how to produce it.

    mode 'known': the transmitter XORs bit values it already holds.
    mode 'echo': the transmitter replays a previously received level value,
    after cancelling the ``cancel`` bits it knows (received combination
    forwarding).
    """

    refs: frozenset
    mode: str = "known"
    echo_src: tuple = None
    cancel: frozenset = frozenset()


@dataclass(frozen=True)
class DecodeStep:
    node: str
    slot: int
    obs: tuple                  # ((signal, slot, pos), ...)
    side: frozenset             # bits XOR-cancelled out of the observation
    target: tuple
    deliver: bool = False


@dataclass
class Schedule:
    scheme: str
    p: ChannelParams
    packets: int
    alloc: BitAllocation
    code: MidCode
    n_slots: int
    tx: dict                    # (signal, slot) -> tuple of Emit-or-None
    steps: dict                 # slot -> [DecodeStep] in execution order
    payload_refs: tuple
    deliveries: tuple           # (slot, dest, ref)
    feedback_levels: dict       # (relay signal, slot) -> ((level, coop j), ...)
    formula_rate: int


def _ref_order_packet(alloc: BitAllocation, packets: int):
    kinds = (
        ("n1", alloc.noncoop), ("cp", alloc.coop), ("v1", alloc.private),
        ("n4", alloc.noncoop), ("v4", alloc.private),
    )
    refs = []
    for pkt in range(1, packets + 1):
        for src in (1, 2):
            for kind, count in kinds:
                refs.extend((src, pkt, kind, j) for j in range(count))
    return tuple(refs)


class _PacketBuilder:
    """Schedule construction for the fbxw / rsw / rss pipelines."""

    def __init__(self, scheme: str, p: ChannelParams, packets: int):
        self.scheme = scheme
        self.p = p
        self.packets = packets
        self.alloc = allocate(scheme, p)
        self.lmap1 = level_map(self.alloc, p, 1)
        self.lmap4 = level_map(self.alloc, p, 4)
        self.fb_plan = self._feedback_plan()
        self.know = {node: set() for node in _NODES}
        self.payload_refs = _ref_order_packet(self.alloc, packets)
        self.refs_by_packet = {}
        for ref in self.payload_refs:
            self.know[f"S{ref[0]}"].add(ref)
            self.refs_by_packet.setdefault((ref[0], ref[1]), []).append(ref)
        self.fifo = {"R1": deque(), "R2": deque()}
        self.pending = {"R1": [], "R2": []}
        self.echo = {"S1": {}, "S2": {}}
        self.residual_store = {}
        self.tx = {}
        self.steps = {}
        self.deliveries = []
        self.delivered = {}
        self.feedback_levels = {}

    # -- static plans -------------------------------------------------------

    def _feedback_plan(self):
        p, cp = self.p, self.alloc.coop
        plans = {2: (), 3: ()}
        if cp == 0:
            return plans
        if self.scheme == SCHEME_FBXW:
            first = (cp + 1) // 2
            assert first <= min(p.mbar, p.f)
            plans[2] = tuple((lvl, lvl) for lvl in range(first))
            plans[3] = tuple((lvl, first + lvl) for lvl in range(cp - first))
            return plans
        loss = pos(p.nbar - p.f)
        bottom = min(cp, 2 * loss)
        top = cp - bottom
        top2, bot2 = (top + 1) // 2, (bottom + 1) // 2
        assert top2 <= min(p.nbar, p.f) and bot2 <= loss
        j = 0
        for phase, (kt, kb) in ((2, (top2, bot2)), (3, (top - top2, bottom - bot2))):
            levels = list(range(kt)) + [p.nbar - kb + i for i in range(kb)]
            plans[phase] = tuple((lvl, j + off) for off, lvl in enumerate(levels))
            j += len(levels)
        return plans

    # forward candidates are the destination-visible levels; levels already
    # holding feedback are skipped at fill time (in fbxw the coop lane is
    # itself forward payload, in rsw/rss it is lost to rate splitting)

    # -- knowledge propagation ----------------------------------------------

    def _add_step(self, slot, step):
        self.steps.setdefault(slot, []).append(step)

    def _learn(self, node, slot, obs, refs, target):
        side = frozenset(refs - {target})
        if not side <= self.know[node]:
            raise PipelineError(f"{node} lacks side info for {target} at slot {slot}")
        if target in self.know[node]:
            raise PipelineError(f"{node} relearns {target} at slot {slot}")
        self.know[node].add(target)
        self._add_step(slot, DecodeStep(node, slot, (obs,), side, target))
        if node in ("R1", "R2"):
            own = 1 if node == "R1" else 2
            if target[0] == own and not (
                self.scheme == SCHEME_FBXW and target[2] == "cp"
            ):
                self.fifo[node].append((target, slot))
            self._drain_pending(node, slot)

    def _drain_pending(self, node, slot):
        progress = True
        while progress:
            progress = False
            for entry in list(self.pending[node]):
                if entry not in self.pending[node]:
                    continue  # resolved by a nested learn
                obs, refs = entry
                unknown = refs - self.know[node]
                if len(unknown) <= 1:
                    self.pending[node].remove(entry)
                    if len(unknown) == 1:
                        self._learn(node, slot, obs, refs, next(iter(unknown)))
                    progress = True

    def _scan_relay(self, node, signal, slot, sym_vec):
        fresh = []
        for position, refs in enumerate(sym_vec):
            unknown = refs - self.know[node]
            if len(unknown) == 1:
                self._learn(node, slot, (signal, slot, position), refs,
                            next(iter(unknown)))
            elif len(unknown) == 2:
                entry = ((signal, slot, position), frozenset(refs))
                self.pending[node].append(entry)
                fresh.append(entry)
            elif len(unknown) > 2:
                raise PipelineError(f"{node} sees {len(unknown)} unknowns at slot {slot}")
        return fresh

    # -- per-slot planning ---------------------------------------------------

    def _ref(self, src, pkt, kind, j):
        return (src, pkt, kind, j)

    def _hop1_emits(self, t):
        q = self.p.q
        emits = {1: [None] * q, 2: [None] * q}
        kind1 = {"noncoop": "n1", "coop": "cp", "private": "v1"}
        kind4 = {"noncoop": "n4", "private": "v4"}
        if t % 2 == 1 and (t + 1) // 2 <= self.packets:
            pkt = (t + 1) // 2
            for src in (1, 2):
                for level, (band, j) in self.lmap1.items():
                    ref = self._ref(src, pkt, kind1[band], j)
                    emits[src][level] = Emit(frozenset({ref}))
        if t % 2 == 0 and 1 <= t // 2 - 1 <= self.packets:
            pkt = t // 2 - 1
            for src in (1, 2):
                node, other = f"S{src}", 3 - src
                for level, (band, j) in self.lmap4.items():
                    if band == "coop_relay":
                        emits[src][level] = self._coop_relay_emit(node, other, pkt, j, t)
                    else:
                        ref = self._ref(src, pkt, kind4[band], j)
                        emits[src][level] = Emit(frozenset({ref}))
        return emits

    def _coop_relay_emit(self, node, other, pkt, j, t):
        if self.scheme in (SCHEME_FBXW, SCHEME_RSW):
            ref = self._ref(other, pkt, "cp", j)
            if ref not in self.know[node]:
                raise PipelineError(f"{node} has not learned {ref} by slot {t}")
            return Emit(frozenset({ref}))
        items = self.echo[node].get(pkt, [])
        if len(items) != self.alloc.coop:
            raise PipelineError(f"{node} captured {len(items)} echoes for packet {pkt}")
        obs, refs, cancel = items[j]
        return Emit(refs, mode="echo", echo_src=obs, cancel=cancel)

    def _hop2_emits(self, t):
        qbar, f = self.p.qbar, self.p.f
        emits = {"R1": [None] * qbar, "R2": [None] * qbar}
        if t < 2:
            return emits, None, None
        phase = 2 if t % 2 == 0 else 3
        pkt = t // 2 if phase == 2 else (t - 1) // 2
        if not 1 <= pkt <= self.packets:
            phase, pkt = None, None
        if phase is not None:
            for relay in ("R1", "R2"):
                own = 1 if relay == "R1" else 2
                audit = []
                for level, j in self.fb_plan[phase]:
                    emits[relay][level] = self._feedback_emit(relay, own, pkt, j)
                    audit.append((level, j))
                if audit:
                    self.feedback_levels[(f"X_{relay}", t)] = tuple(audit)
        for relay in ("R1", "R2"):
            for level in range(f):
                if emits[relay][level] is not None:
                    continue
                if self.fifo[relay] and self.fifo[relay][0][1] < t:
                    ref, _ = self.fifo[relay].popleft()
                    emits[relay][level] = Emit(frozenset({ref}))
        return emits, phase, pkt

    def _feedback_emit(self, relay, own, pkt, j):
        if self.scheme == SCHEME_FBXW:
            ref = self._ref(own, pkt, "cp", j)
            if ref not in self.know[relay]:
                raise PipelineError(f"{relay} misses own coop bit {ref}")
            return Emit(frozenset({ref}))
        if self.scheme == SCHEME_RSW:
            residuals = self.residual_store.get((relay, pkt), ())
            obs, refs = residuals[j]
            return Emit(refs, mode="echo", echo_src=obs)
        ref = self._ref(3 - own, pkt, "cp", j)
        if ref not in self.know[relay]:
            raise PipelineError(f"{relay} misses cross coop bit {ref}")
        return Emit(frozenset({ref}))

    # -- per-slot reception processing ----------------------------------------

    def _process_sources(self, t, y_s, phase, pkt):
        p = self.p
        for src in (1, 2):
            node = f"S{src}"
            sym_vec = y_s[src]
            if self.scheme == SCHEME_RSS and phase in (2, 3):
                relay_sig = f"X_R{src}"
                for level, j in self.feedback_levels.get((relay_sig, t), ()):
                    position = p.qbar - p.nbar + level
                    refs = sym_vec[position]
                    known = frozenset(refs & self.know[node])
                    remaining = frozenset(refs - self.know[node])
                    if not remaining:
                        raise PipelineError(f"{node} echo at slot {t} carries nothing new")
                    self.echo[node].setdefault(pkt, []).append(
                        ((f"Y_S{src}", t, position), remaining, known)
                    )
            for position, refs in enumerate(sym_vec):
                unknown = refs - self.know[node]
                if len(unknown) == 1:
                    self._learn(node, t, (f"Y_S{src}", t, position), refs,
                                next(iter(unknown)))
                elif len(unknown) > 1 and self.scheme != SCHEME_RSS:
                    raise PipelineError(f"{node} cannot track slot {t} pos {position}")

    def _process_dest(self, t, y_d):
        for dst in (1, 2):
            node = f"D{dst}"
            for position, refs in enumerate(y_d[dst]):
                if len(refs) != 1:
                    continue
                ref = next(iter(refs))
                if ref[0] != dst:
                    continue
                if ref in self.delivered:
                    raise PipelineError(f"{ref} delivered twice")
                self.delivered[ref] = t
                self.deliveries.append((t, node, ref))
                self._add_step(
                    t,
                    DecodeStep(node, t, ((f"Y_D{dst}", t, position),),
                               frozenset(), ref, deliver=True),
                )

    # -- main loop -------------------------------------------------------------

    def build(self) -> Schedule:
        p, P = self.p, self.packets
        core = 2 * P + 2
        budget = 2 * P + 4
        t, n_slots = 1, core
        while t <= n_slots:
            hop1 = self._hop1_emits(t)
            hop2, phase, pkt = self._hop2_emits(t)
            self.tx[("X_S1", t)] = tuple(hop1[1])
            self.tx[("X_S2", t)] = tuple(hop1[2])
            self.tx[("X_R1", t)] = tuple(hop2["R1"])
            self.tx[("X_R2", t)] = tuple(hop2["R2"])

            s1 = tuple(e.refs if e else frozenset() for e in hop1[1])
            s2 = tuple(e.refs if e else frozenset() for e in hop1[2])
            r1 = tuple(e.refs if e else frozenset() for e in hop2["R1"])
            r2 = tuple(e.refs if e else frozenset() for e in hop2["R2"])
            y_r1 = _sym_add(_sym_shift(s1, p.n), _sym_shift(s2, p.m))
            y_r2 = _sym_add(_sym_shift(s1, p.m), _sym_shift(s2, p.n))
            y_d = {1: _sym_shift(r1, p.f), 2: _sym_shift(r2, p.f)}
            y_s = {
                1: _sym_add(_sym_shift(r1, p.nbar), _sym_shift(r2, p.mbar)),
                2: _sym_add(_sym_shift(r2, p.nbar), _sym_shift(r1, p.mbar)),
            }

            # sources first: echo capture must use start-of-slot knowledge
            self._process_sources(t, y_s, phase, pkt)
            fresh1 = self._scan_relay("R1", "Y_R1", t, y_r1)
            fresh2 = self._scan_relay("R2", "Y_R2", t, y_r2)
            if self.scheme == SCHEME_RSW and t % 2 == 1 and (t + 1) // 2 <= P:
                cur = (t + 1) // 2
                for relay, fresh in (("R1", fresh1), ("R2", fresh2)):
                    if len(fresh) != self.alloc.coop:
                        raise PipelineError(
                            f"{relay} holds {len(fresh)} residuals for packet {cur}"
                        )
                    self.residual_store[(relay, cur)] = tuple(fresh)
            self._process_dest(t, y_d)

            if t % 2 == 0 and 1 <= t // 2 - 1 <= P:
                done = t // 2 - 1
                for relay, src in (("R1", 1), ("R2", 2)):
                    missing = [r for r in self.refs_by_packet.get((src, done), ())
                               if r not in self.know[relay]]
                    if missing:
                        raise PipelineError(f"{relay} missing {missing} after phase 4")

            if t == n_slots and any(self.fifo.values()):
                n_slots += 1
                if n_slots > budget:
                    raise PipelineError(f"drain exceeds slot budget {budget}")
            t += 1

        if any(self.fifo.values()) or any(self.pending.values()):
            raise PipelineError("undelivered bits at end of run")
        if len(self.delivered) != len(self.payload_refs):
            raise PipelineError("not every payload bit was delivered")
        return Schedule(
            scheme=self.scheme,
            p=p,
            packets=P,
            alloc=self.alloc,
            code=None,
            n_slots=n_slots,
            tx=self.tx,
            steps=self.steps,
            payload_refs=self.payload_refs,
            deliveries=tuple(self.deliveries),
            feedback_levels=self.feedback_levels,
            formula_rate=self.alloc.bits_per_packet,
        )


def _build_mid_schedule(p: ChannelParams, packets: int) -> Schedule:
    tags = regime_of(p)
    if Regime.MID not in tags and Regime.DEGENERATE not in tags:
        raise RegimeError(
            f"scheme {SCHEME_NOFB_MID} needs the mid regime at {p.short()}"
        )
    rate = r_nom(p)
    code = build_mid_code(p.m, p.n, rate)
    q, qbar, f = p.q, p.qbar, p.f
    refs = tuple(
        (src, blk, "mb", k)
        for blk in range(1, packets + 1)
        for src in (1, 2)
        for k in range(rate)
    )
    know = {node: set() for node in _NODES}
    for ref in refs:
        know[f"S{ref[0]}"].add(ref)
    fifo = {"R1": deque(), "R2": deque()}
    tx, steps, deliveries, delivered = {}, {}, [], {}

    def col_emits(src, blk, slot_role):
        levels = [frozenset() for _ in range(q)]
        role_a = slot_role == "A"
        use_a = role_a if src == 1 else not role_a
        cols = code.cols_a if use_a else code.cols_b
        base = 0 if use_a else code.split
        for k, col in enumerate(cols):
            for j in range(q):
                if (col >> j) & 1:
                    levels[j] = levels[j] ^ {(src, blk, "mb", base + k)}
        return [Emit(frozenset(s)) if s else None for s in levels]

    core = 2 * packets
    budget = 2 * packets + 4
    t, n_slots = 1, core
    while t <= n_slots:
        blk = (t + 1) // 2
        role = "A" if t % 2 == 1 else "B"
        if blk <= packets and rate:
            tx[("X_S1", t)] = tuple(col_emits(1, blk, role))
            tx[("X_S2", t)] = tuple(col_emits(2, blk, role))
        else:
            tx[("X_S1", t)] = (None,) * q
            tx[("X_S2", t)] = (None,) * q
        emits = {"R1": [None] * qbar, "R2": [None] * qbar}
        for relay in ("R1", "R2"):
            for level in range(f):
                if fifo[relay] and fifo[relay][0][1] < t:
                    ref, _ = fifo[relay].popleft()
                    emits[relay][level] = Emit(frozenset({ref}))
        tx[("X_R1", t)] = tuple(emits["R1"])
        tx[("X_R2", t)] = tuple(emits["R2"])

        if t % 2 == 0 and t // 2 <= packets and rate:
            done = t // 2
            for relay_idx, (relay, src) in enumerate((("R1", 1), ("R2", 2))):
                for k in range(rate):
                    obs = tuple(
                        (f"Y_{relay}", t - 1 + s_off, position)
                        for s_off, position in code.own_recipes[relay_idx][k]
                    )
                    target = (src, done, "mb", k)
                    steps.setdefault(t, []).append(
                        DecodeStep(relay, t, obs, frozenset(), target)
                    )
                    know[relay].add(target)
                    fifo[relay].append((target, t))

        for relay, dst in (("R1", 1), ("R2", 2)):
            sym = tuple(
                e.refs if e else frozenset() for e in tx[(f"X_{relay}", t)]
            )
            for position, s in enumerate(_sym_shift(sym, f)):
                if len(s) == 1:
                    ref = next(iter(s))
                    assert ref not in delivered
                    delivered[ref] = t
                    deliveries.append((t, f"D{dst}", ref))
                    steps.setdefault(t, []).append(
                        DecodeStep(f"D{dst}", t, ((f"Y_D{dst}", t, position),),
                                   frozenset(), ref, deliver=True)
                    )

        if t == n_slots and any(fifo.values()):
            n_slots += 1
            if n_slots > budget:
                raise PipelineError(f"drain exceeds slot budget {budget}")
        t += 1

    if len(delivered) != len(refs):
        raise PipelineError("not every block bit was delivered")
    return Schedule(
        scheme=SCHEME_NOFB_MID,
        p=p,
        packets=packets,
        alloc=None,
        code=code,
        n_slots=n_slots,
        tx=tx,
        steps=steps,
        payload_refs=refs,
        deliveries=tuple(deliveries),
        feedback_levels={},
        formula_rate=rate,
    )


def build_schedule(scheme: str, p: ChannelParams, packets: int) -> Schedule:
    if scheme not in ALL_SCHEMES:
        raise ChannelDomainError(f"unknown scheme {scheme!r}")
    if packets < 4:
        raise ChannelDomainError("need at least 4 packets to fill the pipeline")
    if scheme == SCHEME_NOFB_MID:
        return _build_mid_schedule(p, packets)
    return _PacketBuilder(scheme, p, packets).build()


# ---------------------------------------------------------------------------
# Value engine, trace, verification.

@dataclass
class SimulationTrace:
    scheme: str
    p: ChannelParams
    packets: int
    seed: int
    n_slots: int
    slots: list                       # per slot: dict signal -> GfVec
    payload: dict
    deliveries: list                  # (slot, dest, ref, value, ok)
    formula_rate: int
    alloc: BitAllocation = None
    decode_errors: int = 0

    @property
    def delivered_bits(self) -> int:
        return len(self.deliveries)

    @property
    def measured_sum_rate(self) -> Fraction:
        if self.n_slots == 0:
            return Fraction(0)
        return Fraction(self.delivered_bits, self.n_slots)

    @property
    def steady_window(self):
        lo = 2 * WARMUP_PACKETS + 2
        hi = 2 * self.packets + 1
        return lo, hi

    @property
    def steady_state_rate(self) -> Fraction:
        lo, hi = self.steady_window
        if hi < lo:
            return Fraction(0)
        count = sum(1 for d in self.deliveries if lo <= d[0] <= hi)
        return Fraction(count, hi - lo + 1)


def generate_payload(schedule: Schedule, seed: int) -> dict:
    rng = random.Random(seed)
    return {ref: rng.getrandbits(1) for ref in schedule.payload_refs}


def _emit_value(emit, node_store, vectors):
    if emit is None:
        return 0
    if emit.mode == "known":
        value = 0
        for ref in emit.refs:
            value ^= node_store[ref]
        return value
    signal, slot, position = emit.echo_src
    value = vectors[(signal, slot)][position]
    for ref in emit.cancel:
        value ^= node_store[ref]
    return value


def _run_engine(schedule: Schedule, payload: dict, faults=None, recorded=None):
    """Execute (recorded=None) or replay-and-diff (recorded given).

    Returns (slot_vectors, deliveries, faults_found).  In replay mode the
    recorded vectors drive all node behaviour, so a corrupted level shows up
    exactly where the recording first deviates from the protocol.
    """
    p = schedule.p
    faults = faults or {}
    store = {node: {} for node in _NODES}
    for ref, bit in payload.items():
        store[f"S{ref[0]}"][ref] = bit
    vectors = {}
    slot_rows = []
    deliveries = []
    found = []

    def settle(signal, t, computed):
        key = (signal, t)
        if (t, signal) in faults and recorded is None:
            computed = computed.flip(faults[(t, signal)])
        if recorded is not None:
            actual = recorded[t - 1][signal]
            if len(actual) != len(computed):
                raise ChannelDomainError(
                    f"recorded {signal} at slot {t} has length {len(actual)}"
                )
            if actual != computed:
                level = next(i for i, (a, b) in enumerate(zip(actual, computed))
                             if a != b)
                found.append((t, signal, level))
            vectors[key] = actual
        else:
            vectors[key] = computed
        return vectors[key]

    for t in range(1, schedule.n_slots + 1):
        row = {}
        for signal in ("X_S1", "X_S2", "X_R1", "X_R2"):
            emits = schedule.tx[(signal, t)]
            bits = GfVec(_emit_value(e, store[_TX_NODE[signal]], vectors)
                         for e in emits)
            row[signal] = settle(signal, t, bits)
        y_r1, y_r2 = first_hop(row["X_S1"], row["X_S2"], p)
        row["Y_R1"] = settle("Y_R1", t, y_r1)
        row["Y_R2"] = settle("Y_R2", t, y_r2)
        y_d1, y_d2, y_s1, y_s2 = second_hop(row["X_R1"], row["X_R2"], p)
        for signal, vec in (("Y_D1", y_d1), ("Y_D2", y_d2),
                            ("Y_S1", y_s1), ("Y_S2", y_s2)):
            row[signal] = settle(signal, t, vec)
        slot_rows.append(row)
        for step in schedule.steps.get(t, ()):
            value = 0
            for signal, slot, position in step.obs:
                value ^= vectors[(signal, slot)][position]
            for ref in step.side:
                value ^= store[step.node][ref]
            store[step.node][step.target] = value
            if step.deliver:
                ok = value == payload[step.target]
                deliveries.append((t, step.node, step.target, value, ok))
    return slot_rows, deliveries, found, store


def run_scheme(scheme: str, p: ChannelParams, packets: int,
               seed: int = DEFAULT_SEED, faults=None) -> SimulationTrace:
    """Run a scheme end to end and return the full per-slot trace.

    ``faults`` maps (slot, signal) -> level to flip after that signal is
    formed; the corruption then propagates through the rest of the run.
    """
    schedule = build_schedule(scheme, p, packets)
    payload = generate_payload(schedule, seed)
    slot_rows, deliveries, _, _ = _run_engine(schedule, payload, faults=faults)
    errors = sum(1 for d in deliveries if not d[4])
    return SimulationTrace(
        scheme=scheme,
        p=p,
        packets=packets,
        seed=seed,
        n_slots=schedule.n_slots,
        slots=slot_rows,
        payload=payload,
        deliveries=deliveries,
        formula_rate=schedule.formula_rate,
        alloc=schedule.alloc,
        decode_errors=errors,
    )


def run_nofb_mid(p: ChannelParams, packets: int,
                 seed: int = DEFAULT_SEED) -> SimulationTrace:
    """Run the mid-regime no-feedback scheme (run_scheme shorthand)."""
    return run_scheme(SCHEME_NOFB_MID, p, packets, seed=seed)


@dataclass
class VerifyReport:
    ok: bool
    faults: list                      # (slot, signal, level), slot-ordered
    payload_errors: list              # (slot, dest, ref)
    delivered_bits: int
    missing_bits: int
    packet_verdicts: dict             # packet -> bool (all its bits correct)
    node_verdicts: dict = None        # (node, packet) -> bool per decoder
    measured_sum_rate: Fraction = Fraction(0)
    steady_state_rate: Fraction = Fraction(0)

    @property
    def first_fault(self):
        return self.faults[0] if self.faults else None

    def summary(self) -> str:
        if self.ok:
            return f"PASS: {self.delivered_bits} bits delivered, zero errors"
        parts = []
        if self.faults:
            t, signal, level = self.faults[0]
            parts.append(f"first deviation at slot {t} {signal} level {level + 1}")
        if self.payload_errors:
            t, dest, ref = self.payload_errors[0]
            parts.append(f"first wrong bit at slot {t} {dest} {ref}")
        if self.missing_bits:
            parts.append(f"{self.missing_bits} bits never delivered")
        return "FAIL: " + "; ".join(parts)


def verify_trace(trace: SimulationTrace) -> VerifyReport:
    """Replay a trace and check it is a faithful, fully decoded run.

    Checks, in order of severity: every recorded signal equals what the
    protocol produces from the recorded inputs (locating any injected
    fault), and every delivered bit matches the seeded payload.
    """
    schedule = build_schedule(trace.scheme, trace.p, trace.packets)
    payload = generate_payload(schedule, trace.seed)
    if len(trace.slots) != schedule.n_slots:
        raise ChannelDomainError(
            f"trace has {len(trace.slots)} slots, run needs {schedule.n_slots}"
        )
    _, deliveries, found, stores = _run_engine(schedule, payload,
                                               recorded=trace.slots)
    errors = [(t, dest, ref) for (t, dest, ref, _, ok) in deliveries if not ok]
    verdicts = {}
    for (_, _, ref, _, ok) in deliveries:
        pkt = ref[1]
        verdicts[pkt] = verdicts.get(pkt, True) and ok
    missing = len(schedule.payload_refs) - len(deliveries)
    node_verdicts = {}
    for node in ("R1", "R2", "D1", "D2"):
        for ref, value in stores[node].items():
            key = (node, ref[1])
            node_verdicts[key] = (node_verdicts.get(key, True)
                                  and value == payload[ref])
    for pkt in range(1, trace.packets + 1):
        verdicts.setdefault(pkt, True)
    lo, hi = trace.steady_window
    steady = sum(1 for d in deliveries if lo <= d[0] <= hi)
    report = VerifyReport(
        ok=not found and not errors and missing == 0,
        faults=sorted(found),
        payload_errors=errors,
        delivered_bits=len(deliveries),
        missing_bits=missing,
        packet_verdicts=verdicts,
        node_verdicts=node_verdicts,
        measured_sum_rate=Fraction(len(deliveries), schedule.n_slots),
        steady_state_rate=Fraction(steady, max(hi - lo + 1, 1)),
    )
    return report


# ---------------------------------------------------------------------------
# Trace file format: header comments then one line per slot, each signal a
# '0'/'1' string top level first ('-' when the vector is empty).

def format_trace(trace: SimulationTrace) -> str:
    p = trace.p
    lines = [
        "# ofbic-trace v1",
        f"# scheme={trace.scheme} m={p.m} n={p.n} mbar={p.mbar} "
        f"nbar={p.nbar} f={p.f} packets={trace.packets} seed={trace.seed}",
    ]
    if trace.alloc is not None:
        a = trace.alloc
        lines.append(
            f"# alloc noncoop={a.noncoop} coop={a.coop} private={a.private} "
            f"per_phase_coop={a.per_phase_coop[0]},{a.per_phase_coop[1]} "
            f"superframe={a.superframe}"
        )
    lines.append(f"# formula_rate={trace.formula_rate}")
    lines.append("# columns: slot " + " ".join(SIGNALS))
    for t, row in enumerate(trace.slots, start=1):
        lines.append(f"{t} " + " ".join(str(row[s]) for s in SIGNALS))
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> SimulationTrace:
    header = {}
    slots = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for token in line[1:].split():
                if "=" in token:
                    key, _, value = token.partition("=")
                    header.setdefault(key, value)
            continue
        fields = line.split()
        slots.append({s: GfVec.from_string(v) for s, v in zip(SIGNALS, fields[1:])})
    try:
        p = ChannelParams(int(header["m"]), int(header["n"]), int(header["mbar"]),
                          int(header["nbar"]), int(header["f"]))
        scheme = header["scheme"]
        packets = int(header["packets"])
        seed = int(header["seed"])
    except KeyError as exc:
        raise ChannelDomainError(f"trace header missing {exc}") from exc
    schedule = build_schedule(scheme, p, packets)
    payload = generate_payload(schedule, seed)
    return SimulationTrace(
        scheme=scheme,
        p=p,
        packets=packets,
        seed=seed,
        n_slots=len(slots),
        slots=slots,
        payload=payload,
        deliveries=[],
        formula_rate=schedule.formula_rate,
        alloc=schedule.alloc,
    )
