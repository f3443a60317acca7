"""Deterministic discrete-event engine: replays a contact trace, maintains
per-node ledgers and buffers, invokes a routing policy at contact
opportunities, and emits an ordered event log."""

from __future__ import annotations

import heapq
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

from .contacts import (
    ContactEvent,
    ContactTrace,
    SampleConfig,
    slot_from_linear,
    split_contact_by_samples,
)
from .ledger import SocialLedger
from .routing import CarrierState, PeerSummary, ROUTER_NAMES, RouterDecision, decide
from .socialgraph import (
    CentralityTable,
    CommunityMap,
    build_familiar_graph,
    cumulative_window_centrality,
    k_clique_communities,
)
from .workload import Message, WorkloadEntry, messages_from_workload

BANDWIDTH_WIFI_11MBPS = 11_000_000.0  # bits/second

# Processing order for simultaneous events. Expiries precede transfers so a
# message cannot move at the instant it dies; transfers finishing exactly at
# contact end still count; contact-end ledger fragments land before the roll
# of the slot they belong to; creations at a contact's start instant are
# visible to its first decision.
_PRI_EXPIRE = 0
_PRI_TRANSFER = 1
_PRI_CONTACT_END = 2
_PRI_ROLL = 3
_PRI_RECOMPUTE = 4
_PRI_CREATE = 5
_PRI_CONTACT_START = 6

KIND_CREATED = "created"
KIND_REPLICATED = "replicated"
KIND_DELIVERED = "delivered"
KIND_DROPPED = "dropped_buffer_full"
KIND_EXPIRED = "expired_ttl"
KIND_DELETED_COMMUNITY = "deleted_community_rule"
KIND_ABORTED = "transfer_aborted"

EVENT_LOG_CSV_HEADER = "time,kind,msg,node,peer,size"


class SimStartupError(ValueError):
    """Configuration inconsistency detected before the run starts."""


@dataclass(frozen=True)
class LogRecord:
    time: float
    kind: str
    msg: str
    node: int
    peer: int | None = None
    size: int | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "time": self.time,
                "kind": self.kind,
                "msg": self.msg,
                "node": self.node,
                "peer": self.peer,
                "size": self.size,
            },
            separators=(",", ":"),
        )

    def to_csv_row(self) -> str:
        peer = "" if self.peer is None else str(self.peer)
        size = "" if self.size is None else str(self.size)
        return f"{self.time!r},{self.kind},{self.msg},{self.node},{peer},{size}"


@dataclass
class EventLog:
    """Ordered record of everything that happened to messages in one run."""

    records: list[LogRecord] = field(default_factory=list)

    def append(self, record: LogRecord) -> None:
        self.records.append(record)

    def __iter__(self):
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def to_ndjson(self) -> str:
        return "".join(r.to_json() + "\n" for r in self.records)

    def to_csv(self) -> str:
        lines = [EVENT_LOG_CSV_HEADER]
        lines.extend(r.to_csv_row() for r in self.records)
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SimConfig:
    """Everything one run needs; the engine itself draws no randomness."""

    trace: ContactTrace
    workload: tuple[WorkloadEntry, ...]
    router: str = "epidemic"
    sample: SampleConfig = field(default_factory=SampleConfig)
    ttl: float = 86400.0
    buffer_capacity: int = 2_000_000
    bandwidth: float | None = None  # bits/second; None = unlimited
    damping: float = 0.8
    k: int = 5
    familiar_threshold: float = 43_200.0
    centrality_window: float = 21_600.0
    recompute_interval: float = 86_400.0
    epoch: float | None = None  # None: first contact start, floored to a day boundary
    drop_policy: str = "oldest_first"
    charge_summaries: bool = False
    seed: int | None = None  # provenance only


class NodeRuntime:
    """One simulated node: its bounded buffer and its social ledger."""

    def __init__(self, node_id: int, capacity: int, ledger: SocialLedger):
        self.node_id = node_id
        self.capacity = capacity
        self.ledger = ledger
        self.buffer: dict[str, Message] = {}
        self.occupancy = 0
        # messages this node received as final recipient; advertised in its
        # summary so carriers do not replicate them again
        self.delivered_ids: set[str] = set()
        self._sorted: tuple[Message, ...] | None = None

    def holds(self, msg_id: str) -> bool:
        return msg_id in self.buffer

    def add(self, m: Message) -> None:
        if m.id in self.buffer:
            raise ValueError(f"duplicate message {m.id} in buffer of node {self.node_id}")
        self.buffer[m.id] = m
        self.occupancy += m.size
        self._sorted = None

    def remove(self, msg_id: str) -> Message:
        m = self.buffer.pop(msg_id)
        self.occupancy -= m.size
        self._sorted = None
        return m

    def messages_by_creation(self) -> tuple[Message, ...]:
        if self._sorted is None:
            self._sorted = tuple(sorted(self.buffer.values(), key=lambda m: (m.created_at, m.id)))
        return self._sorted


def buffer_admit(
    node: NodeRuntime, m: Message, drop_policy: str = "oldest_first"
) -> tuple[bool, list[Message]]:
    """Admit a message, evicting buffered messages until it fits.

    Eviction is plain oldest-created-first (or newest-first), with no
    protection for the node's own messages. A message larger than the whole
    buffer is rejected outright.
    """
    if drop_policy not in ("oldest_first", "newest_first"):
        raise ValueError(f"unknown drop policy {drop_policy!r}")
    if m.size > node.capacity:
        return False, []
    evicted: list[Message] = []
    pick = min if drop_policy == "oldest_first" else max
    while node.occupancy + m.size > node.capacity:
        victim = pick(node.buffer.values(), key=lambda v: (v.created_at, v.id))
        evicted.append(node.remove(victim.id))
    node.add(m)
    return True, evicted


def transfer_within_contact(
    contact: ContactEvent,
    messages: Sequence[Message],
    bandwidth: float | None,
    start: float | None = None,
) -> tuple[list[tuple[Message, float]], list[Message]]:
    """Schedule sequential transfers over one contact's link.

    Returns (completed with completion times, aborted). With unlimited
    bandwidth everything completes at the start instant. The link is a
    single sequential channel: the first transfer that cannot finish by
    contact end aborts, together with everything queued behind it.
    """
    at = contact.start if start is None else max(start, contact.start)
    if bandwidth is None:
        return [(m, at) for m in messages], []
    completed: list[tuple[Message, float]] = []
    for idx, m in enumerate(messages):
        done = at + m.size * 8.0 / bandwidth
        if done > contact.end:
            return completed, list(messages[idx:])
        completed.append((m, done))
        at = done
    return completed, []


class _OngoingContact:
    """Book-keeping for a contact that is currently up."""

    def __init__(self, event: ContactEvent, index: int):
        self.event = event
        self.index = index
        self.busy_until = event.start
        a, b = event.node_a, event.node_b
        # per direction: ids committed to this contact (done, in flight, or abandoned)
        self.sent: dict[tuple[int, int], set[str]] = {(a, b): set(), (b, a): set()}
        self.aborts: list[tuple[int, int, str]] = []  # (from, to, msg id), logged at contact end


class Simulation:
    """One deterministic run over a trace and a workload."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self._validate()
        self.epoch = self._resolve_epoch()
        n = cfg.trace.node_count
        self.nodes = [
            NodeRuntime(i, cfg.buffer_capacity, SocialLedger(i, n, cfg.sample, cfg.damping))
            for i in range(n)
        ]
        self.messages = {m.id: m for m in messages_from_workload(cfg.workload, cfg.ttl)}
        self.log = EventLog()
        self.ongoing: dict[int, _OngoingContact] = {}
        self.ongoing_by_node: dict[int, set[int]] = {i: set() for i in range(n)}
        self.communities = CommunityMap.empty()
        self.centralities = CentralityTable.empty(cfg.centrality_window)
        self.pair_seconds: dict[tuple[int, int], float] = {}
        self.completed_contacts: list[ContactEvent] = []
        self._heap: list[tuple] = []
        self._evals: deque[tuple[int, int, int]] = deque()  # (contact index, src, dst)
        self._evals_pending: set[tuple[int, int, int]] = set()

    def _validate(self) -> None:
        cfg = self.cfg
        if cfg.router not in ROUTER_NAMES:
            raise SimStartupError(
                f"unknown router {cfg.router!r} (valid: {', '.join(ROUTER_NAMES)})"
            )
        if cfg.ttl <= 0 or cfg.buffer_capacity <= 0:
            raise SimStartupError("ttl and buffer_capacity must be > 0")
        if cfg.bandwidth is not None and cfg.bandwidth <= 0:
            raise SimStartupError("bandwidth must be > 0 or unlimited (None)")
        if cfg.k < 3:
            raise SimStartupError("k must be >= 3")
        if not 0.0 <= cfg.damping <= 1.0:
            raise SimStartupError("damping must be in [0, 1]")
        for knob in ("familiar_threshold", "centrality_window", "recompute_interval"):
            if getattr(cfg, knob) <= 0:
                raise SimStartupError(f"{knob} must be > 0")
        n = cfg.trace.node_count
        for row, entry in enumerate(cfg.workload):
            for end in (entry.source, entry.destination):
                if not 0 <= end < n:
                    raise SimStartupError(
                        f"workload row {row}: node {end} outside trace range 0..{n - 1}"
                    )
            if entry.size > cfg.buffer_capacity:
                raise SimStartupError(
                    f"workload row {row}: size {entry.size} exceeds buffer capacity"
                )

    def _resolve_epoch(self) -> float:
        cfg = self.cfg
        if cfg.epoch is not None:
            epoch = float(cfg.epoch)
        elif cfg.trace.events:
            first = cfg.trace.events[0].start
            epoch = (first // cfg.sample.seconds_per_day) * cfg.sample.seconds_per_day
        else:
            epoch = 0.0
        if cfg.trace.events and cfg.trace.events[0].start < epoch:
            raise SimStartupError("epoch must not be after the first contact")
        for row, entry in enumerate(cfg.workload):
            if entry.created_at < epoch:
                raise SimStartupError(f"workload row {row}: created before epoch {epoch}")
        return epoch

    # -- event queue ------------------------------------------------------

    def _push(self, time: float, pri: int, a: int, b: int, msg: str, extra: int = 0) -> None:
        heapq.heappush(self._heap, (time, pri, a, b, msg, extra))

    def _seed_events(self) -> None:
        cfg = self.cfg
        for idx, ev in enumerate(cfg.trace.events):
            self._push(ev.start, _PRI_CONTACT_START, ev.node_a, ev.node_b, "", idx)
            self._push(ev.end, _PRI_CONTACT_END, ev.node_a, ev.node_b, "", idx)
        for m in self.messages.values():
            self._push(m.created_at, _PRI_CREATE, m.source, m.destination, m.id)

        horizon = max(
            [cfg.trace.duration]
            + [m.expires_at for m in self.messages.values()]
            + [self.epoch]
        )
        length = cfg.sample.sample_length
        n = 1
        while self.epoch + n * length <= horizon:
            self._push(self.epoch + n * length, _PRI_ROLL, -1, -1, "", n)
            n += 1
        if cfg.router in ("dlifecomm", "bubblerap"):
            n = 1
            while self.epoch + n * cfg.recompute_interval <= horizon:
                self._push(self.epoch + n * cfg.recompute_interval, _PRI_RECOMPUTE, -1, -1, "", n)
                n += 1

    def run(self) -> EventLog:
        self._seed_events()
        heap = self._heap
        while heap:
            time, pri, a, b, msg, extra = heapq.heappop(heap)
            if pri == _PRI_EXPIRE:
                self._on_expire(time, msg)
            elif pri == _PRI_TRANSFER:
                self._on_transfer_complete(time, a, b, msg, extra)
            elif pri == _PRI_CONTACT_END:
                self._on_contact_end(time, extra)
            elif pri == _PRI_ROLL:
                self._on_roll(extra)
            elif pri == _PRI_RECOMPUTE:
                self._on_recompute(time)
            elif pri == _PRI_CREATE:
                self._on_create(time, msg)
            else:
                self._on_contact_start(time, extra)
            self._drain_evals(time)
        return self.log

    # -- handlers ----------------------------------------------------------

    def _on_expire(self, time: float, msg_id: str) -> None:
        # In-flight transfers of the expired message abort at their completion
        # event; expiries are processed first among simultaneous events, so the
        # message can never move at or after this instant.
        for node in self.nodes:
            if node.holds(msg_id):
                node.remove(msg_id)
                self.log.append(LogRecord(time, KIND_EXPIRED, msg_id, node.node_id))

    def _on_transfer_complete(self, time: float, src: int, dst: int, msg_id: str, flags: int) -> None:
        m = self.messages[msg_id]
        if m.expires_at <= time:
            self.log.append(LogRecord(time, KIND_ABORTED, msg_id, src, dst))
            return
        self._receive(time, src, dst, m, delete_after=bool(flags))

    def _receive(self, time: float, src: int, dst: int, m: Message, delete_after: bool) -> None:
        receiver = self.nodes[dst]
        if m.destination == dst:
            receiver.delivered_ids.add(m.id)
            self.log.append(LogRecord(time, KIND_REPLICATED, m.id, src, dst))
            self.log.append(LogRecord(time, KIND_DELIVERED, m.id, src, dst))
        else:
            if not receiver.holds(m.id):
                _, evicted = buffer_admit(receiver, m, self.cfg.drop_policy)
                for victim in evicted:
                    self.log.append(LogRecord(time, KIND_DROPPED, victim.id, dst))
                self.log.append(LogRecord(time, KIND_REPLICATED, m.id, src, dst))
                self._queue_evals(dst)
        if delete_after and self.nodes[src].holds(m.id):
            self.nodes[src].remove(m.id)
            self.log.append(LogRecord(time, KIND_DELETED_COMMUNITY, m.id, src))

    def _on_contact_end(self, time: float, index: int) -> None:
        oc = self.ongoing.pop(index)
        ev = oc.event
        self.ongoing_by_node[ev.node_a].discard(index)
        self.ongoing_by_node[ev.node_b].discard(index)
        for src, dst, msg_id in oc.aborts:
            self.log.append(LogRecord(time, KIND_ABORTED, msg_id, src, dst))
        rebased = ContactEvent(ev.node_a, ev.node_b, ev.start - self.epoch, ev.end - self.epoch)
        for slot, duration in split_contact_by_samples(rebased, self.cfg.sample):
            self.nodes[ev.node_a].ledger.record_contact_fragment(ev.node_b, slot, duration)
            self.nodes[ev.node_b].ledger.record_contact_fragment(ev.node_a, slot, duration)
        self.pair_seconds[ev.pair] = self.pair_seconds.get(ev.pair, 0.0) + ev.duration
        self.completed_contacts.append(ev)

    def _on_roll(self, boundary_index: int) -> None:
        finished = slot_from_linear(boundary_index - 1, self.cfg.sample)
        for node in self.nodes:
            node.ledger.roll_sample(finished)
        for oc in self.ongoing.values():
            ev = oc.event
            self.nodes[ev.node_a].ledger.mark_peer_seen(ev.node_b)
            self.nodes[ev.node_b].ledger.mark_peer_seen(ev.node_a)

    def _on_recompute(self, time: float) -> None:
        graph = build_familiar_graph(self.pair_seconds, self.cfg.familiar_threshold)
        self.communities = k_clique_communities(graph, self.cfg.k)
        self.centralities = cumulative_window_centrality(
            self.completed_contacts,
            self.cfg.centrality_window,
            self.communities,
            now=time,
            epoch=self.epoch,
        )

    def _on_create(self, time: float, msg_id: str) -> None:
        m = self.messages[msg_id]
        source = self.nodes[m.source]
        _, evicted = buffer_admit(source, m, self.cfg.drop_policy)
        for victim in evicted:
            self.log.append(LogRecord(time, KIND_DROPPED, victim.id, m.source))
        self.log.append(
            LogRecord(time, KIND_CREATED, msg_id, m.source, m.destination, m.size)
        )
        self._push(m.expires_at, _PRI_EXPIRE, 0, 0, msg_id)
        self._queue_evals(m.source)

    def _on_contact_start(self, time: float, index: int) -> None:
        ev = self.cfg.trace.events[index]
        oc = _OngoingContact(ev, index)
        oc.busy_until = time
        self.ongoing[index] = oc
        a, b = ev.node_a, ev.node_b
        self.ongoing_by_node[a].add(index)
        self.ongoing_by_node[b].add(index)

        la, lb = self.nodes[a].ledger, self.nodes[b].ledger
        la.mark_peer_seen(b)
        lb.mark_peer_seen(a)
        # Opportunistic importance exchange: both sides recompute from cached
        # values, then cache each other's fresh result.
        ia = la.update_importance()
        ib = lb.update_importance()
        la.record_peer_importance(b, ib)
        lb.record_peer_importance(a, ia)

        if self.cfg.charge_summaries and self.cfg.bandwidth is not None:
            meta_bytes = sum(
                64 + 8 * len(self.nodes[n].ledger.weights_to_all_neighbors()) for n in (a, b)
            )
            oc.busy_until = time + meta_bytes * 8.0 / self.cfg.bandwidth

        self._evaluate_contact(index, time)

    # -- decisions ---------------------------------------------------------

    def _queue_evals(self, node_id: int) -> None:
        # A message just entered node_id's buffer, so re-evaluate node_id's
        # outbound directions. Inbound directions are not re-run: their only
        # possible gain is re-sending a message the receiver just evicted,
        # which (like the per-contact sent set) is suppressed until the next
        # contact to keep buffer churn from looping at one instant.
        for index in sorted(self.ongoing_by_node[node_id]):
            ev = self.ongoing[index].event
            other = ev.node_b if ev.node_a == node_id else ev.node_a
            key = (index, node_id, other)
            if key not in self._evals_pending:
                self._evals_pending.add(key)
                self._evals.append(key)

    def _drain_evals(self, time: float) -> None:
        while self._evals:
            key = self._evals.popleft()
            self._evals_pending.discard(key)
            index, src, dst = key
            if index in self.ongoing:
                self._evaluate_direction(self.ongoing[index], src, dst, time)

    def _evaluate_contact(self, index: int, time: float) -> None:
        oc = self.ongoing[index]
        a, b = oc.event.node_a, oc.event.node_b
        self._evaluate_direction(oc, a, b, time)
        self._evaluate_direction(oc, b, a, time)

    def _evaluate_direction(self, oc: _OngoingContact, src: int, dst: int, time: float) -> None:
        sender = self.nodes[src]
        if not sender.buffer:
            return
        receiver = self.nodes[dst]
        carrier = CarrierState(
            node_id=src,
            messages=sender.messages_by_creation(),
            weights=sender.ledger.weights_to_all_neighbors(),
            importance=sender.ledger.importance(),
        )
        already = oc.sent[(src, dst)]
        peer = PeerSummary(
            node_id=dst,
            weights=receiver.ledger.weights_to_all_neighbors(),
            importance=receiver.ledger.importance(),
            buffered=frozenset(receiver.buffer) | receiver.delivered_ids | already,
        )
        decision = decide(self.cfg.router, carrier, peer, self.communities, self.centralities)
        if not decision.replicate:
            return
        self._apply_decision(oc, src, dst, time, decision)

    def _apply_decision(
        self, oc: _OngoingContact, src: int, dst: int, time: float, decision: RouterDecision
    ) -> None:
        delete_ids = set(decision.delete_after)
        msgs = [self.messages[mid] for mid in decision.replicate]
        sent = oc.sent[(src, dst)]
        if self.cfg.bandwidth is None:
            for m in msgs:
                sent.add(m.id)
                self._receive(time, src, dst, m, delete_after=m.id in delete_ids)
            return
        completed, aborted = transfer_within_contact(
            oc.event, msgs, self.cfg.bandwidth, start=max(time, oc.busy_until)
        )
        for m, done in completed:
            sent.add(m.id)
            oc.busy_until = done
            self._push(done, _PRI_TRANSFER, src, dst, m.id, int(m.id in delete_ids))
        for m in aborted:
            sent.add(m.id)  # the link is saturated for this contact; do not retry
            oc.aborts.append((src, dst, m.id))


def run_simulation(cfg: SimConfig) -> EventLog:
    """Execute one run and return its event log (deterministic for fixed cfg)."""
    return Simulation(cfg).run()
