"""Deterministic discrete-event radio simulator.

Virtual time is kept in integer microseconds so that latency sums are exact;
the public API speaks milliseconds. Everything random draws from the
simulator's own ``random.Random``, so a seed fully determines a run.

Nodes sit at a *site*. Frames reach every other node at the same site that
is tuned to the frame's channel when transmission starts. A jammer at a site
destroys frames for the non-attacker receivers there if its active window
overlaps the frame's airtime.
"""

import csv
import hashlib
import heapq
import io
import itertools
import math
import random
from dataclasses import dataclass, field, replace
from typing import Optional

from . import wire
from .actors import Device, Fob
from .crypto import HopConfig

US_PER_MS = 1000

FOB = "fob"
DEVICE = "device"
JAMMER = "jammer"
SNIFFER = "sniffer"
RELAY = "relay-endpoint"


class SimulationError(RuntimeError):
    pass


def to_us(ms: float) -> int:
    return round(ms * US_PER_MS)


def fmt_ms(us: int) -> str:
    sign = "-" if us < 0 else ""
    us = abs(us)
    return f"{sign}{us // US_PER_MS}.{us % US_PER_MS:03d}"


@dataclass(frozen=True)
class LatencyModel:
    """Three-anchor latency distribution: 0% -> min, 75% -> q3, 100% -> max."""

    min_ms: float
    q3_ms: float
    max_ms: float

    def __post_init__(self):
        if not 0 <= self.min_ms <= self.q3_ms <= self.max_ms:
            raise ValueError(f"need 0 <= min <= q3 <= max, got {self.min_ms}, {self.q3_ms}, {self.max_ms}")

    @classmethod
    def constant(cls, ms):
        return cls(ms, ms, ms)

    def inverse_cdf(self, u: float) -> float:
        if u <= 0.75:
            return self.min_ms + (self.q3_ms - self.min_ms) * (u / 0.75)
        return self.q3_ms + (self.max_ms - self.q3_ms) * ((u - 0.75) / 0.25)

    def cdf(self, x: float) -> float:
        if x < self.min_ms:
            return 0.0
        if x >= self.max_ms:
            return 1.0
        if x < self.q3_ms:
            return 0.75 * (x - self.min_ms) / (self.q3_ms - self.min_ms)
        if self.max_ms == self.q3_ms:
            return 1.0
        return 0.75 + 0.25 * (x - self.q3_ms) / (self.max_ms - self.q3_ms)

    @property
    def mean_ms(self) -> float:
        return 0.75 * (self.min_ms + self.q3_ms) / 2 + 0.25 * (self.q3_ms + self.max_ms) / 2

    def shifted(self, delta_ms):
        return LatencyModel(self.min_ms + delta_ms, self.q3_ms + delta_ms, self.max_ms + delta_ms)


def sample_latency(model: LatencyModel, rng) -> float:
    """One draw in ms, quantised to whole microseconds."""
    us = round(model.inverse_cdf(rng.random()) * US_PER_MS)
    lo, hi = math.ceil(model.min_ms * US_PER_MS), math.floor(model.max_ms * US_PER_MS)
    return min(max(us, lo), hi) / US_PER_MS


# Measured prototype latencies as (t_min, t_Q3, t_max).
RKE_LATENCY = LatencyModel(55, 79, 136)
PRKE_LATENCY = LatencyModel(113, 164, 175)


@dataclass(frozen=True)
class SimConfig:
    seed: Optional[int] = None
    hop: HopConfig = field(default_factory=HopConfig)
    # fob -> device one-way
    rke_latency: LatencyModel = RKE_LATENCY
    # device -> fob -> device round trip
    prke_latency: LatencyModel = PRKE_LATENCY
    # every device-originated leg (SYN, sync); the PRKE reply leg gets the rest
    downlink_ms: float = 55.0
    # radio legs transmitted by attacker hardware; None = same as honest legs
    attacker_latency: Optional[LatencyModel] = None
    fob_skew_ms: float = 0.0
    device_skew_ms: float = 0.0
    duration_ms: float = 60_000.0
    start_ms: int = 1_700_000_000_000
    gamma_rke_ms: float = 79.0
    gamma_prke_ms: float = 164.0
    messages_per_press: int = 6
    frame_gap_ms: float = 10.0
    airtime_ms_per_byte: float = 0.2
    syn_retransmit_ms: float = 50.0
    syn_timeout_ms: float = 400.0
    # None = downlink_ms, the time a sync frame spends in flight
    sync_lead_ms: Optional[float] = None
    device_id: bytes = b"\x00\x00\x4c\x52"
    command: bytes = b"UL"

    def __post_init__(self):
        if self.duration_ms <= 0:
            raise ValueError("duration must be positive")
        if not 0 <= self.downlink_ms <= self.prke_latency.min_ms:
            raise ValueError("downlink_ms must lie in [0, PRKE t_min]")
        if self.messages_per_press < 1:
            raise ValueError("messages_per_press must be >= 1")
        if len(self.device_id) != wire.ID_SIZE or len(self.command) != wire.CMD_SIZE:
            raise ValueError("device_id must be 4 bytes and command 2 bytes")

    def link_model(self, link: str) -> LatencyModel:
        if link == "rke":
            return self.rke_latency
        if link == "down":
            return LatencyModel.constant(self.downlink_ms)
        if link == "prke_up":
            return self.prke_latency.shifted(-self.downlink_ms)
        raise KeyError(f"unknown link class {link!r}")

    def gamma(self, system: str) -> float:
        return self.gamma_rke_ms if system == "rke" else self.gamma_prke_ms

    def replace(self, **changes) -> "SimConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class TraceEvent:
    time_us: int
    node: str
    event: str
    detail: str


class EventTrace(list):
    COLUMNS = ("time_ms", "node", "event", "detail")

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for e in self:
            w.writerow((fmt_ms(e.time_us), e.node, e.event, e.detail))
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def of_kind(self, event):
        return [e for e in self if e.event == event]


def frame_digest(frame: bytes) -> str:
    return hashlib.blake2s(frame, digest_size=4).hexdigest()


@dataclass(frozen=True)
class Delivery:
    frame: bytes
    channel: int
    src: str
    dst: str
    link: str
    latency_ms: float
    tx_id: int
    # (leg name, ms) for every hop the payload took, relays included
    path: tuple = ()
    # transmitted by attacker hardware
    injected: bool = False


class Simulator:
    def __init__(self, config: SimConfig, seed: Optional[int] = None):
        self.config = config
        self.seed = config.seed if seed is None else seed
        self.rng = random.Random(self.seed)
        self._queue = []
        self._seq = itertools.count()
        self._tx_ids = itertools.count()
        self._now_us = to_us(config.start_ms)
        self.trace = EventTrace()
        self.nodes = []
        self.leg_overrides: dict = {}

    @property
    def now(self) -> float:
        return self._now_us / US_PER_MS

    @property
    def now_us(self) -> int:
        return self._now_us

    def log(self, node, event, detail=""):
        self.trace.append(TraceEvent(self._now_us, node, event, detail))

    def schedule(self, at_ms: float, fn, *args):
        at_us = to_us(at_ms)
        if at_us < self._now_us:
            raise SimulationError(
                f"event {getattr(fn, '__qualname__', fn)} scheduled at {fmt_ms(at_us)} ms, "
                f"before current time {fmt_ms(self._now_us)} ms"
            )
        heapq.heappush(self._queue, (at_us, next(self._seq), fn, args))

    def after(self, delay_ms: float, fn, *args):
        self._schedule_us(self._now_us + to_us(delay_ms), fn, *args)

    def _schedule_us(self, at_us, fn, *args):
        if at_us < self._now_us:
            raise SimulationError("cannot schedule in the past")
        heapq.heappush(self._queue, (at_us, next(self._seq), fn, args))

    def run_until(self, t_ms: float) -> EventTrace:
        end_us = to_us(t_ms)
        while self._queue and self._queue[0][0] <= end_us:
            at_us, _, fn, args = heapq.heappop(self._queue)
            self._now_us = at_us
            fn(*args)
        self._now_us = max(self._now_us, end_us)
        return self.trace

    def run(self) -> EventTrace:
        while self._queue:
            at_us, _, fn, args = heapq.heappop(self._queue)
            self._now_us = at_us
            fn(*args)
        return self.trace

    def add(self, node):
        if any(n.name == node.name for n in self.nodes):
            raise SimulationError(f"duplicate node name {node.name!r}")
        self.nodes.append(node)
        node.sim = self
        return node

    def node(self, name):
        for n in self.nodes:
            if n.name == name:
                return n
        raise KeyError(name)

    def leg_latency(self, src, dst, link) -> float:
        leg = f"{src.name}->{dst.name}"
        if leg in self.leg_overrides:
            return self.leg_overrides[leg]
        model = self.config.link_model(link)
        if src.attacker and self.config.attacker_latency is not None:
            model = self.config.attacker_latency
        return sample_latency(model, self.rng)

    def transmit(self, src, ch: int, frame: bytes, link: str, path: tuple = ()):
        """Put a frame on the air; every potential receiver gets exactly one
        outcome: deliver, jammed-captured, jammed-lost or no-listener."""
        if not frame:
            raise SimulationError("empty frame")
        tx = next(self._tx_ids)
        t0 = self._now_us
        t1 = t0 + to_us(len(frame) * self.config.airtime_ms_per_byte)
        self.log(src.name, "tx", f"tx={tx} ch={ch} link={link} len={len(frame)} digest={frame_digest(frame)}")
        receivers = [n for n in self.nodes if n is not src and n.site == src.site and n.role != JAMMER]
        jammers = [n for n in self.nodes if n.role == JAMMER and n.site == src.site]

        plan = []
        for rx in receivers:
            if not rx.listens(ch):
                plan.append((rx, "no-listener"))
            elif not rx.attacker and any(j.covers(ch, t0, t1) for j in jammers):
                plan.append((rx, "jammed"))
            else:
                plan.append((rx, "deliver"))
        captured = any(rx.attacker and what == "deliver" for rx, what in plan)

        for rx, what in plan:
            if what == "deliver":
                latency = self.leg_latency(src, rx, link)
                d = Delivery(frame, ch, src.name, rx.name, link, latency, tx,
                             path + ((f"{src.name}->{rx.name}", latency),), src.attacker)
                self.log(rx.name, "deliver", f"tx={tx} latency_ms={latency:.3f}")
                self._schedule_us(t0 + to_us(latency), rx.receive, d)
            elif what == "jammed":
                self.log(rx.name, "jammed-captured" if captured else "jammed-lost", f"tx={tx}")
            else:
                self.log(rx.name, "no-listener", f"tx={tx}")
        return tx


class SimClock:
    """Reads virtual time + fixed skew + accumulated sync corrections."""

    def __init__(self, sim: Simulator, skew_ms: float = 0.0):
        self.sim = sim
        self.skew = skew_ms
        self.offset = 0.0

    def now(self):
        return self.sim.now + self.skew + self.offset

    def set_offset(self, offset_ms):
        self.offset = offset_ms

    @property
    def error_ms(self):
        return self.skew + self.offset


class Node:
    role = ""
    attacker = False

    def __init__(self, name, site):
        self.name = name
        self.site = site
        self.sim: Optional[Simulator] = None

    def listens(self, ch) -> bool:
        return False

    def receive(self, d: Delivery):
        pass


@dataclass
class VerdictRecord:
    time_ms: float
    verdict: object
    delivery: Delivery
    measured_ms: float
    t_start: Optional[int] = None

    @property
    def legs(self):
        return dict(self.delivery.path)

    @property
    def attacker_injected(self):
        return self.delivery.injected


class FobNode(Node):
    role = FOB

    def __init__(self, name, site, fob: Fob):
        super().__init__(name, site)
        self.fob = fob
        fob.transmitter = self._send
        self._reply_path = ()
        self.presses = []
        self.sync_events = []

    def _send(self, ch, frame, delay_ms=0.0):
        link = "rke" if len(frame) == wire.RKE_SIZE else "prke_up"
        path = self._reply_path
        self.sim.after(delay_ms, self.sim.transmit, self, ch, frame, link, path)

    def listens(self, ch):
        return ch == self.fob.channel()

    def press(self, cmd=None):
        frames = self.fob.press(cmd or self.sim.config.command)
        self.presses.append([m.t_start for _, m in frames])
        self.sim.log(self.name, "press", f"frames={len(frames)} t_start={frames[0][1].t_start}")
        return frames

    def receive(self, d: Delivery):
        try:
            msg = wire.decode(d.frame)
        except wire.WireError as exc:
            self.sim.log(self.name, "drop", str(exc))
            return
        if isinstance(msg, wire.SyncMessage):
            before = self.fob.clock.now()
            applied = self.fob.on_sync(msg)
            self.sync_events.append((self.sim.now, applied))
            self.sim.log(self.name, "sync-applied" if applied else "sync-ignored",
                         f"shift_ms={self.fob.clock.now() - before:.3f}")
        elif isinstance(msg, wire.PrkeSyn):
            self._reply_path = d.path
            resp = self.fob.on_prke_syn(msg)
            self._reply_path = ()
            self.sim.log(self.name, "prke-response" if resp else "syn-ignored", "")


class DeviceNode(Node):
    role = DEVICE

    def __init__(self, name, site, device: Device, system="rke"):
        super().__init__(name, site)
        self.device = device
        device.transmitter = self._send
        self.system = system
        self.verdicts: list = []
        # responses that arrived with no exchange pending (after a timeout)
        self.ignored: list = []
        self.broadcasts = 0

    def _send(self, ch, frame, delay_ms=0.0):
        self.sim.after(delay_ms, self.sim.transmit, self, ch, frame, "down")

    def listens(self, ch):
        if self.device.pending is not None:
            return ch == self.device.pending.channel
        return ch == self.device.channel()

    def receive(self, d: Delivery):
        try:
            msg = wire.decode(d.frame)
        except wire.WireError as exc:
            self.sim.log(self.name, "drop", str(exc))
            return
        if isinstance(msg, wire.RkeMessage):
            t_end = self.device.clock.now()
            v = self.device.on_rke(msg, t_end, channel=d.channel)
            rec = VerdictRecord(self.sim.now, v, d, round(t_end - msg.t_start, 3), msg.t_start)
        elif isinstance(msg, wire.PrkeResponse):
            pending = self.device.pending
            if pending is None:
                self.ignored.append(d)
                self.sim.log(self.name, "response-ignored", f"tx={d.tx_id}")
                return
            t_e = self.device.clock.now() - pending.started
            v = self.device.on_prke_response(msg, t_e)
            rec = VerdictRecord(self.sim.now, v, d, round(t_e, 3))
        else:
            return
        self.verdicts.append(rec)
        self.sim.log(self.name, "verdict", f"{v.outcome.value} tx={d.tx_id} measured_ms={rec.measured_ms:.3f}")

    def trigger(self, hold_ms: float = 0.0):
        """Handle pull: SYN now, repeats while held, broadcast sync on timeout."""
        cfg = self.sim.config
        ch, _, _ = self.device.prke_trigger()
        pending = self.device.pending
        self.sim.log(self.name, "syn", f"ch={ch}")
        n = int(hold_ms // cfg.syn_retransmit_ms)
        for i in range(1, n + 1):
            self.sim.after(i * cfg.syn_retransmit_ms, self._retransmit, pending)
        self.sim.after(cfg.syn_timeout_ms, self._timeout, pending)

    def _retransmit(self, pending):
        if self.device.pending is pending:
            self.device.prke_trigger()
            self.sim.log(self.name, "syn-retransmit", f"ch={pending.channel}")

    def _timeout(self, pending):
        if self.device.pending is pending:
            self.device.broadcast_sync()
            self.broadcasts += 1
            self.sim.log(self.name, "broadcast-sync", f"channels={self.device.hop.channel_count}")


class JammerNode(Node):
    role = JAMMER
    attacker = True

    def __init__(self, name, site, channels=None):
        super().__init__(name, site)
        self.channels = None if channels is None else frozenset(channels)
        self.windows = []  # (start_us, end_us)

    def jam(self, start_ms, end_ms=math.inf):
        end_us = math.inf if end_ms == math.inf else to_us(end_ms)
        self.windows.append((to_us(start_ms), end_us))

    def covers(self, ch, t0_us, t1_us) -> bool:
        if self.channels is not None and ch not in self.channels:
            return False
        return any(s <= t1_us and t0_us <= e for s, e in self.windows)


class SnifferNode(Node):
    """Wideband capture; co-located with the victim and never jammed."""

    role = SNIFFER
    attacker = True

    def __init__(self, name, site):
        super().__init__(name, site)
        self.captures: list = []

    def listens(self, ch):
        return True

    def receive(self, d: Delivery):
        self.captures.append((self.sim.now, d))
        self.sim.log(self.name, "capture", f"tx={d.tx_id} ch={d.channel} digest={frame_digest(d.frame)}")

    def replay(self, frame, link, channels, path=()):
        for ch in channels:
            self.sim.transmit(self, ch, frame, link, path)


class RelayEndpoint(Node):
    """Wideband transceiver that forwards every captured frame to its peer,
    which re-emits it verbatim on the same channel."""

    role = RELAY
    attacker = True

    def __init__(self, name, site):
        super().__init__(name, site)
        self.peer: Optional["RelayEndpoint"] = None
        self.bridge_latency_ms = 0.0
        self.forwarded = 0

    def listens(self, ch):
        return True

    def receive(self, d: Delivery):
        leg = f"{self.name}->{self.peer.name}"
        bridge = self.sim.leg_overrides.get(leg, self.bridge_latency_ms)
        self.forwarded += 1
        self.sim.log(self.name, "relay", f"tx={d.tx_id} bridge_ms={bridge:.3f}")
        self.sim.after(bridge, self.peer.emit, d, d.path + ((leg, bridge),))

    def emit(self, d: Delivery, path):
        self.sim.transmit(self, d.channel, d.frame, d.link, path)


def make_relay_bridge(a1: RelayEndpoint, a2: RelayEndpoint, bridge_latency_ms: float):
    if a1.site == a2.site:
        raise SimulationError("relay endpoints must sit at different sites")
    a1.peer, a2.peer = a2, a1
    a1.bridge_latency_ms = a2.bridge_latency_ms = bridge_latency_ms

