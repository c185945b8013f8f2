"""Fob and device state machines for LASER over RKE and PRKE.

Actors never touch a radio or the wall clock directly. Each gets a clock
(``now()``, ``offset``, ``set_offset()``) and optionally a transmitter, a
callable ``send(channel, frame_bytes, delay_ms)``. Pure methods also return
what they emitted so the state machines can be driven without a transmitter.
"""

import enum
import math
import time
from dataclasses import dataclass
from typing import Callable, Optional, Protocol

from . import wire
from .crypto import HopConfig, SecretKey, derive_auth_tag, derive_channel, round_to_period, tags_equal
from .wire import PrkeResponse, PrkeSyn, RkeMessage, SyncMessage

Transmitter = Callable[[int, bytes, float], None]


class Clock(Protocol):
    offset: float

    def now(self) -> float: ...

    def set_offset(self, offset_ms: float) -> None: ...


class SystemClock:
    """Wall clock in Unix milliseconds plus an adjustable offset."""

    def __init__(self, offset_ms=0.0):
        self.offset = offset_ms

    def now(self):
        return time.time() * 1000.0 + self.offset

    def set_offset(self, offset_ms):
        self.offset = offset_ms


class ManualClock:
    """Clock whose reference time is moved by hand (tests, scripted runs)."""

    def __init__(self, reference_ms=0.0, offset_ms=0.0):
        self.reference = reference_ms
        self.offset = offset_ms

    def now(self):
        return self.reference + self.offset

    def advance(self, ms):
        self.reference += ms

    def set_offset(self, offset_ms):
        self.offset = offset_ms


def read_timestamp(clock) -> int:
    return math.floor(clock.now())


class Outcome(enum.Enum):
    ACCEPT = "accept"
    REJECT_BAD_TAG = "reject-bad-tag"
    REJECT_STALE = "reject-stale"
    REJECT_DUPLICATE = "reject-duplicate"
    SYNC_SENT = "sync-sent"


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    cmd: Optional[bytes] = None
    reply: Optional[SyncMessage] = None

    @property
    def accepted(self):
        return self.outcome is Outcome.ACCEPT


def make_sync(sk: SecretKey, device_id: bytes, t_sync: int) -> SyncMessage:
    return SyncMessage(device_id, derive_auth_tag(sk, t_sync), t_sync)


class Fob:
    def __init__(
        self,
        sk: SecretKey,
        device_id: bytes,
        hop: HopConfig,
        clock,
        transmitter: Optional[Transmitter] = None,
        messages_per_press: int = 6,
        frame_gap_ms: float = 10.0,
    ):
        if messages_per_press < 1:
            raise ValueError("messages_per_press must be >= 1")
        self.sk = sk
        self.device_id = bytes(device_id)
        self.hop = hop
        self.clock = clock
        self.transmitter = transmitter
        self.messages_per_press = messages_per_press
        self.frame_gap_ms = frame_gap_ms
        self._synced_since_tx = False

    def channel(self) -> int:
        return derive_channel(self.sk, read_timestamp(self.clock), self.hop)

    def _send(self, ch, frame, delay=0.0):
        self._synced_since_tx = False
        if self.transmitter is not None:
            self.transmitter(ch, frame, delay)

    def press(self, cmd: bytes) -> list:
        """One button press: ``messages_per_press`` frames, ``frame_gap_ms`` apart.

        Frame i is stamped with the clock reading at its own send instant.
        """
        now = self.clock.now()
        out = []
        for i in range(self.messages_per_press):
            delay = i * self.frame_gap_ms
            t_start = math.floor(now + delay)
            msg = RkeMessage(self.device_id, derive_auth_tag(self.sk, t_start), t_start, cmd)
            ch = derive_channel(self.sk, t_start, self.hop)
            self._send(ch, wire.encode_rke(msg), delay)
            out.append((ch, msg))
        return out

    def on_sync(self, s: SyncMessage) -> bool:
        """Apply a verified clock correction; returns whether the clock moved.

        The first verified sync after a transmission sets the clock outright.
        Further syncs before the next transmission are only allowed to move
        it forward: of several replies to one burst, the one that took the
        least time in flight is the most accurate.
        """
        if s.device_id != self.device_id:
            return False
        if not tags_equal(s.tag, derive_auth_tag(self.sk, s.t_sync)):
            return False
        shift = s.t_sync - self.clock.now()
        if self._synced_since_tx and shift <= 0:
            return False
        self.clock.set_offset(self.clock.offset + shift)
        self._synced_since_tx = True
        return True

    def on_prke_syn(self, syn: PrkeSyn) -> Optional[PrkeResponse]:
        if syn.device_id != self.device_id:
            return None
        t_p = round_to_period(read_timestamp(self.clock), self.hop.period_ms)
        resp = PrkeResponse(self.device_id, derive_auth_tag(self.sk, t_p))
        self._send(self.channel(), wire.encode_prke_resp(resp))
        return resp


@dataclass
class PendingSyn:
    channel: int
    started: float
    sent: int = 1


class Device:
    def __init__(
        self,
        sk: SecretKey,
        device_id: bytes,
        hop: HopConfig,
        gamma_ms: float,
        clock,
        transmitter: Optional[Transmitter] = None,
        sync_lead_ms: float = 0.0,
    ):
        if not gamma_ms > 0:
            raise ValueError("gamma_ms must be positive")
        self.sk = sk
        self.device_id = bytes(device_id)
        self.hop = hop
        self.gamma_ms = gamma_ms
        self.clock = clock
        self.transmitter = transmitter
        # added to t_sync to cover the expected flight time of the sync frame
        self.sync_lead_ms = sync_lead_ms
        self.accepted_cache: dict = {}
        self.pending: Optional[PendingSyn] = None

    def channel(self) -> int:
        return derive_channel(self.sk, read_timestamp(self.clock), self.hop)

    def _send(self, ch, frame):
        if self.transmitter is not None:
            self.transmitter(ch, frame, 0.0)

    def make_sync(self) -> SyncMessage:
        t_sync = math.floor(self.clock.now() + self.sync_lead_ms)
        return make_sync(self.sk, self.device_id, t_sync)

    def _purge(self, now):
        stale = [k for k, t_start in self.accepted_cache.items() if now - t_start > self.gamma_ms]
        for k in stale:
            del self.accepted_cache[k]

    def on_rke(self, m: RkeMessage, t_end: Optional[float] = None, channel: Optional[int] = None) -> Verdict:
        """Checks run tag, then freshness, then duplication.

        A frame with a valid tag but outside ``[0, gamma]`` gets a sync reply
        on the channel it arrived on. Bad tags are dropped silently.
        """
        if t_end is None:
            t_end = self.clock.now()
        self._purge(t_end)
        if m.device_id != self.device_id or not tags_equal(m.tag, derive_auth_tag(self.sk, m.t_start)):
            return Verdict(Outcome.REJECT_BAD_TAG)
        age = t_end - m.t_start
        if not 0 <= age <= self.gamma_ms:
            reply = self.make_sync()
            self._send(self.channel() if channel is None else channel, wire.encode_sync(reply))
            return Verdict(Outcome.SYNC_SENT, reply=reply)
        key = (m.tag, m.t_start)
        if key in self.accepted_cache:
            return Verdict(Outcome.REJECT_DUPLICATE)
        self.accepted_cache[key] = m.t_start
        return Verdict(Outcome.ACCEPT, cmd=m.cmd)

    def prke_trigger(self):
        """Send a SYN on the current hop channel and start the exchange timer.

        Returns ``(channel, syn, timer_start)``. While an exchange is pending,
        further triggers retransmit the SYN without restarting the timer, so a
        late reply can never be timed against a later SYN.
        """
        now = self.clock.now()
        syn = PrkeSyn(self.device_id)
        if self.pending is None:
            self.pending = PendingSyn(self.channel(), now)
        else:
            self.pending.sent += 1
        self._send(self.pending.channel, wire.encode_prke_syn(syn))
        return self.pending.channel, syn, self.pending.started

    def on_prke_response(self, r: PrkeResponse, t_e: Optional[float] = None) -> Optional[Verdict]:
        """None when no SYN is pending (the response is ignored)."""
        if self.pending is None:
            return None
        if t_e is None:
            t_e = self.clock.now() - self.pending.started
        t_p = round_to_period(read_timestamp(self.clock), self.hop.period_ms)
        if r.device_id != self.device_id or not tags_equal(r.tag, derive_auth_tag(self.sk, t_p)):
            return Verdict(Outcome.REJECT_BAD_TAG)
        if t_e > self.gamma_ms:
            return Verdict(Outcome.REJECT_STALE)
        self.pending = None
        return Verdict(Outcome.ACCEPT)

    def broadcast_sync(self) -> list:
        """Sync frame on every channel; used when a SYN went unanswered."""
        self.pending = None
        s = self.make_sync()
        frame = wire.encode_sync(s)
        out = []
        for ch in range(self.hop.channel_count):
            self._send(ch, frame)
            out.append((ch, s))
        return out
