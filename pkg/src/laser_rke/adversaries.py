"""Attack scenarios run inside the simulator.

Every run is a fresh, seeded simulation and returns an `AttackOutcome`.
`succeeded` means the device executed a command carried by a frame that
attacker hardware put on the air.
"""

import math
import random
from dataclasses import dataclass, field
from typing import Optional

from . import wire
from .actors import Outcome
from .scenarios import AWAY, CAR, build_world, resolve_seed, safe_instant
from .simnet import (
    EventTrace,
    JammerNode,
    RelayEndpoint,
    SimConfig,
    SimulationError,
    SnifferNode,
    make_relay_bridge,
)

RKE_RELAY_LEGS = ("fob->a1", "a1->a2", "a2->device")
PRKE_RELAY_LEGS = ("device->a2", "a2->a1", "a1->fob", "fob->a1", "a1->a2", "a2->device")


@dataclass
class AttackOutcome:
    attack_kind: str
    seed: int
    succeeded: bool
    frames_captured: int
    # one dict of leg -> ms per attacker frame that reached the device
    timing_breakdown: list = field(default_factory=list)
    # device verdicts on those frames, aligned with timing_breakdown
    verdicts: list = field(default_factory=list)
    gamma_ms: float = math.nan
    # leg dicts of attacker frames the device discarded unanswered
    late_paths: list = field(default_factory=list)
    blocked_fraction: Optional[float] = None
    metrics: dict = field(default_factory=dict)
    trace: EventTrace = field(default_factory=EventTrace, repr=False)

    @property
    def outcomes(self):
        return [v.outcome for v in self.verdicts]

    def summary(self) -> dict:
        row = {
            "kind": self.attack_kind,
            "seed": self.seed,
            "succeeded": str(self.succeeded).lower(),
            "frames_captured": self.frames_captured,
            "attacker_frames_at_device": len(self.verdicts),
            "accepted": sum(v.accepted for v in self.verdicts),
            "sync_sent": sum(v.outcome is Outcome.SYNC_SENT for v in self.verdicts),
            "late_discarded": len(self.late_paths),
            "gamma_ms": self.gamma_ms,
        }
        if self.timing_breakdown:
            row["first_path_ms"] = round(sum(self.timing_breakdown[0].values()), 3)
        if self.blocked_fraction is not None:
            row["blocked_fraction"] = self.blocked_fraction
        row.update(self.metrics)
        return row


def _injected(world):
    return [r for r in world.device.verdicts if r.attacker_injected]


def run_jam_replay(config: SimConfig, replay_delay_ms: float, seed=None, jamming=True, replay=True,
                   gamma_ms=None) -> AttackOutcome:
    """Jam near the device while the victim presses, sniff near the fob, then
    replay each captured frame `replay_delay_ms` after capturing it.

    The hop channel is unknown to the attacker, so the jammer covers every
    channel and each replay is swept across all of them.
    """
    if replay_delay_ms < 0:
        raise ValueError("replay_delay_ms must be >= 0")
    seed = resolve_seed(seed)
    world = build_world(config, seed, "rke", gamma_ms=gamma_ms)
    sim = world.sim
    rng = random.Random(f"jam-replay:{seed}")
    jammer = sim.add(JammerNode("jammer", CAR))
    sniffer = sim.add(SnifferNode("sniffer", CAR))
    all_channels = range(config.hop.channel_count)

    t_press = safe_instant(sim, rng)
    burst_ms = (config.messages_per_press - 1) * config.frame_gap_ms + wire.RKE_SIZE * config.airtime_ms_per_byte
    if jamming:
        jammer.jam(t_press - 100, t_press + burst_ms + 1)

    captured = []

    def on_capture(d):
        if d.src == world.fob.name and len(d.frame) == wire.RKE_SIZE:
            captured.append(d)
            if replay:
                path = d.path + (("sniffer-hold", replay_delay_ms),)
                sim.after(replay_delay_ms, sniffer.replay, d.frame, d.link, all_channels, path)

    sniffer_receive = sniffer.receive

    def receive(d):
        sniffer_receive(d)
        on_capture(d)

    sniffer.receive = receive
    sim.schedule(t_press, world.fob.press)
    sim.run()

    recs = _injected(world)
    legit = [r for r in world.device.verdicts if not r.attacker_injected]
    return AttackOutcome(
        "replay", seed,
        succeeded=any(r.verdict.accepted for r in recs),
        frames_captured=len(captured),
        timing_breakdown=[r.legs for r in recs],
        verdicts=[r.verdict for r in recs],
        gamma_ms=world.device.device.gamma_ms,
        metrics={"legit_accepted": sum(r.verdict.accepted for r in legit),
                 "victim_frames": config.messages_per_press},
        trace=sim.trace,
    )


def min_leg_overrides(config: SimConfig, system: str) -> dict:
    """Pin every radio leg of the relay path to its fastest possible value."""
    def fastest(link, attacker):
        model = config.attacker_latency if attacker and config.attacker_latency else config.link_model(link)
        return model.min_ms

    if system == "rke":
        return {"fob->a1": fastest("rke", False), "a2->device": fastest("rke", True)}
    return {
        "device->a2": fastest("down", False),
        "a1->fob": fastest("down", True),
        "fob->a1": fastest("prke_up", False),
        "a2->device": fastest("prke_up", True),
    }


def budget_leg_overrides(config: SimConfig, system: str, bridge_ms: float, radio_ms: float = 0.0) -> dict:
    """Honest legs at their minimum, attacker legs fixed.

    ``bridge_ms`` applies to each bridge crossing; ``radio_ms`` is the total
    over the attacker's own radio legs, split evenly. The attacker's added
    latency is therefore bridge + radio (RKE) or 2 * bridge + radio (PRKE).
    """
    if system == "rke":
        return {"fob->a1": config.link_model("rke").min_ms, "a1->a2": bridge_ms, "a2->device": radio_ms}
    return {
        "device->a2": config.link_model("down").min_ms,
        "a2->a1": bridge_ms,
        "a1->fob": radio_ms / 2,
        "fob->a1": config.link_model("prke_up").min_ms,
        "a1->a2": bridge_ms,
        "a2->device": radio_ms / 2,
    }


def _relay_world(config, seed, system, bridge_latency_ms, leg_overrides, gamma_ms):
    world = build_world(config, seed, system, gamma_ms=gamma_ms, fob_site=AWAY)
    sim = world.sim
    a1 = sim.add(RelayEndpoint("a1", AWAY))
    a2 = sim.add(RelayEndpoint("a2", CAR))
    make_relay_bridge(a1, a2, bridge_latency_ms)
    for leg in leg_overrides or {}:
        if leg not in (RKE_RELAY_LEGS if system == "rke" else PRKE_RELAY_LEGS):
            raise SimulationError(f"unknown relay leg {leg!r}")
    sim.leg_overrides.update(leg_overrides or {})
    return world, a1, a2


def _relay_outcome(kind, seed, world, a1):
    recs = _injected(world)
    return AttackOutcome(
        kind, seed,
        succeeded=any(r.verdict.accepted for r in recs),
        frames_captured=a1.forwarded,
        timing_breakdown=[r.legs for r in recs],
        verdicts=[r.verdict for r in recs],
        gamma_ms=world.device.device.gamma_ms,
        late_paths=[dict(d.path) for d in world.device.ignored if d.injected],
        metrics={"measured_ms": ";".join(f"{r.measured_ms:.3f}" for r in recs)},
        trace=world.sim.trace,
    )


def run_relay_rke(config: SimConfig, bridge_latency_ms: float, seed=None, leg_overrides=None,
                  gamma_ms=None) -> AttackOutcome:
    """Victim's fob is out of range; A1 near it, A2 near the car, bridged.

    The press happens well inside a hop period so channel changes never
    interfere with the timing measurement.
    """
    seed = resolve_seed(seed)
    world, a1, _ = _relay_world(config, seed, "rke", bridge_latency_ms, leg_overrides, gamma_ms)
    rng = random.Random(f"relay:{seed}")
    world.sim.schedule(safe_instant(world.sim, rng, 1000), world.fob.press)
    world.sim.run()
    return _relay_outcome("relay-rke", seed, world, a1)


def run_relay_prke(config: SimConfig, bridge_latency_ms: float, seed=None, leg_overrides=None,
                   gamma_ms=None) -> AttackOutcome:
    """A2 pulls the handle; SYN and reply both cross the bridge."""
    seed = resolve_seed(seed)
    world, a1, _ = _relay_world(config, seed, "prke", bridge_latency_ms, leg_overrides, gamma_ms)
    rng = random.Random(f"relay:{seed}")
    world.sim.schedule(safe_instant(world.sim, rng, 1000), world.device.trigger)
    world.sim.run()
    return _relay_outcome("relay-prke", seed, world, a1)


def run_dos(config: SimConfig, jammed_channels, presses: int, seed=None) -> AttackOutcome:
    """Continuous jamming of a channel subset near the device.

    One press falls at a uniformly random instant inside each of `presses`
    consecutive hop periods. A press is blocked when none of its frames
    reaches the device.
    """
    jammed = frozenset(int(c) for c in jammed_channels)
    if any(not 0 <= c < config.hop.channel_count for c in jammed):
        raise ValueError(f"jammed channels must lie in [0, {config.hop.channel_count})")
    if presses < 1:
        raise ValueError("presses must be >= 1")
    seed = resolve_seed(seed)
    world = build_world(config, seed, "rke")
    sim = world.sim
    rng = random.Random(f"dos:{seed}")
    jammer = sim.add(JammerNode("jammer", CAR, jammed))
    jammer.jam(sim.now)

    p = config.hop.period_ms
    span = math.ceil((config.messages_per_press - 1) * config.frame_gap_ms) + 1
    base = safe_instant(sim, rng, 0, 0) // p * p
    for i in range(presses):
        sim.schedule(base + i * p + rng.randrange(0, max(1, p - span)), world.fob.press)
    sim.run()

    heard = {r.t_start for r in world.device.verdicts}
    blocked = sum(1 for starts in world.fob.presses if not heard.intersection(starts))
    return AttackOutcome(
        "dos", seed,
        succeeded=False,
        frames_captured=0,
        blocked_fraction=blocked / presses,
        metrics={"presses": presses, "blocked": blocked, "jammed_channels": len(jammed)},
        trace=sim.trace,
    )
