"""Assembling simulated worlds and running the honest-use scenarios."""

import math
import random
import secrets
from dataclasses import dataclass, field
from typing import Optional

from .actors import Device, Fob, Outcome
from .crypto import SecretKey, round_to_period
from .simnet import DeviceNode, EventTrace, FobNode, SimClock, SimConfig, Simulator

CAR = "car"
AWAY = "away"  # out of radio range of the car


def resolve_seed(seed: Optional[int]) -> int:
    return secrets.randbelow(2**32) if seed is None else int(seed)


def key_for_seed(seed: int) -> SecretKey:
    return SecretKey.generate(random.Random(f"laser-key:{seed}"))


def sync_lead(config: SimConfig) -> float:
    return config.downlink_ms if config.sync_lead_ms is None else config.sync_lead_ms


@dataclass
class World:
    sim: Simulator
    fob: FobNode
    device: DeviceNode
    sk: SecretKey
    system: str

    @property
    def config(self):
        return self.sim.config


def build_world(config: SimConfig, seed: int, system="rke", gamma_ms=None, fob_site=CAR) -> World:
    """Fob and device with their own skewed clocks; the device hops continuously."""
    sim = Simulator(config, seed)
    sk = key_for_seed(seed)
    gamma = config.gamma(system) if gamma_ms is None else gamma_ms
    fob = Fob(sk, config.device_id, config.hop, SimClock(sim, config.fob_skew_ms),
              messages_per_press=config.messages_per_press, frame_gap_ms=config.frame_gap_ms)
    device = Device(sk, config.device_id, config.hop, gamma, SimClock(sim, config.device_skew_ms),
                    sync_lead_ms=sync_lead(config))
    fob_node = sim.add(FobNode("fob", fob_site, fob))
    device_node = sim.add(DeviceNode("device", CAR, device, system))
    return World(sim, fob_node, device_node, sk, system)


def safe_instant(sim: Simulator, rng, span_ms=0, margin_ms=500) -> int:
    """A random whole-ms instant in the next hop period such that
    ``[t, t + span_ms]`` stays clear of the period edges when possible."""
    p = sim.config.hop.period_ms
    margin = min(margin_ms, p // 4)
    base = round_to_period(math.ceil(sim.now), p) + p
    hi = p - margin - math.ceil(span_ms)
    return base + (rng.randrange(margin, hi) if hi > margin else margin)


@dataclass
class SimulationResult:
    system: str
    seed: int
    latencies: list
    attempts: int
    accepted: int
    trace: EventTrace = field(repr=False)


def simulate_rke(config: SimConfig, trials: int, seed=None, gamma_ms=None, spacing_ms=1000) -> SimulationResult:
    """Press the fob `trials` times; each trial logs the first frame's t_end - t_start.

    Without an explicit gamma the device accepts any age, as during calibration.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seed = resolve_seed(seed)
    world = build_world(config, seed, "rke", gamma_ms=math.inf if gamma_ms is None else gamma_ms)
    sim = world.sim
    t0 = math.ceil(sim.now) + spacing_ms
    for i in range(trials):
        sim.schedule(t0 + i * spacing_ms, world.fob.press)
    sim.run()
    by_start = {r.t_start: r for r in world.device.verdicts}
    latencies, accepted = [], 0
    for starts in world.fob.presses:
        recs = [by_start[t] for t in starts if t in by_start]
        if recs:
            latencies.append(recs[0].measured_ms)
        if any(r.verdict.accepted for r in recs):
            accepted += 1
    return SimulationResult("rke", seed, latencies, trials, accepted, sim.trace)


def simulate_prke(config: SimConfig, trials: int, seed=None, gamma_ms=None, spacing_ms=1000) -> SimulationResult:
    """Pull the handle `trials` times; each trial logs the measured exchange time."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seed = resolve_seed(seed)
    world = build_world(config, seed, "prke", gamma_ms=math.inf if gamma_ms is None else gamma_ms)
    sim = world.sim
    t0 = round_to_period(math.ceil(sim.now), config.hop.period_ms) + config.hop.period_ms + spacing_ms // 2
    for i in range(trials):
        sim.schedule(t0 + i * spacing_ms, world.device.trigger)
    sim.run()
    latencies = [r.measured_ms for r in world.device.verdicts if r.verdict.outcome is not Outcome.REJECT_BAD_TAG]
    accepted = sum(r.verdict.accepted for r in world.device.verdicts)
    return SimulationResult("prke", seed, latencies, trials, accepted, sim.trace)


@dataclass
class RecoveryResult:
    system: str
    seed: int
    first_outcomes: list
    sync_applied: bool
    retry_outcomes: list
    clock_error_after_ms: float
    trace: EventTrace = field(repr=False)

    @property
    def first_failed_with_sync(self):
        return bool(self.first_outcomes) and Outcome.SYNC_SENT in self.first_outcomes and \
            Outcome.ACCEPT not in self.first_outcomes

    @property
    def recovered(self):
        """RKE: the retry press is accepted. PRKE: the retry SYN draws a reply
        whose tag verifies (it may still be too slow for gamma)."""
        if not (self.first_failed_with_sync and self.sync_applied):
            return False
        if self.system == "rke":
            return Outcome.ACCEPT in self.retry_outcomes
        return any(o in (Outcome.ACCEPT, Outcome.REJECT_STALE) for o in self.retry_outcomes)


def clock_sync_recovery(config: SimConfig, seed=None, skew_ms=5000.0, retry_after_ms=2000) -> RecoveryResult:
    """RKE: a skewed fob presses, the device answers with a sync, the user presses again."""
    seed = resolve_seed(seed)
    world = build_world(config.replace(fob_skew_ms=skew_ms), seed, "rke")
    sim, rng = world.sim, random.Random(f"recovery:{seed}")
    t_first = safe_instant(sim, rng, retry_after_ms + 500)
    sim.schedule(t_first, world.fob.press)
    sim.schedule(t_first + retry_after_ms, world.fob.press)
    sim.run()
    first, retry = world.fob.presses
    by_start = {}
    for r in world.device.verdicts:
        by_start.setdefault(r.t_start, []).append(r.verdict.outcome)
    first_out = [o for t in first for o in by_start.get(t, [])]
    retry_out = [o for t in retry for o in by_start.get(t, [])]
    applied = any(ok for _, ok in world.fob.sync_events)
    error = world.fob.fob.clock.now() - sim.now
    return RecoveryResult("rke", seed, first_out, applied, retry_out, error, sim.trace)


def prke_sync_recovery(config: SimConfig, seed=None, skew_ms=15000.0, retry_after_ms=1000) -> RecoveryResult:
    """PRKE: a SYN the skewed fob never answers triggers the broadcast sync."""
    seed = resolve_seed(seed)
    world = build_world(config.replace(fob_skew_ms=skew_ms), seed, "prke")
    sim, rng = world.sim, random.Random(f"recovery:{seed}")
    t_first = safe_instant(sim, rng, config.syn_timeout_ms + retry_after_ms + 500)
    sim.schedule(t_first, world.device.trigger)
    sim.schedule(t_first + config.syn_timeout_ms + retry_after_ms, world.device.trigger)
    sim.run()
    split = t_first + config.syn_timeout_ms
    first_out = [r.verdict.outcome for r in world.device.verdicts if r.time_ms < split]
    retry_out = [r.verdict.outcome for r in world.device.verdicts if r.time_ms >= split]
    if world.device.broadcasts:
        first_out = first_out + [Outcome.SYNC_SENT]
    applied = any(ok for _, ok in world.fob.sync_events)
    error = world.fob.fob.clock.now() - sim.now
    return RecoveryResult("prke", seed, first_out, applied, retry_out, error, sim.trace)
