"""Latency statistics and the threshold experiments built on them."""

import csv
import io
import math
import random
from dataclasses import dataclass

import numpy as np

from .actors import Device, ManualClock
from .crypto import HopConfig, SecretKey, derive_auth_tag
from .simnet import LatencyModel, sample_latency
from .wire import RkeMessage

MIN_SAMPLES = 4
POLICIES = ("q3", "avg", "max")
STATS_COLUMNS = ("system", "t_max", "t_min", "t_avg", "t_Q3")


class StatsError(ValueError):
    """Dataset too small or malformed for the requested statistics."""


@dataclass(frozen=True)
class LatencyStats:
    t_max: float
    t_min: float
    t_avg: float
    t_q3: float
    sample_count: int

    def gamma(self, policy="q3") -> float:
        if policy == "q3":
            return self.t_q3
        if policy == "avg":
            return self.t_avg
        if policy == "max":
            return self.t_max
        raise ValueError(f"unknown gamma policy {policy!r}; choose from {', '.join(POLICIES)}")

    def row(self, system: str) -> dict:
        return dict(zip(STATS_COLUMNS, (system, format_number(self.t_max), format_number(self.t_min),
                                        format_number(self.t_avg), format_number(self.t_q3))))


def format_number(x):
    # stable text form for CSV: integers without ".0", otherwise up to 6 decimals
    x = round(float(x), 6)
    return str(int(x)) if x.is_integer() else repr(x)


def estimate_threshold(samples) -> LatencyStats:
    """Min, max, mean and the linearly interpolated 0.75 quantile."""
    xs = np.asarray(list(samples), dtype=float)
    if xs.ndim != 1 or xs.size < MIN_SAMPLES:
        raise StatsError(f"need at least {MIN_SAMPLES} samples for quartiles, got {xs.size}")
    if not np.all(np.isfinite(xs)):
        raise StatsError("samples must be finite")
    return LatencyStats(
        t_max=float(xs.max()),
        t_min=float(xs.min()),
        t_avg=float(xs.mean()),
        t_q3=float(np.quantile(xs, 0.75, method="linear")),
        sample_count=int(xs.size),
    )


@dataclass(frozen=True)
class SuccessRates:
    gamma_ms: float
    per_message_rate: float
    per_press_rate: float
    trials: int
    messages_per_press: int

    def __iter__(self):
        return iter((self.per_message_rate, self.per_press_rate))


def success_rate_experiment(gamma_ms, latency_model: LatencyModel, trials: int, messages_per_press=6,
                            seed=0) -> SuccessRates:
    """Each press sends `messages_per_press` frames with independent latencies
    through a real `Device`; rates count Accept verdicts."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if messages_per_press < 1:
        raise ValueError("messages_per_press must be >= 1")
    rng = random.Random(f"success-rate:{seed}")
    sk = SecretKey.generate(rng)
    dev_id = b"\x00\x00LR"
    clock = ManualClock(0.0)
    device = Device(sk, dev_id, HopConfig(), gamma_ms, clock)
    ok_frames = ok_presses = 0
    t = 0
    for _ in range(trials):
        any_ok = False
        for i in range(messages_per_press):
            # frames of one press are 10 ms apart; presses 1 s apart
            t_start = t + 10 * i
            msg = RkeMessage(dev_id, derive_auth_tag(sk, t_start), t_start, b"UL")
            latency = sample_latency(latency_model, rng)
            if device.on_rke(msg, t_start + latency).accepted:
                ok_frames += 1
                any_ok = True
        ok_presses += any_ok
        t += 1000
    return SuccessRates(gamma_ms, ok_frames / (trials * messages_per_press), ok_presses / trials,
                        trials, messages_per_press)


def success_curve(gammas, latency_model, trials, messages_per_press=6, seed=0) -> list:
    return [success_rate_experiment(g, latency_model, trials, messages_per_press, seed) for g in gammas]


def empirical_success_curve(samples, gammas, messages_per_press=1) -> list:
    """Success rates read off a measured dataset.

    Per press assumes independent frames: 1 - (1 - p)^m.
    """
    xs = np.sort(np.asarray(list(samples), dtype=float))
    if xs.size == 0:
        raise StatsError("empty dataset")
    out = []
    for g in gammas:
        p = float(np.searchsorted(xs, g, side="right")) / xs.size
        out.append(SuccessRates(g, p, 1 - (1 - p) ** messages_per_press, int(xs.size), messages_per_press))
    return out


def relay_margin(gamma_ms, t_min_ms):
    """Total latency an attacker may add on top of the fastest honest path."""
    if gamma_ms < t_min_ms:
        raise ValueError(f"gamma ({gamma_ms}) is below t_min ({t_min_ms}); no honest exchange fits")
    return gamma_ms - t_min_ms


def relay_predicate(legs, gamma_ms) -> bool:
    """Accept iff the summed leg latencies fit within gamma.

    Sums in integer microseconds, the resolution of the simulator clock.
    """
    total_us = sum(round(ms * 1000) for ms in legs)
    return 0 <= total_us <= round(gamma_ms * 1000)


def read_dataset(path_or_file) -> list:
    """Single-column CSV of latencies in ms; blank lines and a non-numeric
    header row are skipped."""
    if hasattr(path_or_file, "read"):
        return _parse_dataset(path_or_file, "<stream>")
    with open(path_or_file, newline="") as fh:
        return _parse_dataset(fh, str(path_or_file))


def _parse_dataset(fh, name):
    out = []
    for lineno, row in enumerate(csv.reader(fh), 1):
        if not row or not row[0].strip():
            continue
        if len(row) != 1:
            raise StatsError(f"{name}:{lineno}: expected one column, got {len(row)}")
        try:
            v = float(row[0])
        except ValueError:
            if lineno == 1:
                continue
            raise StatsError(f"{name}:{lineno}: not a number: {row[0]!r}") from None
        if not math.isfinite(v):
            raise StatsError(f"{name}:{lineno}: not finite: {row[0]!r}")
        out.append(v)
    return out


def write_dataset(samples, path=None, header="latency_ms") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([header])
    for s in samples:
        w.writerow([f"{s:.3f}"])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def write_stats(rows, path=None) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else list(STATS_COLUMNS), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
