"""Flat ``key = value`` scenario files.

    # comments and blank lines are ignored
    seed = 7
    channel_count = 16
    rke_latency = 55, 79, 136      # min, q3, max in ms
    device_id = 00004c52           # hex

Unknown keys, repeated keys and bad values are errors that carry the
offending line number.
"""

import hashlib

from .crypto import HopConfig
from .simnet import LatencyModel, SimConfig


class ConfigError(ValueError):
    def __init__(self, msg, path="<config>", lineno=None):
        self.path = path
        self.lineno = lineno
        where = f"{path}:{lineno}" if lineno is not None else path
        super().__init__(f"{where}: {msg}")


def _int(s):
    return int(s, 0)


def _opt_int(s):
    return None if s.lower() == "none" else int(s, 0)


def _opt_float(s):
    return None if s.lower() in ("none", "") else float(s)


def _latency(s):
    parts = [p.strip() for p in s.split(",")]
    if len(parts) != 3:
        raise ValueError("expected three comma-separated values: min, q3, max")
    return LatencyModel(*(float(p) for p in parts))


def _opt_latency(s):
    return None if s.lower() == "none" else _latency(s)


def _hex(s):
    return bytes.fromhex(s)


def _cmd(s):
    # two ASCII characters, or hex when prefixed with 0x
    return bytes.fromhex(s[2:]) if s.startswith("0x") else s.encode("ascii")


HOP_KEYS = {
    "period_ms": _int,
    "channel_count": _int,
    "base_frequency_hz": float,
    "spacing_hz": float,
}

SIM_KEYS = {
    "seed": _opt_int,
    "rke_latency": _latency,
    "prke_latency": _latency,
    "downlink_ms": float,
    "attacker_latency": _opt_latency,
    "fob_skew_ms": float,
    "device_skew_ms": float,
    "duration_ms": float,
    "start_ms": _int,
    "gamma_rke_ms": float,
    "gamma_prke_ms": float,
    "messages_per_press": _int,
    "frame_gap_ms": float,
    "airtime_ms_per_byte": float,
    "syn_retransmit_ms": float,
    "syn_timeout_ms": float,
    "sync_lead_ms": _opt_float,
    "device_id": _hex,
    "command": _cmd,
}

def parse_config(text: str, path="<config>") -> SimConfig:
    hop_kw, sim_kw, seen = {}, {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", path, lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first set on line {seen[key]})", path, lineno)
        seen[key] = lineno
        if key in HOP_KEYS:
            conv, target = HOP_KEYS[key], hop_kw
        elif key in SIM_KEYS:
            conv, target = SIM_KEYS[key], sim_kw
        else:
            raise ConfigError(f"unknown key {key!r}", path, lineno)
        try:
            target[key] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", path, lineno) from None
    try:
        return SimConfig(hop=HopConfig(**hop_kw), **sim_kw)
    except ValueError as exc:
        raise ConfigError(str(exc), path) from None


def load_config(path) -> SimConfig:
    if path is None:
        return SimConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}", str(path)) from None
    return parse_config(text, str(path))


def dump_config(cfg: SimConfig) -> str:
    """Canonical text form; parse_config(dump_config(c)) == c."""
    def text(conv, v):
        # floats are rendered as floats so equal configs dump identically
        return repr(float(v)) if conv in (float, _opt_float) and v is not None else v

    lines = [f"{k} = {text(conv, getattr(cfg.hop, k))}" for k, conv in HOP_KEYS.items()]
    for k, conv in SIM_KEYS.items():
        v = text(conv, getattr(cfg, k))
        if isinstance(v, LatencyModel):
            v = ", ".join(repr(float(x)) for x in (v.min_ms, v.q3_ms, v.max_ms))
        elif k == "device_id":
            v = v.hex()
        elif k == "command":
            v = "0x" + v.hex()
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"


def config_digest(cfg: SimConfig) -> str:
    return hashlib.sha256(dump_config(cfg).encode()).hexdigest()[:16]
