"""Authentication tags and hop-channel derivation from the shared secret.

Both sides hash ``sk || ts`` with BLAKE2s-256, where ``ts`` is the timestamp
in milliseconds rendered as 20 zero-padded ASCII digits (the same bytes that
travel in the RKE frame). The first 6 bytes of the digest form the tag; the
whole digest, read big-endian, selects the channel.
"""

import hashlib
import hmac
import os
from dataclasses import dataclass

KEY_SIZE = 32
TAG_SIZE = 6
DIGEST_SIZE = 32
TIMESTAMP_DIGITS = 20
MAX_TIMESTAMP = 10**TIMESTAMP_DIGITS - 1


@dataclass(frozen=True)
class SecretKey:
    """Pre-shared 256-bit secret."""

    bytes: bytes

    def __post_init__(self):
        if not isinstance(self.bytes, (bytes, bytearray)) or len(self.bytes) != KEY_SIZE:
            raise ValueError(f"secret key must be exactly {KEY_SIZE} bytes")
        object.__setattr__(self, "bytes", bytes(self.bytes))

    @classmethod
    def generate(cls, rng=None) -> "SecretKey":
        """Fresh uniform key; `rng` (a ``random.Random``) makes it reproducible."""
        if rng is None:
            return cls(os.urandom(KEY_SIZE))
        return cls(rng.randbytes(KEY_SIZE))

    @classmethod
    def from_hex(cls, text: str) -> "SecretKey":
        return cls(bytes.fromhex(text))

    def __repr__(self):
        return "SecretKey(<redacted>)"


@dataclass(frozen=True)
class HopConfig:
    period_ms: int = 10_000
    channel_count: int = 16
    # informational only, never used in derivation
    base_frequency_hz: float = 433.92e6
    spacing_hz: float = 100e3

    def __post_init__(self):
        if self.period_ms <= 0:
            raise ValueError("hop period must be positive")
        if self.channel_count < 1:
            raise ValueError("channel_count must be >= 1")

    def frequency_hz(self, channel: int) -> float:
        return self.base_frequency_hz + channel * self.spacing_hz


def encode_timestamp(t: int) -> bytes:
    """Fixed-width ASCII decimal encoding shared by hashing and framing."""
    t = int(t)
    if not 0 <= t <= MAX_TIMESTAMP:
        raise ValueError(f"timestamp {t} does not fit in {TIMESTAMP_DIGITS} digits")
    return b"%020d" % t


def full_digest(sk: SecretKey, t: int) -> bytes:
    return hashlib.blake2s(sk.bytes + encode_timestamp(t), digest_size=DIGEST_SIZE).digest()


def derive_auth_tag(sk: SecretKey, t: int) -> bytes:
    return full_digest(sk, t)[:TAG_SIZE]


def round_to_period(t: int, period_ms: int) -> int:
    if period_ms <= 0:
        raise ValueError("period must be positive")
    return (int(t) // period_ms) * period_ms


def digest_to_int(digest: bytes) -> int:
    if len(digest) != DIGEST_SIZE:
        raise ValueError(f"digest must be {DIGEST_SIZE} bytes")
    return int.from_bytes(digest, "big")


def derive_channel(sk: SecretKey, t: int, cfg: HopConfig) -> int:
    """Channel index for the hop period containing `t`."""
    t_p = round_to_period(t, cfg.period_ms)
    return digest_to_int(full_digest(sk, t_p)) % cfg.channel_count


def tags_equal(a: bytes, b: bytes) -> bool:
    return hmac.compare_digest(a, b)
