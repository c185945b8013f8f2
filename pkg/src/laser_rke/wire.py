"""Byte layouts of the four LASER frames.

    RKE       START | device_id(4) | tag(6) | t_start(20 ASCII) | cmd(2) | END   40 bytes
    PRKE      START | device_id(4) | tag(6) | END                                18 bytes
    SYNC      START | device_id(4) | tag(6) | t_sync(20 ASCII) | END             38 bytes

A PRKE frame whose tag is all zero is a SYN; anything else is a response.
"""

from dataclasses import dataclass

from .crypto import TAG_SIZE, TIMESTAMP_DIGITS, encode_timestamp

START = b"\xaa\x55\xaa\x55"
END = b"\x55\xaa\x55\xaa"
ID_SIZE = 4
CMD_SIZE = 2
NULL_TAG = bytes(TAG_SIZE)

RKE_SIZE = len(START) + ID_SIZE + TAG_SIZE + TIMESTAMP_DIGITS + CMD_SIZE + len(END)
PRKE_SIZE = len(START) + ID_SIZE + TAG_SIZE + len(END)
SYNC_SIZE = len(START) + ID_SIZE + TAG_SIZE + TIMESTAMP_DIGITS + len(END)


class WireError(ValueError):
    """Frame could not be decoded."""


class FrameLengthError(WireError):
    pass


class SentinelError(WireError):
    pass


class TimestampFieldError(WireError):
    pass


def _check_bytes(name, value, size):
    if not isinstance(value, (bytes, bytearray)) or len(value) != size:
        raise ValueError(f"{name} must be {size} bytes")
    return bytes(value)


@dataclass(frozen=True)
class RkeMessage:
    device_id: bytes
    tag: bytes
    t_start: int
    cmd: bytes

    def __post_init__(self):
        object.__setattr__(self, "device_id", _check_bytes("device_id", self.device_id, ID_SIZE))
        object.__setattr__(self, "tag", _check_bytes("tag", self.tag, TAG_SIZE))
        object.__setattr__(self, "cmd", _check_bytes("cmd", self.cmd, CMD_SIZE))
        encode_timestamp(self.t_start)


@dataclass(frozen=True)
class PrkeSyn:
    device_id: bytes

    def __post_init__(self):
        object.__setattr__(self, "device_id", _check_bytes("device_id", self.device_id, ID_SIZE))


@dataclass(frozen=True)
class PrkeResponse:
    device_id: bytes
    tag: bytes

    def __post_init__(self):
        object.__setattr__(self, "device_id", _check_bytes("device_id", self.device_id, ID_SIZE))
        object.__setattr__(self, "tag", _check_bytes("tag", self.tag, TAG_SIZE))
        if self.tag == NULL_TAG:
            raise ValueError("a response with a null tag would decode as a SYN")


@dataclass(frozen=True)
class SyncMessage:
    device_id: bytes
    tag: bytes
    t_sync: int

    def __post_init__(self):
        object.__setattr__(self, "device_id", _check_bytes("device_id", self.device_id, ID_SIZE))
        object.__setattr__(self, "tag", _check_bytes("tag", self.tag, TAG_SIZE))
        encode_timestamp(self.t_sync)


def encode_rke(m: RkeMessage) -> bytes:
    return START + m.device_id + m.tag + encode_timestamp(m.t_start) + m.cmd + END


def encode_prke_syn(m: PrkeSyn) -> bytes:
    return START + m.device_id + NULL_TAG + END


def encode_prke_resp(m: PrkeResponse) -> bytes:
    return START + m.device_id + m.tag + END


def encode_sync(m: SyncMessage) -> bytes:
    return START + m.device_id + m.tag + encode_timestamp(m.t_sync) + END


def _unframe(b, size):
    b = bytes(b)
    if len(b) != size:
        raise FrameLengthError(f"expected {size} bytes, got {len(b)}")
    if b[:4] != START or b[-4:] != END:
        raise SentinelError("missing start/end sentinel")
    return b[4:-4]


def _parse_timestamp(field):
    if len(field) != TIMESTAMP_DIGITS or not all(0x30 <= c <= 0x39 for c in field):
        raise TimestampFieldError(f"timestamp field is not {TIMESTAMP_DIGITS} ASCII digits: {field!r}")
    return int(field)


def decode_rke(b: bytes) -> RkeMessage:
    body = _unframe(b, RKE_SIZE)
    t_start = _parse_timestamp(body[10:30])
    return RkeMessage(body[:4], body[4:10], t_start, body[30:32])


def decode_prke(b: bytes):
    """Returns a `PrkeSyn` for a null tag, otherwise a `PrkeResponse`."""
    body = _unframe(b, PRKE_SIZE)
    device_id, tag = body[:4], body[4:10]
    if tag == NULL_TAG:
        return PrkeSyn(device_id)
    return PrkeResponse(device_id, tag)


def decode_sync(b: bytes) -> SyncMessage:
    body = _unframe(b, SYNC_SIZE)
    return SyncMessage(body[:4], body[4:10], _parse_timestamp(body[10:30]))


_ENCODERS = {
    RkeMessage: encode_rke,
    PrkeSyn: encode_prke_syn,
    PrkeResponse: encode_prke_resp,
    SyncMessage: encode_sync,
}

_DECODERS = {RKE_SIZE: decode_rke, PRKE_SIZE: decode_prke, SYNC_SIZE: decode_sync}


def encode(m) -> bytes:
    try:
        return _ENCODERS[type(m)](m)
    except KeyError:
        raise TypeError(f"not a LASER message: {type(m).__name__}") from None


def decode(b: bytes):
    """Decode any frame, discriminating the type by length."""
    try:
        decoder = _DECODERS[len(b)]
    except KeyError:
        raise FrameLengthError(f"no frame type is {len(b)} bytes long") from None
    return decoder(b)
