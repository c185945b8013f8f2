from dataclasses import fields

import pytest

from laser_rke.config import HOP_KEYS, SIM_KEYS, ConfigError, config_digest, dump_config, load_config, parse_config
from laser_rke.crypto import HopConfig
from laser_rke.simnet import LatencyModel, SimConfig


def test_keys_cover_every_config_field():
    assert set(SIM_KEYS) | {"hop"} == {f.name for f in fields(SimConfig)}
    assert set(HOP_KEYS) == {f.name for f in fields(HopConfig)}


def test_defaults_when_empty():
    assert parse_config("") == SimConfig()
    assert load_config(None) == SimConfig()


def test_parse_values_and_comments():
    cfg = parse_config(
        """
        # scenario
        seed = 7
        channel_count = 1       # no hopping
        rke_latency = 50, 70, 120
        attacker_latency = none
        device_id = 01020304
        command = LK
        sync_lead_ms = 12.5
        """
    )
    assert cfg.seed == 7 and cfg.hop.channel_count == 1
    assert cfg.rke_latency == LatencyModel(50, 70, 120)
    assert cfg.attacker_latency is None
    assert cfg.device_id == b"\x01\x02\x03\x04" and cfg.command == b"LK"
    assert cfg.sync_lead_ms == 12.5


def test_dump_round_trip():
    cfg = SimConfig(seed=3, fob_skew_ms=5000, attacker_latency=LatencyModel(1, 2, 3), command=b"\x00\xff")
    assert parse_config(dump_config(cfg)) == cfg
    assert config_digest(cfg) == config_digest(parse_config(dump_config(cfg)))
    assert config_digest(cfg) != config_digest(SimConfig())


@pytest.mark.parametrize(
    "text,line",
    [
        ("seed = 1\nbogus = 2", 2),
        ("seed", 1),
        ("\n\nseed = 1\nseed = 2", 4),
        ("rke_latency = 1, 2", 1),
        ("period_ms = ten", 1),
        ("device_id = zz", 1),
        ("= 5", 1),
    ],
)
def test_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigError) as exc:
        parse_config(text, "s.cfg")
    assert exc.value.lineno == line
    assert f"s.cfg:{line}:" in str(exc.value)


def test_semantic_errors():
    with pytest.raises(ConfigError):
        parse_config("channel_count = 0")
    with pytest.raises(ConfigError):
        parse_config("rke_latency = 10, 5, 20")


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")
    p = tmp_path / "ok.cfg"
    p.write_text("seed = 4\n")
    assert load_config(p).seed == 4
