"""laser-rke command line.

    laser-rke simulate rke --trials 1000 --seed 1 --out-dir out
    laser-rke attack relay-rke --bridge-latency-ms 0 --force-min-legs
    laser-rke attack dos --jam-channels 0-3 --presses 10000
    laser-rke estimate out/rke_dataset.csv --policy q3

Exit status: 0 on success (a successful attack is data, not an error),
2 for usage, config and dataset problems, 1 for anything unexpected.
"""

import argparse
import csv
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

from . import adversaries, analysis, plotting
from .config import ConfigError, config_digest, load_config
from .scenarios import resolve_seed, simulate_prke, simulate_rke

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE = 0, 1, 2
ATTACKS = ("replay", "relay-rke", "relay-prke", "dos")


class UsageError(Exception):
    pass


@dataclass
class RunReport:
    scenario: str
    seed: Optional[int] = None
    config_digest: Optional[str] = None
    metrics: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)

    def lines(self):
        yield f"scenario: {self.scenario}"
        if self.seed is not None:
            yield f"seed: {self.seed}"
        if self.config_digest is not None:
            yield f"config_digest: {self.config_digest}"
        for k, v in self.metrics.items():
            yield f"{k}: {_fmt(v)}"
        for k, v in sorted(self.outputs.items()):
            yield f"output.{k}: {v}"

    def __str__(self):
        return "\n".join(self.lines())


def _fmt(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def parse_channels(text, channel_count):
    """'all', 'none', or a comma list of channels and lo-hi ranges."""
    text = text.strip().lower()
    if text == "all":
        return set(range(channel_count))
    if text in ("none", ""):
        return set()
    out = set()
    for part in text.split(","):
        lo, sep, hi = part.strip().partition("-")
        try:
            chans = range(int(lo), int(hi) + 1) if sep else [int(lo)]
        except ValueError:
            raise UsageError(f"bad channel list {text!r}") from None
        out.update(chans)
    bad = sorted(c for c in out if not 0 <= c < channel_count)
    if bad:
        raise UsageError(f"channels {bad} outside [0, {channel_count})")
    return out


def _out_path(args, name):
    os.makedirs(args.out_dir, exist_ok=True)
    return os.path.join(args.out_dir, name)


def cmd_simulate(args) -> RunReport:
    cfg = load_config(args.config)
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    seed = resolve_seed(args.seed if args.seed is not None else cfg.seed)
    run = simulate_rke if args.system == "rke" else simulate_prke
    res = run(cfg, args.trials, seed=seed, gamma_ms=args.gamma)
    rep = RunReport(f"simulate-{args.system}", seed, config_digest(cfg))
    prefix = args.system
    rep.outputs["dataset"] = _out_path(args, f"{prefix}_dataset.csv")
    analysis.write_dataset(res.latencies, rep.outputs["dataset"])
    rep.outputs["trace"] = _out_path(args, f"{prefix}_trace.csv")
    res.trace.to_csv(rep.outputs["trace"])
    rep.metrics.update(trials=res.attempts, samples=len(res.latencies))
    if args.gamma is not None:
        rep.metrics.update(gamma_ms=args.gamma, accepted=res.accepted)
    # dataset and trace are written first so a too-small run can still be inspected
    stats = analysis.estimate_threshold(res.latencies)
    row = stats.row(args.system)
    rep.metrics.update({k: row[k] for k in analysis.STATS_COLUMNS[1:]})
    rep.outputs["stats"] = _out_path(args, f"{prefix}_stats.csv")
    analysis.write_stats([row], rep.outputs["stats"])
    if not args.no_figures:
        rep.outputs["histogram"] = plotting.latency_histogram(
            res.latencies, stats, _out_path(args, f"{prefix}_latency.png"), args.system)
        lo, hi = int(stats.t_min), int(stats.t_max) + 1
        curve = analysis.empirical_success_curve(res.latencies, range(lo, hi + 1), cfg.messages_per_press
                                                 if args.system == "rke" else 1)
        rep.outputs["success_curve"] = plotting.success_curve(
            curve, _out_path(args, f"{prefix}_success.png"), stats.t_q3)
    return rep


def _attack_once(kind, cfg, args, seed, channels):
    if kind == "replay":
        return adversaries.run_jam_replay(cfg, args.replay_delay_ms, seed, gamma_ms=args.gamma)
    if kind == "dos":
        return adversaries.run_dos(cfg, channels, args.presses, seed)
    system = "rke" if kind == "relay-rke" else "prke"
    overrides = adversaries.min_leg_overrides(cfg, system) if args.force_min_legs else None
    fn = adversaries.run_relay_rke if system == "rke" else adversaries.run_relay_prke
    return fn(cfg, args.bridge_latency_ms, seed, overrides, gamma_ms=args.gamma)


def cmd_attack(args) -> RunReport:
    cfg = load_config(args.config)
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    if args.replay_delay_ms < 0:
        raise UsageError("--replay-delay-ms must be >= 0")
    if args.presses < 1:
        raise UsageError("--presses must be >= 1")
    channels = parse_channels(args.jam_channels, cfg.hop.channel_count)
    seed = resolve_seed(args.seed if args.seed is not None else cfg.seed)
    outcomes = [_attack_once(args.kind, cfg, args, seed + i, channels) for i in range(args.trials)]
    rep = RunReport(f"attack-{args.kind}", seed, config_digest(cfg))

    rows = [o.summary() for o in outcomes]
    rep.outputs["summary"] = _out_path(args, f"attack_{args.kind}_summary.csv")
    with open(rep.outputs["summary"], "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    rep.outputs["trace"] = _out_path(args, f"attack_{args.kind}_trace.csv")
    outcomes[0].trace.to_csv(rep.outputs["trace"])

    wins = sum(o.succeeded for o in outcomes)
    rep.metrics["runs"] = len(outcomes)
    rep.metrics["succeeded"] = wins > 0
    rep.metrics["success_rate"] = wins / len(outcomes)
    first = outcomes[0]
    if args.kind == "dos":
        blocked = sum(o.metrics["blocked"] for o in outcomes)
        presses = sum(o.metrics["presses"] for o in outcomes)
        rep.metrics.update(jammed_channels=len(channels), presses=presses, blocked=blocked,
                           blocked_fraction=blocked / presses)
    else:
        rep.metrics["gamma_ms"] = first.gamma_ms
        rep.metrics["frames_captured"] = sum(o.frames_captured for o in outcomes)
        rep.metrics["attacker_frames_at_device"] = sum(len(o.verdicts) for o in outcomes)
        rep.metrics["accepted"] = sum(sum(v.accepted for v in o.verdicts) for o in outcomes)
        rep.metrics["sync_sent"] = sum(r["sync_sent"] for r in rows)
        if first.timing_breakdown:
            legs = first.timing_breakdown[0]
            rep.metrics["first_path_ms"] = round(sum(legs.values()), 3)
            if args.kind.startswith("relay"):
                margin_min = cfg.link_model("rke").min_ms if args.kind == "relay-rke" else cfg.prke_latency.min_ms
                rep.metrics["relay_margin_ms"] = analysis.relay_margin(first.gamma_ms, margin_min)
                if not args.no_figures:
                    rep.outputs["timing"] = plotting.relay_timing(
                        legs, first.gamma_ms, _out_path(args, f"attack_{args.kind}_timing.png"))
    return rep


def cmd_estimate(args) -> RunReport:
    samples = analysis.read_dataset(args.dataset)
    stats = analysis.estimate_threshold(samples)
    rep = RunReport("estimate")
    row = stats.row(args.system)
    rep.metrics.update(samples=stats.sample_count)
    rep.metrics.update({k: row[k] for k in analysis.STATS_COLUMNS[1:]})
    rep.metrics["policy"] = args.policy
    rep.metrics["gamma_ms"] = analysis.format_number(stats.gamma(args.policy))
    if args.out_dir is not None:
        rep.outputs["stats"] = _out_path(args, f"{args.system}_stats.csv")
        analysis.write_stats([row], rep.outputs["stats"])
    return rep


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value scenario file")
    common.add_argument("--seed", type=int, help="master seed (random and printed if omitted)")
    common.add_argument("--gamma", type=float, help="device gamma in ms")
    common.add_argument("--out-dir", default="laser_out", help="directory for CSV and PNG output")
    common.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    p = argparse.ArgumentParser(prog="laser-rke", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="honest presses or handle pulls; latency dataset")
    s.add_argument("system", choices=("rke", "prke"))
    s.add_argument("--trials", type=int, default=1000)
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("attack", parents=[common], help="run an attack scenario")
    a.add_argument("kind", choices=ATTACKS)
    a.add_argument("--trials", type=int, default=1, help="independent runs, seeds seed..seed+trials-1")
    a.add_argument("--replay-delay-ms", type=float, default=5000.0)
    a.add_argument("--bridge-latency-ms", type=float, default=0.0)
    a.add_argument("--force-min-legs", action="store_true", help="pin relay radio legs to their minimum")
    a.add_argument("--jam-channels", default="0", help="'all', 'none' or e.g. 0,3,5-7")
    a.add_argument("--presses", type=int, default=1000)
    a.set_defaults(func=cmd_attack)

    e = sub.add_parser("estimate", help="statistics and gamma for a latency dataset")
    e.add_argument("dataset")
    e.add_argument("--policy", choices=analysis.POLICIES, default="q3")
    e.add_argument("--system", default="rke", help="label for the stats row")
    e.add_argument("--out-dir", default=None)
    e.set_defaults(func=cmd_estimate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rep = args.func(args)
    except (UsageError, ConfigError, analysis.StatsError) as exc:
        print(f"laser-rke: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"laser-rke: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"laser-rke: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    print(rep)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
