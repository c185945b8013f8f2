"""PNG figures for CLI reports. Uses the non-interactive Agg backend."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

FIGSIZE = (6.4, 4.0)
DPI = 120


def _finish(fig, ax, path):
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI, metadata={"Software": None})
    plt.close(fig)
    return path


def latency_histogram(samples, stats, path, system="rke"):
    """Histogram of measured latencies with min, Q3 and max marked."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.hist(samples, bins=40, color="0.6", edgecolor="0.3", linewidth=0.5)
    for x, label, style in ((stats.t_min, "min", ":"), (stats.t_q3, "Q3", "-"), (stats.t_max, "max", "--")):
        ax.axvline(x, color="k", linestyle=style, linewidth=1, label=f"{label} = {x:.1f} ms")
    ax.set_xlabel(f"{system.upper()} latency (ms)")
    ax.set_ylabel("trials")
    ax.legend(frameon=False, fontsize="small")
    return _finish(fig, ax, path)


def success_curve(rates, path, q3=None):
    """Per-message and per-press success rate against gamma."""
    gammas = [r.gamma_ms for r in rates]
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.plot(gammas, [100 * r.per_message_rate for r in rates], "k-", label="per message")
    if rates and rates[0].messages_per_press > 1:
        ax.plot(gammas, [100 * r.per_press_rate for r in rates], "k--",
                label=f"per press ({rates[0].messages_per_press} messages)")
    if q3 is not None:
        ax.axvline(q3, color="0.5", linewidth=1, label=f"Q3 = {q3:.1f} ms")
    ax.set_xlabel("gamma (ms)")
    ax.set_ylabel("success rate (%)")
    ax.set_ylim(0, 102)
    ax.legend(frameon=False, fontsize="small", loc="lower right")
    return _finish(fig, ax, path)


def relay_timing(breakdown, gamma_ms, path):
    """Stacked per-leg latency of the first relayed frame against gamma."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    left = 0.0
    shades = ["0.2", "0.45", "0.7", "0.35", "0.6", "0.85"]
    for i, (leg, ms) in enumerate(breakdown.items()):
        ax.barh(0, ms, left=left, color=shades[i % len(shades)], edgecolor="k", linewidth=0.5, label=leg)
        left += ms
    ax.axvline(gamma_ms, color="k", linestyle="--", label=f"gamma = {gamma_ms:g} ms")
    ax.set_yticks([])
    ax.set_xlabel("cumulative latency (ms)")
    ax.legend(frameon=False, fontsize="small", ncol=2, loc="upper left", bbox_to_anchor=(0, -0.2))
    return _finish(fig, ax, path)
