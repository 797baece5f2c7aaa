"""Figure rendering for the experiment drivers.

Uses the object-oriented matplotlib API (no pyplot, no global backend state)
so it stays headless-safe; figures are written next to the CSV output.
"""

from __future__ import annotations

from matplotlib.figure import Figure

__all__ = ["render_result"]

_FIGSIZE = (6.4, 4.0)


def _new_axes(title: str, xlabel: str, ylabel: str):
    fig = Figure(figsize=_FIGSIZE)
    ax = fig.subplots()
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _render_fig1(rows, path):
    fig, ax = _new_axes("Aligned optimum vs fixed-basis baseline",
                        "transmit SNR (dB)", "rate (nats / channel use)")
    x = [r["gamma_db"] for r in rows]
    ax.errorbar(x, [r["c_opt"] for r in rows], yerr=[3 * r["se_opt"] for r in rows],
                marker="o", capsize=3, label="aligned family, best split")
    ax.errorbar(x, [r["c_sub"] for r in rows], yerr=[3 * r["se_sub"] for r in rows],
                marker="s", capsize=3, label="random fixed basis, best weights")
    ax.legend()
    fig.savefig(path, dpi=150, bbox_inches="tight")


def _render_fig2(rows, path):
    fig, ax = _new_axes("Capacity growth with mean strength",
                        "channel mean norm", "rate (nats / channel use)")
    x = [r["mu_norm"] for r in rows]
    ax.errorbar(x, [r["c_opt"] for r in rows], yerr=[3 * r["se_opt"] for r in rows],
                marker="o", capsize=3)
    fig.savefig(path, dpi=150, bbox_inches="tight")


def _render_fig3(rows, path):
    fig, ax = _new_axes("Beamforming sign test vs power-split search",
                        "transmit SNR (dB)", "decision function f")
    x = [r["gamma_db"] for r in rows]
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.plot(x, [r["f_value"] for r in rows], marker="o", label="f(gamma)")
    twin = ax.twinx()
    twin.set_ylabel("1 - phi*")
    twin.plot(x, [r["one_minus_phi_star"] for r in rows], marker="s",
              color="tab:red", label="1 - phi*")
    handles1, labels1 = ax.get_legend_handles_labels()
    handles2, labels2 = twin.get_legend_handles_labels()
    ax.legend(handles1 + handles2, labels1 + labels2, loc="upper left")
    fig.savefig(path, dpi=150, bbox_inches="tight")


def _render_custom(rows, path):
    fig, ax = _new_axes("Optimized capacity", "transmit SNR (dB)",
                        "rate (nats / channel use)")
    x = [r["gamma_db"] for r in rows]
    ax.errorbar(x, [r["c_opt"] for r in rows], yerr=[3 * r["se_opt"] for r in rows],
                marker="o", capsize=3)
    fig.savefig(path, dpi=150, bbox_inches="tight")


_RENDERERS = {
    "fig1-compare": _render_fig1,
    "fig2-mean-sweep": _render_fig2,
    "fig3-bf-consistency": _render_fig3,
    "custom": _render_custom,
}


def render_result(result, path) -> bool:
    """Render the figure for a driver result; returns False for figure-less modes."""
    renderer = _RENDERERS.get(result.mode)
    if renderer is None or not result.rows:
        return False
    renderer(result.rows, path)
    return True
