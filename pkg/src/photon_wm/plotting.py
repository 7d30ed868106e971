"""Static vector figures for sweep results."""

from __future__ import annotations

from pathlib import Path


def plot_sweep(result, path) -> Path:
    """Concurrence and fidelity against ``w/r0``, one curve per ``l``.

    Written as SVG with fixed metadata and element ids so that identical
    inputs give byte-identical files.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    ls = sorted({r.l for r in result.rows})
    with matplotlib.rc_context({"svg.hashsalt": "photon-wm", "svg.fonttype": "none"}):
        fig, (ax_c, ax_f) = plt.subplots(1, 2, figsize=(9, 3.6))
        for l in ls:
            x = result.column("w_over_r0", l)
            ax_c.plot(x, result.column("concurrence", l), label=f"l = {l}")
            ax_f.plot(x, result.column("fidelity", l), label=f"l = {l}")
        ax_c.set_xlabel("w / r0")
        ax_c.set_ylabel("concurrence")
        ax_f.set_xlabel("w / r0")
        ax_f.set_ylabel("fidelity (transmission-weighted)")
        for ax in (ax_c, ax_f):
            ax.set_ylim(-0.02, 1.02)
            ax.grid(alpha=0.3)
            ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
