"""Figure rendering for sweep reports.

Renders the normalized-objective curves and the per-robot division-of-labor
bars from sweep result rows to PNG files next to the CSV output.  The CSV is
the canonical machine-readable artifact; figures are a convenience layer.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_CURVE_STYLE = {
    "modular-greedy": dict(color="tab:blue", marker="o"),
    "submodular-greedy": dict(color="tab:green", marker="s"),
    "edge-greedy": dict(color="tab:olive", marker="v"),
    "vertex-greedy": dict(color="tab:cyan", marker="^"),
    "random": dict(color="tab:gray", marker="x", linestyle="--"),
    "upt-rounded": dict(color="tab:purple", marker="d", linestyle=":"),
}


def render_sweep_figures(rows: list[dict], num_robots: int, outdir: str) -> list[str]:
    """Render figures for sweep rows (as dicts keyed by column name).

    One normalized-objective-vs-budget figure per (objective, k, seed), plus
    division-of-labor bars for each non-random algorithm at that (k, seed).
    Returns the written paths.
    """
    os.makedirs(outdir, exist_ok=True)
    written = []
    ok_rows = [r for r in rows if r["status"] == "ok"]
    groups: dict[tuple, list[dict]] = {}
    for r in ok_rows:
        groups.setdefault((r["objective"], r["k"], r["seed"]), []).append(r)

    for (objective, k, seed), group in sorted(groups.items()):
        path = os.path.join(outdir, f"normalized_{objective}_k{k}_seed{seed}.png")
        _render_curves(group, objective, k, path)
        written.append(path)
        for algorithm in sorted({r["algorithm"] for r in group}):
            if algorithm == "random":
                continue
            arows = [r for r in group if r["algorithm"] == algorithm]
            for which in ("comm", "verif"):
                path = os.path.join(
                    outdir, f"labor_{which}_{algorithm}_{objective}_k{k}_seed{seed}.png"
                )
                _render_labor(arows, num_robots, which, algorithm, path)
                written.append(path)
    return written


def _render_curves(group, objective, k, path):
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    by_alg: dict[str, list[dict]] = {}
    for r in group:
        by_alg.setdefault(r["algorithm"], []).append(r)
    for algorithm, arows in sorted(by_alg.items()):
        arows.sort(key=lambda r: r["b"])
        xs = [r["b"] for r in arows]
        ys = [r["normalized_value"] for r in arows]
        ax.plot(xs, ys, label=algorithm, **_CURVE_STYLE.get(algorithm, {}))
    upt_rows = sorted((r for r in group if r.get("upt") is not None), key=lambda r: r["b"])
    if upt_rows:
        seen = {}
        for r in upt_rows:
            seen[r["b"]] = r["upt_normalized"]
        ax.plot(list(seen), list(seen.values()), label="upper bound",
                color="tab:red", linestyle="--")
    ax.set_xlabel("communication budget b")
    ax.set_ylabel(f"normalized {objective} objective")
    ax.set_title(f"{objective}, k={k}")
    ax.set_ylim(-0.02, 1.05)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def _render_labor(arows, num_robots, which, algorithm, path):
    arows = sorted(arows, key=lambda r: r["b"])
    xs = [r["b"] for r in arows]
    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    bottom = [0.0] * len(arows)
    for robot in range(num_robots):
        key = f"{which}_frac_{robot}"
        vals = [r.get(key) or 0.0 for r in arows]
        ax.bar([str(x) for x in xs], vals, bottom=bottom, label=f"robot {robot}")
        bottom = [b + v for b, v in zip(bottom, vals)]
    ax.set_xlabel("communication budget b")
    label = "communication" if which == "comm" else "verification"
    ax.set_ylabel(f"fraction of {label}")
    ax.set_title(f"{label} split, {algorithm}")
    ax.legend(fontsize=7, ncols=min(num_robots, 5))
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
