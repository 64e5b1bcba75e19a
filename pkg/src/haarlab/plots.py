"""Figure rendering for the report path.

Every CLI command that emits delimited or JSON output can render a
matplotlib figure next to it; these helpers keep the styling in one place
and always write to files (headless backend, no display).
"""

from __future__ import annotations

from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

plt.rcParams.update(
    {
        "figure.figsize": (6.0, 3.8),
        "font.size": 9,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "savefig.dpi": 150,
        "savefig.bbox": "tight",
    }
)


def _save(fig, path: str) -> str:
    fig.savefig(path)
    plt.close(fig)
    return path


def sweep_figure(rows: list[dict], path: str) -> str:
    """Weighted norm of the counterexample block against epsilon, with the
    1/(2 sqrt(eps)) reference and the flat characteristic."""
    fig, ax = plt.subplots()
    eps = [r["epsilon"] for r in rows]
    ax.loglog(eps, [r["norm_weighted"] for r in rows], "o-", label="weighted norm")
    ax.loglog(eps, [r["lower_bound"] for r in rows], "--", label="1/(2 sqrt(eps))")
    ax.loglog(eps, [r["a2_tree"] for r in rows], "s-", label="A2 characteristic")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("value")
    ax.invert_xaxis()
    ax.legend()
    ax.set_title("bounded characteristic, unbounded transform")
    return _save(fig, path)


def scan_figure(norms: list[float], a2: float, path: str) -> str:
    """Histogram of scanned multiplier norms, normalized by the
    characteristic."""
    fig, ax = plt.subplots()
    ratios = [n / a2 for n in norms] if a2 > 0 else norms
    ax.hist(ratios, bins=min(60, max(10, len(ratios) // 20 or 10)), color="#46627f")
    ax.axvline(max(ratios), color="crimson", ls="--", label=f"max = {max(ratios):.3g}")
    ax.set_xlabel("norm / A2")
    ax.set_ylabel("count")
    ax.legend()
    ax.set_title("multiplier norm scan")
    return _save(fig, path)


def packing_figure(reports: dict, path: str) -> str:
    """Per-atom packing ratios for each oscillation sequence."""
    fig, ax = plt.subplots()
    for name, rep in reports.items():
        vals = sorted((float(v) for v in rep.ratios.values()), reverse=True)
        ax.plot(range(1, len(vals) + 1), vals, marker=".", label=f"{name} (K={rep.constant:.3g})")
    ax.set_xlabel("atom rank")
    ax.set_ylabel("normalized subtree sum")
    ax.set_yscale("log")
    ax.legend()
    ax.set_title("packing ratios")
    return _save(fig, path)


def bellman_figure(certs: list, path: str) -> str:
    """Sampled minimum ratios per region against the registered floors."""
    fig, ax = plt.subplots()
    labels, mins, floors = [], [], []
    for cert in certs:
        for rc in cert.regions:
            labels.append(f"{cert.kind} Q={cert.Q:g}\n{rc.region}")
            mins.append(rc.min_ratio)
            floors.append(rc.c_floor)
    xs = range(len(labels))
    ax.bar(xs, mins, color="#5a8f6e", label="sampled min ratio")
    ax.plot(xs, floors, "r_", markersize=18, label="registered floor")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels, fontsize=6)
    ax.set_yscale("log")
    ax.legend()
    ax.set_title("tangent-drop certificates")
    return _save(fig, path)


def ratio_cloud_figure(
    points: list[tuple[float, float]],
    path: str,
    xlabel: str,
    ylabel: str,
    guides: Optional[list[tuple[float, str]]] = None,
    title: str = "",
) -> str:
    """Scatter of (x, y) pairs with straight-line guides y = c x."""
    fig, ax = plt.subplots()
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    ax.loglog(xs, ys, ".", alpha=0.6, markersize=4)
    if guides and xs:
        lo, hi = min(xs), max(xs)
        grid = [lo * (hi / lo) ** (t / 50) for t in range(51)] if hi > lo else [lo, hi]
        for c, label in guides:
            ax.loglog(grid, [c * g for g in grid], "--", label=label)
        ax.legend()
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    return _save(fig, path)


def check_cloud_figure(checks: list, path: str, title: str = "") -> str:
    """Scatter of verified inequalities: each point is (rhs, lhs); holding
    checks sit below the diagonal."""
    fig, ax = plt.subplots()
    lhs = [max(c.lhs, 1e-300) for c in checks]
    rhs = [max(c.rhs, 1e-300) for c in checks]
    ax.loglog(rhs, lhs, ".", alpha=0.5, markersize=4)
    lo = min(min(lhs), min(rhs))
    hi = max(max(lhs), max(rhs))
    ax.loglog([lo, hi], [lo, hi], "k--", lw=1, label="equality")
    ax.set_xlabel("bound")
    ax.set_ylabel("checked quantity")
    ax.legend()
    if title:
        ax.set_title(title)
    return _save(fig, path)
