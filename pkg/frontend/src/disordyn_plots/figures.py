"""The five figure kinds rendered from a bundle.

Heatmaps use a linear scale in |rho| shared across compared panels, so
side-by-side panels are directly comparable.
"""

from __future__ import annotations

from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .bundle_reader import (
    Bundle,
    read_density,
    read_labelled_rows,
    read_momentum,
    read_purity,
)

KINDS = (
    "density_heatmap",
    "purity_curve",
    "momentum_fringes",
    "ratio_heatmap",
    "localization_profiles",
)

RATIO_FLOOR_REL = 1e-4


@dataclass(frozen=True)
class FigureRequest:
    bundle: str
    kind: str
    out: str
    time: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")


def _nearest(times: list[float], requested: float | None) -> float:
    if not times:
        raise ValueError("no per-time states listed in the bundle")
    if requested is None:
        return times[-1]
    return min(times, key=lambda t: abs(t - requested))


def _axes_summary(fig) -> list[dict]:
    return [
        {
            "title": ax.get_title(),
            "xlabel": ax.get_xlabel(),
            "ylabel": ax.get_ylabel(),
            "xlim": list(ax.get_xlim()),
            "ylim": list(ax.get_ylim()),
        }
        for ax in fig.axes
        if ax.get_xlabel() or ax.get_title()
    ]


def _finish(fig, request: FigureRequest, time=None) -> dict:
    summary = {
        "path": request.out,
        "kind": request.kind,
        "time": time,
        "axes": _axes_summary(fig),
    }
    fig.savefig(request.out, dpi=110)
    plt.close(fig)
    return summary


def _density_heatmap(bundle: Bundle, request: FigureRequest) -> dict:
    time = _nearest(bundle.state_times("states_ens"), request.time)
    n = bundle.lattice_size()
    panels = [("ensemble average", read_density(bundle.state_path("states_ens", time), n))]
    if bundle.has("states_me"):
        panels.append(("master equation", read_density(bundle.state_path("states_me", time), n)))
    vmax = max(float(np.abs(m).max()) for _, m in panels)
    fig, axes = plt.subplots(1, len(panels), figsize=(4.8 * len(panels), 4.2), squeeze=False)
    for ax, (title, mat) in zip(axes[0], panels):
        im = ax.imshow(np.abs(mat), origin="lower", vmin=0.0, vmax=vmax, cmap="viridis")
        ax.set_title(f"{title}, |rho| at t={time:g}")
        ax.set_xlabel("site j'")
        ax.set_ylabel("site j")
        fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    return _finish(fig, request, time)


def _ratio_heatmap(bundle: Bundle, request: FigureRequest) -> dict:
    times = sorted(
        set(bundle.state_times("states_ens")) & set(bundle.state_times("states_me"))
    )
    time = _nearest(times, request.time)
    n = bundle.lattice_size()
    ens = np.abs(read_density(bundle.state_path("states_ens", time), n))
    me = np.abs(read_density(bundle.state_path("states_me", time), n))
    floor = RATIO_FLOOR_REL * float(ens.max())
    ratio = np.full(ens.shape, np.nan)
    np.divide(me, ens, out=ratio, where=ens >= floor)
    fig, ax = plt.subplots(figsize=(5.4, 4.4))
    cmap = matplotlib.colormaps["coolwarm"].copy()
    cmap.set_bad("0.85")
    im = ax.imshow(ratio, origin="lower", vmin=0.5, vmax=1.5, cmap=cmap)
    ax.set_title(f"|rho_me| / |rho_ens| at t={time:g} (floor {floor:.1e})")
    ax.set_xlabel("site j'")
    ax.set_ylabel("site j")
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    return _finish(fig, request, time)


def _purity_curve(bundle: Bundle, request: FigureRequest) -> dict:
    cols = read_purity(bundle.path("purity"))
    fig, ax = plt.subplots(figsize=(5.6, 4.0))
    ax.plot(cols["t"], cols["p_ens"], label="p_ens", color="C0")
    if any(v is not None for v in cols["p_me"]):
        ax.plot(cols["t"], cols["p_me"], label="p_me", color="C1", linestyle="--")
    tmax = bundle.report().get("t_max")
    if isinstance(tmax, (int, float)):
        ax.axvline(tmax, color="0.4", linestyle=":", label=f"t_max = {tmax:.3g}")
    ax.set_xlabel("t (hbar/J)")
    ax.set_ylabel("purity tr[rho^2]")
    ax.set_title("purity decay")
    ax.legend()
    fig.tight_layout()
    return _finish(fig, request)


def _momentum_fringes(bundle: Bundle, request: FigureRequest) -> dict:
    blocks = read_momentum(bundle.path("momentum"))
    times = sorted(blocks)
    t_sel = _nearest(times, request.time)
    t_init = times[0]
    fig, ax = plt.subplots(figsize=(5.6, 4.0))
    init = blocks[t_init]
    ax.plot(init["q"], init["n_ens"], color="C1", linestyle="--", label=f"t={t_init:g}")
    sel = blocks[t_sel]
    ax.plot(sel["q"], sel["n_ens"], color="C0", label=f"t={t_sel:g}")
    if any(v is not None for v in sel["n_me"]):
        ax.plot(sel["q"], sel["n_me"], color="C2", linestyle=":", label=f"ME t={t_sel:g}")
    ax.set_xlabel("q")
    ax.set_ylabel("n(q)")
    ax.set_title("momentum distribution")
    ax.legend()
    fig.tight_layout()
    return _finish(fig, request, t_sel)


def _localization_profiles(bundle: Bundle, request: FigureRequest) -> dict:
    loc = read_labelled_rows(bundle.path("localization"))
    gq = read_labelled_rows(bundle.path("gq"))
    fig, (ax_f, ax_g) = plt.subplots(1, 2, figsize=(9.6, 4.0))
    for i, (label, rows) in enumerate(sorted(loc.items())):
        color = f"C{i}"
        ax_f.plot(rows["dj"], rows["F"], color=color, label=label)
        if any(v is not None for v in rows["F_boonpan"]):
            ax_f.plot(
                rows["dj"], rows["F_boonpan"], color=color, linestyle="--",
                label=f"{label} (path integral)",
            )
    for i, (label, rows) in enumerate(sorted(gq.items())):
        ax_g.plot(rows["q"], rows["G"], color=f"C{i}", label=label)
    ax_f.set_xlabel("site separation dj")
    ax_f.set_ylabel("F(dj)")
    ax_f.set_title("localization function")
    ax_f.legend(fontsize=8)
    ax_g.set_xlabel("q")
    ax_g.set_ylabel("G(q)")
    ax_g.set_title("momentum transfer distribution")
    ax_g.legend(fontsize=8)
    fig.tight_layout()
    return _finish(fig, request)


_RENDERERS = {
    "density_heatmap": _density_heatmap,
    "purity_curve": _purity_curve,
    "momentum_fringes": _momentum_fringes,
    "ratio_heatmap": _ratio_heatmap,
    "localization_profiles": _localization_profiles,
}


def render(request: FigureRequest) -> dict:
    """Render one figure from a bundle; returns a summary of what was drawn."""
    bundle = Bundle(request.bundle)
    return _RENDERERS[request.kind](bundle, request)
