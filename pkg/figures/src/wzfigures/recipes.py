"""Figure recipes: read allowlisted CSV columns, assert, draw, save.

Every panel is drawn from the data files produced by the lab CLI
(`wzlab figures-data --figure N`); no physics is recomputed here.  The
content checks (e.g. which series touch zero where) run on the in-memory
arrays before any drawing, so tests never depend on raster output.
"""

import math
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .readers import SchemaError, read_columns

HALF_PI = math.pi / 2.0


class DataContractError(ValueError):
    """The data violates the figure's expected structure."""


# exactly the lab CSV schemas; the allowlist test keeps these in sync
ALLOWLISTS = {
    1: ("phi", "theta_noise", "theta_curve", "theta_base"),
    3: ("theta0", "m", "drms_analytic_over_eps_sigma"),
    4: ("m", "omega", "f_rms", "theta0_lo", "theta0_hi"),
    5: ("m", "theta0", "sigma_bar", "ell_a", "ell_b", "ell_angle", "selected"),
    6: ("theta0", "alpha", "v1", "v2", "v3"),
    7: ("theta0", "n1", "n2", "n3"),
    8: ("theta0", "axis_t2", "axis_a", "axis_b", "tilt", "product", "selected"),
}

FIGURE_IDS = tuple(sorted(ALLOWLISTS))


@dataclass(frozen=True)
class FigureRecipe:
    figure_id: int
    inputs: tuple
    output: str

    def __post_init__(self):
        if self.figure_id not in ALLOWLISTS:
            raise SchemaError(
                f"no recipe for figure {self.figure_id}; have {FIGURE_IDS}"
            )
        if len(self.inputs) != 1:
            raise SchemaError("each figure reads exactly one CSV")


def _sphere_xyz(theta, phi):
    st = np.sin(theta)
    return st * np.cos(phi), st * np.sin(phi), np.cos(theta)


def _draw_fig1(d):
    fig = plt.figure(figsize=(10.0, 4.0))
    ax = fig.add_subplot(1, 2, 1)
    ax.plot(d["phi"], d["theta_noise"], color="black", lw=0.8)
    ax.set_xlabel(r"$\Phi$")
    ax.set_ylabel(r"$\theta(\Phi)$")
    ax3 = fig.add_subplot(1, 2, 2, projection="3d")
    ax3.plot(*_sphere_xyz(d["theta_curve"], d["phi"]), color="black", lw=0.8)
    ax3.plot(*_sphere_xyz(d["theta_base"], d["phi"]), color="gray", lw=0.8)
    ax3.set_box_aspect((1, 1, 1))
    ax3.set_xlim(-1, 1), ax3.set_ylim(-1, 1), ax3.set_zlim(-1, 1)
    return fig


def _assert_fig3(d):
    theta0, m, val = d["theta0"], d["m"], d["drms_analytic_over_eps_sigma"]
    anchors = (0.0, HALF_PI, math.pi)
    for mm in sorted(set(m.astype(int))):
        sel = m == mm
        if mm == 2:
            peak = theta0[sel][np.argmax(val[sel])]
            if abs(peak - HALF_PI) > 0.02:
                raise DataContractError(
                    f"m = 2 series peaks at {peak:.3f}, not at the equator"
                )
            continue
        for anchor in anchors:
            near = np.abs(theta0[sel] - anchor) <= 0.02
            if not near.any() or np.abs(val[sel][near]).min() > 1e-9:
                raise DataContractError(
                    f"m = {mm} series does not touch zero near {anchor:.3f}"
                )


def _draw_fig3(d):
    _assert_fig3(d)
    theta0, m, val = d["theta0"], d["m"], d["drms_analytic_over_eps_sigma"]
    fig, (left, right) = plt.subplots(1, 2, figsize=(10.0, 4.0))
    for mm in (0, 1, 2):
        sel = m == mm
        left.plot(theta0[sel], val[sel], label=f"m = {mm}")
    for mm in (3, 4, 5, 6, 7):
        sel = m == mm
        right.plot(theta0[sel], val[sel], label=f"m = {mm}")
    for ax in (left, right):
        ax.set_xlabel(r"$\Theta_0$")
        ax.legend(fontsize=8)
    left.set_ylabel(r"$d_{\mathrm{rms}}/(\epsilon\sigma)$")
    return fig


def _draw_fig4(d):
    fig, (left, right) = plt.subplots(1, 2, figsize=(10.0, 4.0))
    for mm in sorted(set(d["m"].astype(int))):
        sel = d["m"] == mm
        left.plot(d["omega"][sel], d["f_rms"][sel], label=f"m = {mm}")
        inside = sel & ~np.isnan(d["theta0_lo"])
        order = np.argsort(d["theta0_lo"][inside])
        right.plot(
            d["theta0_lo"][inside][order], d["f_rms"][inside][order],
            label=f"m = {mm}",
        )
        order = np.argsort(d["theta0_hi"][inside])
        right.plot(
            d["theta0_hi"][inside][order], d["f_rms"][inside][order],
            color=right.lines[-1].get_color(),
        )
    left.axvspan(1.0, 2.0, color="0.9")
    left.set_xlabel(r"$\omega$")
    left.set_ylabel(r"$|F(\omega)|_{\mathrm{rms}}$")
    right.set_xlabel(r"$\Theta_0$")
    left.legend(fontsize=8)
    return fig


def _ellipse(a, b, angle):
    t = np.linspace(0.0, 2.0 * math.pi, 181)
    x = a * np.cos(t)
    y = b * np.sin(t)
    c, s = math.cos(angle), math.sin(angle)
    return c * x - s * y, s * x + c * y


def _draw_fig5(d):
    modes = sorted(set(d["m"].astype(int)))
    fig, axes = plt.subplots(2, len(modes), figsize=(3.4 * len(modes), 6.0))
    for j, mm in enumerate(modes):
        sel = d["m"] == mm
        pick = sel & (d["selected"] == 1)
        if not pick.any():
            raise DataContractError(f"no selected row for m = {mm}")
        a = d["ell_a"][pick][0]
        b = d["ell_b"][pick][0]
        ang = d["ell_angle"][pick][0]
        top = axes[0, j]
        for scale in (1.0, 2.0):
            top.plot(*_ellipse(scale * a, scale * b, ang), color="black", lw=0.8)
        top.set_aspect("equal")
        top.set_title(f"m = {mm}", fontsize=9)
        bottom = axes[1, j]
        bottom.plot(d["theta0"][sel], d["sigma_bar"][sel], color="black", lw=0.9)
        bottom.plot(
            d["theta0"][pick], d["sigma_bar"][pick], marker="o", color="black",
            ls="none", ms=4,
        )
        bottom.set_xlabel(r"$\Theta_0$")
    axes[1, 0].set_ylabel(r"$\bar\sigma_m$")
    return fig


def _draw_fig6(d):
    fig = plt.figure(figsize=(10.0, 4.0))
    ax = fig.add_subplot(1, 2, 1)
    ax.plot(d["theta0"], d["alpha"], color="black", lw=0.9)
    ax.set_xlabel(r"$\Theta_0$")
    ax.set_ylabel(r"rotation angle")
    ax3 = fig.add_subplot(1, 2, 2, projection="3d")
    ax3.plot(d["v1"], d["v2"], d["v3"], color="black", lw=0.9)
    ax3.set_box_aspect((1, 1, 1))
    return fig


def _draw_fig7(d):
    fig = plt.figure(figsize=(5.5, 4.5))
    ax3 = fig.add_subplot(projection="3d")
    ax3.plot(d["n1"], d["n2"], d["n3"], color="black", lw=0.9)
    ax3.set_box_aspect((1, 1, 1))
    ax3.set_xlabel("x"), ax3.set_ylabel("y"), ax3.set_zlabel("z")
    return fig


def _draw_fig8(d):
    pick = d["selected"] == 1
    if pick.sum() != 1:
        raise DataContractError("figure 8 needs exactly one selected row")
    a = d["axis_a"][pick][0]
    b = d["axis_b"][pick][0]
    c2 = d["axis_t2"][pick][0]
    tilt = d["tilt"][pick][0]
    fig = plt.figure(figsize=(10.0, 7.0))
    ax3 = fig.add_subplot(2, 2, 1, projection="3d")
    u = np.linspace(0.0, 2.0 * math.pi, 40)
    v = np.linspace(0.0, math.pi, 20)
    xs = a * np.outer(np.cos(u), np.sin(v))
    ys = c2 * np.outer(np.sin(u), np.sin(v))
    zs = b * np.outer(np.ones_like(u), np.cos(v))
    ct, st = math.cos(tilt), math.sin(tilt)
    x_rot = ct * xs - st * zs
    z_rot = st * xs + ct * zs
    ax3.plot_wireframe(x_rot, ys, z_rot, color="black", lw=0.3)
    ax3.set_box_aspect((1, 1, 1))
    axp = fig.add_subplot(2, 2, 2)
    axp.plot(d["theta0"], d["product"], color="black", lw=0.9)
    axp.plot(
        d["theta0"][pick], d["product"][pick], marker="o", color="black",
        ls="none", ms=4,
    )
    axp.set_xlabel(r"$\Theta_0$")
    axp.set_ylabel("semiaxis product")
    axs = fig.add_subplot(2, 1, 2)
    for key, label in (("axis_a", "a"), ("axis_t2", "along 2~"), ("axis_b", "b")):
        axs.plot(d["theta0"], d[key], label=label, lw=0.9)
    axs.set_xlabel(r"$\Theta_0$")
    axs.legend(fontsize=8)
    return fig


_DRAWERS = {
    1: _draw_fig1,
    3: _draw_fig3,
    4: _draw_fig4,
    5: _draw_fig5,
    6: _draw_fig6,
    7: _draw_fig7,
    8: _draw_fig8,
}


def render(recipe: FigureRecipe):
    """Render one figure; returns the column arrays that were plotted.

    The image is written only after the data assertions pass, with a fixed
    canvas and no timestamps, so identical inputs give identical bytes.
    """
    data = read_columns(recipe.inputs[0], ALLOWLISTS[recipe.figure_id])
    fig = _DRAWERS[recipe.figure_id](data)
    try:
        fig.savefig(
            recipe.output, dpi=100, metadata={"Software": "wzfigures"}
        )
    finally:
        plt.close(fig)
    return data
