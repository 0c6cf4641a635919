"""Artifact writers: delimited outputs and rendered figures.

Every run emits plot-ready CSVs (fields, histories, final-time profiles,
error table) and, alongside them, PNG figures rendered with matplotlib:
space-time maps of the reference / network / uncontrolled states, the
control comparison, the final-time profiles, the loss history, and the
trajectory of the identified diffusion coefficient.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import ErrorReport
from .problems import ProblemSpec
from .reference import GridField, ReferenceSolution
from .train import TrainHistory

__all__ = [
    "write_final_profiles_csv",
    "write_cost_history_csv",
    "render_figures",
]


def write_final_profiles_csv(path, spec: ProblemSpec, reference: ReferenceSolution, fields) -> None:
    """Final-time state profiles: reference, replayed, network, uncontrolled."""
    grid = reference.y_star.grid
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y_ref_control", "y_replay", "y_network", "y_uncontrolled"])
        rows = zip(
            grid.x,
            reference.y_star.values[-1],
            fields["y_replay"].values[-1],
            fields["y"].values[-1],
            reference.y_uncontrolled.values[-1],
        )
        for row in rows:
            writer.writerow([f"{v:.12g}" for v in row])


def write_cost_history_csv(path, reference: ReferenceSolution) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "J"])
        for i, j in enumerate(reference.J_history):
            writer.writerow([i, repr(float(j))])


def _heatmap(ax, field: GridField, title: str):
    grid = field.grid
    im = ax.pcolormesh(grid.x, grid.t, field.values, shading="auto", cmap="viridis")
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    ax.set_title(title)
    return im


def render_figures(
    out_dir,
    spec: ProblemSpec,
    reference: ReferenceSolution,
    fields: dict[str, GridField],
    history: TrainHistory,
    report: ErrorReport,
) -> list[Path]:
    """Render the standard figure set into out_dir; returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    fig, axes = plt.subplots(1, 3, figsize=(13, 3.6), constrained_layout=True)
    for ax, (field, title) in zip(
        axes,
        [
            (reference.y_star, "reference controlled state"),
            (fields["y"], "network controlled state"),
            (reference.y_uncontrolled, "uncontrolled state"),
        ],
    ):
        im = _heatmap(ax, field, title)
        fig.colorbar(im, ax=ax)
    path = out_dir / "state_fields.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    written.append(path)

    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6), constrained_layout=True)
    for ax, (field, title) in zip(
        axes,
        [(reference.u_star, "reference control"), (fields["u"], "network control")],
    ):
        im = _heatmap(ax, field, title)
        fig.colorbar(im, ax=ax)
    path = out_dir / "control_fields.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    written.append(path)

    grid = reference.y_star.grid
    fig, ax = plt.subplots(figsize=(5.2, 3.8), constrained_layout=True)
    ax.plot(grid.x, reference.y_star.values[-1], "k-", label="y(u*)")
    ax.plot(grid.x, fields["y_replay"].values[-1], "C0--", label="y(u_net)")
    ax.plot(grid.x, fields["y"].values[-1], "C1-.", label="y_net")
    ax.plot(grid.x, reference.y_uncontrolled.values[-1], "C2:", label="y(u=0)")
    ax.set_xlabel("x")
    ax.set_ylabel(f"y(x, T={grid.t[-1]:g})")
    ax.legend()
    ax.set_title(f"{spec.id}: final-time profiles")
    path = out_dir / "final_time_comparison.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    written.append(path)

    epochs = [e.epoch for e in history.entries]
    fig, ax = plt.subplots(figsize=(5.2, 3.8), constrained_layout=True)
    ax.plot(epochs, history.nu_trajectory, "C0-")
    ax.axhline(spec.nu_true, color="k", ls="--", lw=0.8, label=f"true = {spec.nu_true:g}")
    ax.set_xlabel("epoch")
    ax.set_ylabel("identified diffusion coefficient")
    ax.legend()
    ax.set_title(f"{spec.id}: learned = {report.nu_learned:.4g}")
    path = out_dir / "nu_convergence.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(5.2, 3.8), constrained_layout=True)
    floor = 1e-16  # keep exactly-zero terms visible on the log axis
    curves = [
        ("total", "C0-", [e.breakdown.total for e in history.entries]),
        ("data", "C1-", [e.breakdown.L_d for e in history.entries]),
        ("residual", "C2-", [
            e.breakdown.L_rF + e.breakdown.L_rA + e.breakdown.L_rO + e.breakdown.L_r_unc
            for e in history.entries
        ]),
        ("boundary", "C3-", [e.breakdown.L_bF + e.breakdown.L_bA for e in history.entries]),
    ]
    for label, style, vals in curves:
        ax.semilogy(epochs, np.maximum(vals, floor), style, lw=1.0 if label == "total" else 0.8, label=label)
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.legend()
    ax.set_title(f"{spec.id}: training loss")
    path = out_dir / "loss_history.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    written.append(path)

    return written
