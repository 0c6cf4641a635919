"""Relative L2 error norms and per-test error reports.

The four norms compare, over the whole space-time domain:

    E1  reference state      vs  network state
    E2  reference state      vs  replayed state (PDE solved with the network control)
    E3  reference control    vs  network control
    E4  replayed state       vs  network state  (replayed state in the denominator)

all by trapezoidal quadrature on the reference grid; network fields are
sampled at the grid nodes by direct forward evaluation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .network import ModelParams, NetworkParams, forward_batch
from .problems import ProblemSpec
from .reference import Grid, GridField, ReferenceSolution, grid_inner, solve_state

__all__ = ["ErrorReport", "relative_l2", "pinn_fields", "error_report", "write_error_table"]


@dataclass
class ErrorReport:
    test_id: str
    E1: float
    E2: float
    E3: float
    E4: float
    nu_learned: float
    nu_true: float
    epochs: int

    FIELD_NAMES = ("test_id", "E1", "E2", "E3", "E4", "nu_learned", "nu_true", "epochs")


def relative_l2(reference: GridField, candidate: GridField) -> float:
    """||reference - candidate|| / ||reference|| in L2 over the grid."""
    if not reference.grid.same_as(candidate.grid):
        raise ValueError("fields live on different grids")
    grid = reference.grid
    ref_sq = grid_inner(grid, reference.values, reference.values)
    if ref_sq == 0.0:
        raise ZeroDivisionError("reference field has zero norm")
    diff = reference.values - candidate.values
    return float(np.sqrt(grid_inner(grid, diff, diff) / ref_sq))


def pinn_fields(
    spec: ProblemSpec, params: NetworkParams, grid: Grid
) -> dict[str, GridField]:
    """Network channels evaluated on all grid nodes.

    Returns the state, the control, and (where defined) the adjoint and
    the uncontrolled state, with eliminated channels reconstructed
    through the optimality relation.
    """
    gx, gt = np.meshgrid(grid.x, grid.t)
    out = forward_batch(params, gx.ravel(), gt.ravel())
    fields: dict[str, GridField] = {}
    for i, name in enumerate(spec.channels):
        fields[name] = GridField(out[:, i].reshape(grid.nt, grid.nx), grid, channel=name)
    if spec.family == "kdv":
        fields["u"] = GridField(fields["p"].values / spec.alpha, grid, channel="u")
    elif spec.family == "allen_cahn":
        fields["p"] = GridField(spec.alpha * fields["u"].values, grid, channel="p")
    return fields


def error_report(
    spec: ProblemSpec,
    reference: ReferenceSolution,
    params: NetworkParams,
    model: ModelParams,
    grid: Grid,
    epochs: int = 0,
) -> tuple[ErrorReport, dict[str, GridField]]:
    """Compute E1..E4 against the reference solution.

    Also returns the evaluated network fields plus the replayed state
    (key "y_replay"), so callers can persist them without re-evaluating.
    """
    fields = pinn_fields(spec, params, grid)
    y_replay = solve_state(spec, grid, fields["u"], nu=spec.nu_true)
    y_replay.channel = "y_replay"
    fields["y_replay"] = y_replay

    report = ErrorReport(
        test_id=spec.id,
        E1=relative_l2(reference.y_star, fields["y"]),
        E2=relative_l2(reference.y_star, y_replay),
        E3=relative_l2(reference.u_star, fields["u"]),
        E4=relative_l2(y_replay, fields["y"]),
        nu_learned=model.nu,
        nu_true=spec.nu_true,
        epochs=epochs,
    )
    return report, fields


def write_error_table(path, reports: list[ErrorReport]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ErrorReport.FIELD_NAMES)
        for r in reports:
            writer.writerow(
                [r.test_id]
                + [repr(float(getattr(r, n))) for n in ("E1", "E2", "E3", "E4", "nu_learned", "nu_true")]
                + [r.epochs]
            )
