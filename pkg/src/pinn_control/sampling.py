"""Build training datasets from a reference solution.

Data points are drawn uniformly at random over interior grid nodes,
excluding the t = 0 level (the training regime assumes the initial
condition is unknown).  Boundary points are spread evenly along the two
space boundaries over t in (0, T]; the KdV case adds evenly spaced
terminal nodes for the adjoint's final condition.  Residual points sit
on a fixed uniform lattice covering the full space-time rectangle, with
the lattice shape chosen to factor the prescribed count.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .problems import ProblemSpec
from .reference import ReferenceSolution

__all__ = ["TrainingDataset", "sample_dataset", "write_dataset_csv", "read_dataset_csv"]


@dataclass
class TrainingDataset:
    data_x: np.ndarray
    data_t: np.ndarray
    data_channel: np.ndarray  # channel name per data point ("y" or "y_unc")
    data_target: np.ndarray
    boundary_x: np.ndarray
    boundary_t: np.ndarray
    boundary_loc: np.ndarray  # "left" | "right" | "terminal"
    residual_x: np.ndarray
    residual_t: np.ndarray
    seed: int

    @property
    def data_points(self) -> list[tuple]:
        return [
            (x, t, c, v)
            for x, t, c, v in zip(self.data_x, self.data_t, self.data_channel, self.data_target)
        ]

    @property
    def boundary_points(self) -> list[tuple]:
        return [(x, t, l) for x, t, l in zip(self.boundary_x, self.boundary_t, self.boundary_loc)]

    @property
    def residual_points(self) -> np.ndarray:
        return np.stack([self.residual_x, self.residual_t], axis=1)


def _draw_data_points(rng, grid, field, n_points):
    """Uniform draw over interior nodes (x interior, t > 0), without replacement."""
    ix = np.arange(1, grid.nx - 1)
    it = np.arange(1, grid.nt)
    pool = ix.size * it.size
    if n_points > pool:
        raise ValueError(f"requested {n_points} data points but only {pool} interior nodes exist")
    picks = rng.choice(pool, size=n_points, replace=False)
    ti = it[picks // ix.size]
    xi = ix[picks % ix.size]
    return grid.x[xi], grid.t[ti], field.values[ti, xi]


def sample_dataset(reference: ReferenceSolution, spec: ProblemSpec, seed: int) -> TrainingDataset:
    """Assemble the per-test point sets; deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    grid = reference.y_star.grid
    d = spec.domain

    xs, ts, chans, targets = [], [], [], []
    x, t, v = _draw_data_points(rng, grid, reference.y_star, spec.n_data)
    xs.append(x); ts.append(t); targets.append(v)
    chans += ["y"] * spec.n_data
    if spec.uses_uncontrolled:
        x, t, v = _draw_data_points(rng, grid, reference.y_uncontrolled, spec.n_data)
        xs.append(x); ts.append(t); targets.append(v)
        chans += ["y_unc"] * spec.n_data

    bx, bt, bloc = [], [], []
    n_terminal = 4 if spec.has_terminal_condition else 0
    per_side = (spec.n_boundary - n_terminal) // 2
    side_t = np.array([(j + 1) * d.T / per_side for j in range(per_side)])
    for loc, side_x in (("left", d.a), ("right", d.b)):
        bx += [side_x] * per_side
        bt += list(side_t)
        bloc += [loc] * per_side
    if n_terminal:
        term_x = np.linspace(d.a, d.b, n_terminal + 2)[1:-1]
        bx += list(term_x)
        bt += [d.T] * n_terminal
        bloc += ["terminal"] * n_terminal

    nt_r, nx_r = spec.residual_lattice
    rx = np.linspace(d.a, d.b, nx_r)
    rt = np.linspace(0.0, d.T, nt_r)
    gx, gt = np.meshgrid(rx, rt)

    return TrainingDataset(
        data_x=np.concatenate(xs),
        data_t=np.concatenate(ts),
        data_channel=np.array(chans),
        data_target=np.concatenate(targets),
        boundary_x=np.asarray(bx, dtype=np.float64),
        boundary_t=np.asarray(bt, dtype=np.float64),
        boundary_loc=np.array(bloc),
        residual_x=gx.ravel(),
        residual_t=gt.ravel(),
        seed=seed,
    )


def write_dataset_csv(path, dataset: TrainingDataset) -> None:
    """Serialize as rows (kind, channel, x, t, target).

    Boundary rows carry the location tag in the channel column; residual
    rows leave channel and target empty.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "channel", "x", "t", "target"])
        for x, t, c, v in dataset.data_points:
            writer.writerow(["data", c, repr(float(x)), repr(float(t)), repr(float(v))])
        for x, t, loc in dataset.boundary_points:
            writer.writerow(["boundary", loc, repr(float(x)), repr(float(t)), ""])
        for x, t in zip(dataset.residual_x, dataset.residual_t):
            writer.writerow(["residual", "", repr(float(x)), repr(float(t)), ""])


def read_dataset_csv(path, seed: int = 0) -> TrainingDataset:
    rows = {"data": [], "boundary": [], "residual": []}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["kind", "channel", "x", "t", "target"]:
            raise ValueError(f"unexpected dataset header {header!r}")
        for kind, channel, x, t, target in reader:
            rows[kind].append((channel, float(x), float(t), float(target) if target else 0.0))
    data = rows["data"]
    boundary = rows["boundary"]
    residual = rows["residual"]
    return TrainingDataset(
        data_x=np.array([r[1] for r in data]),
        data_t=np.array([r[2] for r in data]),
        data_channel=np.array([r[0] for r in data]),
        data_target=np.array([r[3] for r in data]),
        boundary_x=np.array([r[1] for r in boundary]),
        boundary_t=np.array([r[2] for r in boundary]),
        boundary_loc=np.array([r[0] for r in boundary]),
        residual_x=np.array([r[1] for r in residual]),
        residual_t=np.array([r[2] for r in residual]),
        seed=seed,
    )
