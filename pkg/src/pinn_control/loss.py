"""Training loss: data misfit + physics residuals + boundary conditions.

total = w_d * L_d + w_r * (L_rF + L_rA + L_rO + L_r_unc) + w_b * (L_bF + L_bA)

Every term is a mean of squares.  The boundary terms follow the
per-point convention: the squared residuals of all conditions imposed at
a point are summed, and the sum is averaged over the full boundary point
set.  Conditions on the state and control channels accrue to L_bF, those
on the adjoint channel to L_bA.

The uncontrolled-state residual (Allen-Cahn cases only) is folded into
the residual group at weight w_r, like its siblings.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from . import problems as _problems
from .autodiff import tape as _tape
from .autodiff.engine import Recording
from .network import ModelParams, NetworkParams
from .problems import ProblemSpec

if TYPE_CHECKING:
    from .sampling import TrainingDataset

__all__ = [
    "LossWeights",
    "LossBreakdown",
    "data_loss",
    "residual_loss",
    "boundary_loss",
    "total_loss",
]


@dataclass(frozen=True)
class LossWeights:
    """Loss term weights; defaults w_d = w_b = 10, w_r = 1."""

    w_d: float = 10.0
    w_r: float = 1.0
    w_b: float = 10.0

    def __post_init__(self):
        if min(self.w_d, self.w_r, self.w_b) <= 0:
            raise ValueError("loss weights must be positive")


@dataclass
class LossBreakdown:
    """Weighted loss terms; entries are floats or recorded scalars."""

    L_d: object
    L_rF: object
    L_rA: object
    L_rO: object
    L_r_unc: object
    L_bF: object
    L_bA: object
    total: object

    def as_floats(self) -> "LossBreakdown":
        return LossBreakdown(*(float(v) for v in (
            self.L_d, self.L_rF, self.L_rA, self.L_rO,
            self.L_r_unc, self.L_bF, self.L_bA, self.total,
        )))

    FIELD_NAMES = ("L_d", "L_rF", "L_rA", "L_rO", "L_r_unc", "L_bF", "L_bA", "total")


def data_loss(predictions, targets):
    """Mean squared misfit between predictions and dataset targets."""
    targets = np.asarray(targets, dtype=np.float64)
    n_pred = predictions.shape[0] if hasattr(predictions, "shape") else len(predictions)
    if n_pred != targets.shape[0]:
        raise ValueError(f"length mismatch: {n_pred} predictions vs {targets.size} targets")
    if targets.size == 0:
        warnings.warn("empty dataset: data loss is 0", stacklevel=2)
        return 0.0
    if isinstance(predictions, _tape.Variable):
        return _tape.vmean(_tape.square(predictions - targets))
    return float(np.mean((np.asarray(predictions) - targets) ** 2))


def _mean_sq(residual):
    if isinstance(residual, _tape.Variable):
        return _tape.vmean(_tape.square(residual))
    return float(np.mean(np.square(residual)))


def _residual_terms(rec: Recording, spec: ProblemSpec, x, t):
    bundle = rec.bundle(x, t, spec.order_x)
    nu = rec.nu
    if spec.family == "kdv":
        p = bundle[spec.channel_index("p")]
        u_value = (1.0 / spec.alpha) * p.value
    else:
        u_value = bundle[spec.channel_index("u")].value
    l_rf = _mean_sq(_problems.state_residual(spec, bundle, u_value, nu))
    l_ra = _mean_sq(_problems.adjoint_residual(spec, bundle, nu))
    if spec.family == "burgers":
        p_value = bundle[spec.channel_index("p")].value
        l_ro = _mean_sq(_problems.optimality_residual(spec, p_value, u_value))
    else:
        l_ro = 0.0
    if spec.uses_uncontrolled:
        l_unc = _mean_sq(_problems.uncontrolled_state_residual(spec, bundle, nu))
    else:
        l_unc = 0.0
    return l_rf, l_ra, l_ro, l_unc


def residual_loss(spec: ProblemSpec, net: NetworkParams, xi: ModelParams, residual_points):
    """Mean squared residuals (state, adjoint, optimality, uncontrolled)."""
    x, t = _split_points(residual_points)
    _check_inside(spec, x, t)
    rec = Recording(net, xi)
    terms = _residual_terms(rec, spec, x, t)
    return tuple(float(v) for v in terms)


def _boundary_terms(rec: Recording, spec: ProblemSpec, x, t, locations):
    values = rec.values(x, t)
    named = {name: values[i] for i, name in enumerate(spec.channels)}
    if spec.family == "kdv":
        named["u"] = (1.0 / spec.alpha) * named["p"]
    elif spec.family == "allen_cahn":
        named["p"] = spec.alpha * named["u"]

    locations = np.asarray(locations)
    n_points = locations.shape[0]
    state_sq = None
    adjoint_sq = None
    for loc in ("left", "right", "terminal"):
        mask = locations == loc
        if not mask.any():
            continue
        if loc == "terminal" and not spec.has_terminal_condition:
            raise ValueError(f"{spec.id} imposes no terminal condition")
        idx = np.nonzero(mask)[0]
        for name in (spec.boundary_state_channels if loc != "terminal" else ()):
            sq = _gather_sq(named[name], idx)
            state_sq = sq if state_sq is None else state_sq + sq
        adjoint_names = ("p",) if loc == "terminal" else spec.boundary_adjoint_channels
        for name in adjoint_names:
            sq = _gather_sq(named[name], idx)
            adjoint_sq = sq if adjoint_sq is None else adjoint_sq + sq
    l_bf = state_sq / n_points if state_sq is not None else 0.0
    l_ba = adjoint_sq / n_points if adjoint_sq is not None else 0.0
    return l_bf, l_ba


def _gather_sq(channel_values, idx):
    """Sum of squared values at the selected point indices."""
    if isinstance(channel_values, _tape.Variable):
        picked = _tape.gather(channel_values, idx)
        return _tape.vsum(_tape.square(picked))
    return float(np.sum(np.square(np.asarray(channel_values)[idx])))


def boundary_loss(spec: ProblemSpec, net: NetworkParams, xi: ModelParams, boundary_points):
    """Mean squared boundary residuals split into state/control vs adjoint."""
    x, t, locations = _split_boundary(boundary_points)
    _check_on_boundary(spec, x, t, locations)
    rec = Recording(net, xi)
    l_bf, l_ba = _boundary_terms(rec, spec, x, t, locations)
    return float(l_bf), float(l_ba)


def total_loss(
    spec: ProblemSpec,
    net: NetworkParams,
    xi: ModelParams,
    dataset: "TrainingDataset",
    weights: LossWeights = LossWeights(),
    recording: Recording | None = None,
) -> LossBreakdown:
    """Full weighted loss over a training dataset, recorded for gradients."""
    rec = recording if recording is not None else Recording(net, xi)

    # data term: state-channel predictions against sampled reference values
    if dataset.data_x.size:
        values = rec.values(dataset.data_x, dataset.data_t)
        pred = None
        for name in np.unique(dataset.data_channel):
            idx = np.nonzero(dataset.data_channel == name)[0]
            chan = _tape.gather(values[spec.channel_index(str(name))], idx)
            diff_sq = _tape.square(chan - dataset.data_target[idx])
            contrib = _tape.vsum(diff_sq)
            pred = contrib if pred is None else pred + contrib
        l_d = pred / dataset.data_x.size
    else:
        warnings.warn("empty dataset: data loss is 0", stacklevel=2)
        l_d = 0.0

    l_rf, l_ra, l_ro, l_unc = _residual_terms(rec, spec, dataset.residual_x, dataset.residual_t)
    l_bf, l_ba = _boundary_terms(rec, spec, dataset.boundary_x, dataset.boundary_t, dataset.boundary_loc)

    total = (
        weights.w_d * l_d
        + weights.w_r * (l_rf + l_ra + l_ro + l_unc)
        + weights.w_b * (l_bf + l_ba)
    )
    return LossBreakdown(l_d, l_rf, l_ra, l_ro, l_unc, l_bf, l_ba, total)


def _split_points(points):
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValueError("points must be an (N, 2) array of (x, t)")
    return points[:, 0], points[:, 1]


def _split_boundary(points):
    xs, ts, locs = [], [], []
    for x, t, loc in points:
        xs.append(float(x))
        ts.append(float(t))
        locs.append(loc)
    return np.asarray(xs), np.asarray(ts), np.asarray(locs)


def _check_inside(spec: ProblemSpec, x, t):
    d = spec.domain
    if np.any(x < d.a) or np.any(x > d.b) or np.any(t < 0) or np.any(t > d.T):
        raise ValueError("residual point outside the space-time domain")


def _check_on_boundary(spec: ProblemSpec, x, t, locations):
    d = spec.domain
    for xi_, ti_, loc in zip(x, t, locations):
        if loc == "left" and not np.isclose(xi_, d.a):
            raise ValueError(f"point ({xi_}, {ti_}) is not on the left boundary")
        if loc == "right" and not np.isclose(xi_, d.b):
            raise ValueError(f"point ({xi_}, {ti_}) is not on the right boundary")
        if loc == "terminal" and not np.isclose(ti_, d.T):
            raise ValueError(f"point ({xi_}, {ti_}) is not on the terminal boundary")
