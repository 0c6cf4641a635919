"""Network evaluation with input jets, and loss-gradient extraction.

Input derivatives are obtained from two forward passes per evaluation:
one seeded in x (up to third order) and one seeded in t (first order).
No mixed x-t derivatives exist anywhere in the residuals, so none are
computed.  When the evaluation runs on a :class:`Recording`, every jet
coefficient is a tape variable and reverse mode later yields exact
gradients of any scalar built from the bundle with respect to all
network parameters and the learnable physical parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..network import ModelParams, NetworkConfig, NetworkParams
from . import tape as _tape
from .jets import Jet, jet_tanh
from .tape import RecordingError, Tape, Variable

__all__ = [
    "ChannelDerivatives",
    "DerivativeBundle",
    "GradientSet",
    "Recording",
    "eval_with_input_jets",
    "grad_scalar",
]


@dataclass
class ChannelDerivatives:
    """Value and input derivatives of one output channel."""

    value: object
    dt: object
    dx: object
    dxx: object = None
    dxxx: object = None


@dataclass
class DerivativeBundle:
    """Per-channel values and derivatives at a point (or batch of points)."""

    channels: tuple
    order_x: int

    def __getitem__(self, i: int) -> ChannelDerivatives:
        return self.channels[i]

    def __len__(self) -> int:
        return len(self.channels)


@dataclass
class GradientSet:
    """Flat gradients aligned with the parameter containers."""

    d_theta: np.ndarray
    d_xi: np.ndarray


def _jet_forward(weight_bias_pairs, activation: str, in_jet: Jet) -> Jet:
    """Propagate a jet of (N, dim) coefficient arrays through the network.

    Uses the fused per-layer tape operations (one stacked matrix product
    per affine map, one node per tanh recurrence); their arithmetic
    matches the generic jet path bit for bit.
    """
    coeffs = list(in_jet.coeffs)
    n_layers = len(weight_bias_pairs)
    for l, (w, b) in enumerate(weight_bias_pairs):
        coeffs = _tape.affine_jet(coeffs, w, b)
        if l < n_layers - 1 and activation == "tanh":
            coeffs = _tape.tanh_jet(coeffs)
    return Jet(coeffs)


def _np_affine(x, w, b=None):
    out = x @ w.T
    return out + b if b is not None else out


def _jet_forward_np(params: NetworkParams, in_jet: Jet) -> Jet:
    cur = in_jet
    n_layers = len(params.weights)
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        coeffs = [_np_affine(cur.coeffs[0], w, b)]
        coeffs += [_np_affine(c, w) for c in cur.coeffs[1:]]
        cur = Jet(coeffs)
        if l < n_layers - 1 and params.config.activation == "tanh":
            cur = jet_tanh(cur)
    return cur


def _input_jets(x: np.ndarray, t: np.ndarray, order_x: int):
    """Coefficient arrays for the x-seeded and t-seeded passes."""
    n = x.shape[0]
    z0 = np.stack([x, t], axis=1)
    ex = np.zeros((n, 2))
    ex[:, 0] = 1.0
    et = np.zeros((n, 2))
    et[:, 1] = 1.0
    zero = np.zeros((n, 2))
    x_coeffs = [z0, ex] + [zero] * (order_x - 1)
    t_coeffs = [z0, et]
    return Jet(x_coeffs), Jet(t_coeffs)


def _bundle_from_passes(x_out: Jet, t_out: Jet, order_x: int, n_channels: int, col):
    channels = []
    for j in range(n_channels):
        ch = ChannelDerivatives(
            value=col(x_out.coeffs[0], j),
            dt=col(t_out.coeffs[1], j),
            dx=col(x_out.coeffs[1], j),
        )
        if order_x >= 2:
            ch.dxx = 2.0 * col(x_out.coeffs[2], j)
        if order_x >= 3:
            ch.dxxx = 6.0 * col(x_out.coeffs[3], j)
        channels.append(ch)
    return DerivativeBundle(tuple(channels), order_x)


def _validate_orders(order_x: int, order_t: int) -> None:
    if not 1 <= order_x <= 3:
        raise ValueError(f"order_x must be in 1..3, got {order_x}")
    if order_t != 1:
        raise ValueError(f"order_t must be 1, got {order_t}")


def eval_with_input_jets(
    net: NetworkParams,
    x,
    t,
    order_x: int,
    order_t: int = 1,
) -> DerivativeBundle:
    """Values and input derivatives of every output channel at (x, t).

    Scalar inputs give scalar entries; array inputs give per-point arrays.
    Deterministic for fixed inputs.  Raises on inconsistent parameter
    shapes (via NetworkParams) and on non-finite results.
    """
    _validate_orders(order_x, order_t)
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(np.asarray(x, dtype=np.float64))
    ta = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(ta))):
        raise ValueError("non-finite evaluation point")
    x_jet, t_jet = _input_jets(xa, ta, order_x)
    x_out = _jet_forward_np(net, x_jet)
    t_out = _jet_forward_np(net, t_jet)
    for c in x_out.coeffs + t_out.coeffs:
        if not np.all(np.isfinite(c)):
            raise FloatingPointError("non-finite derivative bundle")

    if scalar:
        col = lambda arr, j: float(arr[0, j])
    else:
        col = lambda arr, j: arr[:, j]
    return _bundle_from_passes(x_out, t_out, order_x, net.config.output_dim, col)


class Recording:
    """One tape with the network / physical parameters registered as leaves.

    All evaluations made through the same recording share the tape, so a
    scalar combining them can be differentiated in one reverse sweep.
    """

    def __init__(self, params: NetworkParams, model: ModelParams, check_finite: bool = True):
        self.tape = Tape(check_finite=check_finite)
        self.config: NetworkConfig = params.config
        self.layers = [
            (self.tape.leaf(w, kind="theta"), self.tape.leaf(b, kind="theta"))
            for w, b in zip(params.weights, params.biases)
        ]
        self.model = model
        if model.nu_learnable:
            self.nu = self.tape.leaf(np.asarray(model.nu, dtype=np.float64), kind="xi")
        else:
            self.nu = np.float64(model.nu)

    def bundle(self, x: np.ndarray, t: np.ndarray, order_x: int) -> DerivativeBundle:
        """Recorded derivative bundle over a batch of points."""
        _validate_orders(order_x, 1)
        xa = np.atleast_1d(np.asarray(x, dtype=np.float64))
        ta = np.atleast_1d(np.asarray(t, dtype=np.float64))
        x_jet, t_jet = _input_jets(xa, ta, order_x)
        act = self.config.activation
        x_out = _jet_forward(self.layers, act, x_jet)
        t_out = _jet_forward(self.layers, act, t_jet)
        return _bundle_from_passes(
            x_out, t_out, order_x, self.config.output_dim, _tape.column
        )

    def values(self, x: np.ndarray, t: np.ndarray) -> list:
        """Recorded network values only; returns one (N,) variable per channel."""
        xa = np.atleast_1d(np.asarray(x, dtype=np.float64))
        ta = np.atleast_1d(np.asarray(t, dtype=np.float64))
        z = np.stack([xa, ta], axis=1)
        cur = z
        n_layers = len(self.layers)
        for l, (w, b) in enumerate(self.layers):
            cur = _tape.affine(cur, w, b)
            if l < n_layers - 1 and self.config.activation == "tanh":
                cur = _tape.tanh(cur)
        return [_tape.column(cur, j) for j in range(self.config.output_dim)]

    def gradients(self, loss: Variable) -> GradientSet:
        """Exact reverse-mode gradients of a recorded scalar."""
        if not isinstance(loss, Variable) or loss.tape is not self.tape:
            raise RecordingError("loss was not produced through this recording")
        self.tape.backward(loss)
        parts = []
        for w, b in self.layers:
            parts.append((w.grad if w.grad is not None else np.zeros_like(w.value)).ravel())
            parts.append(b.grad if b.grad is not None else np.zeros_like(b.value))
        d_theta = np.concatenate(parts)
        if isinstance(self.nu, Variable):
            g = self.nu.grad
            d_xi = np.array([0.0 if g is None else float(g)])
        else:
            d_xi = np.zeros(0)
        return GradientSet(d_theta=d_theta, d_xi=d_xi)


def grad_scalar(loss) -> GradientSet:
    """Gradients of a recorded scalar with respect to (theta, xi).

    The scalar must have been produced through recorded operations; a
    second call on the same recording yields identical values.
    """
    if not isinstance(loss, Variable):
        raise RecordingError("gradient requested for a value that was not recorded")
    tape = loss.tape
    tape.backward(loss)
    parts = []
    for leaf in tape.theta_leaves:
        g = leaf.grad if leaf.grad is not None else np.zeros_like(leaf.value)
        parts.append(np.asarray(g).ravel())
    d_theta = np.concatenate(parts) if parts else np.zeros(0)
    d_xi = np.array(
        [
            0.0 if leaf.grad is None else float(leaf.grad)
            for leaf in tape.xi_leaves
        ]
    )
    return GradientSet(d_theta=d_theta, d_xi=d_xi)
