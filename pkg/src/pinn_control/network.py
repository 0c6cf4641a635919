"""Feed-forward surrogate network and its parameter containers.

The architecture is an affine input-to-hidden map followed by tanh hidden
layers and an affine output head: for the default configuration the dims
chain 2 -> 64 -> 64 -> 64 -> n_out with tanh after each of the three
hidden affine maps.  Inputs (x, t) are fed raw; there is no input or
output scaling.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "NetworkConfig",
    "NetworkParams",
    "ModelParams",
    "init_params",
    "forward",
    "forward_batch",
    "save_checkpoint",
    "load_checkpoint",
]

_ACTIVATIONS = ("tanh", "identity")

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture description; defaults match the reference setup
    (3 hidden layers of 64 tanh nodes)."""

    input_dim: int = 2
    hidden_layers: int = 3
    hidden_width: int = 64
    output_dim: int = 3
    activation: str = "tanh"
    seed: int = 0

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("network dimensions must be positive")
        if self.hidden_layers < 1 or self.hidden_width < 1:
            raise ValueError("need at least one hidden layer with positive width")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"activation must be one of {_ACTIVATIONS}")

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.input_dim,) + (self.hidden_width,) * self.hidden_layers + (self.output_dim,)


@dataclass
class ModelParams:
    """Scalar physical parameters entering the residuals.

    Only the diffusion coefficient nu is learnable; the drift coefficient
    mu and the dispersion coefficient lam stay fixed, as do the cost
    weights (the tracking targets are identically zero).
    """

    nu: float
    mu: float = 0.0
    lam: float = 0.0
    alpha: float = 1.0
    alpha_T: float = 0.0
    nu_learnable: bool = True

    @property
    def learnable_names(self) -> tuple[str, ...]:
        return ("nu",) if self.nu_learnable else ()


@dataclass
class NetworkParams:
    """Per-layer weights and biases.

    Flattening order is fixed: layer 1..L, weight matrix in row-major
    order followed by that layer's bias vector.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    config: NetworkConfig = field(repr=False)

    def __post_init__(self):
        dims = self.config.layer_dims
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ValueError("layer count does not match configuration")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[l + 1], dims[l]) or b.shape != (dims[l + 1],):
                raise ValueError(
                    f"layer {l + 1} shapes {w.shape}/{b.shape} do not chain "
                    f"{dims[l]} -> {dims[l + 1]}"
                )

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def flatten(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    @classmethod
    def from_flat(cls, flat: np.ndarray, config: NetworkConfig) -> "NetworkParams":
        dims = config.layer_dims
        weights, biases, pos = [], [], 0
        for l in range(len(dims) - 1):
            n_out, n_in = dims[l + 1], dims[l]
            weights.append(flat[pos : pos + n_out * n_in].reshape(n_out, n_in).copy())
            pos += n_out * n_in
            biases.append(flat[pos : pos + n_out].copy())
            pos += n_out
        if pos != flat.size:
            raise ValueError(f"flat vector length {flat.size} does not match configuration ({pos})")
        return cls(weights, biases, config)

    def copy(self) -> "NetworkParams":
        return NetworkParams([w.copy() for w in self.weights], [b.copy() for b in self.biases], self.config)


def init_params(config: NetworkConfig) -> NetworkParams:
    """Glorot-uniform weights (range +-sqrt(6/(n_in+n_out))), zero biases.

    Deterministic for a fixed config seed; layers are drawn in order.
    """
    rng = np.random.default_rng(config.seed)
    dims = config.layer_dims
    weights, biases = [], []
    for l in range(len(dims) - 1):
        n_in, n_out = dims[l], dims[l + 1]
        limit = np.sqrt(6.0 / (n_in + n_out))
        weights.append(rng.uniform(-limit, limit, size=(n_out, n_in)))
        biases.append(np.zeros(n_out))
    return NetworkParams(weights, biases, config)


def forward_batch(params: NetworkParams, x: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Evaluate the network on stacked (x, t) rows; returns (N, output_dim)."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    z = np.stack([x, t], axis=1)
    act = np.tanh if params.config.activation == "tanh" else (lambda v: v)
    n_layers = len(params.weights)
    for l in range(n_layers - 1):
        z = act(z @ params.weights[l].T + params.biases[l])
    out = z @ params.weights[-1].T + params.biases[-1]
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite network output")
    return out


def forward(params: NetworkParams, x: float, t: float) -> np.ndarray:
    """Single-point evaluation; returns the output vector."""
    return forward_batch(params, [x], [t])[0]


# -- checkpoint format (versioned, textual) -------------------------------
#
#   line 1:  pinn-control-checkpoint v<version>
#   line 2:  config <input_dim> <hidden_layers> <hidden_width> <output_dim> <activation> <seed>
#   line 3:  epoch <n>
#   line 4:  xi nu=<value> mu=<value> lam=<value> alpha=<value> alpha_T=<value>
#   then one parameter per line in flattening order (repr round-trip safe).


def save_checkpoint(path, params: NetworkParams, model: ModelParams, epoch: int) -> None:
    cfg = params.config
    buf = io.StringIO()
    buf.write(f"pinn-control-checkpoint v{CHECKPOINT_VERSION}\n")
    buf.write(
        f"config {cfg.input_dim} {cfg.hidden_layers} {cfg.hidden_width} "
        f"{cfg.output_dim} {cfg.activation} {cfg.seed}\n"
    )
    buf.write(f"epoch {epoch}\n")
    buf.write(
        f"xi nu={model.nu!r} mu={model.mu!r} lam={model.lam!r} "
        f"alpha={model.alpha!r} alpha_T={model.alpha_T!r}\n"
    )
    for v in params.flatten():
        buf.write(repr(float(v)))
        buf.write("\n")
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(path) -> tuple[NetworkParams, ModelParams, int]:
    with open(path) as fh:
        lines = fh.read().splitlines()
    header = lines[0].split()
    if header[0] != "pinn-control-checkpoint" or header[1] != f"v{CHECKPOINT_VERSION}":
        raise ValueError(f"unsupported checkpoint header: {lines[0]!r}")
    cfg_tokens = lines[1].split()
    config = NetworkConfig(
        input_dim=int(cfg_tokens[1]),
        hidden_layers=int(cfg_tokens[2]),
        hidden_width=int(cfg_tokens[3]),
        output_dim=int(cfg_tokens[4]),
        activation=cfg_tokens[5],
        seed=int(cfg_tokens[6]),
    )
    epoch = int(lines[2].split()[1])
    xi = dict(tok.split("=") for tok in lines[3].split()[1:])
    model = ModelParams(
        nu=float(xi["nu"]),
        mu=float(xi["mu"]),
        lam=float(xi["lam"]),
        alpha=float(xi["alpha"]),
        alpha_T=float(xi["alpha_T"]),
    )
    flat = np.array([float(s) for s in lines[4:] if s], dtype=np.float64)
    return NetworkParams.from_flat(flat, config), model, epoch
