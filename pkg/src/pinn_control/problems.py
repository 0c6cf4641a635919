"""The five benchmark control problems and their residual forms.

Each problem couples a controlled scalar conservation-law / reaction /
dispersion PDE on a 1-D space interval with a quadratic tracking cost,
the backward adjoint equation obtained from the Lagrangian, and the
algebraic optimality relation alpha * u = p.

Residual conventions (zero iff the equation holds at the point):

    burgers     state    y_t + y*y_x - nu*y_xx - u
                adjoint  y - p_t - y*p_x - nu*p_xx
    allen_cahn  state    y_t - nu*y_xx - mu*(y - y^3) - u
                adjoint  y - p_t - nu*p_xx - mu*p*(1 - 3*y^2)
    kdv         state    y_t + mu*y*y_x - nu*y_xx + lam*y_xxx - u
                adjoint  y - p_t - mu*y*p_x - nu*p_xx - lam*p_xxx

For the Allen-Cahn cases the adjoint is not a separate network channel:
p is evaluated as alpha * u and differentiated through.  For the KdV case
the control is evaluated as u = p / alpha, which makes the optimality
residual vanish identically; the Burgers cases keep all three channels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff.engine import DerivativeBundle

__all__ = [
    "Domain",
    "ProblemSpec",
    "PROBLEM_IDS",
    "make_problem",
    "state_residual",
    "adjoint_residual",
    "optimality_residual",
    "boundary_residuals",
    "initial_condition",
]

PROBLEM_IDS = ("test1a", "test1b", "test2a", "test2b", "test3")


@dataclass(frozen=True)
class Domain:
    """Space interval [a, b] and time interval [0, T]."""

    a: float
    b: float
    T: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("need a < b")
        if not self.T > 0:
            raise ValueError("need T > 0")


@dataclass(frozen=True)
class ProblemSpec:
    id: str
    family: str  # burgers | allen_cahn | kdv
    domain: Domain
    alpha: float
    alpha_T: float
    mu: float
    lam: float
    nu_true: float
    nu0: float
    n_data: int            # data points per sampled channel
    n_boundary: int
    n_residual: int
    eps_tol: float
    channels: tuple[str, ...]
    order_x: int
    uses_uncontrolled: bool
    boundary_state_channels: tuple[str, ...]  # channels accruing to the state boundary loss
    boundary_adjoint_channels: tuple[str, ...]
    has_terminal_condition: bool
    residual_lattice: tuple[int, int]  # (nt, nx) factorization of n_residual

    @property
    def output_dim(self) -> int:
        return len(self.channels)

    def channel_index(self, name: str) -> int:
        return self.channels.index(name)


_SPECS = {
    "test1a": dict(
        family="burgers",
        domain=Domain(-4.0, 4.0, 4.0),
        alpha=10.0,
        alpha_T=0.1,
        mu=0.0,
        lam=0.0,
        nu_true=0.5,
        nu0=1.0,
        n_data=10,
        n_boundary=18,
        n_residual=336,
        eps_tol=1e-7,
        channels=("y", "u", "p"),
        order_x=2,
        uses_uncontrolled=False,
        boundary_state_channels=("y", "u"),
        boundary_adjoint_channels=(),
        has_terminal_condition=False,
        residual_lattice=(16, 21),
    ),
    "test2a": dict(
        family="allen_cahn",
        domain=Domain(0.0, 1.0, 0.5),
        alpha=0.1,
        alpha_T=0.1,
        mu=1.0,
        lam=0.0,
        nu_true=0.1,
        nu0=1.0,
        n_data=9,
        n_boundary=12,
        n_residual=663,
        eps_tol=1e-5,
        channels=("y", "u", "y_unc"),
        order_x=2,
        uses_uncontrolled=True,
        boundary_state_channels=("y", "u", "y_unc"),
        boundary_adjoint_channels=(),
        has_terminal_condition=False,
        residual_lattice=(17, 39),
    ),
    "test3": dict(
        family="kdv",
        domain=Domain(-4.0, 4.0, 0.5),
        alpha=0.1,
        alpha_T=0.0,
        mu=-5.0,
        lam=1.0,
        nu_true=1.0,
        nu0=0.2,
        n_data=45,
        n_boundary=12,
        n_residual=1020,
        eps_tol=1e-7,
        channels=("y", "p"),
        order_x=3,
        uses_uncontrolled=False,
        boundary_state_channels=("y",),
        boundary_adjoint_channels=("p",),
        has_terminal_condition=True,
        residual_lattice=(20, 51),
    ),
}
_SPECS["test1b"] = dict(_SPECS["test1a"], nu_true=0.05)
_SPECS["test2b"] = dict(
    _SPECS["test2a"],
    domain=Domain(0.0, 2.0, 0.5),
    mu=11.0,
    nu_true=1.0,
    nu0=0.5,
    n_data=15,
)


def make_problem(problem_id: str) -> ProblemSpec:
    """Build the spec for one of the five test cases."""
    try:
        fields = _SPECS[problem_id]
    except KeyError:
        raise ValueError(f"unknown problem id {problem_id!r}; known: {PROBLEM_IDS}") from None
    return ProblemSpec(id=problem_id, **fields)


def initial_condition(spec: ProblemSpec, x):
    x = np.asarray(x, dtype=np.float64)
    if spec.family == "burgers":
        return np.exp(-0.5 * x**2) / np.sqrt(2.0 * np.pi)
    if spec.family == "allen_cahn":
        return 0.2 * np.sin(np.pi * x)
    return 1.0 / (1.0 + 10.0 * x**2)


def _require_order(spec: ProblemSpec, bundle: DerivativeBundle) -> None:
    if bundle.order_x < spec.order_x:
        raise ValueError(
            f"{spec.id} needs x-derivatives of order {spec.order_x}, "
            f"bundle carries order {bundle.order_x}"
        )


def state_residual(spec: ProblemSpec, bundle: DerivativeBundle, u_value, nu):
    """Signed residual of the controlled state equation at one point."""
    _require_order(spec, bundle)
    y = bundle[spec.channel_index("y")]
    return _state_terms(spec, y, u_value, nu)


def _state_terms(spec: ProblemSpec, ch, u_value, nu):
    if spec.family == "burgers":
        return ch.dt + ch.value * ch.dx - nu * ch.dxx - u_value
    if spec.family == "allen_cahn":
        cubic = ch.value * ch.value * ch.value
        return ch.dt - nu * ch.dxx - spec.mu * (ch.value - cubic) - u_value
    return ch.dt + spec.mu * (ch.value * ch.dx) - nu * ch.dxx + spec.lam * ch.dxxx - u_value


def uncontrolled_state_residual(spec: ProblemSpec, bundle: DerivativeBundle, nu):
    """State residual with u = 0 applied to the uncontrolled channel."""
    _require_order(spec, bundle)
    ch = bundle[spec.channel_index("y_unc")]
    return _state_terms(spec, ch, 0.0, nu)


def adjoint_residual(spec: ProblemSpec, bundle: DerivativeBundle, nu):
    """Signed residual of the backward adjoint equation at one point.

    For the Allen-Cahn layout the adjoint is alpha * u, so its derivatives
    are scaled from the control channel.
    """
    _require_order(spec, bundle)
    y = bundle[spec.channel_index("y")]
    if spec.family == "allen_cahn":
        u = bundle[spec.channel_index("u")]
        p_t = spec.alpha * u.dt
        p_xx = spec.alpha * u.dxx
        p_val = spec.alpha * u.value
        ysq = y.value * y.value
        return y.value - p_t - nu * p_xx - spec.mu * (p_val * (1.0 - 3.0 * ysq))
    p = bundle[spec.channel_index("p")]
    if spec.family == "burgers":
        return y.value - p.dt - y.value * p.dx - nu * p.dxx
    return y.value - p.dt - spec.mu * (y.value * p.dx) - nu * p.dxx - spec.lam * p.dxxx


def optimality_residual(spec: ProblemSpec, p_value, u_value):
    """alpha * u - p; identically zero where channel elimination applies."""
    if spec.family in ("allen_cahn", "kdv"):
        return 0.0
    return spec.alpha * u_value - p_value


_LOCATIONS = ("left", "right", "terminal")


def boundary_plan(spec: ProblemSpec, location: str) -> tuple[str, ...]:
    """Channels with a (homogeneous) condition imposed at `location`."""
    if location not in _LOCATIONS:
        raise ValueError(f"unknown boundary location {location!r}")
    if location == "terminal":
        if not spec.has_terminal_condition:
            raise ValueError(f"{spec.id} imposes no terminal condition")
        return ("p",)
    return spec.boundary_state_channels + spec.boundary_adjoint_channels


def boundary_residuals(spec: ProblemSpec, location: str, **values):
    """Residuals of the conditions imposed at `location`.

    All imposed conditions are homogeneous, so each residual is just the
    channel value; pass them as keyword arguments (y=..., u=..., p=...,
    y_unc=...).
    """
    plan = boundary_plan(spec, location)
    out = []
    for name in plan:
        if name not in values or values[name] is None:
            raise ValueError(f"{spec.id} requires a {name!r} value at {location} boundary")
        out.append(values[name])
    return tuple(out)
