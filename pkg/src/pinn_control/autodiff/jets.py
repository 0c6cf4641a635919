"""Truncated univariate Taylor series (jets) up to third order.

A jet holds coefficients c0..ck of an expansion in one designated input
direction; c0 is always the primal value.  Coefficients may be plain
floats, numpy arrays, or tape :class:`~pinn_control.autodiff.tape.Variable`
objects, so the same arithmetic serves both quick numeric evaluation and
recorded evaluation whose parameter gradients flow through the input
derivatives.

Derivatives are recovered from coefficients as d^m/ds^m = m! * c_m.
"""

from __future__ import annotations

from . import tape as _tape

__all__ = ["Jet", "jet_tanh", "MAX_ORDER"]

MAX_ORDER = 3

_FACTORIAL = (1.0, 1.0, 2.0, 6.0)


class Jet:
    """Taylor coefficients of a quantity along one input direction."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        coeffs = tuple(coeffs)
        if len(coeffs) < 1:
            raise ValueError("a jet needs at least the primal coefficient")
        if len(coeffs) - 1 > MAX_ORDER:
            raise ValueError(f"jet order {len(coeffs) - 1} exceeds supported maximum {MAX_ORDER}")
        self.coeffs = coeffs

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __len__(self) -> int:
        return len(self.coeffs)

    def __repr__(self) -> str:
        return f"Jet({list(self.coeffs)!r})"

    def _check_matching(self, other: "Jet") -> None:
        if len(self.coeffs) != len(other.coeffs):
            raise ValueError(
                f"jet length mismatch: {len(self.coeffs)} vs {len(other.coeffs)}"
            )

    def __add__(self, other):
        if isinstance(other, Jet):
            self._check_matching(other)
            return Jet(a + b for a, b in zip(self.coeffs, other.coeffs))
        return Jet((self.coeffs[0] + other,) + self.coeffs[1:])

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            self._check_matching(other)
            return Jet(a - b for a, b in zip(self.coeffs, other.coeffs))
        return Jet((self.coeffs[0] - other,) + self.coeffs[1:])

    def __neg__(self):
        return Jet(-c for c in self.coeffs)

    def __mul__(self, other):
        if isinstance(other, Jet):
            self._check_matching(other)
            a, b = self.coeffs, other.coeffs
            out = []
            for k in range(len(a)):
                term = a[0] * b[k]
                for i in range(1, k + 1):
                    term = term + a[i] * b[k - i]
                out.append(term)
            return Jet(out)
        return Jet(c * other for c in self.coeffs)

    __rmul__ = __mul__

    def derivative(self, m: int):
        """m-th derivative along the seeded direction (m! * c_m)."""
        if m > self.order:
            raise ValueError(f"jet of order {self.order} has no order-{m} derivative")
        return _FACTORIAL[m] * self.coeffs[m] if m >= 2 else self.coeffs[m]


def jet_tanh(z: Jet) -> Jet:
    """Propagate tanh through a jet.

    Uses the ODE recurrence for u = tanh(z): u' = (1 - u^2) z', expanded
    coefficient-wise, so no explicit sech evaluations are needed and the
    1 - u^2 factor never suffers cancellation at large |z|.
    """
    z_c = z.coeffs
    m = len(z_c) - 1
    u0 = _tape.tanh(z_c[0])
    u = [u0]
    # w holds the coefficients of 1 - u^2; w[k] is needed up to k = m - 1,
    # with symmetric product pairs folded (w_k = -sum_i u_i u_{k-i}).
    w = [1.0 - _sq(u0)]
    for k in range(1, m + 1):
        # k * u_k = sum_{j=1..k} j * z_j * w_{k-j}
        term = z_c[k] * w[0]
        for j in range(1, k):
            term = term + (j / k) * (z_c[j] * w[k - j])
        u.append(term)
        if k < m:
            if k == 1:
                w.append(-2.0 * (u[0] * u[1]))
            else:
                w.append(-(2.0 * (u[0] * u[2]) + _sq(u[1])))
    return Jet(u)


def _sq(v):
    if isinstance(v, _tape.Variable):
        return _tape.square(v)
    return v * v
