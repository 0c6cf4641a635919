"""Reverse-mode automatic differentiation over numpy arrays.

A :class:`Tape` records every operation performed on :class:`Variable`
instances; :meth:`Tape.backward` then replays the record in reverse to
accumulate exact gradients into the leaves.  Operations accept plain
floats / ndarrays as constants (no gradient flows into them), so network
inputs and sampled point coordinates never enlarge the tape.

Gradient accumulation is strictly sequential in reverse recording order,
which makes repeated backward passes (and whole training runs) bit
reproducible.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tape",
    "Variable",
    "NonFiniteError",
    "RecordingError",
    "tanh",
    "square",
    "vsum",
    "vmean",
    "column",
    "affine",
]


class NonFiniteError(FloatingPointError):
    """A forward operation produced NaN or infinity."""


class RecordingError(TypeError):
    """A gradient was requested for a value the tape never recorded."""


class Variable:
    """A numpy array tracked by a tape."""

    __slots__ = ("value", "tape", "grad")

    # Defer mixed ndarray <op> Variable expressions to the reflected
    # operators below instead of numpy broadcasting over the object.
    __array_ufunc__ = None

    def __init__(self, value, tape: "Tape"):
        self.value = np.asarray(value, dtype=np.float64)
        self.tape = tape
        self.grad = None

    @property
    def shape(self):
        return self.value.shape

    def __float__(self) -> float:
        return float(self.value)

    def __repr__(self) -> str:
        return f"Variable(shape={self.value.shape})"

    # -- operator sugar -------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub_from(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return neg(self)

    def __truediv__(self, other):
        if isinstance(other, Variable):
            raise TypeError("division between recorded variables is not supported")
        return mul(self, 1.0 / np.asarray(other, dtype=np.float64))

    def sum(self):
        return vsum(self)

    def mean(self):
        return vmean(self)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape` (reverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class _GroupNode:
    """A recorded operation with several outputs and one joint backward."""

    __slots__ = ("outs", "backward")

    def __init__(self, outs, backward):
        self.outs = outs
        self.backward = backward


class Tape:
    """Ordered record of operations for one forward evaluation.

    Parameters registered through :meth:`leaf` can be flagged as network
    parameters (theta) or physical parameters (xi) so that a gradient set
    aligned with the flat parameter layout can be read back after
    :meth:`backward`.
    """

    __slots__ = ("_nodes", "_leaves", "theta_leaves", "xi_leaves", "check_finite")

    def __init__(self, check_finite: bool = True):
        self._nodes: list = []
        self._leaves: list[Variable] = []
        self.theta_leaves: list[Variable] = []
        self.xi_leaves: list[Variable] = []
        self.check_finite = check_finite

    def __len__(self) -> int:
        return len(self._nodes)

    def leaf(self, value, kind: str | None = None) -> Variable:
        """Wrap `value` as a differentiable leaf.

        kind: None for plain leaves, "theta" / "xi" to register the leaf
        in the corresponding parameter group.
        """
        var = Variable(value, self)
        if self.check_finite and not np.all(np.isfinite(var.value)):
            raise NonFiniteError("non-finite value in leaf")
        if kind == "theta":
            self.theta_leaves.append(var)
        elif kind == "xi":
            self.xi_leaves.append(var)
        elif kind is None:
            self._leaves.append(var)
        else:
            raise ValueError(f"unknown leaf kind {kind!r}")
        return var

    def record(self, value: np.ndarray, backward, name: str) -> Variable:
        out = Variable(value, self)
        if self.check_finite and not np.all(np.isfinite(out.value)):
            raise NonFiniteError(f"non-finite values produced by op '{name}'")
        self._nodes.append((out, backward))
        return out

    def record_group(self, values, backward, name: str) -> list[Variable]:
        outs = [Variable(v, self) for v in values]
        if self.check_finite:
            for o in outs:
                if not np.all(np.isfinite(o.value)):
                    raise NonFiniteError(f"non-finite values produced by op '{name}'")
        self._nodes.append(_GroupNode(outs, backward))
        return outs

    def backward(self, root: Variable) -> None:
        """Accumulate d(root)/d(leaf) into every leaf's ``grad``.

        Grads are reset first, so calling backward twice on the same
        recording yields identical values.
        """
        if not isinstance(root, Variable):
            raise RecordingError("gradient requested for a value that was not recorded")
        if root.tape is not self:
            raise RecordingError("scalar belongs to a different recording")
        if root.value.ndim != 0:
            raise RecordingError("backward root must be a scalar")
        for node in self._nodes:
            if isinstance(node, _GroupNode):
                for o in node.outs:
                    o.grad = None
            else:
                node[0].grad = None
        for leaf in self._leaves:
            leaf.grad = None
        for leaf in self.theta_leaves:
            leaf.grad = None
        for leaf in self.xi_leaves:
            leaf.grad = None
        root.grad = np.ones((), dtype=np.float64)
        for node in reversed(self._nodes):
            if isinstance(node, _GroupNode):
                if any(o.grad is not None for o in node.outs):
                    node.backward([o.grad for o in node.outs])
            else:
                out, backward = node
                if out.grad is not None:
                    backward(out.grad)


def _accumulate(var, grad) -> None:
    if not isinstance(var, Variable):
        return
    grad = _unbroadcast(grad, var.value.shape)
    if var.grad is None:
        var.grad = grad
    else:
        var.grad = var.grad + grad


def _tape_of(*args) -> Tape:
    for a in args:
        if isinstance(a, Variable):
            return a.tape
    raise RecordingError("no recorded variable among operands")


def _val(a):
    return a.value if isinstance(a, Variable) else np.asarray(a, dtype=np.float64)


# -- primitive operations ------------------------------------------------

def add(a, b) -> Variable:
    tape = _tape_of(a, b)
    va, vb = _val(a), _val(b)

    def backward(g):
        _accumulate(a, g)
        _accumulate(b, g)

    return tape.record(va + vb, backward, "add")


def sub(a, b) -> Variable:
    tape = _tape_of(a, b)
    va, vb = _val(a), _val(b)

    def backward(g):
        _accumulate(a, g)
        _accumulate(b, -g)

    return tape.record(va - vb, backward, "sub")


def sub_from(a, b) -> Variable:
    """a - b where only b may be recorded."""
    return sub(a, b) if isinstance(a, Variable) else sub(np.asarray(a, dtype=np.float64), b)


def neg(a) -> Variable:
    tape = _tape_of(a)

    def backward(g):
        _accumulate(a, -g)

    return tape.record(-_val(a), backward, "neg")


def mul(a, b) -> Variable:
    tape = _tape_of(a, b)
    va, vb = _val(a), _val(b)

    def backward(g):
        if isinstance(a, Variable):
            _accumulate(a, g * vb)
        if isinstance(b, Variable):
            _accumulate(b, g * va)

    return tape.record(va * vb, backward, "mul")


def square(a) -> Variable:
    tape = _tape_of(a)
    va = _val(a)

    def backward(g):
        _accumulate(a, g * (2.0 * va))

    return tape.record(va * va, backward, "square")


def tanh(a):
    """tanh that dispatches on the operand type.

    The derivative uses the recurrence on u = tanh(z): u' = 1 - u^2,
    which stays accurate for large |z|.
    """
    if not isinstance(a, Variable):
        return np.tanh(a)
    tape = a.tape
    out_val = np.tanh(a.value)

    def backward(g):
        _accumulate(a, g * (1.0 - out_val * out_val))

    return tape.record(out_val, backward, "tanh")


def affine(x, weight: Variable, bias=None):
    """x @ weight.T (+ bias): the layer map over a batch of rows.

    `x` is (N, n_in), `weight` is (n_out, n_in), `bias` is (n_out,).
    Either operand may be a plain ndarray treated as a constant.
    """
    tape = _tape_of(x, weight) if (isinstance(x, Variable) or isinstance(weight, Variable)) else _tape_of(bias)
    xv, wv = _val(x), _val(weight)
    out_val = xv @ wv.T
    if bias is not None:
        out_val = out_val + _val(bias)

    def backward(g):
        if isinstance(x, Variable):
            _accumulate(x, g @ wv)
        if isinstance(weight, Variable):
            _accumulate(weight, g.T @ xv)
        if bias is not None and isinstance(bias, Variable):
            _accumulate(bias, g.sum(axis=0))

    return tape.record(out_val, backward, "affine")


def column(a: Variable, j: int) -> Variable:
    """Extract column j of a (N, m) variable as a (N,) variable."""
    tape = _tape_of(a)
    av = _val(a)

    def backward(g):
        full = np.zeros_like(av)
        full[:, j] = g
        _accumulate(a, full)

    return tape.record(av[:, j].copy(), backward, "column")


def affine_jet(coeffs: list, weight: Variable, bias) -> list:
    """Layer affine map applied to every jet coefficient in one pass.

    The coefficient arrays (each (N, n_in)) are stacked so the matrix
    product runs as a single BLAS call; the bias is added to the primal
    coefficient only.  Returns one variable per coefficient.
    """
    tape = weight.tape
    n_c = len(coeffs)
    vals = [_val(c) for c in coeffs]
    n = vals[0].shape[0]
    x_stack = np.concatenate(vals, axis=0)
    out_stack = x_stack @ weight.value.T
    out_stack[:n] += _val(bias)
    any_var_input = any(isinstance(c, Variable) for c in coeffs)

    def backward(grads):
        g_stack = np.concatenate(
            [g if g is not None else np.zeros((n, weight.value.shape[0])) for g in grads],
            axis=0,
        )
        _accumulate(weight, g_stack.T @ x_stack)
        if isinstance(bias, Variable) and grads[0] is not None:
            _accumulate(bias, grads[0].sum(axis=0))
        if any_var_input:
            dx = g_stack @ weight.value
            for k, c in enumerate(coeffs):
                if isinstance(c, Variable) and grads[k] is not None:
                    _accumulate(c, dx[k * n : (k + 1) * n])

    return tape.record_group(
        [out_stack[k * n : (k + 1) * n] for k in range(n_c)], backward, "affine_jet"
    )


def tanh_jet(coeffs: list) -> list:
    """tanh propagated through jet coefficients as one fused operation.

    Implements the same recurrence as :func:`..jets.jet_tanh` (identical
    floating-point evaluation order) with a hand-written reverse sweep,
    so a whole layer costs one tape node instead of a dozen.
    """
    m = len(coeffs) - 1
    if not 1 <= m <= 3:
        raise ValueError(f"tanh_jet supports orders 1..3, got {m}")
    tape = _tape_of(*coeffs)
    z = [_val(c) for c in coeffs]

    u0 = np.tanh(z[0])
    w0 = 1.0 - u0 * u0
    u = [u0, z[1] * w0]
    w1 = w2 = None
    if m >= 2:
        w1 = -2.0 * (u0 * u[1])
        u.append(z[2] * w0 + 0.5 * (z[1] * w1))
    if m >= 3:
        w2 = -(2.0 * (u0 * u[2]) + u[1] * u[1])
        u.append(z[3] * w0 + (1.0 / 3.0) * (z[1] * w2) + (2.0 / 3.0) * (z[2] * w1))

    def backward(grads):
        bu = [g.copy() if g is not None else np.zeros_like(u0) for g in grads]
        bw0 = np.zeros_like(u0)
        bz = [None] * (m + 1)
        if m >= 3:
            # u3 = z3*w0 + (1/3)*z1*w2 + (2/3)*z2*w1
            bz[3] = bu[3] * w0
            bw0 += bu[3] * z[3]
            bz1_acc = (1.0 / 3.0) * (bu[3] * w2)
            bw2 = (1.0 / 3.0) * (bu[3] * z[1])
            bz2_acc = (2.0 / 3.0) * (bu[3] * w1)
            bw1 = (2.0 / 3.0) * (bu[3] * z[2])
            # w2 = -(2*u0*u2 + u1^2)
            bu[0] -= 2.0 * (bw2 * u[2])
            bu[2] -= 2.0 * (bw2 * u0)
            bu[1] -= 2.0 * (bw2 * u[1])
        else:
            bz1_acc = np.zeros_like(u0)
            bz2_acc = np.zeros_like(u0) if m >= 2 else None
            bw1 = np.zeros_like(u0) if m >= 2 else None
        if m >= 2:
            # u2 = z2*w0 + 0.5*z1*w1
            bz[2] = bz2_acc + bu[2] * w0
            bw0 += bu[2] * z[2]
            bz1_acc += 0.5 * (bu[2] * w1)
            bw1 += 0.5 * (bu[2] * z[1])
            # w1 = -2*u0*u1
            bu[0] -= 2.0 * (bw1 * u[1])
            bu[1] -= 2.0 * (bw1 * u0)
        # u1 = z1*w0
        bz[1] = bz1_acc + bu[1] * w0
        bw0 += bu[1] * z[1]
        # w0 = 1 - u0^2
        bu[0] -= 2.0 * (bw0 * u0)
        # u0 = tanh(z0)
        bz[0] = bu[0] * w0
        for k, c in enumerate(coeffs):
            if isinstance(c, Variable):
                _accumulate(c, bz[k])

    return tape.record_group(u, backward, "tanh_jet")


def gather(a: Variable, idx: np.ndarray) -> Variable:
    """Select rows of a 1-D variable by index."""
    tape = _tape_of(a)
    av = _val(a)

    def backward(g):
        full = np.zeros_like(av)
        full[idx] = g
        _accumulate(a, full)

    return tape.record(av[idx], backward, "gather")


def vsum(a) -> Variable:
    tape = _tape_of(a)
    av = _val(a)

    def backward(g):
        _accumulate(a, np.broadcast_to(g, av.shape))

    return tape.record(av.sum(), backward, "sum")


def vmean(a) -> Variable:
    tape = _tape_of(a)
    av = _val(a)
    n = av.size

    def backward(g):
        _accumulate(a, np.broadcast_to(g / n, av.shape))

    return tape.record(av.mean(), backward, "mean")
