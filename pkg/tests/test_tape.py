import numpy as np
import pytest

from pinn_control.autodiff import tape as T
from pinn_control.autodiff.tape import NonFiniteError, RecordingError, Tape


def test_constant_loss_has_zero_gradient():
    tape = Tape()
    w = tape.leaf(np.array([1.0, 2.0]), kind="theta")
    loss = T.vmean(np.ones(3) * tape.leaf(np.zeros(3)))
    tape.backward(loss)
    assert w.grad is None  # never touched by the computation


def test_quadratic_gradient_is_identity():
    tape = Tape()
    theta = np.array([0.3, -1.2, 2.5])
    w = tape.leaf(theta, kind="theta")
    loss = 0.5 * T.vsum(T.square(w))
    tape.backward(loss)
    np.testing.assert_allclose(w.grad, theta, rtol=0, atol=0)


def test_backward_twice_identical():
    tape = Tape()
    w = tape.leaf(np.array([0.5, 1.5]))
    loss = T.vsum(T.square(T.tanh(w) * 2.0 - 0.3))
    tape.backward(loss)
    g1 = w.grad.copy()
    tape.backward(loss)
    np.testing.assert_array_equal(w.grad, g1)


def test_broadcast_mul_accumulates_scalar():
    tape = Tape()
    nu = tape.leaf(np.asarray(0.7))
    vec = np.array([1.0, 2.0, 3.0])
    loss = T.vsum(nu * vec)
    tape.backward(loss)
    assert float(nu.grad) == pytest.approx(6.0)


def test_affine_matches_manual():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(5, 3))
    tape = Tape()
    w = tape.leaf(rng.normal(size=(2, 3)))
    b = tape.leaf(rng.normal(size=2))
    out = T.affine(x, w, b)
    loss = T.vsum(out)
    tape.backward(loss)
    np.testing.assert_allclose(w.grad, np.ones((5, 2)).T @ x)
    np.testing.assert_allclose(b.grad, np.full(2, 5.0))


def test_grad_of_unrecorded_value_raises():
    tape = Tape()
    with pytest.raises(RecordingError):
        tape.backward(3.14)


def test_backward_root_must_be_scalar():
    tape = Tape()
    w = tape.leaf(np.ones(3))
    out = w * 2.0
    with pytest.raises(RecordingError):
        tape.backward(out)


def test_nonfinite_forward_raises_eagerly():
    tape = Tape()
    w = tape.leaf(np.array([1e308]))
    with pytest.raises(NonFiniteError):
        (w * 1e10) * 1e10


def test_gather_scatter_gradient():
    tape = Tape()
    w = tape.leaf(np.arange(5.0))
    picked = T.gather(w, np.array([1, 3]))
    loss = T.vsum(T.square(picked))
    tape.backward(loss)
    np.testing.assert_allclose(w.grad, [0.0, 2.0, 0.0, 6.0, 0.0])


def test_fused_affine_jet_matches_per_coefficient():
    rng = np.random.default_rng(1)
    coeffs = [rng.normal(size=(7, 4)) for _ in range(3)]
    w_val = rng.normal(size=(6, 4))
    b_val = rng.normal(size=6)

    tape = Tape()
    w = tape.leaf(w_val)
    b = tape.leaf(b_val)
    outs = T.affine_jet(coeffs, w, b)
    loss = T.vsum(outs[0]) + T.vsum(T.square(outs[2]))
    tape.backward(loss)

    tape2 = Tape()
    w2 = tape2.leaf(w_val)
    b2 = tape2.leaf(b_val)
    o0 = T.affine(coeffs[0], w2, b2)
    o2 = T.affine(coeffs[2], w2)
    loss2 = T.vsum(o0) + T.vsum(T.square(o2))
    tape2.backward(loss2)

    np.testing.assert_array_equal(outs[0].value, o0.value)
    np.testing.assert_array_equal(outs[2].value, o2.value)
    np.testing.assert_allclose(w.grad, w2.grad, rtol=1e-14)
    np.testing.assert_allclose(b.grad, b2.grad, rtol=1e-14)


def test_fused_tanh_jet_matches_generic_bitwise():
    from pinn_control.autodiff.jets import Jet, jet_tanh

    rng = np.random.default_rng(2)
    z_vals = [rng.normal(size=(9, 5)) for _ in range(4)]

    tape = Tape()
    z_vars = [tape.leaf(z) for z in z_vals]
    fused = T.tanh_jet(z_vars)

    generic = jet_tanh(Jet(z_vals))  # plain ndarray path
    for f, g in zip(fused, generic.coeffs):
        np.testing.assert_array_equal(f.value, g)


def test_fused_tanh_jet_gradients_match_fd():
    rng = np.random.default_rng(3)
    z_vals = [rng.normal(size=(4, 3)) for _ in range(4)]
    weights = [rng.normal(size=(4, 3)) for _ in range(4)]

    def value(zs):
        tape = Tape()
        z_vars = [tape.leaf(z) for z in zs]
        outs = T.tanh_jet(z_vars)
        loss = outs[0] * weights[0]
        for o, wgt in zip(outs[1:], weights[1:]):
            loss = loss + o * wgt
        return tape, z_vars, T.vsum(loss)

    tape, z_vars, loss = value(z_vals)
    tape.backward(loss)
    h = 1e-6
    for k in range(4):
        zp = [z.copy() for z in z_vals]
        zm = [z.copy() for z in z_vals]
        zp[k][1, 2] += h
        zm[k][1, 2] -= h
        _, _, lp = value(zp)
        _, _, lm = value(zm)
        fd = (float(lp) - float(lm)) / (2 * h)
        assert fd == pytest.approx(z_vars[k].grad[1, 2], rel=1e-6)
