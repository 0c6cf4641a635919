import numpy as np
import pytest

from pinn_control.autodiff import tape as T
from pinn_control.autodiff.engine import Recording, eval_with_input_jets, grad_scalar
from pinn_control.autodiff.tape import RecordingError
from pinn_control.network import ModelParams, NetworkConfig, NetworkParams, init_params


def linear_identity_net():
    """1-hidden-layer linear harness computing (x, 0, 0)."""
    cfg = NetworkConfig(hidden_layers=1, hidden_width=1, output_dim=3, activation="identity")
    w1 = np.array([[1.0, 0.0]])
    b1 = np.zeros(1)
    w2 = np.array([[1.0], [0.0], [0.0]])
    b2 = np.zeros(3)
    return NetworkParams([w1, w2], [b1, b2], cfg)


def test_identity_harness_derivatives():
    params = linear_identity_net()
    b = eval_with_input_jets(params, 0.7, 0.2, order_x=2)
    assert b[0].value == pytest.approx(0.7)
    assert b[0].dx == 1.0
    assert b[0].dxx == 0.0
    assert b[0].dt == 0.0
    assert b[1].value == 0.0


def test_scalar_tanh_composite_symbolic():
    # one hidden tanh node computing tanh(2x): dx = 2(1-tanh^2(0.6)),
    # dxx = -8 tanh(0.6) (1-tanh^2(0.6)) at x=0.3
    cfg = NetworkConfig(hidden_layers=1, hidden_width=1, output_dim=1)
    params = NetworkParams(
        [np.array([[2.0, 0.0]]), np.array([[1.0]])],
        [np.zeros(1), np.zeros(1)],
        cfg,
    )
    b = eval_with_input_jets(params, 0.3, 0.0, order_x=2)
    t = np.tanh(0.6)
    assert b[0].value == pytest.approx(t, rel=1e-14)
    assert b[0].dx == pytest.approx(2 * (1 - t * t), rel=1e-13)
    assert b[0].dxx == pytest.approx(-8 * t * (1 - t * t), rel=1e-13)


def five_point_third_derivative(f, x, h):
    return (-f(x - 2 * h) + 2 * f(x - h) - 2 * f(x + h) + f(x + 2 * h)) / (2 * h**3)


def test_third_derivative_matches_finite_differences():
    cfg = NetworkConfig(output_dim=3, seed=5)
    params = init_params(cfg)
    t0 = 0.37

    def f(x):
        return eval_with_input_jets(params, x, t0, order_x=1)[0].value

    for x0 in (-1.1, 0.25, 2.0):
        b = eval_with_input_jets(params, x0, t0, order_x=3)
        # step sweep + Richardson: the 5-point stencil is O(h^2), so
        # (4 e(h/2) - e(h)) / 3 cancels the leading error term
        e1 = five_point_third_derivative(f, x0, 1e-2)
        e2 = five_point_third_derivative(f, x0, 5e-3)
        oracle = (4 * e2 - e1) / 3
        assert b[0].dxxx == pytest.approx(oracle, rel=1e-4)
        assert b[0].dxxx == pytest.approx(e2, rel=1e-3)


def test_order1_and_order3_agree_bitwise():
    params = init_params(NetworkConfig(output_dim=2, seed=9))
    rng = np.random.default_rng(0)
    x = rng.uniform(-4, 4, 50)
    t = rng.uniform(0, 4, 50)
    b1 = eval_with_input_jets(params, x, t, order_x=1)
    b3 = eval_with_input_jets(params, x, t, order_x=3)
    for ch1, ch3 in zip(b1.channels, b3.channels):
        np.testing.assert_array_equal(ch1.value, ch3.value)
        np.testing.assert_array_equal(ch1.dt, ch3.dt)
        np.testing.assert_array_equal(ch1.dx, ch3.dx)
    assert b1[0].dxx is None and b3[0].dxx is not None


def test_order_validation():
    params = init_params(NetworkConfig(output_dim=2, seed=1))
    with pytest.raises(ValueError):
        eval_with_input_jets(params, 0.0, 0.0, order_x=4)
    with pytest.raises(ValueError):
        eval_with_input_jets(params, 0.0, 0.0, order_x=2, order_t=2)
    with pytest.raises(ValueError):
        eval_with_input_jets(params, np.nan, 0.0, order_x=1)


def test_grad_scalar_zero_for_constant():
    params = init_params(NetworkConfig(hidden_width=4, output_dim=2, seed=2))
    model = ModelParams(nu=0.5)
    rec = Recording(params, model)
    loss = T.vmean(T.square(rec.tape.leaf(np.zeros(3)) + 1.0))
    g = grad_scalar(loss)
    assert np.all(g.d_theta == 0.0)
    assert np.all(g.d_xi == 0.0)
    assert g.d_theta.size == params.n_params


def test_grad_scalar_quadratic_identity():
    params = init_params(NetworkConfig(hidden_width=4, output_dim=2, seed=3))
    model = ModelParams(nu=0.5)
    rec = Recording(params, model)
    loss = None
    for w, b in rec.layers:
        for leaf in (w, b):
            term = 0.5 * T.vsum(T.square(leaf))
            loss = term if loss is None else loss + term
    loss = loss + 0.5 * T.square(rec.nu)
    g = grad_scalar(loss)
    np.testing.assert_allclose(g.d_theta, params.flatten(), rtol=1e-15)
    assert g.d_xi[0] == pytest.approx(0.5)


def test_grad_scalar_rejects_plain_floats():
    with pytest.raises(RecordingError):
        grad_scalar(1.0)


def test_recorded_bundle_matches_plain_evaluation():
    # the recorded path stacks coefficients into one BLAS call, so values
    # agree with the per-coefficient path up to re-association only
    params = init_params(NetworkConfig(output_dim=3, seed=4))
    model = ModelParams(nu=1.0)
    rng = np.random.default_rng(1)
    x = rng.uniform(-1, 1, 11)
    t = rng.uniform(0, 1, 11)
    rec = Recording(params, model)
    rb = rec.bundle(x, t, 3)
    nb = eval_with_input_jets(params, x, t, order_x=3)
    for i in range(3):
        for name in ("value", "dt", "dx", "dxx", "dxxx"):
            np.testing.assert_allclose(
                getattr(rb[i], name).value, getattr(nb[i], name), rtol=1e-13, atol=1e-14
            )


def test_fd_convergence_is_second_order():
    """Central differences of a recorded loss converge at slope ~2 in h.

    Needs a loss whose third derivative along the probed weight is large
    relative to the loss value, otherwise the h=1e-5 error sits on the
    roundoff floor; a single saturating tanh node does that.
    """
    cfg = NetworkConfig(hidden_layers=1, hidden_width=1, output_dim=1)
    params = NetworkParams(
        [np.array([[0.3, 0.0]]), np.array([[30.0]])],
        [np.zeros(1), np.zeros(1)],
        cfg,
    )
    model = ModelParams(nu=0.8)
    x = np.array([3.0])
    t = np.array([0.0])

    def loss_at(flat):
        p = NetworkParams.from_flat(flat, cfg)
        rec = Recording(p, model)
        b = rec.bundle(x, t, 1)
        return rec, T.vmean(b[0].value)

    flat0 = params.flatten()
    rec, loss = loss_at(flat0)
    g = grad_scalar(loss)
    i = 0  # the x-weight of the tanh node: d3/dw3 of tanh(w x) is O(1)
    errs = []
    hs = (1e-3, 1e-4, 1e-5)
    for h in hs:
        fp = flat0.copy()
        fp[i] += h
        fm = flat0.copy()
        fm[i] -= h
        _, lp = loss_at(fp)
        _, lm = loss_at(fm)
        errs.append(abs((float(lp) - float(lm)) / (2 * h) - g.d_theta[i]))
    slope = np.polyfit(np.log(hs), np.log(np.maximum(errs, 1e-300)), 1)[0]
    assert slope > 1.9
