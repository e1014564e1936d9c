import numpy as np
import pytest

from softflow import autograd as ag
from softflow.autograd import NonFiniteError
from softflow.gradcheck import grad_check
from softflow.optim import Adam, AdamState, adam_step


def _adam_reference(grads, lr=0.1, b1=0.9, b2=0.999, eps=1e-8):
    """Textbook bias-corrected Adam on a scalar, written out by hand."""
    p, m, v = 0.0, 0.0, 0.0
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        p -= lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + eps)
    return p


def test_first_step_moves_by_lr():
    w = ag.parameter([0.0])
    opt = Adam([w], lr=0.1)
    w.grad = np.array([1.0])
    opt.step()
    assert w.data[0] == pytest.approx(-0.1, abs=1e-8)
    assert opt.state.step == 1


def test_matches_hand_rolled_adam():
    grads = [1.0, -0.5, 0.25, 2.0, 0.0]
    w = ag.parameter([0.0])
    opt = Adam([w], lr=0.1)
    for g in grads:
        w.grad = np.array([g])
        opt.step()
    assert w.data[0] == pytest.approx(_adam_reference(grads), abs=1e-15)


def test_zero_gradient_is_a_fixed_point():
    rng = np.random.default_rng(0)
    w = ag.parameter(rng.normal(size=(3, 2)))
    start = w.data.copy()
    opt = Adam([w], lr=0.1)
    for _ in range(100):
        w.grad = np.zeros_like(w.data)
        opt.step()
    np.testing.assert_allclose(w.data, start, rtol=0, atol=1e-12)


def test_step_decay_halves_lr():
    st = AdamState(lr=0.002, decay_factor=0.5, decay_interval=5000)
    w = ag.parameter([1.0])
    for _ in range(5001):
        w.grad = np.array([0.1])
        adam_step([w], st)
    assert st.lr == 0.001
    assert st.lr_at(4999) == 0.002 and st.lr_at(10000) == 0.0005


def test_missing_gradient_raises():
    w = ag.parameter([1.0])
    with pytest.raises(ValueError, match="no gradient"):
        Adam([w]).step()


def test_non_positive_lr_rejected():
    with pytest.raises(ValueError):
        AdamState(lr=0.0)


def test_state_round_trip():
    w = ag.parameter(np.ones(3))
    opt = Adam([w], lr=0.01, decay_factor=0.5, decay_interval=3)
    for _ in range(4):
        w.grad = np.arange(3.0)
        opt.step()
    st = AdamState.restore(opt.state.scalars(), opt.state.state_arrays())
    assert st.scalars() == opt.state.scalars()
    for a, b in zip(st.m + st.v, opt.state.m + opt.state.v):
        np.testing.assert_array_equal(a, b)


# -- grad_check ----------------------------------------------------------------
def test_grad_check_quadratic():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(4, 4))
    q = a @ a.T
    w = ag.parameter(rng.normal(size=4))
    err = grad_check(lambda: ag.sum(w * ag.matmul(ag.reshape(w, (1, 4)), q)[0]), [w])
    assert err < 1e-9


def test_grad_check_constant_is_zero():
    w = ag.parameter([1.0, 2.0])
    assert grad_check(lambda: ag.sum(ag.Tensor([3.0])), [w]) == 0.0


def test_grad_check_detects_wrong_gradient():
    w = ag.parameter([0.7])

    def broken():
        # forward is w^2, backward claims 3w
        return ag.Tensor._result((w.data ** 2).sum(), (w,), lambda g: (3 * w.data * g,), "broken")

    assert grad_check(broken, [w]) > 0.1


def test_grad_check_validates_step_and_finiteness():
    w = ag.parameter([1.0])
    with pytest.raises(ValueError):
        grad_check(lambda: ag.sum(w), [w], step=0.1)
    w0 = ag.parameter([1e-6])
    with pytest.raises(NonFiniteError):
        grad_check(lambda: ag.sum(ag.log(w0)), [w0], step=1e-5)
