import math

import numpy as np
import pytest
from scipy.linalg import expm

from softflow import autograd as ag
from softflow.autograd import NonFiniteError, Tensor, no_grad
from softflow.cnf import CnfDynamics, LinearField, VelocityField, cnf_logprob, cnf_sample, make_cnf
from softflow.flows import ConditionVector
from softflow.flows.stack import std_normal_logprob
from softflow.gradcheck import grad_check

from conftest import central_diff, randomize


def linear_closed_form(x, t1=1.0):
    """dz/dt = -z from 0 to t1: z0 = x e^{t1}; log p(x) = log N(z0) + 2 t1."""
    z0 = x * math.exp(t1)
    return -0.5 * np.sum(z0 * z0, -1) - math.log(2 * math.pi) + 2 * t1


def test_zero_field_is_standard_normal():
    dyn = make_cnf(np.random.default_rng(0), hidden=8)
    x = np.random.default_rng(1).normal(size=(6, 2))
    lp = cnf_logprob(Tensor(x), 0.5, dyn)
    np.testing.assert_allclose(lp.data, std_normal_logprob(Tensor(x)).data, atol=1e-14)


def test_zero_field_samples_are_standard_normal():
    dyn = make_cnf(np.random.default_rng(0), hidden=8)
    a = cnf_sample(5000, 0.0, dyn, np.random.default_rng(2))
    b = np.random.default_rng(2).standard_normal((5000, 2))
    np.testing.assert_array_equal(a, b)


def test_linear_field_matches_closed_form():
    dyn = CnfDynamics(LinearField(-np.eye(2)), steps=32)
    x = np.random.default_rng(3).normal(size=(20, 2))
    lp = dyn.log_prob(Tensor(x)).data
    np.testing.assert_allclose(lp, linear_closed_form(x), atol=1e-4)


A_ROT = np.array([[-1.0, 2.0], [-2.0, -0.5]])


def test_rk4_global_error_is_fourth_order():
    dyn = CnfDynamics(LinearField(A_ROT), steps=8)
    z = np.random.default_rng(4).normal(size=(10, 2))
    exact = z @ expm(A_ROT).T
    errs = []
    for steps in (8, 16, 32):
        dyn.steps = steps
        x, _ = dyn.forward(Tensor(z))
        errs.append(np.max(np.abs(x.data - exact)))
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    assert all(13 < r < 19 for r in ratios), ratios


def test_rk4_round_trip_error_shrinks_with_step_size():
    # backward-then-forward cancels the leading local term, so the round trip gains one order
    dyn = CnfDynamics(LinearField(A_ROT), steps=8)
    x = np.random.default_rng(4).normal(size=(10, 2))
    errs = []
    for steps in (8, 16, 32):
        dyn.steps = steps
        z, _ = dyn.inverse(Tensor(x))
        back, _ = dyn.forward(z)
        errs.append(np.max(np.abs(back.data - x)))
    assert 26 < errs[0] / errs[1] < 38 and 26 < errs[1] / errs[2] < 38


def test_exact_trace_matches_finite_difference_divergence():
    rng = np.random.default_rng(5)
    field = randomize(VelocityField(rng, hidden=16, n_hidden=2), rng, 0.5)
    for _ in range(5):
        z = rng.normal(size=(1, 2))
        extra = np.array([[rng.uniform(), rng.uniform(0, 2)]])
        _, tr = field(Tensor(z), Tensor(extra))
        div = 0.0
        for k in range(2):
            div += central_diff(lambda v: field(Tensor(v), Tensor(extra), False)[0].data[0, k], z)[0, k]
        assert float(tr.data[0]) == pytest.approx(div, abs=1e-6)


def test_sample_round_trip_at_64_steps():
    rng = np.random.default_rng(6)
    dyn = CnfDynamics(randomize(VelocityField(rng, hidden=16), rng, 0.4), steps=64)
    z = rng.normal(size=(50, 2))
    cond = ConditionVector(np.full(50, 1.0))
    with no_grad():
        x, _ = dyn.forward(Tensor(z), cond)
        back, _ = dyn.inverse(x, cond)
    assert np.max(np.abs(back.data - z)) < 1e-5


def test_sampling_is_seeded():
    rng = np.random.default_rng(7)
    dyn = CnfDynamics(randomize(VelocityField(rng, hidden=8), rng, 0.3), steps=8)
    a = cnf_sample(100, 0.05, dyn, np.random.default_rng(3))
    b = cnf_sample(100, 0.05, dyn, np.random.default_rng(3))
    assert a.tobytes() == b.tobytes()


def test_condition_enters_the_dynamics():
    rng = np.random.default_rng(8)
    dyn = CnfDynamics(randomize(VelocityField(rng, hidden=8), rng, 0.3), steps=8)
    x = Tensor(rng.normal(size=(4, 2)))
    a = dyn.log_prob(x, ConditionVector(0.0)).data
    b = dyn.log_prob(x, ConditionVector(2.0)).data
    assert np.max(np.abs(a - b)) > 1e-6


def test_logprob_gradient_passes_grad_check():
    rng = np.random.default_rng(9)
    dyn = CnfDynamics(randomize(VelocityField(rng, hidden=4, n_hidden=1), rng, 0.5), steps=8)
    x = Tensor(rng.normal(size=(3, 2)))
    c = ConditionVector(np.array([0.0, 1.0, 2.0]))
    err = grad_check(lambda: -ag.mean(dyn.log_prob(x, c)), dyn.parameters())
    assert err < 1e-4


def test_minimum_step_count():
    with pytest.raises(ValueError):
        CnfDynamics(LinearField(-np.eye(2)), steps=4)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_blow_up_is_reported():
    dyn = CnfDynamics(LinearField(np.eye(2) * 400.0), steps=8)
    with pytest.raises(NonFiniteError):
        dyn.log_prob(Tensor(np.full((1, 2), 1e280)))
