import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def central_diff(f, x, h=1e-5):
    """Gradient of scalar ``f(array)`` by central differences (test oracle)."""
    x = np.array(x, dtype=np.float64, order="C")
    g = np.zeros_like(x)
    flat, gf = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        gf[i] = (fp - fm) / (2 * h)
    return g


def jacobian_fd(f, x, h=1e-6):
    """Central-difference Jacobian of ``f: R^d -> R^d`` at a single point."""
    x = np.asarray(x, dtype=np.float64)
    d = x.size
    jac = np.zeros((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        jac[:, j] = (f(x + e) - f(x - e)) / (2 * h)
    return jac


def randomize(module, rng, scale=0.3):
    """Perturb every parameter so zero-initialised output layers become active."""
    for _, p in module.named_parameters():
        p.data = p.data + scale * rng.standard_normal(p.data.shape)
    return module


def point_fn(layer, cond=None, direction="forward"):
    """Wrap a flow layer as ``R^d -> R^d`` on single points for Jacobian oracles."""
    from softflow.autograd import Tensor, no_grad

    def f(x):
        with no_grad():
            out, _ = getattr(layer, direction)(Tensor(x[None]), cond)
        return out.data[0]
    return f


ACCEPTANCE = []


@pytest.fixture
def criterion():
    """``criterion(n, ok, detail)`` records a one-line verdict and returns ``ok``."""
    def record(n, ok, detail):
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
