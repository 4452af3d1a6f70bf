"""Backend parity, gradient correctness, and backend selection."""
import math
import subprocess
import sys

import numpy as np
import pytest

from trajsynth import kernels
from trajsynth.kernels import backend_name, get_backend

try:
    get_backend("compiled")
    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False

needs_compiled = pytest.mark.skipif(not HAVE_COMPILED,
                                    reason="compiled extension not built")

BACKENDS = ["pure"] + (["compiled"] if HAVE_COMPILED else [])


def random_net(rng, sizes=(5, 8, 6, 4)):
    Ws = [rng.normal(size=(a, b)) for a, b in zip(sizes, sizes[1:])]
    bs = [rng.normal(size=b) for b in sizes[1:]]
    return Ws, bs


def finite_diff(loss_fn, Ws, bs, eps=1e-6):
    """Central finite differences of loss_fn() w.r.t. every parameter."""
    dWs = [np.zeros_like(W) for W in Ws]
    dbs = [np.zeros_like(b) for b in bs]
    for arr, out in zip(Ws + bs, dWs + dbs):
        flat = arr.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = loss_fn()
            flat[i] = orig - eps
            lo = loss_fn()
            flat[i] = orig
            out.ravel()[i] = (hi - lo) / (2 * eps)
    return dWs, dbs


# ------------------------------------------------------------------- parity

@needs_compiled
def test_backends_agree_on_forward(rng):
    pure = get_backend("pure")
    compiled = get_backend("compiled")
    Ws, bs = random_net(rng)
    X = rng.normal(size=(16, 5))
    np.testing.assert_allclose(compiled.forward(Ws, bs, X),
                               pure.forward(Ws, bs, X), rtol=0, atol=1e-9)


@needs_compiled
def test_backends_agree_on_losses_and_grads(rng):
    pure = get_backend("pure")
    compiled = get_backend("compiled")
    Ws, bs = random_net(rng)
    X = rng.normal(size=(16, 5))
    actions = rng.integers(4, size=16)
    targets = rng.normal(size=16)
    labels = rng.integers(4, size=16)

    lp, dWp, dbp = pure.qsel_loss_grad(Ws, bs, X, actions, targets)
    lc, dWc, dbc = compiled.qsel_loss_grad(Ws, bs, X, actions, targets)
    assert lc == pytest.approx(lp, abs=1e-9)
    for a, b in zip(dWp + dbp, dWc + dbc):
        np.testing.assert_allclose(b, a, rtol=0, atol=1e-9)

    lp, dWp, dbp = pure.ce_loss_grad(Ws, bs, X, labels)
    lc, dWc, dbc = compiled.ce_loss_grad(Ws, bs, X, labels)
    assert lc == pytest.approx(lp, abs=1e-9)
    for a, b in zip(dWp + dbp, dWc + dbc):
        np.testing.assert_allclose(b, a, rtol=0, atol=1e-9)


# ---------------------------------------------------------------- gradients

@pytest.mark.parametrize("backend", BACKENDS)
def test_qsel_gradients_match_finite_differences(backend, rng):
    mod = get_backend(backend)
    Ws, bs = random_net(rng, sizes=(5, 6, 4))
    X = rng.normal(size=(7, 5))
    actions = rng.integers(4, size=7)
    targets = rng.normal(size=7)
    _, dWs, dbs = mod.qsel_loss_grad(Ws, bs, X, actions, targets)
    fdW, fdb = finite_diff(
        lambda: mod.qsel_loss_grad(Ws, bs, X, actions, targets)[0], Ws, bs)
    for got, ref in zip(dWs + dbs, fdW + fdb):
        np.testing.assert_allclose(got, ref, rtol=1e-4, atol=1e-7)


@pytest.mark.parametrize("backend", BACKENDS)
def test_ce_gradients_match_finite_differences(backend, rng):
    mod = get_backend(backend)
    Ws, bs = random_net(rng, sizes=(5, 6, 4))
    X = rng.normal(size=(7, 5))
    labels = rng.integers(4, size=7)
    _, dWs, dbs = mod.ce_loss_grad(Ws, bs, X, labels)
    fdW, fdb = finite_diff(
        lambda: mod.ce_loss_grad(Ws, bs, X, labels)[0], Ws, bs)
    for got, ref in zip(dWs + dbs, fdW + fdb):
        np.testing.assert_allclose(got, ref, rtol=1e-4, atol=1e-7)


# ------------------------------------------------------------ pinned values

@pytest.mark.parametrize("backend", BACKENDS)
def test_zero_network_losses(backend):
    mod = get_backend(backend)
    sizes = (5, 6, 4)
    Ws = [np.zeros((a, b)) for a, b in zip(sizes, sizes[1:])]
    bs = [np.zeros(b) for b in sizes[1:]]
    X = np.ones((3, 5))
    # all outputs equal: cross-entropy is exactly ln(4)
    loss, _, _ = mod.ce_loss_grad(Ws, bs, X, np.array([0, 1, 3]))
    assert loss == pytest.approx(math.log(4.0), abs=1e-12)
    # zero outputs: squared error is the mean squared target
    targets = np.array([1.0, -2.0, 3.0])
    loss, _, _ = mod.qsel_loss_grad(Ws, bs, X, np.array([0, 1, 2]), targets)
    assert loss == pytest.approx(np.mean(targets**2), abs=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_relu_masks_negative_preactivations(backend):
    mod = get_backend(backend)
    Ws = [np.array([[1.0], [0.0]]), np.array([[2.0]])]
    bs = [np.array([-5.0]), np.array([0.25])]
    X = np.array([[1.0, 0.0], [10.0, 0.0]])
    # first row: relu(1-5)=0 -> 0.25; second: relu(10-5)*2+0.25 = 10.25
    np.testing.assert_allclose(mod.forward(Ws, bs, X), [[0.25], [10.25]])


# ---------------------------------------------------------------- selection

def run_with_env(value):
    code = ("import trajsynth.kernels as k;"
            "print(k.backend_name())")
    return subprocess.run([sys.executable, "-c", code],
                          env={"PATH": "/usr/bin:/bin",
                               "TRAJSYNTH_KERNELS": value},
                          capture_output=True, text=True, cwd="/root/pkg")


def test_env_var_forces_pure_backend():
    proc = run_with_env("pure")
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.strip() == "pure"


@needs_compiled
def test_env_var_forces_compiled_backend():
    proc = run_with_env("compiled")
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.strip() == "compiled"


def test_env_var_rejects_unknown_backend():
    proc = run_with_env("gpu")
    assert proc.returncode != 0
    assert "TRAJSYNTH_KERNELS" in proc.stderr


def test_get_backend_validates_name():
    with pytest.raises(ValueError):
        get_backend("vectorized")


def test_module_exports_selected_backend():
    assert backend_name() in ("pure", "compiled")
    chosen = get_backend(backend_name())
    assert kernels.forward is chosen.forward
    assert kernels.qsel_loss_grad is chosen.qsel_loss_grad
    assert kernels.ce_loss_grad is chosen.ce_loss_grad
