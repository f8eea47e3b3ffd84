"""Compiled kernels vs the numpy fallback: same semantics, same streams."""

import subprocess
import sys

import numpy as np
import pytest

from fedwatt.learning import _pykernels
from fedwatt.learning.models import ModelKind, Predictor
from fedwatt.learning.seeds import epoch_permutation

try:
    from fedwatt.learning import _kernels
except ImportError:
    _kernels = None

needs_compiled = pytest.mark.skipif(_kernels is None, reason="compiled kernels not built")


def run_epochs(kernel_module, kind, epochs=30, n=96, d=5, hidden=4, batch=16, lr=0.05):
    rng = np.random.default_rng(123)
    X = rng.standard_normal((n, d))
    w_true = rng.standard_normal(d)
    y = X @ w_true + 0.1 * rng.standard_normal(n)
    model = Predictor(kind, d, hidden)
    params = model.init_params(7)
    losses = []
    for epoch in range(epochs):
        order = epoch_permutation(99, epoch, n)
        if kind is ModelKind.LINEAR:
            sq = kernel_module.linear_sgd_epoch(params, X, y, order, batch, lr)
        else:
            sq = kernel_module.mlp_sgd_epoch(params, X, y, order, batch, lr, hidden)
        losses.append(sq / n)
    return params, losses


@needs_compiled
@pytest.mark.parametrize("kind", [ModelKind.LINEAR, ModelKind.SMALL_MLP])
def test_backends_agree(kind):
    p_compiled, loss_compiled = run_epochs(_kernels, kind)
    p_python, loss_python = run_epochs(_pykernels, kind)
    np.testing.assert_allclose(p_compiled, p_python, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(loss_compiled, loss_python, rtol=1e-10)


@needs_compiled
def test_partial_batches_agree(ModelKind_=ModelKind.LINEAR):
    # n not divisible by batch size exercises the final short batch
    p_compiled, _ = run_epochs(_kernels, ModelKind_, n=37, batch=8)
    p_python, _ = run_epochs(_pykernels, ModelKind_, n=37, batch=8)
    np.testing.assert_allclose(p_compiled, p_python, rtol=1e-10, atol=1e-12)


def test_backend_env_override_python():
    code = (
        "import fedwatt; "
        "print(fedwatt.BACKEND_NAME)"
    )
    proc = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True, text=True,
        env={"PATH": "/usr/bin:/bin", "FEDWATT_BACKEND": "python"},
    )
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.strip() == "python"


@needs_compiled
def test_backend_env_override_compiled():
    proc = subprocess.run(
        [sys.executable, "-c", "import fedwatt; print(fedwatt.BACKEND_NAME)"],
        capture_output=True, text=True,
        env={"PATH": "/usr/bin:/bin", "FEDWATT_BACKEND": "compiled"},
    )
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.strip() == "compiled"


@needs_compiled
def test_full_simulation_matches_across_backends():
    script = (
        "import fedwatt\n"
        "from fedwatt.topology import Scenario, Architecture, LearningParams\n"
        "sc = Scenario(name='x', architecture=Architecture.FEDERATED, num_sensors=3,\n"
        "              rounds=5, seed=2,\n"
        "              learning=LearningParams(samples_per_client=20, batch_size=8,\n"
        "                                      learning_rate=0.05))\n"
        "result = fedwatt.simulate_fl(sc)\n"
        "print(repr([rec.rmse for rec in result.records]))\n"
    )
    outputs = {}
    for backend in ("python", "compiled"):
        proc = subprocess.run(
            [sys.executable, "-c", script],
            capture_output=True, text=True,
            env={"PATH": "/usr/bin:/bin", "FEDWATT_BACKEND": backend},
        )
        assert proc.returncode == 0, proc.stderr
        outputs[backend] = eval(proc.stdout)
    np.testing.assert_allclose(outputs["python"], outputs["compiled"], rtol=1e-10)
