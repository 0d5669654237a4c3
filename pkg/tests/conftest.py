import numpy as np
import pytest

from blindtr.product import ProductModel

FIG1 = dict(mu_x=2 + 2.5j, mu_y=2.1 + 1.8j, sigma_x=1.0, sigma_y=1.0, rho=0.3 + 0.3j)


@pytest.fixture
def fig1_model():
    return ProductModel(**FIG1)


def random_models(n, seed, max_mean=2.0, max_rho=0.85):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        mu = rng.uniform(-max_mean, max_mean, 4)
        sig = rng.uniform(0.5, 1.5, 2)
        r = rng.uniform(0, max_rho) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        out.append(ProductModel(mu[0] + 1j * mu[1], mu[2] + 1j * mu[3], sig[0], sig[1], r))
    return out


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(module.RESULTS):
        ok, detail = module.RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {key}: {detail}")
