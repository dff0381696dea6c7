import numpy as np
import pytest
from scipy.special import erf as scipy_erf
from scipy.special import ndtr

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, passed: bool, detail: str) -> str:
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def resolve_to_dataset(f0: np.ndarray, dataset_size: int) -> np.ndarray:
    """A fraction below one datapoint out of D means the whole dataset goes one way."""
    f0 = f0.copy()
    f0[f0 < 1.0 / dataset_size] = 0.0
    f0[f0 > 1.0 - 1.0 / dataset_size] = 1.0
    return f0


def two_centre_f0_samples(var_mu: float, var_O: float, n: int, seed: int,
                          dataset_size: int) -> np.ndarray:
    """f0 of a binary network whose centres are independent Normal(0, var_mu)."""
    rng = np.random.default_rng(seed)
    mu = rng.normal(0.0, np.sqrt(var_mu), size=(n, 2))
    f0 = 0.5 + 0.5 * scipy_erf((mu[:, 0] - mu[:, 1]) / (2.0 * np.sqrt(var_O)))
    return resolve_to_dataset(f0, dataset_size)


def exact_multiclass_f0_samples(class_count: int, var_mu: float, var_O: float, n: int,
                                seed: int, nodes: int = 80, chunk: int = 50_000) -> np.ndarray:
    """f0 = P(O_0 beats every other output) for sampled centres, outputs independent.

    Given centres mu, f0 = E_z[prod_c Phi((mu_0 - mu_c)/sigma + z)] with z standard
    normal; the expectation is evaluated by probabilists' Gauss-Hermite quadrature.
    """
    rng = np.random.default_rng(seed)
    z, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / w.sum()
    sigma = np.sqrt(var_O)
    out = np.empty(n)
    for start in range(0, n, chunk):
        m = rng.normal(0.0, np.sqrt(var_mu), size=(min(chunk, n - start), class_count))
        gaps = (m[:, :1] - m[:, 1:]) / sigma
        probs = ndtr(gaps[:, :, None] + z[None, None, :]).prod(axis=1)
        out[start:start + len(m)] = probs @ w
    return out


@pytest.fixture(scope="session")
def multiclass_oracle():
    from igblab.netsim import ArchitectureSpec, DataSpec
    from igblab.theory import theory_cumulants

    arch = ArchitectureSpec(depth=1, widths=(500,), activation="relu", pooling="max", kernel=20,
                            class_count=10)
    data = DataSpec(dataset_size=10_000, class_count=10)
    cum = theory_cumulants(arch, data)
    raw = exact_multiclass_f0_samples(10, cum.var_mu, cum.var_O, 1_000_000, seed=2024)
    samples = resolve_to_dataset(raw, data.dataset_size)
    return arch, data, cum, samples


@pytest.fixture(scope="session")
def bias_check_report():
    """Subgroup bias check for relu with per-class variances (1, 4) at E = 500."""
    from igblab.empirical import per_class_bias_check
    from igblab.netsim import ArchitectureSpec, DataSpec

    data = DataSpec(input_dim=64, dataset_size=100_000, class_variances=(1.0, 4.0))
    return per_class_bias_check(ArchitectureSpec(), data, 500, 3)
