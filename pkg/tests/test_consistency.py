"""Analytic gamma against the ensemble estimate for every single-layer configuration."""

import pytest

from igblab.empirical import estimate_gamma
from igblab.netsim import ArchitectureSpec, DataSpec
from igblab.theory import theory_cumulants

DATA = DataSpec(input_dim=1024, dataset_size=10_000)
POOLINGS = [("none", 1, 100), ("max", 20, 500), ("average", 20, 500)]


@pytest.mark.slow
@pytest.mark.parametrize("pooling,kernel,width", POOLINGS)
@pytest.mark.parametrize("activation", ["linear", "relu", "srelu", "tanh"])
def test_gamma_theory_within_three_stderr(activation, pooling, kernel, width):
    arch = ArchitectureSpec(depth=1, widths=(width,), activation=activation, pooling=pooling,
                            kernel=kernel)
    theory = theory_cumulants(arch, DATA, finite_size=True).gamma
    emp = estimate_gamma(arch, DATA, 500, 11)
    assert abs(emp.value - theory) <= 3 * emp.stderr, (emp, theory)
