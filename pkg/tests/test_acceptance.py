"""Acceptance criteria 1-10, one pass/fail line each.

Run with pytest (lines appear in the terminal summary) or directly as a script.
"""

import math
import sys

import numpy as np
import pytest
from conftest import record_acceptance

from igblab.compare import ks_distance, ks_null_threshold
from igblab.empirical import accuracy_bound, estimate_gamma, run_ensemble
from igblab.mathkit import (DEFAULT_QUADRATURE, erf, erf_inv, integrate,
                            rectified_gaussian_moments)
from igblab.netsim import ArchitectureSpec, DataSpec
from igblab.theory import (classify_igb, depth_recursion, multiclass_pdf_f0, rho_stats,
                           theory_curve)

SQRT2 = math.sqrt(2.0)
D_REF = 10_000
D_IN = 3072
E_REF = 1000


def relu_arch(depth=1, width=100, **kw):
    return ArchitectureSpec(depth=depth, widths=(width,), activation="relu", **kw)


@pytest.fixture(scope="module")
def relu_reference():
    """relu, one hidden layer of 100, D = 1e4, d = 3072, E = 1000, with confidence stats."""
    return run_ensemble(relu_arch(), DataSpec(input_dim=D_IN, dataset_size=D_REF), E_REF, 7,
                        confidence=True)


def test_criterion_01_ensemble_symmetry():
    data = DataSpec(input_dim=256, dataset_size=2000)
    worst = (0.0, "")
    failures = []
    for activation in ("linear", "relu", "srelu", "tanh"):
        for pooling, kernel, width in (("none", 1, 100), ("max", 20, 500)):
            for depth in (1, 10):
                arch = ArchitectureSpec(depth=depth, widths=(width,), activation=activation,
                                        pooling=pooling, kernel=kernel)
                r = run_ensemble(arch, data, E_REF, 100 + depth)
                for c in range(2):
                    f = r.fractions[:, c]
                    se = f.std(ddof=1) / math.sqrt(r.replicas)
                    gap = abs(f.mean() - 0.5)
                    z = gap / se if se > 0 else (0.0 if gap == 0 else math.inf)
                    label = f"{activation}/{pooling}/L={depth}"
                    if z > worst[0]:
                        worst = (z, label)
                    if z > 5:
                        failures.append(label)
    passed = not failures
    record_acceptance(1, passed, f"16 configs, E=1000; worst |mean f_c - 1/2| = {worst[0]:.2f} "
                                 f"standard errors ({worst[1]}); limit 5")
    assert passed, failures


def test_criterion_02_relu_ks(relu_reference):
    curve = theory_curve(relu_arch(), DataSpec(input_dim=D_IN, dataset_size=D_REF))
    ks = ks_distance(relu_reference.f0, curve)
    threshold = ks_null_threshold(curve, relu_reference.replicas, 0.99, 1000, seed=7)
    passed = ks < threshold
    record_acceptance(2, passed, f"relu KS = {ks:.4f} vs 99th-percentile null {threshold:.4f}")
    assert passed


def test_criterion_03_finite_size(relu_reference):
    linear = ArchitectureSpec(depth=1, widths=(100,), activation="linear")
    runs = {d: run_ensemble(linear, DataSpec(input_dim=D_IN, dataset_size=d), E_REF, 31)
            for d in (1000, D_REF)}
    rel = {d: r.mu.var(ddof=1) / (SQRT2 ** 4 / d) - 1.0 for d, r in runs.items()}
    lin_ratio = runs[1000].std_f0 / runs[D_REF].std_f0
    relu_small = run_ensemble(relu_arch(), DataSpec(input_dim=D_IN, dataset_size=1000), E_REF, 7)
    relu_change = relu_reference.std_f0 / relu_small.std_f0 - 1.0
    passed = (all(abs(v) <= 0.2 for v in rel.values()) and 2 <= lin_ratio <= 5
              and abs(relu_change) < 0.2)
    record_acceptance(3, passed, f"linear Var(mu)/(4/D) - 1 = {rel[1000]:+.3f} (D=1e3), "
                                 f"{rel[D_REF]:+.3f} (D=1e4); linear std ratio {lin_ratio:.2f} "
                                 f"in [2,5]; relu std change {relu_change:+.3f} (< 0.2)")
    assert passed


def test_criterion_04_max_pool_peaks():
    arch = relu_arch(width=500, pooling="max", kernel=20)
    data = DataSpec(input_dim=D_IN, dataset_size=D_REF)
    r = run_ensemble(arch, data, E_REF, 41)
    emp = r.extreme_mass(0.05)
    theory = theory_curve(arch, data).extreme_mass(0.05)
    passed = abs(emp - theory) <= 0.05
    record_acceptance(4, passed, f"max-pool extreme mass emp {emp:.3f} vs theory {theory:.3f} "
                                 f"(tolerance 0.05)")
    assert passed


def test_criterion_05_standardization():
    linear = ArchitectureSpec(depth=1, widths=(100,), activation="linear")
    errors = {}
    for k in (1.0, 2.0, 4.0):
        g = estimate_gamma(linear, DataSpec(input_dim=1024, dataset_size=D_REF, offset=k), 500, 51)
        errors[k] = g.value / k ** 2 - 1.0
    passed = all(abs(e) <= 0.15 for e in errors.values())
    detail = ", ".join(f"K={k:g}: {e:+.3f}" for k, e in errors.items())
    record_acceptance(5, passed, f"gamma/K^2 - 1: {detail} (tolerance 0.15)")
    assert passed


def test_criterion_06_depth(relu_reference):
    trace = depth_recursion(SQRT2, 10)
    gammas = [depth_recursion(SQRT2, L).output.gamma for L in range(1, 11)]
    increasing = bool(np.all(np.diff(gammas) > 0))
    e = trace.entries
    inequalities = all(b.var_h < a.var_h and b.var_mu_h > a.var_mu_h
                       for a, b in zip(e[1:], e[2:]))
    deep = run_ensemble(relu_arch(depth=10), DataSpec(input_dim=D_IN, dataset_size=D_REF), 500, 61)
    ratio = deep.extreme_mass() / relu_reference.extreme_mass()
    passed = increasing and inequalities and ratio >= 2
    record_acceptance(6, passed, f"gamma_L increasing {increasing} ({gammas[0]:.3f} -> "
                                 f"{gammas[-1]:.3f}); step inequalities {inequalities}; "
                                 f"extreme mass L=10/L=1 = {ratio:.2f} (>= 2)")
    assert passed


def test_criterion_07_classification(relu_reference):
    present = [("relu", "none", 1, 0.0), ("linear", "none", 1, 2.0)]
    present += [("relu", "max", k, 0.0) for k in (2, 4, 8, 20, 32)]
    absent = [("linear", "none", 1, 0.0), ("tanh", "none", 1, 0.0), ("srelu", "none", 1, 0.0)]
    labels_ok = (all(classify_igb(a, p, k, SQRT2, K) == "present" for a, p, k, K in present)
                 and all(classify_igb(a, p, k, SQRT2, K) == "absent" for a, p, k, K in absent))
    srelu = ArchitectureSpec(depth=1, widths=(100,), activation="srelu")
    s = run_ensemble(srelu, DataSpec(input_dim=D_IN, dataset_size=D_REF), 200, 71)
    reduction = relu_reference.f0.var(ddof=1) / s.f0.var(ddof=1)
    passed = labels_ok and reduction >= 5
    record_acceptance(7, passed, f"classification labels correct {labels_ok}; srelu reduces "
                                 f"Var(f0) by {reduction:.0f}x vs relu (>= 5)")
    assert passed


def test_criterion_08_multiclass(multiclass_oracle):
    arch, data, cum, oracle = multiclass_oracle
    small = DataSpec(input_dim=128, dataset_size=1000, class_count=10)
    r = run_ensemble(arch, small, 10_000, 81)
    worst_emp = float(np.max(np.abs(r.mean_f - 0.1)))
    curve = multiclass_pdf_f0(10, cum.var_mu, cum.var_O, data.dataset_size)
    curve_gap = abs(curve.mean() - 0.1) / 0.1
    ks = ks_distance(oracle, curve)
    parts = (worst_emp <= 0.01, curve_gap <= 0.01, ks <= 0.02)
    passed = all(parts)
    record_acceptance(8, passed, f"ensemble max |mean f_c - 0.1| = {worst_emp:.4f} (<= 0.01) "
                                 f"{parts[0]}; curve mean {curve.mean():.4f}, rel gap "
                                 f"{curve_gap:.3f} (<= 0.01) {parts[1]}; KS vs exact oracle "
                                 f"{ks:.3f} (<= 0.02) {parts[2]}")
    assert passed


def test_criterion_09_confidence_ratio(relu_reference):
    c = relu_reference.confidence
    seeds = slice(0, 100)
    var_O = relu_reference.var_O[seeds].mean(axis=1)
    predicted = np.exp(c.delta_mu[seeds] + var_O)
    rel = np.abs(c.rp_mean[seeds] / predicted - 1.0)
    within = int(np.sum(rel <= 0.10))
    passed = within == 100
    record_acceptance(9, passed, f"{within}/100 seeds with mean R_P within 10% of "
                                 f"exp(delta_mu + var_O); median rel. error {np.median(rel):.3f}")
    assert passed


def test_criterion_10_property_suite(bias_check_report):
    checks = {}
    p = np.linspace(-0.999, 0.999, 1999)
    checks["erf round trip"] = float(np.max(np.abs(erf(erf_inv(p)) - p))) < 1e-10

    rng = np.random.default_rng(10)
    x = np.maximum(rng.normal(0.3, 1.1, 2_000_000), 0.0)
    first, second = rectified_gaussian_moments(0.3, 1.21)
    checks["rectified moments"] = (abs(x.mean() - first) < 4 * x.std() / math.sqrt(x.size) and
                                   abs((x * x).mean() - second) < 4 * (x * x).std() / math.sqrt(x.size))

    fine = DEFAULT_QUADRATURE.doubled()
    f = lambda t: np.tanh(t) ** 2 + t ** 4 * np.exp(-t * t)  # noqa: E731
    a, b = rho_stats("relu", "max", 20, SQRT2), rho_stats("relu", "max", 20, SQRT2, quad=fine)
    checks["quadrature doubling"] = (
        abs(integrate(f, weight=(0.1, 2.0)) - integrate(f, fine, weight=(0.1, 2.0))) < 1e-6
        and abs(a.mean_rho - b.mean_rho) < 1e-6 and abs(a.var_rho - b.var_rho) < 1e-6)

    arch = ArchitectureSpec(depth=2, widths=(40, 30), activation="relu", pooling="max", kernel=3)
    data = DataSpec(input_dim=32, dataset_size=400)
    one, four = run_ensemble(arch, data, 40, 5, threads=1), run_ensemble(arch, data, 40, 5, threads=4)
    checks["thread determinism"] = (np.array_equal(one.fractions, four.fractions)
                                    and np.array_equal(one.mu, four.mu))

    checks["accuracy bound"] = (accuracy_bound(np.array([1.0, 0.0]), 2) == 0.5
                                and accuracy_bound(np.array([0.5, 0.5]), 2) == 1.0)

    agreement = bias_check_report.agreement_rate
    checks["bias direction"] = agreement >= 0.99
    passed = all(checks.values())
    failing = [k for k, v in checks.items() if not v]
    record_acceptance(10, passed, f"{sum(checks.values())}/{len(checks)} property checks green; "
                                  f"subgroup agreement {agreement:.3f} (>= 0.99)"
                                  + (f"; failing: {', '.join(failing)}" if failing else ""))
    assert passed


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
