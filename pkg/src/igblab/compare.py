"""Agreement metrics between simulated ensembles and analytic curves."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, DomainError
from .mathkit import STREAM_KS_NULL, SeedPolicy

MIN_KS_SAMPLES = 30

# Settings a theory curve depends on; widths, input dimension and seeds do not enter.
_ARCH_FIELDS = ("depth", "activation", "pooling", "kernel", "gain", "bias_mode",
                "bias_scale", "class_count")
_DATA_FIELDS = ("dataset_size", "offset", "class_variances", "class_count")


def ks_distance(samples, curve) -> float:
    """Supremum distance between the empirical CDF of ``samples`` and ``curve``.

    Both CDFs are right-continuous; comparing left and right limits at every
    sample covers all jumps, including point masses of the curve.
    """
    x = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    n = x.size
    if n == 0:
        raise DomainError("no samples given")
    if n < MIN_KS_SAMPLES:
        raise DomainError(f"need at least {MIN_KS_SAMPLES} samples, got {n}")
    values, counts = np.unique(x, return_counts=True)
    right = np.cumsum(counts) / n
    left = right - counts / n
    gap_right = np.abs(right - curve.cdf_at(values))
    gap_left = np.abs(left - curve.cdf_left(values))
    return float(max(gap_right.max(), gap_left.max()))


def ks_null_threshold(curve, n: int, quantile: float = 0.99, replicas: int = 1000,
                      seed: int = 0) -> float:
    """Quantile of the KS distance for ``n`` draws from the curve itself."""
    if n < MIN_KS_SAMPLES:
        raise DomainError(f"need at least {MIN_KS_SAMPLES} samples, got {n}")
    rng = SeedPolicy(seed).generator(n, STREAM_KS_NULL)
    stats = np.array([ks_distance(curve.sample(n, rng), curve) for _ in range(replicas)])
    return float(np.quantile(stats, quantile))


def extreme_mass(samples_or_curve, threshold: float = 0.05) -> float:
    """Mass of f_0 outside [threshold, 1 - threshold]."""
    if not 0 < threshold < 0.5:
        raise DomainError("threshold must lie in (0, 0.5)")
    if hasattr(samples_or_curve, "extreme_mass"):
        if hasattr(samples_or_curve, "cdf_at"):
            return samples_or_curve.extreme_mass(threshold)
        samples_or_curve = samples_or_curve.f0
    x = np.asarray(samples_or_curve, dtype=np.float64)
    if x.size == 0:
        raise DomainError("no samples given")
    return float(np.mean((x < threshold) | (x > 1.0 - threshold)))


@dataclass(frozen=True)
class ComparisonRules:
    """Tolerances used to turn metrics into verdicts."""

    ks_quantile: float = 0.99
    null_replicas: int = 1000
    extreme_threshold: float = 0.05
    extreme_tolerance: float = 0.05
    gamma_sigmas: float = 3.0
    seed: int = 0


@dataclass
class ComparisonReport:
    config: dict
    ks: float
    ks_threshold: float
    extreme_mass_emp: float
    extreme_mass_theory: float
    gamma_emp: float | None
    gamma_emp_stderr: float | None
    gamma_theory: float | None
    verdicts: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(v["passed"] for v in self.verdicts)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())


def _check_configs(ensemble, curve) -> None:
    if not curve.config:
        return
    ens = ensemble.config()
    for section, names in (("architecture", _ARCH_FIELDS), ("data", _DATA_FIELDS)):
        a, b = ens.get(section, {}), curve.config.get(section, {})
        for name in names:
            if name in a and name in b and a[name] != b[name]:
                raise ConfigError(
                    f"ensemble and curve differ in {section}.{name}: {a[name]!r} vs {b[name]!r}",
                    name)


def _finite_or_none(x):
    return None if x is None or not math.isfinite(x) else float(x)


def build_report(ensemble, curve, rules: ComparisonRules = ComparisonRules()) -> ComparisonReport:
    """Compare an ensemble's f_0 samples with an analytic curve."""
    if ensemble.replicas == 0:
        raise DomainError("the ensemble is empty")
    _check_configs(ensemble, curve)
    f0 = ensemble.f0
    ks = ks_distance(f0, curve)
    threshold = ks_null_threshold(curve, len(f0), rules.ks_quantile, rules.null_replicas, rules.seed)
    em_emp = extreme_mass(f0, rules.extreme_threshold)
    em_theory = curve.extreme_mass(rules.extreme_threshold)
    g = ensemble.gamma
    gamma_emp = _finite_or_none(g.value) if g else None
    gamma_se = _finite_or_none(g.stderr) if g else None
    gamma_theory = (curve.var_mu / curve.var_O) if curve.var_O > 0 else None

    verdicts = [
        {"rule": "ks_below_null_quantile", "value": ks, "tolerance": threshold,
         "passed": bool(ks < threshold)},
        {"rule": "extreme_mass_abs_diff", "value": abs(em_emp - em_theory),
         "tolerance": rules.extreme_tolerance,
         "passed": bool(abs(em_emp - em_theory) <= rules.extreme_tolerance)},
    ]
    if gamma_emp is not None and gamma_se is not None and gamma_theory is not None:
        tol = rules.gamma_sigmas * gamma_se
        verdicts.append({"rule": "gamma_within_stderr", "value": abs(gamma_emp - gamma_theory),
                         "tolerance": tol, "passed": bool(abs(gamma_emp - gamma_theory) <= tol)})
    return ComparisonReport(
        config={"ensemble": ensemble.config(), "curve": curve.config, "rules": asdict(rules)},
        ks=ks, ks_threshold=threshold, extreme_mass_emp=em_emp, extreme_mass_theory=em_theory,
        gamma_emp=gamma_emp, gamma_emp_stderr=gamma_se, gamma_theory=gamma_theory,
        verdicts=verdicts)
