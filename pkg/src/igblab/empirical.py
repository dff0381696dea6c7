"""Ensemble Monte Carlo over weight initialisations.

Every replica draws its own weights from the shared seed policy and is
evaluated on one dataset that is drawn once per ensemble.  Per-replica
statistics are folded in replica order, so results do not depend on the
number of worker threads.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import ConfigError, DomainError, EnsembleError
from .mathkit import STREAM_BOOTSTRAP, STREAM_DATA, STREAM_WEIGHTS, SeedPolicy
from .netsim import (ArchitectureSpec, DataSpec, OutputBatch, forward,
                     generate_dataset, init_weights)

PRECISIONS = {"single": np.float32, "double": np.float64}


@dataclass(frozen=True)
class ClassFractions:
    """Fraction of datapoints assigned to each class by one network."""

    values: np.ndarray

    @property
    def ranked(self) -> np.ndarray:
        return np.sort(self.values)[::-1]

    def __getitem__(self, c):
        return self.values[c]


def _argmax_counts(values: np.ndarray) -> np.ndarray:
    # np.argmax returns the first maximum, which is the lowest-index tie rule.
    winners = np.argmax(values, axis=1)
    return np.bincount(winners, minlength=values.shape[1])


def class_fractions(outputs) -> ClassFractions:
    """Fraction of rows whose argmax is each class (ties go to the lower index)."""
    values = outputs.values if isinstance(outputs, OutputBatch) else np.asarray(outputs)
    if values.ndim != 2 or values.shape[0] < 1:
        raise DomainError("need at least one row of outputs")
    return ClassFractions(_argmax_counts(values) / values.shape[0])


def accuracy_bound(fractions, class_count: int) -> float:
    """Best achievable accuracy on a balanced dataset given the class fractions."""
    f = fractions.values if isinstance(fractions, ClassFractions) else np.asarray(fractions)
    return 1.0 - (float(np.max(f)) - 1.0 / class_count)


@dataclass(frozen=True)
class ConfidenceStats:
    """Per-replica statistics of the confidence ratio exp(O_0 - O_1).

    ``var_O`` is the per-class output variance averaged over the two
    classes; ``half_var_diff`` is Var(O_0 - O_1) / 2, which equals ``var_O``
    when the outputs are uncorrelated over the data.
    """

    delta_mu: np.ndarray
    rp_mean: np.ndarray
    rp_var: np.ndarray
    var_O: np.ndarray
    half_var_diff: np.ndarray


def _confidence_row(values: np.ndarray) -> tuple[float, ...]:
    diff = values[:, 0] - values[:, 1]
    rp = np.exp(diff)
    return (float(diff.mean()), float(rp.mean()), float(rp.var(ddof=1)) if len(rp) > 1 else 0.0,
            float(values.var(axis=0).mean()), 0.5 * float(diff.var()))


def confidence_ratio_stats(outputs) -> ConfidenceStats:
    """Confidence-ratio statistics for a sequence of binary output batches."""
    rows = []
    for out in outputs:
        values = out.values if isinstance(out, OutputBatch) else np.asarray(out, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] != 2:
            raise ConfigError("the confidence ratio is defined for two classes only", "class_count")
        rows.append(_confidence_row(values))
    if not rows:
        raise DomainError("no output batches given")
    cols = np.array(rows, dtype=np.float64).T
    return ConfidenceStats(*cols)


@dataclass(frozen=True)
class GammaEstimate:
    """Pooled variance ratio with its bootstrap standard error."""

    value: float
    stderr: float
    degenerate: bool = False


def gamma_from_moments(mu: np.ndarray, var_O: np.ndarray, rng: np.random.Generator | None = None,
                       bootstrap: int = 500) -> GammaEstimate:
    """Variance over replicas of the class centres over the mean data variance.

    ``mu`` and ``var_O`` have one row per replica and one column per class;
    classes are pooled.  Replicas are resampled for the standard error.
    """
    mu = np.asarray(mu, dtype=np.float64)
    var_O = np.asarray(var_O, dtype=np.float64)
    e = mu.shape[0]
    denom = var_O.mean()
    if not denom > 0:
        return GammaEstimate(math.inf, math.nan, True)
    value = mu.ravel().var(ddof=1) / denom
    stderr = math.nan
    if rng is not None and bootstrap > 1 and e > 1:
        boots = np.empty(bootstrap)
        for b in range(bootstrap):
            idx = rng.integers(0, e, e)
            boots[b] = mu[idx].ravel().var(ddof=1) / var_O[idx].mean()
        stderr = float(boots.std(ddof=1))
    return GammaEstimate(float(value), stderr, False)


@dataclass
class EnsembleResult:
    """Per-replica fractions and output moments plus ensemble summaries."""

    arch: ArchitectureSpec
    data: DataSpec
    master_seed: int
    fractions: np.ndarray          # E x N_c
    mu: np.ndarray                 # E x N_c data-mean of each output
    var_O: np.ndarray              # E x N_c data-variance of each output
    bins: int = 51
    precision: str = "single"
    gamma: GammaEstimate | None = None
    confidence: ConfidenceStats | None = None
    group_fractions: np.ndarray | None = None   # E x groups x N_c
    group_mu: np.ndarray | None = None
    group_var_O: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    @property
    def replicas(self) -> int:
        return self.fractions.shape[0]

    @property
    def f0(self) -> np.ndarray:
        return self.fractions[:, 0]

    @property
    def ranked(self) -> np.ndarray:
        return -np.sort(-self.fractions, axis=1)

    @property
    def mean_f(self) -> np.ndarray:
        return self.fractions.mean(axis=0)

    @property
    def std_f0(self) -> float:
        return float(self.f0.std(ddof=1)) if self.replicas > 1 else 0.0

    def histogram(self, ranked: bool = False):
        """Histogram of f_0 (or the largest fraction) on uniform bins over [0, 1].

        The last bin is closed on the right, so f = 1 is counted.
        """
        edges = np.linspace(0.0, 1.0, self.bins + 1)
        sample = self.ranked[:, 0] if ranked else self.f0
        counts, _ = np.histogram(sample, bins=edges)
        return edges, counts / self.replicas

    def extreme_mass(self, threshold: float = 0.05) -> float:
        from .compare import extreme_mass
        return extreme_mass(self.f0, threshold)

    def config(self) -> dict:
        return {"architecture": self.arch.to_dict(), "data": self.data.to_dict(),
                "master_seed": self.master_seed, "replicas": self.replicas,
                "precision": self.precision}

    def summary(self) -> dict:
        edges, mass = self.histogram()
        g = self.gamma
        return {
            "config": self.config(),
            "gamma": None if g is None or not math.isfinite(g.value) else g.value,
            "gamma_stderr": None if g is None or not math.isfinite(g.stderr) else g.stderr,
            "mean_f": self.mean_f.tolist(),
            "hist_edges": edges.tolist(),
            "hist_mass": mass.tolist(),
            "extreme_mass": self.extreme_mass(),
        }

    def write_csv(self, path) -> None:
        nc = self.fractions.shape[1]
        header = (["seed_index"] + [f"f_{c}" for c in range(nc)] + [f"mu_{c}" for c in range(nc)]
                  + [f"var_O_{c}" for c in range(nc)])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for i in range(self.replicas):
                w.writerow([i] + [repr(float(v)) for v in self.fractions[i]]
                           + [repr(float(v)) for v in self.mu[i]]
                           + [repr(float(v)) for v in self.var_O[i]])

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _replica(i, arch, data, policy, x, labels, dtype, batch_size, confidence, groups):
    weights = init_weights(arch, data.input_dim, policy.generator(i, STREAM_WEIGHTS))
    out = forward(weights, arch, x, batch_size=batch_size, dtype=dtype).values
    row = {"fractions": _argmax_counts(out) / out.shape[0],
           "mu": out.mean(axis=0), "var_O": out.var(axis=0)}
    if confidence:
        row["confidence"] = _confidence_row(out)
    if groups:
        gf, gm, gv = [], [], []
        for c in range(data.class_count):
            sub = out[labels == c]
            gf.append(_argmax_counts(sub) / sub.shape[0])
            gm.append(sub.mean(axis=0))
            gv.append(sub.var(axis=0))
        row["groups"] = (np.array(gf), np.array(gm), np.array(gv))
    return row


def run_ensemble(arch: ArchitectureSpec, data: DataSpec, replicas: int, master_seed: int, *,
                 threads: int = 1, bins: int = 51, precision: str = "single",
                 batch_size: int | None = None, confidence: bool = False,
                 group_stats: bool = False, bootstrap: int = 500) -> EnsembleResult:
    """Simulate ``replicas`` independently initialised networks on one dataset."""
    if replicas < 1:
        raise ConfigError("the ensemble needs at least one replica", "ensemble")
    if arch.class_count != data.class_count:
        raise ConfigError("architecture and data disagree on class_count", "class_count")
    if precision not in PRECISIONS:
        raise ConfigError(f"precision must be one of {sorted(PRECISIONS)}", "precision")
    if confidence and arch.class_count != 2:
        raise ConfigError("the confidence ratio is defined for two classes only", "class_count")
    if bins < 1:
        raise ConfigError("bins must be positive", "bins")
    policy = SeedPolicy(master_seed)
    dtype = PRECISIONS[precision]
    try:
        x, labels = generate_dataset(data, policy.generator(0, STREAM_DATA), dtype=dtype)
    except MemoryError as exc:
        raise EnsembleError("out of memory while generating the dataset", 0, replicas) from exc

    rows: list = []

    def task(i):
        return _replica(i, arch, data, policy, x, labels, dtype, batch_size, confidence, group_stats)

    # BLAS is pinned to one thread so results are bitwise independent of the
    # worker count; parallelism comes from running replicas concurrently.
    with threadpool_limits(limits=1):
        try:
            if threads <= 1:
                for i in range(replicas):
                    rows.append(task(i))
            else:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    for row in pool.map(task, range(replicas)):
                        rows.append(row)
        except MemoryError as exc:
            raise EnsembleError("out of memory during the ensemble", len(rows), replicas) from exc

    result = EnsembleResult(
        arch=arch, data=data, master_seed=int(master_seed),
        fractions=np.array([r["fractions"] for r in rows]),
        mu=np.array([r["mu"] for r in rows]),
        var_O=np.array([r["var_O"] for r in rows]),
        bins=bins, precision=precision)
    if confidence:
        result.confidence = ConfidenceStats(*np.array([r["confidence"] for r in rows]).T)
    if group_stats:
        result.group_fractions = np.array([r["groups"][0] for r in rows])
        result.group_mu = np.array([r["groups"][1] for r in rows])
        result.group_var_O = np.array([r["groups"][2] for r in rows])
    result.gamma = gamma_from_moments(result.mu, result.var_O,
                                      policy.generator(0, STREAM_BOOTSTRAP), bootstrap)
    return result


def estimate_gamma(arch: ArchitectureSpec, data: DataSpec, replicas: int, master_seed: int,
                   **kwargs) -> GammaEstimate:
    """Empirical variance ratio of an ensemble (needs at least 30 replicas)."""
    if replicas < 30:
        raise ConfigError("estimating gamma needs at least 30 replicas", "ensemble")
    return run_ensemble(arch, data, replicas, master_seed, **kwargs).gamma


@dataclass(frozen=True)
class BiasCheckReport:
    """Whether the class subgroups of the data share the same favoured class."""

    agreement_rate: float
    group_gamma: tuple[float, ...]
    gamma_ratio: float
    replicas: int

    def to_dict(self) -> dict:
        return {"agreement_rate": self.agreement_rate, "group_gamma": list(self.group_gamma),
                "gamma_ratio": self.gamma_ratio, "replicas": self.replicas}


def bias_check_from_ensemble(result: EnsembleResult) -> BiasCheckReport:
    if result.group_fractions is None:
        raise ConfigError("the ensemble was run without subgroup statistics", "group_stats")
    majority = np.argmax(result.group_fractions, axis=2)       # E x groups
    agree = np.all(majority == majority[:, :1], axis=1)
    gammas = tuple(gamma_from_moments(result.group_mu[:, g, :], result.group_var_O[:, g, :]).value
                   for g in range(result.group_mu.shape[1]))
    return BiasCheckReport(float(agree.mean()), gammas, max(gammas) / min(gammas), result.replicas)


def per_class_bias_check(arch: ArchitectureSpec, data: DataSpec, replicas: int,
                         master_seed: int, **kwargs) -> BiasCheckReport:
    """Check that data subgroups with different variances lean to the same class.

    Each class of the data is a subgroup; for every replica the majority
    class predicted within each subgroup is compared, and the subgroup
    variance ratios are estimated separately.
    """
    if data.class_count != 2:
        raise ConfigError("the subgroup bias check is defined for two classes", "class_count")
    result = run_ensemble(arch, data, replicas, master_seed, group_stats=True, **kwargs)
    return bias_check_from_ensemble(result)
