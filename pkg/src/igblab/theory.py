"""Analytic distribution of the class fraction f_0 over random initialisations.

Pipeline: hidden-node cumulants over the data (``rho_stats``) give the
output cumulants ``var_mu`` (variance over weights of an output's data
mean) and ``var_O`` (data variance of an output).  The difference of two
independent output centres is Normal(0, 2 var_mu) and fixes f_0 through
f_0 = 1/2 + 1/2 erf(delta_mu / (2 sigma_inf)), sigma_inf = sqrt(var_O).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, NumericalError
from .mathkit import (DEFAULT_QUADRATURE, INV_SQRT_2PI, SQRT_PI, QuadratureSpec, erf,
                      erf_inv, integrate, nodes_and_weights, normal_cdf, normal_pdf,
                      rectified_gaussian_moments)
from .netsim import ACTIVATIONS, ArchitectureSpec, DataSpec

CLOSED_FORM = "closed-form"
QUADRATURE = "quadrature"

CLOSED_FORM_TOLERANCE = 1e-9
QUADRATURE_TOLERANCE = 1e-6


@dataclass(frozen=True)
class RhoCumulants:
    """Data statistics of one pooled hidden node.

    ``mean_rho`` is the data mean averaged over weights, ``mean_rho_sq``
    the weight average of the squared data mean (they differ when an input
    offset spreads node means across weights) and ``var_rho`` the weight
    average of the data variance.
    """

    mean_rho: float
    var_rho: float
    provenance: str
    mean_rho_sq: float | None = None

    def __post_init__(self):
        if self.mean_rho_sq is None:
            object.__setattr__(self, "mean_rho_sq", self.mean_rho ** 2)

    @property
    def tolerance(self) -> float:
        return CLOSED_FORM_TOLERANCE if self.provenance == CLOSED_FORM else QUADRATURE_TOLERANCE

    @property
    def rms_mean(self) -> float:
        return math.sqrt(max(self.mean_rho_sq, 0.0))


@dataclass(frozen=True)
class OutputCumulants:
    """Variance of output centres over weights and output variance over data."""

    var_mu: float
    var_O: float

    def __post_init__(self):
        if not (self.var_mu >= 0 and math.isfinite(self.var_mu)):
            raise NumericalError(f"invalid centre variance {self.var_mu!r}")
        if not (self.var_O >= 0 and math.isfinite(self.var_O)):
            raise NumericalError(f"invalid output variance {self.var_O!r}")

    @property
    def sigma_inf(self) -> float:
        return math.sqrt(self.var_O)

    @property
    def strong(self) -> bool:
        """True when the output variance vanishes: every network picks one class."""
        return self.var_O == 0 and self.var_mu > 0

    @property
    def gamma(self) -> float:
        if self.var_O == 0:
            return math.inf if self.var_mu > 0 else 0.0
        return self.var_mu / self.var_O


# --- single node statistics ---------------------------------------------------

def _node_moments(activation: str, m, v: float, gain: float, quad: QuadratureSpec):
    """Data mean and second moment of g(h) for h ~ Normal(m, v), per node mean m."""
    m = np.asarray(m, dtype=np.float64)
    if activation == "linear":
        return m, m * m + v
    if activation in ("relu", "srelu"):
        first, second = rectified_gaussian_moments(m, np.full_like(m, v))
        if activation == "srelu":
            c = gain * INV_SQRT_2PI
            second = second - 2 * c * first + c * c
            first = first - c
        return first, second
    if activation == "tanh":
        z, w = nodes_and_weights(quad, -quad.truncation_radius, quad.truncation_radius)
        w = w * normal_pdf(z)
        t = np.tanh(m[..., None] + math.sqrt(v) * z)
        return t @ w, (t * t) @ w
    raise ConfigError(f"unknown activation {activation!r}", "activation")


def _max_density_moments(activation: str, kernel: int, sd: float, gain: float,
                         quad: QuadratureSpec):
    """Mean and second moment of g(max of k iid Normal(0, sd^2)).

    Every supported activation is nondecreasing, so the pooled maximum of
    activated nodes equals the activation of the maximum.
    """
    lo = -quad.truncation_radius * sd
    hi = max(quad.truncation_radius * sd, sd * (math.sqrt(2.0 * math.log(kernel)) + 4.0))

    def density(y):
        return kernel * normal_pdf(y, 0.0, sd * sd) * normal_cdf(y, 0.0, sd * sd) ** (kernel - 1)

    def g(y):
        if activation == "linear":
            return y
        if activation == "relu":
            return np.maximum(y, 0.0)
        if activation == "srelu":
            return np.maximum(y, 0.0) - gain * INV_SQRT_2PI
        return np.tanh(y)

    # Split at the kink of the rectifiers so each piece is smooth.
    pieces = [(lo, 0.0), (0.0, hi)]
    first = sum(integrate(lambda y: g(y) * density(y), quad, lower=a, upper=b) for a, b in pieces)
    second = sum(integrate(lambda y: g(y) ** 2 * density(y), quad, lower=a, upper=b)
                 for a, b in pieces)
    return first, second


def rho_stats(activation: str, pooling: str = "none", kernel: int = 1,
              gain: float = math.sqrt(2.0), offset: float = 0.0,
              quad: QuadratureSpec = DEFAULT_QUADRATURE, input_variance: float = 1.0,
              offset_mean_square: float | None = None) -> RhoCumulants:
    """Cumulants of a first-layer hidden node after activation and pooling.

    The pre-activation of a node is Normal(m, gain^2 * input_variance) over
    the data with m ~ Normal(0, gain^2 * mean(K^2)) over weights.
    """
    if activation not in ACTIVATIONS:
        raise ConfigError(f"unknown activation {activation!r}", "activation")
    pooling = "average" if pooling == "avg" else pooling
    if pooling not in ("none", "max", "average"):
        raise ConfigError(f"unknown pooling {pooling!r}", "pooling")
    if not gain > 0:
        raise ConfigError("gain must be positive", "gain")
    k2 = float(offset) ** 2 if offset_mean_square is None else float(offset_mean_square)
    sd = gain * math.sqrt(input_variance)
    v = sd * sd
    spread = gain * gain * k2
    if pooling != "none" and kernel > 1 and spread > 0:
        raise ConfigError("pooling theory is available only for a zero offset", "offset")

    if pooling == "max" and kernel > 1:
        first, second = _max_density_moments(activation, int(kernel), sd, gain, quad)
        return RhoCumulants(first, second - first * first, QUADRATURE)

    if spread == 0:
        if activation == "linear":
            base = RhoCumulants(0.0, v, CLOSED_FORM)
        elif activation in ("relu", "srelu"):
            first = sd * INV_SQRT_2PI
            if activation == "srelu":
                first = first - gain * INV_SQRT_2PI
            base = RhoCumulants(first, v * (math.pi - 1.0) / (2.0 * math.pi), CLOSED_FORM)
        else:
            # tanh is odd, so its mean over a centred Gaussian is exactly zero.
            _, second = _node_moments("tanh", np.zeros(1), v, gain, quad)
            base = RhoCumulants(0.0, float(second[0]), QUADRATURE)
    else:
        mean_rho = integrate(lambda m: _node_moments(activation, m, v, gain, quad)[0],
                             quad, weight=(0.0, spread))
        mean_sq = integrate(lambda m: _node_moments(activation, m, v, gain, quad)[0] ** 2,
                            quad, weight=(0.0, spread))
        def spread_var(m):
            first, second = _node_moments(activation, m, v, gain, quad)
            return second - first * first

        var_rho = integrate(spread_var, quad, weight=(0.0, spread))
        provenance = CLOSED_FORM if activation == "linear" else QUADRATURE
        if activation == "linear":
            mean_rho, mean_sq, var_rho = 0.0, spread, v
        elif activation == "tanh":
            mean_rho = 0.0
        base = RhoCumulants(mean_rho, var_rho, provenance, mean_sq)

    if pooling == "average" and kernel > 1:
        # Distinct first-layer nodes decorrelate as the input dimension grows,
        # so averaging k of them divides the data variance by k.
        return RhoCumulants(base.mean_rho, base.var_rho / kernel, base.provenance, base.mean_rho_sq)
    return base


def classify_igb(activation: str, pooling: str = "none", kernel: int = 1,
                 gain: float = math.sqrt(2.0), offset: float = 0.0,
                 quad: QuadratureSpec = DEFAULT_QUADRATURE) -> str:
    """'present' when hidden nodes have a nonzero data mean, else 'absent'."""
    rho = rho_stats(activation, pooling, kernel, gain, offset, quad)
    return "present" if rho.rms_mean > rho.tolerance else "absent"


def output_cumulants_single_layer(rho: RhoCumulants, gain: float,
                                  dataset_size: int | None = None) -> OutputCumulants:
    """Output cumulants of a one-hidden-layer network.

    When the node mean vanishes and ``dataset_size`` is given, the centre
    variance falls back to the finite-sample term gain^2 * var_rho / D.
    """
    g2 = gain * gain
    var_mu = g2 * rho.mean_rho_sq
    if dataset_size is not None and rho.rms_mean <= rho.tolerance:
        var_mu = g2 * rho.var_rho / dataset_size
    return OutputCumulants(var_mu, g2 * rho.var_rho)


def srelu_residual_mean_square(gain: float, input_dim: int, kernel: int = 1) -> float:
    """Weight average of the squared data mean of an (average-pooled) srelu node.

    srelu subtracts the rectified mean for the expected weight norm.  A node
    with weight norm |w| = gain * chi_d / sqrt(d) keeps the data mean
    gain * (chi_d / sqrt(d) - 1) / sqrt(2 pi), which vanishes only as d grows.
    Averaging ``kernel`` independent nodes divides its fluctuating part by k.
    """
    if input_dim < 1:
        raise ConfigError("input_dim must be positive", "input_dim")
    d = float(input_dim)
    if d > 300:
        # Asymptotic series of 1 - E[chi_d]/sqrt(d); avoids cancellation at large d.
        shortfall = 1 / (4 * d) - 1 / (32 * d ** 2) - 5 / (128 * d ** 3) + 21 / (2048 * d ** 4)
    else:
        mean_chi = math.sqrt(2.0) * math.exp(math.lgamma((d + 1) / 2) - math.lgamma(d / 2))
        shortfall = 1.0 - mean_chi / math.sqrt(d)
    mean_r = -gain * shortfall * INV_SQRT_2PI
    mean_sq_r = gain * gain * 2.0 * shortfall / (2.0 * math.pi)
    return (mean_sq_r - mean_r ** 2) / kernel + mean_r ** 2


def standardization_cumulants_linear(offset, gain: float) -> OutputCumulants:
    """Linear one-layer network on inputs shifted by K: gamma = mean(K^2)."""
    k2 = float(np.mean(np.square(offset)))
    g4 = gain ** 4
    return OutputCumulants(g4 * k2, g4)


# --- the f_0 map -------------------------------------------------------------

def delta_mu_of_f0(f0, sigma_inf: float):
    """Centre difference that yields class-0 fraction f0."""
    f = np.asarray(f0, dtype=np.float64)
    if np.any(~(f > 0)) or np.any(~(f < 1)):
        raise DomainError("f0 must lie strictly between 0 and 1")
    out = 2.0 * sigma_inf * erf_inv(2.0 * f - 1.0)
    return float(out) if np.ndim(out) == 0 else out


def f0_of_delta_mu(delta_mu, sigma_inf: float):
    """Class-0 fraction for a centre difference delta_mu."""
    out = 0.5 + 0.5 * erf(np.asarray(delta_mu, dtype=np.float64) / (2.0 * sigma_inf))
    return float(out) if np.ndim(out) == 0 else out


def delta_mu_jacobian(delta_mu, sigma_inf: float):
    """d(delta_mu)/d(f0) expressed at delta_mu."""
    d = np.asarray(delta_mu, dtype=np.float64)
    return 2.0 * sigma_inf * SQRT_PI * np.exp((d / (2.0 * sigma_inf)) ** 2)


@dataclass
class TheoryCurve:
    """Distribution of f_0: a density on a grid plus point masses.

    ``cdf`` holds the right-continuous distribution function at the grid
    points (point masses below a grid point are included).
    """

    f0: np.ndarray
    pdf: np.ndarray
    cdf: np.ndarray
    atoms: tuple[tuple[float, float], ...]
    var_mu: float = 0.0
    var_O: float = 0.0
    no_igb: bool = False
    config: dict = field(default_factory=dict)

    def _continuous(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.f0.size == 0:
            return np.zeros_like(x)
        below = sum(m for a, m in self.atoms if a <= self.f0[0])
        cont = self.cdf - below
        return np.interp(x, self.f0, cont, left=0.0, right=float(cont[-1]))

    def cdf_at(self, x):
        """P(f_0 <= x)."""
        x = np.asarray(x, dtype=np.float64)
        out = self._continuous(x) + sum(m * (x >= a) for a, m in self.atoms)
        return float(out) if out.ndim == 0 else out

    def cdf_left(self, x):
        """P(f_0 < x)."""
        x = np.asarray(x, dtype=np.float64)
        out = self._continuous(x) + sum(m * (x > a) for a, m in self.atoms)
        return float(out) if out.ndim == 0 else out

    @property
    def atom_mass(self) -> float:
        return float(sum(m for _, m in self.atoms))

    @property
    def continuous_mass(self) -> float:
        return float(self._continuous(np.inf)) if self.f0.size else 0.0

    def total_mass(self) -> float:
        return self.continuous_mass + self.atom_mass

    def point_mass(self, location: float) -> float:
        return float(sum(m for a, m in self.atoms if a == location))

    def mean(self) -> float:
        """Expected f_0; the continuous part is integrated by parts on the CDF."""
        total = sum(a * m for a, m in self.atoms)
        if self.f0.size:
            cont = self._continuous(self.f0)
            total += self.f0[-1] * cont[-1] - np.trapezoid(cont, self.f0)
        return float(total)

    def extreme_mass(self, threshold: float = 0.05) -> float:
        """Probability that f_0 lies outside [threshold, 1 - threshold]."""
        return float(self.cdf_left(threshold) + 1.0 - self.cdf_at(1.0 - threshold))

    def _knots(self):
        xs = list(self.f0) + [a for a, _ in self.atoms]
        xs = np.unique(np.asarray(xs, dtype=np.float64))
        return xs, self.cdf_left(xs), self.cdf_at(xs)

    def quantile(self, u):
        """Generalised inverse of the CDF: smallest x with F(x) >= u."""
        u = np.asarray(u, dtype=np.float64)
        xs, fl, fr = self._knots()
        k = np.minimum(np.searchsorted(fr, u, side="left"), len(xs) - 1)
        prev = np.maximum(k - 1, 0)
        at_knot = (u > fl[k]) | (k == 0)
        span = fl[k] - fr[prev]
        frac = np.where(span > 0, (u - fr[prev]) / np.where(span > 0, span, 1.0), 1.0)
        inside = xs[prev] + np.clip(frac, 0.0, 1.0) * (xs[k] - xs[prev])
        return np.where(at_knot, xs[k], inside)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.quantile(rng.random(n))

    def header(self) -> dict:
        return {"config": self.config, "var_mu": self.var_mu, "var_O": self.var_O,
                "gamma": (self.var_mu / self.var_O) if self.var_O > 0 else None,
                "no_igb": self.no_igb,
                "point_mass_0": self.point_mass(0.0), "point_mass_1": self.point_mass(1.0)}

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["f0", "pdf", "cdf"])
            if self.no_igb:
                w.writerow([repr(0.5), "inf", repr(1.0)])
            for x, p, c in zip(self.f0, self.pdf, self.cdf):
                w.writerow([repr(float(x)), repr(float(p)), repr(float(c))])

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.header(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _resolution_threshold(sigma_inf: float, dataset_size: int) -> float:
    """Centre difference below which fewer than one datapoint goes to class 0."""
    if dataset_size < 2:
        raise DomainError("dataset_size must be at least 2")
    return 2.0 * sigma_inf * erf_inv(2.0 / dataset_size - 1.0)


GRID_SPREADS = 12.0


def _delta_grid(sigma_inf: float, dataset_size: int, points: int, reach: float):
    """Grid uniform in delta_mu over the resolved range, capped at ``reach``.

    The cap keeps a narrow centre-difference law resolved by the grid; the
    mass beyond it is below 1e-30.
    """
    if points < 3:
        raise DomainError("the grid needs at least three points")
    t = _resolution_threshold(sigma_inf, dataset_size)
    if not t < 0:
        raise DomainError("dataset_size too small to resolve any class fraction")
    t = max(t, -reach)
    delta = t * np.linspace(1.0, -1.0, points)
    # Exact antisymmetry keeps the curve symmetric about f0 = 1/2.
    delta = 0.5 * (delta - delta[::-1])
    return t, delta


def _grid_f0(delta, t: float, sigma_inf: float, dataset_size: int) -> np.ndarray:
    """Map the delta grid to f0, pinning endpoints that sit on the resolution limit."""
    f0 = f0_of_delta_mu(delta, sigma_inf)
    if delta[0] == t:
        f0[0], f0[-1] = 1.0 / dataset_size, 1.0 - 1.0 / dataset_size
    return f0


def _point_mass_curve(location: float, config: dict, var_O: float) -> TheoryCurve:
    empty = np.empty(0)
    return TheoryCurve(empty, empty, empty, ((location, 1.0),), 0.0, var_O, True, config)


def pdf_f0(cumulants: OutputCumulants, dataset_size: int, points: int = 2001,
           config: dict | None = None) -> TheoryCurve:
    """Density of f_0 on a grid uniform in delta_mu, with resolution point masses.

    A centre difference beyond the threshold where fewer than one of D
    points changes class puts the whole dataset in one class, which shows
    up as point masses at f_0 = 0 and f_0 = 1.
    """
    config = dict(config or {})
    if cumulants.var_mu == 0:
        return _point_mass_curve(0.5, config, cumulants.var_O)
    if cumulants.var_O == 0:
        return TheoryCurve(np.empty(0), np.empty(0), np.empty(0), ((0.0, 0.5), (1.0, 0.5)),
                           cumulants.var_mu, 0.0, False, config)
    s_inf = cumulants.sigma_inf
    spread = 2.0 * cumulants.var_mu
    t = _resolution_threshold(s_inf, dataset_size)
    _, delta = _delta_grid(s_inf, dataset_size, points, GRID_SPREADS * math.sqrt(spread))
    f0 = _grid_f0(delta, t, s_inf, dataset_size)
    pdf = normal_pdf(delta, 0.0, spread) * delta_mu_jacobian(delta, s_inf)
    cdf = normal_cdf(delta, 0.0, spread)
    mass0 = float(normal_cdf(t, 0.0, spread))
    mass1 = mass0  # by symmetry; avoids forming 1 - cdf
    return TheoryCurve(f0, pdf, cdf, ((0.0, mass0), (1.0, mass1)),
                       cumulants.var_mu, cumulants.var_O, False, config)


def binary_interval_mass(cumulants: OutputCumulants, a: float, b: float) -> float:
    """Probability that f_0 falls in (a, b) for 0 < a < b < 1, ignoring resolution."""
    s = 2.0 * math.sqrt(cumulants.var_mu)
    da = delta_mu_of_f0(a, cumulants.sigma_inf)
    db = delta_mu_of_f0(b, cumulants.sigma_inf)
    return 0.5 * erf(db / s) - 0.5 * erf(da / s)


# --- multi-class --------------------------------------------------------------

def _max_of_gaussians_nodes(count: int, var_mu: float, quad: QuadratureSpec):
    """Quadrature nodes and weights for the max of ``count`` Normal(0, var_mu) draws."""
    s = math.sqrt(var_mu)
    lo = -quad.truncation_radius * s
    hi = max(quad.truncation_radius * s, s * (math.sqrt(2.0 * math.log(max(count, 1))) + 4.0))
    y, w = nodes_and_weights(quad, lo, hi)
    dens = count * normal_pdf(y, 0.0, var_mu) * normal_cdf(y, 0.0, var_mu) ** (count - 1)
    return y, w * dens


def multiclass_pdf_f0(class_count: int, var_mu: float, var_O: float, dataset_size: int,
                      points: int = 2001, quad: QuadratureSpec = DEFAULT_QUADRATURE,
                      config: dict | None = None) -> TheoryCurve:
    """Approximate f_0 law when class 0 competes with the strongest other class.

    The centre difference is mu_0 minus the maximum of the other
    ``class_count - 1`` centres; it is mapped to f_0 with the two-class map.
    """
    if class_count < 2:
        raise DomainError("class_count must be at least 2")
    config = dict(config or {})
    if var_mu == 0:
        return _point_mass_curve(0.5, config, var_O)
    if var_O <= 0:
        raise DomainError("var_O must be positive")
    s_inf = math.sqrt(var_O)
    y, wy = _max_of_gaussians_nodes(class_count - 1, var_mu, quad)
    t = _resolution_threshold(s_inf, dataset_size)
    reach = math.sqrt(var_mu) * (GRID_SPREADS + math.sqrt(2.0 * math.log(class_count - 1)))
    _, delta = _delta_grid(s_inf, dataset_size, points, reach)
    # Delta = mu_0 - Y with mu_0 ~ Normal(0, var_mu) independent of Y.
    arg = delta[:, None] + y[None, :]
    dens = normal_pdf(arg, 0.0, var_mu) @ wy
    cdf = normal_cdf(arg, 0.0, var_mu) @ wy
    mass0 = float(normal_cdf(t + y, 0.0, var_mu) @ wy)
    mass1 = float(normal_cdf(t - y, 0.0, var_mu) @ wy)
    f0 = _grid_f0(delta, t, s_inf, dataset_size)
    pdf = dens * delta_mu_jacobian(delta, s_inf)
    return TheoryCurve(f0, pdf, cdf, ((0.0, mass0), (1.0, mass1)), var_mu, var_O, False, config)


# --- depth -------------------------------------------------------------------

@dataclass(frozen=True)
class LayerCumulants:
    layer: int
    var_mu_h: float
    var_h: float

    @property
    def gamma(self) -> float:
        return self.var_mu_h / self.var_h


@dataclass(frozen=True)
class LayerCumulantsTrace:
    """Per-layer cumulants h^1 ... h^(L+1); the last entry is the output layer."""

    entries: tuple[LayerCumulants, ...]

    @property
    def gammas(self) -> np.ndarray:
        return np.array([e.gamma for e in self.entries])

    @property
    def output(self) -> OutputCumulants:
        last = self.entries[-1]
        return OutputCumulants(last.var_mu_h, last.var_h)


def depth_recursion(gain: float, depth: int, quad: QuadratureSpec = DEFAULT_QUADRATURE,
                    activation: str = "relu", offset_mean_square: float = 0.0,
                    input_variance: float = 1.0) -> LayerCumulantsTrace:
    """Propagate (variance of node means, data variance) through a deep ReLU net.

    Each step averages the rectified-Gaussian moments of a node over its
    mean m ~ Normal(0, previous centre variance):
        var_mu' = gain^2 E[mu_g(m)^2],  var_h' = gain^2 E[s_g(m) - mu_g(m)^2].
    """
    if activation != "relu":
        raise ConfigError("the depth recursion is implemented for relu only", "activation")
    if depth < 1:
        raise ConfigError("depth must be at least 1", "depth")
    g2 = gain * gain
    var_mu, var_h = g2 * offset_mean_square, g2 * input_variance
    entries = [LayerCumulants(1, var_mu, var_h)]
    for layer in range(2, depth + 2):
        try:
            if var_mu == 0:
                first, second = rectified_gaussian_moments(0.0, var_h)
                new_mu, new_h = g2 * first * first, g2 * (second - first * first)
            else:
                def moments(m, v=var_h):
                    return rectified_gaussian_moments(m, np.full_like(m, v))
                new_mu = g2 * integrate(lambda m: moments(m)[0] ** 2, quad, weight=(0.0, var_mu))
                new_h = g2 * integrate(lambda m: moments(m)[1] - moments(m)[0] ** 2, quad,
                                       weight=(0.0, var_mu))
        except (NumericalError, DomainError) as exc:
            raise NumericalError(f"depth recursion failed at layer {layer}: {exc}") from exc
        if not (new_h > 0 and math.isfinite(new_mu)):
            raise NumericalError(f"depth recursion lost positivity at layer {layer}")
        var_mu, var_h = new_mu, new_h
        entries.append(LayerCumulants(layer, var_mu, var_h))
    return LayerCumulantsTrace(tuple(entries))


# --- confidence ratio ---------------------------------------------------------

def confidence_stats_theory(delta_mu: float, var_O: float) -> tuple[float, float]:
    """Mean and variance of exp(O_0 - O_1) for independent outputs over the data."""
    if var_O < 0:
        raise DomainError("var_O must be non-negative")
    mean = math.exp(delta_mu + var_O)
    var = math.exp(2 * delta_mu) * math.expm1(2 * var_O) * math.exp(2 * var_O)
    return mean, var


# --- configuration dispatch ---------------------------------------------------

def _check_theory_scope(arch: ArchitectureSpec, data: DataSpec) -> float:
    if arch.bias_mode != "zero":
        raise ConfigError("the analytic pipeline assumes zero biases", "bias_mode")
    if len(set(data.class_variances)) != 1:
        raise ConfigError("the analytic pipeline assumes equal class variances",
                          "class_variances")
    if arch.depth < 1:
        raise ConfigError("the analytic pipeline needs at least one hidden layer", "depth")
    if arch.class_count != data.class_count:
        raise ConfigError("architecture and data disagree on class_count", "class_count")
    return data.class_variances[0]


def theory_cumulants(arch: ArchitectureSpec, data: DataSpec,
                     quad: QuadratureSpec = DEFAULT_QUADRATURE,
                     finite_size: bool = False) -> OutputCumulants:
    """Output cumulants for a configuration, or ConfigError if out of scope."""
    variance = _check_theory_scope(arch, data)
    k2 = data.offset_mean_square()
    if arch.depth == 1:
        rho = rho_stats(arch.activation, arch.pooling, arch.kernel, arch.gain,
                        quad=quad, input_variance=variance, offset_mean_square=k2)
        cum = output_cumulants_single_layer(rho, arch.gain,
                                            data.dataset_size if finite_size else None)
        if finite_size and arch.activation == "srelu" and rho.rms_mean <= rho.tolerance:
            kernel = arch.kernel if arch.pooling == "average" else 1
            extra = arch.gain ** 2 * srelu_residual_mean_square(arch.gain, data.input_dim, kernel)
            cum = OutputCumulants(cum.var_mu + extra, cum.var_O)
        return cum
    if arch.activation != "relu" or (arch.pooling != "none" and arch.kernel > 1):
        raise ConfigError("deep networks are covered analytically for relu without pooling",
                          "depth")
    return depth_recursion(arch.gain, arch.depth, quad, offset_mean_square=k2,
                           input_variance=variance).output


def theory_config(arch: ArchitectureSpec, data: DataSpec) -> dict:
    return {"architecture": arch.to_dict(), "data": data.to_dict()}


def theory_curve(arch: ArchitectureSpec, data: DataSpec,
                 quad: QuadratureSpec = DEFAULT_QUADRATURE, points: int = 2001,
                 finite_size: bool = False) -> TheoryCurve:
    """f_0 distribution for a configuration (two-class or multi-class)."""
    cum = theory_cumulants(arch, data, quad, finite_size)
    config = theory_config(arch, data)
    if arch.class_count == 2:
        return pdf_f0(cum, data.dataset_size, points, config)
    return multiclass_pdf_f0(arch.class_count, cum.var_mu, cum.var_O, data.dataset_size,
                             points, quad, config)
