"""Special functions, Gaussian quadrature and reproducible random streams.

The error function is evaluated with the rational approximations of the
FreeBSD/Sun ``s_erf.c`` routine, vectorised over numpy arrays.  Its
coefficients carry the original notice:

    Copyright (C) 1993 by Sun Microsystems, Inc. All rights reserved.
    Developed at SunSoft, a Sun Microsystems, Inc. business.
    Permission to use, copy, modify, and distribute this
    software is freely granted, provided that this notice
    is preserved.

The inverse error function starts from a low-order polynomial estimate
and is polished by Newton iterations against :func:`erf`/:func:`erfc`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ConfigError, DomainError, NumericalError

SQRT_PI = math.sqrt(math.pi)
SQRT_2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# --- error function coefficients -------------------------------------------

_ERX = 8.45062911510467529297e-01
_EFX = 1.28379167095512586316e-01
_PP = (1.28379167095512558561e-01, -3.25042107247001499370e-01,
       -2.84817495755985104766e-02, -5.77027029648944159157e-03,
       -2.37630166566501626084e-05)
_QQ = (1.0, 3.97917223959155352819e-01, 6.50222499887672944485e-02,
       5.08130628187576562776e-03, 1.32494738004321644526e-04,
       -3.96022827877536812320e-06)
_PA = (-2.36211856075265944077e-03, 4.14856118683748331666e-01,
       -3.72207876035701323847e-01, 3.18346619901161753674e-01,
       -1.10894694282396677476e-01, 3.54783043256182359371e-02,
       -2.16637559486879084300e-03)
_QA = (1.0, 1.06420880400844228286e-01, 5.40397917702171048937e-01,
       7.18286544141962662868e-02, 1.26171219808761642112e-01,
       1.36370839120290507362e-02, 1.19844998467991074170e-02)
_RA = (-9.86494403484714822705e-03, -6.93858572707181764372e-01,
       -1.05586262253232909814e+01, -6.23753324503260060396e+01,
       -1.62396669462573470355e+02, -1.84605092906711035994e+02,
       -8.12874355063065934246e+01, -9.81432934416914548592e+00)
_SA = (1.0, 1.96512716674392571292e+01, 1.37657754143519042600e+02,
       4.34565877475229228821e+02, 6.45387271733267880336e+02,
       4.29008140027567833386e+02, 1.08635005541779435134e+02,
       6.57024977031928170135e+00, -6.04244152148580987438e-02)
_RB = (-9.86494292470009928597e-03, -7.99283237680523006574e-01,
       -1.77579549177547519889e+01, -1.60636384855821916062e+02,
       -6.37566443368389627722e+02, -1.02509513161107724954e+03,
       -4.83519191608651397019e+02)
_SB = (1.0, 3.03380607434824582924e+01, 3.25792512996573918826e+02,
       1.53672958608443695994e+03, 3.19985821950859553908e+03,
       2.55305040643316442583e+03, 4.74528541206955367215e+02,
       -2.24409524465858183362e+01)


def _poly(coeffs, z):
    # Horner evaluation, lowest-order coefficient first.
    acc = np.full_like(z, coeffs[-1])
    for c in reversed(coeffs[:-1]):
        acc = acc * z + c
    return acc


def _as_float_array(x):
    arr = np.asarray(x, dtype=np.float64)
    return arr, arr.ndim == 0


def _tail_r(ax):
    """exp(-x^2) * R(1/x^2) / x for 1.25 <= x < 28, i.e. erfc(x) for x > 0."""
    s = 1.0 / (ax * ax)
    near = ax < 1.0 / 0.35
    num = np.where(near, _poly(_RA, s), _poly(_RB, s))
    den = np.where(near, _poly(_SA, s), _poly(_SB, s))
    # Split x into a high part with a short mantissa so exp(-x^2) keeps
    # full relative accuracy.
    z = (ax.view(np.uint64) & np.uint64(0xFFFFFFFF00000000)).view(np.float64)
    r = np.exp(-z * z - 0.5625) * np.exp((z - ax) * (z + ax) + num / den)
    return r / ax


def _erf_erfc(x):
    """Return (erf(x), erfc(x)) elementwise for a float64 array."""
    x = np.atleast_1d(x)
    ax = np.abs(x)
    sign = np.sign(x)
    erf_v = np.empty_like(x)
    erfc_v = np.empty_like(x)

    small = ax < 0.84375
    if small.any():
        xs = x[small]
        z = xs * xs
        y = _poly(_PP, z) / _poly(_QQ, z)
        e = xs + xs * y
        erf_v[small] = e
        # For 1/4 <= x the direct 1 - erf loses bits; regroup around 1/2.
        erfc_v[small] = np.where(xs < 0.25, 1.0 - e, 0.5 - ((xs - 0.5) + xs * y))

    mid = (ax >= 0.84375) & (ax < 1.25)
    if mid.any():
        s = ax[mid] - 1.0
        pq = _poly(_PA, s) / _poly(_QA, s)
        sg = sign[mid]
        erf_v[mid] = sg * (_ERX + pq)
        erfc_v[mid] = np.where(sg > 0, 1.0 - _ERX - pq, 1.0 + _ERX + pq)

    tail = (ax >= 1.25) & (ax < 28.0)
    if tail.any():
        r = _tail_r(ax[tail])
        sg = sign[tail]
        erf_v[tail] = sg * (1.0 - r)
        erfc_v[tail] = np.where(sg > 0, r, 2.0 - r)

    far = ax >= 28.0
    if far.any():
        sg = sign[far]
        erf_v[far] = sg
        erfc_v[far] = np.where(sg > 0, 0.0, 2.0)

    nan = np.isnan(x)
    erf_v[nan] = np.nan
    erfc_v[nan] = np.nan
    return erf_v, erfc_v


def erf(x):
    """Error function, accurate to about one unit in the last place.

    Accepts scalars or arrays; a scalar input returns a Python float.
    """
    arr, scalar = _as_float_array(x)
    out = _erf_erfc(arr.ravel())[0].reshape(arr.shape)
    return float(out) if scalar else out


def erfc(x):
    """Complementary error function 1 - erf(x) without cancellation."""
    arr, scalar = _as_float_array(x)
    out = _erf_erfc(arr.ravel())[1].reshape(arr.shape)
    return float(out) if scalar else out


def _erf_inv_guess(p):
    # Single-precision polynomial estimate in the variable w = -log(1 - p^2).
    w = -np.log((1.0 - p) * (1.0 + p))
    central = w < 5.0
    wc = w - 2.5
    pc = np.full_like(p, 2.81022636e-08)
    for c in (3.43273939e-07, -3.5233877e-06, -4.39150654e-06, 0.00021858087,
              -0.00125372503, -0.00417768164, 0.246640727, 1.50140941):
        pc = c + pc * wc
    wt = np.sqrt(np.where(central, 5.0, w)) - 3.0
    pt = np.full_like(p, -0.000200214257)
    for c in (0.000100950558, 0.00134934322, -0.00367342844, 0.00573950773,
              -0.0076224613, 0.00943887047, 1.00167406, 2.83297682):
        pt = c + pt * wt
    return np.where(central, pc, pt) * p


def erf_inv(p, newton_steps: int = 3):
    """Inverse error function on (-1, 1).

    Raises DomainError when any |p| >= 1 or p is not finite.
    """
    arr, scalar = _as_float_array(p)
    if not np.all(np.isfinite(arr)) or np.any(np.abs(arr) >= 1.0):
        raise DomainError("erf_inv requires |p| < 1")
    flat = arr.ravel()
    # Solve for |p| and restore the sign, so tails use erfc of a positive
    # argument where it is accurate.
    ap = np.abs(flat)
    x = _erf_inv_guess(ap)
    q = 1.0 - ap  # exact for |p| >= 1/2
    # At least ``newton_steps`` iterations; continue while the far tail,
    # where the starting polynomial is least accurate, still moves.
    for it in range(60):
        e, ec = _erf_erfc(x)
        # Residual erf(x) - |p|, taken through erfc near the tail where
        # 1 - |p| is known exactly but erf(x) - |p| would cancel.
        resid = np.where(ap > 0.5, q - ec, e - ap)
        deriv = 2.0 / SQRT_PI * np.exp(-x * x)
        step = resid / deriv
        # Halley correction: f''/f' = -2x.
        delta = step / (1.0 + x * step)
        x = x - delta
        if it + 1 >= max(2, newton_steps) and np.all(np.abs(delta) <= 4e-16 * np.maximum(1.0, np.abs(x))):
            break
    x = np.copysign(x, flat)
    out = x.reshape(arr.shape)
    return float(out) if scalar else out


# --- normal distribution ----------------------------------------------------

def _check_variance(variance):
    v = np.asarray(variance, dtype=np.float64)
    if not np.all(v > 0) or not np.all(np.isfinite(v)):
        raise DomainError("variance must be positive and finite")
    return v


def normal_pdf(x, mean=0.0, variance=1.0):
    """Density of Normal(mean, variance) at x."""
    v = _check_variance(variance)
    arr, scalar = _as_float_array(x)
    z2 = (arr - mean) ** 2 / v
    out = np.exp(-0.5 * z2) / np.sqrt(2.0 * np.pi * v)
    return float(out) if scalar and np.ndim(out) == 0 else out


def normal_cdf(x, mean=0.0, variance=1.0):
    """Distribution function of Normal(mean, variance) at x."""
    v = _check_variance(variance)
    arr, scalar = _as_float_array(x)
    out = 0.5 * erfc(-(arr - mean) / np.sqrt(2.0 * v))
    return float(out) if scalar and np.ndim(out) == 0 else out


def rectified_gaussian_moments(mean, variance):
    """First and second moments of max(0, X) with X ~ Normal(mean, variance).

    Returns ``(first, second)``; arrays broadcast elementwise.
    """
    v = _check_variance(variance)
    m = np.asarray(mean, dtype=np.float64)
    s = np.sqrt(v)
    t = m / s
    cdf = 0.5 * erfc(-t / SQRT_2)
    pdf = INV_SQRT_2PI * np.exp(-0.5 * t * t)
    first = m * cdf + s * pdf
    second = (m * m + v) * cdf + m * s * pdf
    if np.ndim(first) == 0:
        return float(first), float(second)
    return first, second


# --- quadrature -------------------------------------------------------------

GAUSS_LEGENDRE = "gauss-legendre"
ADAPTIVE_TRAPEZOID = "adaptive-trapezoid"


@dataclass(frozen=True)
class QuadratureSpec:
    """How Gaussian-weighted integrals are discretised.

    ``truncation_radius`` is measured in standard deviations of the weight
    (or of the unit normal when no weight is given).  For the adaptive
    trapezoid scheme ``node_count`` is the starting resolution.
    """

    node_count: int = 201
    truncation_radius: float = 8.0
    scheme: str = GAUSS_LEGENDRE
    tolerance: float = 1e-13
    max_refinements: int = 16

    def __post_init__(self):
        if int(self.node_count) != self.node_count or self.node_count < 16:
            raise ConfigError("node_count must be an integer >= 16", "node_count")
        if not self.truncation_radius >= 6:
            raise ConfigError("truncation_radius must be >= 6", "truncation_radius")
        if self.scheme not in (GAUSS_LEGENDRE, ADAPTIVE_TRAPEZOID):
            raise ConfigError(f"unknown quadrature scheme {self.scheme!r}", "scheme")

    def doubled(self) -> "QuadratureSpec":
        return QuadratureSpec(2 * self.node_count - 1 if self.node_count % 2 else 2 * self.node_count,
                              self.truncation_radius, self.scheme, self.tolerance,
                              self.max_refinements)


DEFAULT_QUADRATURE = QuadratureSpec()


@lru_cache(maxsize=32)
def _legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def nodes_and_weights(spec: QuadratureSpec, lower: float, upper: float):
    """Fixed Gauss-Legendre nodes and weights on [lower, upper].

    Used for nested integrals evaluated on a tensor grid.
    """
    x, w = _legendre(int(spec.node_count))
    half = 0.5 * (upper - lower)
    return lower + half * (x + 1.0), half * w


def _evaluate(f, x):
    y = np.asarray(f(x), dtype=np.float64)
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape)
    bad = ~np.isfinite(y)
    if bad.any():
        at = float(x[np.argmax(bad)])
        raise NumericalError(f"integrand is not finite at x = {at!r}")
    return y


def _trapezoid(g, a, b, spec):
    n = int(spec.node_count)
    x = np.linspace(a, b, n)
    h = (b - a) / (n - 1)
    y = _evaluate(g, x)
    total = h * (y.sum() - 0.5 * (y[0] + y[-1]))
    for _ in range(spec.max_refinements):
        mids = x[:-1] + 0.5 * h
        new = total / 2.0 + 0.5 * h * _evaluate(g, mids).sum()
        x = np.sort(np.concatenate([x, mids]))
        h *= 0.5
        if abs(new - total) <= spec.tolerance * max(1.0, abs(new)):
            return new
        total = new
    raise NumericalError(
        f"adaptive trapezoid did not converge after {spec.max_refinements} refinements")


def integrate(f: Callable[[np.ndarray], np.ndarray],
              spec: QuadratureSpec = DEFAULT_QUADRATURE,
              weight: tuple[float, float] | None = None,
              lower: float | None = None,
              upper: float | None = None) -> float:
    """Integrate a vectorised function over a truncated domain.

    With ``weight=(mean, variance)`` the integrand is multiplied by that
    normal density and the domain is ``mean +- R*sd`` intersected with
    ``[lower, upper]``.  Without a weight the default domain is ``+-R``.
    """
    if weight is not None:
        mean, var = float(weight[0]), float(weight[1])
        if not var > 0:
            raise DomainError("weight variance must be positive")
        sd = math.sqrt(var)
        a, b = mean - spec.truncation_radius * sd, mean + spec.truncation_radius * sd

        def g(x):
            return _evaluate(f, x) * (np.exp(-0.5 * (x - mean) ** 2 / var) / (sd * math.sqrt(2 * math.pi)))
    else:
        a, b = -spec.truncation_radius, spec.truncation_radius
        g = f
    if lower is not None:
        a = max(a, float(lower)) if weight is not None else float(lower)
    if upper is not None:
        b = min(b, float(upper)) if weight is not None else float(upper)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError("integration limits must be finite")
    if b <= a:
        return 0.0
    if spec.scheme == GAUSS_LEGENDRE:
        x, w = nodes_and_weights(spec, a, b)
        return float(np.dot(w, _evaluate(g, x)))
    return float(_trapezoid(g, a, b, spec))


# --- reproducible random streams ---------------------------------------------

_MASK64 = (1 << 64) - 1

STREAM_DATA = 0
STREAM_WEIGHTS = 1
STREAM_BOOTSTRAP = 2
STREAM_KS_NULL = 3
STREAM_AUX = 4


def splitmix64(x: int) -> int:
    """One step of the SplitMix64 output function on a 64-bit integer."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class SeedPolicy:
    """Derives an independent counter-based stream per (replica, purpose).

    The 128-bit Philox key for replica ``i`` and stream tag ``s`` is
    ``hi << 64 | lo`` with

        hi = splitmix64(master_seed XOR splitmix64(i))
        lo = splitmix64(hi XOR splitmix64(s + 2**32))

    Distinct keys give non-overlapping Philox streams, so replicas never
    share generator state and can be drawn in any order.
    """

    master_seed: int

    def __post_init__(self):
        if not 0 <= int(self.master_seed) <= _MASK64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer", "seed")

    def key(self, replica_index: int, stream: int = STREAM_WEIGHTS) -> int:
        if replica_index < 0 or stream < 0:
            raise ConfigError("replica_index and stream must be non-negative")
        hi = splitmix64(int(self.master_seed) ^ splitmix64(int(replica_index)))
        lo = splitmix64(hi ^ splitmix64(int(stream) + (1 << 32)))
        return (hi << 64) | lo

    def generator(self, replica_index: int = 0, stream: int = STREAM_WEIGHTS) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.key(replica_index, stream)))
