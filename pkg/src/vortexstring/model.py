"""Problem parameters and closed-form model functions.

The governing semilinear equation on the plane is

    lap(v) = f_m(v) + 4*pi * sum_s mu_s * delta(x - p_s),
    f_m(v) = beta * (1 + e^v)^m * (e^v - 1),

with v -> 0 at infinity.  With gravity (G > 0) the nonlinearity acquires the
weight (e^{v - e^v} * prod_s |x - p_s|^{-2 mu_s})^a, a = 4*pi*G.  This module
holds the parameter record, the nonlinearity and its derivative, the singular
background pair (v0, g) used to subtract the point sources, the regularized
offset v_delta, and the special Higgs potential pair (h, w) obeying
2*h(s)*w(s) = 1 - s.

All functions are pure and accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, NonFiniteError

__all__ = [
    "ProblemSpec",
    "PotentialPair",
    "BackgroundValues",
    "nonlinearity",
    "nonlinearity_derivative",
    "slope_bound",
    "background_fields",
    "background_arrays",
    "regularized_offset",
    "regularized_offset_arrays",
    "gravity_factor",
    "potentials",
]

# v0 at a vortex center is -inf; grids are built so nodes never hit centers,
# but the scalar API returns this sentinel plus a flag instead of raising.
CENTER_SENTINEL = -1.0e308


@dataclass(frozen=True)
class ProblemSpec:
    """Physical configuration: centers with multiplicities and couplings.

    centers : tuple of ((x, y), multiplicity); duplicate positions are merged.
    m       : nonzero real exponent of the potential model.
    beta    : positive coupling (beta = 4*lambda/kappa^2 when both are given).
    G       : nonnegative Newton constant; a = 4*pi*G.
    lam     : optional lambda coupling (JSON key "lambda").
    kappa   : optional kappa coupling.
    """

    centers: tuple
    m: float
    beta: float
    G: float = 0.0
    lam: float | None = None
    kappa: float | None = None

    def __post_init__(self):
        if self.m == 0.0 or not math.isfinite(self.m):
            raise ConfigError("exponent m must be a nonzero finite real")
        if not (self.beta > 0.0 and math.isfinite(self.beta)):
            raise ConfigError("coupling beta must be positive")
        if not (self.G >= 0.0 and math.isfinite(self.G)):
            raise ConfigError("Newton constant G must be nonnegative")
        if self.lam is not None and not self.lam > 0.0:
            raise ConfigError("lambda must be positive when given")
        if self.kappa is not None and not self.kappa > 0.0:
            raise ConfigError("kappa must be positive when given")
        if self.lam is not None and self.kappa is not None:
            implied = 4.0 * self.lam / self.kappa**2
            if abs(implied - self.beta) > 1e-12 * abs(self.beta):
                raise ConfigError(
                    f"beta={self.beta} inconsistent with 4*lambda/kappa^2={implied}"
                )
        merged: dict[tuple[float, float], int] = {}
        for pos, mu in self.centers:
            x, y = float(pos[0]), float(pos[1])
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ConfigError("center positions must be finite")
            mu = int(mu)
            if mu < 1:
                raise ConfigError("multiplicities must be positive integers")
            merged[(x, y)] = merged.get((x, y), 0) + mu
        object.__setattr__(
            self, "centers", tuple((pos, mu) for pos, mu in merged.items())
        )

    @property
    def total_number(self) -> int:
        """Total string number N = sum of multiplicities."""
        return sum(mu for _, mu in self.centers)

    @property
    def a(self) -> float:
        """Gravitational exponent a = 4*pi*G."""
        return 4.0 * math.pi * self.G

    @property
    def all_coincident(self) -> bool:
        return len(self.centers) <= 1

    def positions(self) -> np.ndarray:
        if not self.centers:
            return np.zeros((0, 2))
        return np.array([pos for pos, _ in self.centers], dtype=float)

    def multiplicities(self) -> np.ndarray:
        return np.array([mu for _, mu in self.centers], dtype=float)


class PotentialPair(NamedTuple):
    h_value: float
    w_value: float


class BackgroundValues(NamedTuple):
    v0: float
    g: float
    at_center: bool


_LOG_MAX = math.log(np.finfo(float).max)


def _as_array(v):
    arr = np.asarray(v, dtype=float)
    return arr, (arr.ndim == 0)


def _check_finite(out, what):
    if not np.all(np.isfinite(out)):
        raise NonFiniteError(f"{what} overflowed to a non-finite value")


def nonlinearity(v, spec: ProblemSpec):
    """f_m(v) = beta*(1+e^v)^m*(e^v-1).

    For m = -n < 0 this equals beta*(e^v-1)/(1+e^v)^n.  Large positive v is
    evaluated in the log domain; a result beyond float range raises
    NonFiniteError.
    """
    arr, scalar = _as_array(v)
    m, beta = spec.m, spec.beta
    out = np.empty_like(arr)
    low = arr <= 1.0
    vl = arr[low]
    out[low] = beta * np.power(1.0 + np.exp(vl), m) * np.expm1(vl)
    if not np.all(low):
        vh = arr[~low]
        log1pe = vh + np.log1p(np.exp(-vh))  # log(1 + e^v), overflow-safe
        log_abs = math.log(beta) + m * log1pe + vh + np.log1p(-np.exp(-vh))
        if np.any(log_abs > _LOG_MAX):
            raise NonFiniteError("nonlinearity overflowed for large positive v")
        out[~low] = np.exp(log_abs)
    _check_finite(out, "nonlinearity")
    return float(out) if scalar else out


def nonlinearity_derivative(v, spec: ProblemSpec):
    """f_m'(v) = beta*e^v*(1+e^v)^m*(1 + m*(e^v-1)/(1+e^v)).

    Equals beta*2^m exactly at v = 0.  Same overflow contract as
    ``nonlinearity``.
    """
    arr, scalar = _as_array(v)
    m, beta = spec.m, spec.beta
    out = np.empty_like(arr)
    low = arr <= 1.0
    vl = arr[low]
    ev = np.exp(vl)
    out[low] = beta * ev * np.power(1.0 + ev, m) * (1.0 + m * np.expm1(vl) / (1.0 + ev))
    if not np.all(low):
        vh = arr[~low]
        log1pe = vh + np.log1p(np.exp(-vh))
        ratio = (1.0 - np.exp(-vh)) / (1.0 + np.exp(-vh))  # (e^v-1)/(e^v+1)
        factor = 1.0 + m * ratio
        log_abs = math.log(beta) + vh + m * log1pe + np.log(np.abs(factor))
        if np.any(log_abs > _LOG_MAX):
            raise NonFiniteError("nonlinearity_derivative overflowed")
        out[~low] = np.sign(factor) * np.exp(log_abs)
    _check_finite(out, "nonlinearity_derivative")
    return float(out) if scalar else out


def slope_bound(m: float, beta: float) -> float:
    """Upper bound for f_m' on v <= 0: beta*2^m (m > 0), beta*(1+|m|) (m < 0).

    The monotone iteration shift k must exceed this value.
    """
    if m > 0:
        return beta * 2.0**m
    return beta * (1.0 + abs(m))


def _center_distances_sq(X, Y, spec: ProblemSpec):
    """Yields (mu_s, |x - p_s|^2) per stored center."""
    pos = spec.positions()
    mus = spec.multiplicities()
    for (px, py), mu in zip(pos, mus):
        yield mu, (X - px) ** 2 + (Y - py) ** 2


def background_arrays(X, Y, spec: ProblemSpec):
    """Vectorized background pair (v0, g) on arrays of coordinates.

    v0 = -sum_s mu_s*log(1 + |x-p_s|^-2),  g = 4*sum_s mu_s*(1+|x-p_s|^2)^-2,
    so that lap(v0) = 4*pi*sum mu_s*delta_{p_s} - g distributionally.  Assumes
    no evaluation point coincides with a center.
    """
    X = np.asarray(X, dtype=float)
    v0 = np.zeros_like(X, dtype=float)
    g = np.zeros_like(X, dtype=float)
    for mu, d2 in _center_distances_sq(X, Y, spec):
        v0 -= mu * np.log1p(1.0 / d2)
        g += 4.0 * mu / (1.0 + d2) ** 2
    return v0, g


def background_fields(x, spec: ProblemSpec) -> BackgroundValues:
    """Scalar background evaluation with a sentinel at the centers."""
    px, py = float(x[0]), float(x[1])
    v0 = 0.0
    g = 0.0
    at_center = False
    for mu, d2 in _center_distances_sq(px, py, spec):
        g += 4.0 * mu / (1.0 + d2) ** 2
        if d2 == 0.0:
            at_center = True
        else:
            v0 -= mu * math.log1p(1.0 / d2)
    if at_center:
        return BackgroundValues(CENTER_SENTINEL, float(g), True)
    return BackgroundValues(float(v0), float(g), False)


def regularized_offset_arrays(X, Y, delta: float, spec: ProblemSpec):
    """v_delta = sum_s mu_s*log((delta+|x-p_s|^2)/(1+|x-p_s|^2)) on arrays."""
    if not 0.0 < delta < 1.0:
        raise ConfigError("regularization delta must lie in (0, 1)")
    X = np.asarray(X, dtype=float)
    out = np.zeros_like(X, dtype=float)
    for mu, d2 in _center_distances_sq(X, Y, spec):
        out += mu * np.log1p((delta - 1.0) / (1.0 + d2))
    return out


def regularized_offset(x, delta: float, spec: ProblemSpec) -> float:
    """Scalar regularized offset; satisfies v0 < v_delta < 0 off the centers."""
    val = regularized_offset_arrays(
        np.asarray(float(x[0])), np.asarray(float(x[1])), delta, spec
    )
    return float(val)


def gravity_factor(v, a: float):
    """exp(a*(v - e^v)); for v <= 0 this lies in (0, e^-a]."""
    arr = np.asarray(v, dtype=float)
    return np.exp(a * (arr - np.exp(arr)))


def potentials(s, spec: ProblemSpec) -> PotentialPair:
    """Special potential pair h(s) = kappa/(2*(1+s)^(m/2)),
    w(s) = (1+s)^(m/2)*(1-s)/kappa with 2*h*w = 1 - s."""
    if spec.kappa is None:
        raise ConfigError("potentials require kappa in the problem spec")
    s = float(s)
    if s < 0.0:
        raise ConfigError("potentials are defined for s = |u|^2 >= 0")
    p = math.pow(1.0 + s, spec.m / 2.0)
    h = spec.kappa / (2.0 * p)
    w = p * (1.0 - s) / spec.kappa
    if not (math.isfinite(h) and math.isfinite(w)):
        raise NonFiniteError("potential pair overflowed")
    return PotentialPair(h, w)
