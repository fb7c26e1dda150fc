"""Coincident-center radial problems.

In t = log r the gravitating equation with all centers at the origin and
a*N = 1 (a = 4*pi*G) reduces to the autonomous connection problem

    v'' = h(v) = beta * e^{a(v - e^v)} * (1 + e^v)^m * (e^v - 1),
    v(t)/t -> 2N and v'(t) -> 2N as t -> -inf,   v(t) -> 0 as t -> +inf,

which admits a solution exactly when beta = 2 N^2 / I(a, m) with
I = integral over v < 0 of e^{a(v-e^v)} (1+e^v)^m (1-e^v).  The module
computes I by adaptive quadrature, initializes the orbit near t = -inf by
Picard iteration of the integral form, marches the second-order ODE with RK4
under an energy-identity audit (v'^2 = 4N^2 - 2H(v)), and provides a flat
(G = 0) radial shooting oracle used to cross-check the 2D solver.

The connection is a saddle trajectory: double precision cannot follow it past
|v| ~ sqrt(eps_beta), so below ``tail_switch`` the march continues on the
analytic linear tail v ~ v_sw * exp(-sqrt(2^m e^-a beta) (t - t_sw)); the
switch index is recorded and decay fits should use the integrated segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson, quad

from . import model
from .errors import BetaMismatchError, ConfigError, QuadratureError, SolverError

__all__ = [
    "RadialProfile",
    "EnergyFunctionals",
    "integral_I",
    "quadrature_report",
    "beta_for_coincident",
    "radial_initialize",
    "radial_march",
    "radial_vortex_oracle",
]

QUAD_REL_TOL = 1e-12
ENERGY_AUDIT_FACTOR = 1e-6
DEFAULT_STEP = 1e-3
TAIL_SWITCH = 1e-5


@dataclass
class RadialProfile:
    """Samples of v(t) and v'(t) on an increasing grid in t = log r.

    ``switch_index`` marks where an analytic exponential tail replaced the
    integrated orbit (None when the whole profile was integrated).
    """

    t: np.ndarray
    v: np.ndarray
    vprime: np.ndarray
    a: float
    m: float
    beta: float
    n_total: int
    switch_index: int | None = None
    picard_trace: list = field(default_factory=list)

    @property
    def t_start(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    def window(self, t_lo: float, t_hi: float) -> "RadialProfile":
        mask = (self.t >= t_lo) & (self.t <= t_hi)
        return RadialProfile(self.t[mask], self.v[mask], self.vprime[mask],
                             self.a, self.m, self.beta, self.n_total)

    def integrated_part(self) -> "RadialProfile":
        if self.switch_index is None:
            return self
        sl = slice(0, self.switch_index)
        return RadialProfile(self.t[sl], self.v[sl], self.vprime[sl],
                             self.a, self.m, self.beta, self.n_total)

    def write_csv(self, path):
        data = np.column_stack([self.t, self.v, self.vprime])
        np.savetxt(path, data, fmt="%.17g", delimiter=",",
                   header="t,v,vprime", comments="")


def _integrand(v, a, m):
    return np.exp(a * (v - np.exp(v))) * np.power(1.0 + np.exp(v), m) * (1.0 - np.exp(v))


def integral_I(a: float, m: float):
    """I(a, m) = int_{-inf}^0 e^{a(v-e^v)} (1+e^v)^m (1-e^v) dv.

    Adaptive quadrature on [-60/a, 0] plus the analytic tail e^{-60}/a; the
    result must lie in the bracket [min(1,2^m), max(1,2^m)]/(a e^a).  Returns
    (I, error_estimate).
    """
    if not a > 0:
        raise ConfigError("quadrature exponent a must be positive")
    lo = -60.0 / a
    val, err = quad(_integrand, lo, 0.0, args=(a, m),
                    epsabs=0.0, epsrel=QUAD_REL_TOL, limit=300)
    tail = math.exp(a * lo) / a
    total = val + tail
    base = 1.0 / (a * math.exp(a))
    lo_bound = base * min(1.0, 2.0**m)
    hi_bound = base * max(1.0, 2.0**m)
    if not (lo_bound * (1 - 1e-9) <= total <= hi_bound * (1 + 1e-9)):
        raise QuadratureError(
            f"I({a}, {m}) = {total} outside bracket [{lo_bound}, {hi_bound}]")
    if err > 1e-10 * abs(total):
        raise QuadratureError(
            f"quadrature error estimate {err} too large for I({a}, {m})")
    return total, err


def beta_for_coincident(a: float, m: float, n_total: int) -> float:
    """Critical coupling beta = 2 N^2 / I(a, m) for the radial connection.

    Requires a*N = 1.  m may be any real including 0 (closed-form test case
    I(a, 0) = e^-a / a)."""
    if abs(a * n_total - 1.0) > 1e-9:
        raise ConfigError("radial connection requires a*N = 1")
    val, _ = integral_I(a, m)
    return 2.0 * n_total**2 / val


def quadrature_report(a: float, m: float, n_total: int) -> dict:
    val, err = integral_I(a, m)
    return {
        "I": val,
        "beta": 2.0 * n_total**2 / val,
        "error_estimate": err,
    }


@dataclass
class EnergyFunctionals:
    """H(v) = beta * int_{-inf}^v integrand and F(v) = 4N^2 - 2H(v).

    F(0) = 0 at the critical beta and F > 0 for v < 0; v'^2 = F(v) along the
    connection.  Backed by a dense cumulative-Simpson table.
    """

    v_grid: np.ndarray
    h_grid: np.ndarray
    n_total: int

    @classmethod
    def build(cls, a: float, m: float, beta: float, n_total: int,
              v_floor: float) -> "EnergyFunctionals":
        v_floor = min(v_floor, -60.0 / a)
        vg = np.arange(v_floor, 1e-12, 1e-4)
        vals = _integrand(vg, a, m)
        cum = cumulative_simpson(vals, x=vg, initial=0.0)
        hg = beta * (math.exp(a * v_floor) / a + cum)
        return cls(vg, hg, n_total)

    def H(self, v):
        return np.interp(v, self.v_grid, self.h_grid)

    def F(self, v):
        return 4.0 * self.n_total**2 - 2.0 * self.H(v)


def _h_radial(v, a, m, beta):
    return -beta * _integrand(np.asarray(v, dtype=float), a, m)


def _h_radial_scalar(v: float, a: float, m: float, beta: float) -> float:
    ev = math.exp(v)
    return beta * math.exp(a * (v - ev)) * math.pow(1.0 + ev, m) * (ev - 1.0)


def _fm_scalar(v: float, m: float, beta: float) -> float:
    # scalar fast path of model.nonlinearity for the shooting loops
    if v <= 1.0:
        return beta * math.pow(1.0 + math.exp(v), m) * math.expm1(v)
    log1pe = v + math.log1p(math.exp(-v))
    return beta * math.exp(m * log1pe + v + math.log1p(-math.exp(-v)))


def _require_radial_string(spec: model.ProblemSpec):
    if not spec.all_coincident or spec.total_number < 1:
        raise ConfigError("radial string problems require coincident centers")
    if abs(spec.a * spec.total_number - 1.0) > 1e-9:
        raise ConfigError("radial string problems require 4*pi*G*N = 1")


def radial_initialize(spec: model.ProblemSpec, t0: float | None = None,
                      picard_tol: float = 1e-12,
                      beta: float | None = None) -> RadialProfile:
    """Initializes the orbit on (-T, t0] by Picard iteration of
    w(t) = int (t - tau) h(2N tau + w(tau)) dtau, w = v - 2Nt.

    The contraction ball requires sup|w| <= 1 on the segment; when exceeded,
    t0 is moved left by 2 (up to 5 times).  beta = 0 is accepted as a
    test-only input (the fixed point is then w = 0).
    """
    _require_radial_string(spec)
    a, m = spec.a, spec.m
    beta_val = spec.beta if beta is None else beta
    if beta_val < 0:
        raise ConfigError("beta must be nonnegative")
    n_tot = spec.total_number
    if t0 is None:
        t0 = -6.0 - math.log1p(beta_val)

    for _ in range(5):
        # truncate where the remaining tail of the kernel is below 1e-14:
        # |h| <= beta*2^max(m,0)*e^{2 tau} below the segment
        big = max(beta_val, 1.0) * 2.0 ** max(m, 0.0)
        t_deep = t0 - 20.0
        while big * math.exp(2.0 * t_deep) * (abs(t_deep) + abs(t0) + 1.0) > 1e-14:
            t_deep -= 2.0
        tau = np.arange(t_deep, t0 + DEFAULT_STEP / 2, DEFAULT_STEP)
        w = np.zeros_like(tau)
        trace = []
        c1 = np.zeros_like(tau)
        for _sweep in range(60):
            hv = _h_radial(2.0 * n_tot * tau + w, a, m, beta_val)
            c1 = cumulative_simpson(hv, x=tau, initial=0.0)
            c2 = cumulative_simpson(tau * hv, x=tau, initial=0.0)
            w_new = tau * c1 - c2
            upd = float(np.max(np.abs(w_new - w)))
            trace.append(upd)
            w = w_new
            if upd < picard_tol:
                break
        else:
            raise SolverError("Picard initialization did not converge",
                              residual=trace[-1], trace=trace)
        if float(np.max(np.abs(w))) <= 1.0:
            v = 2.0 * n_tot * tau + w
            vp = 2.0 * n_tot + c1
            return RadialProfile(tau, v, vp, a, m, beta_val, n_tot,
                                 picard_trace=trace)
        t0 -= 2.0
    raise SolverError("initialization segment left the contraction ball "
                      "sup|w| <= 1 after 5 retries")


def radial_march(profile: RadialProfile, t_end: float,
                 step: float = DEFAULT_STEP,
                 tail_switch: float = TAIL_SWITCH) -> RadialProfile:
    """Marches v'' = h(v) from the end of ``profile`` to t_end with RK4.

    Audits at every step: v < 0, v' > 0 and the energy identity
    |v'^2 - (4N^2 - 2H(v))| <= 1e-6 * 4N^2.  An energy violation halves the
    step (up to 8 times) before failing; v reaching 0 or v' reaching 0 raises
    BetaMismatchError (overshoot/stall: beta off the critical value).  Below
    |v| = tail_switch the saddle orbit is continued analytically on the linear
    tail (rate sqrt(2^m e^-a beta)); the switch index is recorded.
    """
    a, m, beta = profile.a, profile.m, profile.beta
    n_tot = profile.n_total
    if beta <= 0:
        raise ConfigError("radial_march requires the critical beta > 0")
    t = float(profile.t[-1])
    v = float(profile.v[-1])
    vp = float(profile.vprime[-1])
    if t_end <= t:
        raise ConfigError("t_end must exceed the profile end")

    funcs = EnergyFunctionals.build(a, m, beta, n_tot, v_floor=v - 1.0)
    e_tol = ENERGY_AUDIT_FACTOR * 4.0 * n_tot**2

    def accel(vv):
        return _h_radial_scalar(vv, a, m, beta)

    ts = [t]
    vs = [v]
    vps = [vp]
    switch_index = None
    dt = step
    halvings = 0
    while t < t_end - 1e-12 and switch_index is None:
        dt_eff = min(dt, t_end - t)
        k1v, k1p = vp, accel(v)
        k2v, k2p = vp + 0.5 * dt_eff * k1p, accel(v + 0.5 * dt_eff * k1v)
        k3v, k3p = vp + 0.5 * dt_eff * k2p, accel(v + 0.5 * dt_eff * k2v)
        k4v, k4p = vp + dt_eff * k3p, accel(v + dt_eff * k3v)
        v_new = v + dt_eff / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        vp_new = vp + dt_eff / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        defect = abs(vp_new**2 - funcs.F(v_new))
        if defect > e_tol:
            if halvings >= 8:
                raise SolverError(
                    f"energy identity violated by {defect:.3e} at t={t:.3f}",
                    residual=defect)
            dt *= 0.5
            halvings += 1
            continue
        t += dt_eff
        v, vp = v_new, vp_new
        if v >= 0.0:
            raise BetaMismatchError(
                f"BETA_MISMATCH: v crossed 0 at t={t:.3f} (overshoot; beta below "
                "the critical value)")
        if vp <= 0.0:
            raise BetaMismatchError(
                f"BETA_MISMATCH: v' reached 0 at t={t:.3f} with v={v:.3e} "
                "(stall; beta above the critical value)")
        ts.append(t)
        vs.append(v)
        vps.append(vp)
        if -v <= tail_switch:
            rate = math.sqrt(2.0**m * math.exp(-a) * beta)
            if not 0.8 * rate <= vp / abs(v) <= 1.2 * rate:
                raise SolverError(
                    f"orbit left the stable manifold before the tail switch "
                    f"(v'/|v| = {vp/abs(v):.4f}, expected ~{rate:.4f})")
            switch_index = len(profile.t) + len(ts) - 1

    if switch_index is not None and t < t_end - 1e-12:
        rate = math.sqrt(2.0**m * math.exp(-a) * beta)
        t_tail = np.append(np.arange(t + step, t_end - step / 2, step), t_end)
        v_tail = v * np.exp(-rate * (t_tail - t))
        vp_tail = -rate * v_tail
        defect = np.abs(vp_tail**2 - funcs.F(v_tail))
        if np.any(defect > e_tol):
            raise SolverError("energy identity violated on the analytic tail",
                              residual=float(np.max(defect)))
        ts.extend(t_tail.tolist())
        vs.extend(v_tail.tolist())
        vps.extend(vp_tail.tolist())

    out = RadialProfile(
        np.concatenate([profile.t, np.asarray(ts[1:])]),
        np.concatenate([profile.v, np.asarray(vs[1:])]),
        np.concatenate([profile.vprime, np.asarray(vps[1:])]),
        a, m, beta, n_tot,
        switch_index=switch_index,
        picard_trace=profile.picard_trace,
    )
    return out


def _flat_rhs(t, v, spec):
    return math.exp(2.0 * t) * _fm_scalar(v, spec.m, spec.beta)


def _on_bessel_manifold(t, v, vp, kappa):
    """True when (v, v') matches the decaying K0(kappa e^t) tail within 20%.

    Orbits that merely dip past the saddle before overshooting or stalling
    have the wrong log-slope and are rejected."""
    from scipy.special import k0e, k1e

    r = math.exp(t)
    expected = kappa * r * k1e(kappa * r) / k0e(kappa * r)
    ratio = vp / abs(v)
    return 0.8 * expected <= ratio <= 1.2 * expected


def _shoot_flat(spec, c, t_start, t_end, dt, tol, v_switch):
    """Integrates the flat radial equation from v ~ 2N t + c.

    Returns (+1, None) on overshoot (v >= 0), (-1, None) on undershoot
    (v' <= 0 or final v below -tol), (0, arrays) when v(t_end) lands in
    (-tol, 0], and (2, arrays) when the orbit entered the linear regime
    |v| <= v_switch on the decaying manifold before t_end (to be continued
    on the Bessel tail)."""
    kappa = math.sqrt(2.0**spec.m * spec.beta)
    n_tot = spec.total_number
    t = t_start
    v = 2.0 * n_tot * t + c
    vp = 2.0 * n_tot
    if v >= 0.0:
        return 1, None
    ts = [t]
    vs = [v]
    vps = [vp]
    steps = int(round((t_end - t_start) / dt))
    for _ in range(steps):
        try:
            k1v, k1p = vp, _flat_rhs(t, v, spec)
            k2v, k2p = vp + 0.5 * dt * k1p, _flat_rhs(t + 0.5 * dt, v + 0.5 * dt * k1v, spec)
            k3v, k3p = vp + 0.5 * dt * k2p, _flat_rhs(t + 0.5 * dt, v + 0.5 * dt * k2v, spec)
            k4v, k4p = vp + dt * k3p, _flat_rhs(t + dt, v + dt * k3v, spec)
        except OverflowError:
            # the nonlinearity only blows up for large positive v
            return 1, None
        v += dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        vp += dt / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        t += dt
        if v >= 0.0:
            return 1, None
        if vp <= 0.0:
            return -1, None
        ts.append(t)
        vs.append(v)
        vps.append(vp)
        if -v <= v_switch and _on_bessel_manifold(t, v, vp, kappa):
            return 2, (np.asarray(ts), np.asarray(vs), np.asarray(vps))
    if v > -tol:
        return 0, (np.asarray(ts), np.asarray(vs), np.asarray(vps))
    return -1, None


def _bessel_tail(ts, vs, vps, t_end, dt, kappa):
    """Continues a linear-regime orbit on the decaying Bessel tail
    v ~ K0(kappa*r); returns extended arrays and the switch index."""
    from scipy.special import k0e, k1e

    switch_index = len(ts)
    t_sw = float(ts[-1])
    v_sw = float(vs[-1])
    r_sw = math.exp(t_sw)
    t_tail = np.arange(t_sw + dt, t_end + dt / 2, dt)
    r = np.exp(t_tail)
    ratio = k0e(kappa * r) / k0e(kappa * r_sw) * np.exp(-kappa * (r - r_sw))
    v_tail = v_sw * ratio
    # d/dt K0(kappa e^t) = -kappa e^t K1(kappa e^t)
    vp_tail = -v_sw * (kappa * r * k1e(kappa * r) / k0e(kappa * r_sw)
                       * np.exp(-kappa * (r - r_sw)))
    return (np.concatenate([ts, t_tail]), np.concatenate([vs, v_tail]),
            np.concatenate([vps, vp_tail]), switch_index)


def radial_vortex_oracle(spec: model.ProblemSpec, r_max: float,
                         dt: float = DEFAULT_STEP, tol: float = 1e-5,
                         c_range: tuple = (-50.0, 50.0),
                         max_bisect: int = 200,
                         v_switch: float = 1e-6) -> RadialProfile:
    """Flat radial vortex profile by shooting on the additive constant.

    Solves v'' = beta e^{2t} (1+e^v)^m (e^v-1) in t = log r with
    v = 2N t + c + o(1) at t -> -inf, bisecting c until v(log r_max) lands in
    (-tol, 0].  The saddle cannot be followed numerically once |v| is below
    ~1e-6; from there the orbit is continued on the exact decaying Bessel
    tail K0(sqrt(2^m beta) r) (switch index recorded).  Serves as the
    independent oracle for the 2D vortex solver.
    """
    if spec.G != 0.0:
        raise ConfigError("the radial vortex oracle is the flat (G = 0) case")
    if not spec.all_coincident or spec.total_number < 1:
        raise ConfigError("the radial oracle requires coincident centers")
    t_end = math.log(r_max)
    t_start = -(21.0 + math.log1p(spec.beta)) / 2.0 - 1.0
    c_lo, c_hi = c_range
    kappa = math.sqrt(2.0**spec.m * spec.beta)

    def finish(outcome, arrays):
        if outcome == 0:
            ts, vs, vps = arrays
            return RadialProfile(ts, vs, vps, 0.0, spec.m, spec.beta,
                                 spec.total_number)
        ts, vs, vps, sw = _bessel_tail(*arrays, t_end, dt, kappa)
        if not -tol < vs[-1] <= 0.0:
            raise SolverError(
                f"oracle tail value {vs[-1]:.3e} outside (-{tol}, 0]")
        return RadialProfile(ts, vs, vps, 0.0, spec.m, spec.beta,
                             spec.total_number, switch_index=sw)

    out_lo, _ = _shoot_flat(spec, c_lo, t_start, t_end, dt, tol, v_switch)
    out_hi, arrays_hi = _shoot_flat(spec, c_hi, t_start, t_end, dt, tol, v_switch)
    if out_hi in (0, 2):
        return finish(out_hi, arrays_hi)
    if not (out_lo == -1 and out_hi == 1):
        raise SolverError(
            f"shooting bracket not found in c = [{c_lo}, {c_hi}]")
    for _ in range(max_bisect):
        c_mid = 0.5 * (c_lo + c_hi)
        outcome, arrays = _shoot_flat(spec, c_mid, t_start, t_end, dt, tol,
                                      v_switch)
        if outcome in (0, 2):
            return finish(outcome, arrays)
        if outcome > 0:
            c_hi = c_mid
        else:
            c_lo = c_mid
        if c_hi - c_lo < 8 * np.finfo(float).eps * max(1.0, abs(c_hi)):
            break
    raise SolverError(
        f"bisection did not land in (-{tol}, 0] after {max_bisect} steps")
