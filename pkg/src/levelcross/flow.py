"""Deterministic inter-jump dynamics.

Between jumps the process follows the ODE orbit q(x, t) solving
q(x,t) = x + int_0^t mu(q(x,s)) ds. Everything the statistical layers need
from the orbit is answered here: the state at time t, the first time a level
is hit, the Lebesgue time spent in a band, and the integrated jump hazard
Lambda(x,t) = int_0^t lambda(q(x,s)) ds together with its inverse (which
turns Exp(1) marks into inter-jump waits).

Catalog models carry closed forms and every query dispatches to them; the
numeric path integrates with an adaptive high-order Runge-Kutta scheme at
tight tolerances so that crossing times are far more accurate than any
statistical noise on top of them. Orbits never cross a zero of the drift,
so each orbit is monotone; hit-time and occupation logic relies on this.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .model import Model

__all__ = [
    "FlowError",
    "FlowSolution",
    "HazardAccumulator",
    "flow",
    "flow_solution",
    "hit_time",
    "occupation_time",
    "integrated_hazard",
    "invert_hazard",
    "hazard_accumulator",
    "T_CAP",
]

T_CAP = 1e6  # per-draw time cap; exceeding it signals a hazard that fails to diverge
_RTOL = 1e-10
_ATOL = 1e-10


class FlowError(RuntimeError):
    """Orbit left the working interval, integration failed, or the hazard
    never accumulates enough mass."""


def _interval_check(model: Model, *states: float) -> None:
    lo, hi = model.working_interval
    for q in states:
        if not (lo <= q <= hi):
            raise FlowError(
                f"orbit reaches {q:.6g}, outside working interval [{lo}, {hi}]"
            )


def _integrate(model: Model, x: float, t_end: float, with_hazard: bool = False):
    """Adaptive integration of the orbit (optionally with hazard as an
    augmented coordinate), dense output, terminal events at the interval
    boundary and locator events at declared drift discontinuities."""
    lo, hi = model.working_interval
    drift, rate = model.drift, model.rate

    if with_hazard:
        def rhs(t, y):
            return (float(drift(y[0])), float(rate(y[0])))
        y0 = [x, 0.0]
    else:
        def rhs(t, y):
            return (float(drift(y[0])),)
        y0 = [x]

    events = []

    def make_boundary(level):
        def ev(t, y):
            return y[0] - level
        ev.terminal = True
        return ev

    events.append(make_boundary(lo))
    events.append(make_boundary(hi))
    for d in drift.discontinuities:
        def locator(t, y, _d=d):
            return y[0] - _d
        locator.terminal = False
        events.append(locator)

    sol = solve_ivp(
        rhs, (0.0, t_end), y0, method="DOP853",
        rtol=_RTOL, atol=_ATOL, dense_output=True, events=events,
    )
    if not sol.success and sol.status != 1:
        raise FlowError(f"integration failed from x={x}: {sol.message}")
    if sol.status == 1:
        t_exit = min(float(te[0]) for te in sol.t_events[:2] if te.size)
        raise FlowError(
            f"orbit from x={x} exits working interval at t={t_exit:.6g}"
        )
    return sol


def flow(model: Model, x: float, t: float) -> float:
    """The orbit state q(x, t)."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    if t == 0:
        return float(x)
    if model.closed_flow is not None:
        q = float(model.closed_flow.state(x, t))
        _interval_check(model, x, q)  # orbit monotone: endpoints bound it
        return q
    sol = _integrate(model, float(x), float(t))
    return float(sol.sol(t)[0])


@dataclass(frozen=True)
class FlowSolution:
    """A solved orbit on [0, t_max] with a vectorized evaluator."""

    x: float
    t_max: float
    evaluate: Callable[[np.ndarray], np.ndarray]
    monotone_sign: int  # sign of mu along the orbit (constant between zeros)
    analytic: bool


def flow_solution(model: Model, x: float, t_max: float) -> FlowSolution:
    sign = int(np.sign(float(model.drift(x))))
    if model.closed_flow is not None:
        state = model.closed_flow.state
        flow(model, x, t_max)  # endpoint interval check
        return FlowSolution(
            x=float(x), t_max=float(t_max),
            evaluate=lambda t: state(x, np.asarray(t, dtype=float)),
            monotone_sign=sign, analytic=True,
        )
    sol = _integrate(model, float(x), float(t_max))
    return FlowSolution(
        x=float(x), t_max=float(t_max),
        evaluate=lambda t: sol.sol(np.atleast_1d(np.asarray(t, dtype=float)))[0],
        monotone_sign=sign, analytic=False,
    )


def hit_time(model: Model, x: float, u: float) -> float:
    """Smallest t >= 0 with q(x, t) = u; inf when the orbit never gets there.

    A level at an attracting equilibrium is approached but never attained,
    so it reports inf as well.
    """
    x, u = float(x), float(u)
    _interval_check(model, u)
    if model.closed_flow is not None:
        return float(model.closed_flow.time_to_level(x, u))
    if u == x:
        return 0.0
    s = float(model.drift(x))
    if s == 0.0 or (u - x) * s < 0:
        return math.inf

    # March forward in doubling windows; the orbit is monotone, so u is hit
    # in the first window whose endpoints straddle it. Progress stalls only
    # when approaching an equilibrium short of u.
    t0, x0, dt = 0.0, x, 1.0
    while t0 < T_CAP:
        sol = _integrate(model, x0, dt)
        x1 = float(sol.sol(dt)[0])
        if (x0 - u) * (x1 - u) <= 0:
            f = lambda t: float(sol.sol(t)[0]) - u
            if f(0.0) == 0.0:
                return t0
            root = brentq(f, 0.0, dt, xtol=1e-13, rtol=4 * np.finfo(float).eps)
            return t0 + float(root)
        if abs(x1 - x0) < 1e-14 * max(1.0, abs(x0)):
            return math.inf
        t0, x0, dt = t0 + dt, x1, dt * 2
    return math.inf


def occupation_time(model: Model, x: float, band: tuple[float, float], t_max: float) -> float:
    """Lebesgue measure of {t <= t_max : q(x,t) in [a, b]}.

    Exact for monotone orbits: the visit to the band is a single interval
    delimited by hit times of the band edges.
    """
    a, b = band
    if not a < b:
        raise ValueError(f"band must satisfy a < b, got {band}")
    if t_max < 0:
        raise ValueError("t_max must be nonnegative")
    x = float(x)
    s = float(model.drift(x))
    if s == 0.0:
        return t_max if a <= x <= b else 0.0
    if s > 0:
        if x > b:
            return 0.0
        enter = 0.0 if x >= a else hit_time(model, x, a)
        exit_ = hit_time(model, x, b)
    else:
        if x < a:
            return 0.0
        enter = 0.0 if x <= b else hit_time(model, x, b)
        exit_ = hit_time(model, x, a)
    if enter >= t_max:
        return 0.0
    return max(0.0, min(exit_, t_max) - enter)


def integrated_hazard(model: Model, x: float, t: float) -> float:
    """Lambda(x, t), the expected number of jump triggers along the orbit."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return 0.0
    if model.closed_flow is not None:
        return float(model.closed_flow.hazard(x, t))
    sol = _integrate(model, float(x), float(t), with_hazard=True)
    return float(sol.sol(t)[1])


def invert_hazard(model: Model, x: float, e: float, t_cap: float = T_CAP) -> float:
    """Smallest t with Lambda(x, t) = e, accurate to 1e-10 * max(1, e).

    With e ~ Exp(1) this realizes the inter-jump wait. Raises FlowError when
    the hazard cannot reach e by t_cap (a model whose total hazard along the
    orbit stays finite cannot be simulated honestly).
    """
    if not e > 0:
        raise ValueError(f"mark e must be positive, got {e}")
    x = float(x)
    if model.closed_flow is not None:
        w = float(model.closed_flow.wait_from_mark(x, e))
        if not math.isfinite(w):
            raise FlowError(
                f"hazard ceiling: Lambda({x}, .) never reaches {e}"
            )
        return w

    def lam_reached(t, y):
        return y[1] - e
    lam_reached.terminal = True

    lo, hi = model.working_interval
    drift, rate = model.drift, model.rate

    def rhs(t, y):
        return (float(drift(y[0])), float(rate(y[0])))

    def make_boundary(level):
        def ev(t, y):
            return y[0] - level
        ev.terminal = True
        return ev

    sol = solve_ivp(
        rhs, (0.0, t_cap), [x, 0.0], method="DOP853",
        rtol=_RTOL, atol=_ATOL, dense_output=True,
        events=[lam_reached, make_boundary(lo), make_boundary(hi)],
    )
    if not sol.success and sol.status != 1:
        raise FlowError(f"hazard integration failed from x={x}: {sol.message}")
    if sol.t_events[0].size:
        return float(sol.t_events[0][0])
    if sol.status == 1:
        t_exit = min(float(te[0]) for te in sol.t_events[1:] if te.size)
        raise FlowError(f"orbit from x={x} exits working interval at t={t_exit:.6g}")
    total = float(sol.y[1, -1])
    raise FlowError(
        f"hazard ceiling: Lambda({x}, {t_cap:g}) = {total:.6g} < e = {e:.6g}; "
        "the integrated intensity along this orbit does not diverge in practice"
    )


@dataclass(frozen=True)
class HazardAccumulator:
    """Lambda(x, .) and its inverse, packaged for one start state."""

    x: float
    value: Callable[[float], float]
    inverse: Callable[[float], float]


def hazard_accumulator(model: Model, x: float) -> HazardAccumulator:
    return HazardAccumulator(
        x=float(x),
        value=lambda t: integrated_hazard(model, x, t),
        inverse=lambda e: invert_hazard(model, x, e),
    )
