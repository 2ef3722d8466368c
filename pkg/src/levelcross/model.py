"""Model primitives for real-valued piecewise-deterministic Markov processes.

A model is the triple (mu, lambda, J): a drift field driving the deterministic
flow between jumps, a state-dependent jump intensity, and a jump-size kernel.
Evaluators are packaged together with the analytic metadata the statistical
layers consume: zeros of the drift, limits at +-infinity, jump moments and
moment generating functions. Whenever a piece of metadata is not declared,
operations that need it fail loudly instead of estimating it silently.

All evaluators are numpy-elementwise unless stated otherwise, and everything
here is immutable after construction, so models can be shared freely across
simulation workers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

__all__ = [
    "ModelError",
    "LimitLaw",
    "Drift",
    "JumpRate",
    "JumpKernel",
    "ClosedFlow",
    "Model",
    "TailEnvelope",
    "ScenarioReport",
    "exp_jump_kernel",
    "linear_shot_noise",
    "tanh_drift",
    "updrift_negjumps",
    "stress_release",
    "catalog",
    "CATALOG",
    "tail_envelope",
    "classify_scenario",
    "transform_model",
    "validate",
]

ZERO_TOL = 1e-12


class ModelError(ValueError):
    """A model specification is inconsistent or lacks required metadata."""


def _const_fn(value: float) -> Callable[[np.ndarray], np.ndarray]:
    def f(x):
        return value + 0.0 * np.asarray(x, dtype=float)

    return f


def _safe_div(a: float, b: float) -> float:
    # a/b with the conventions needed by drift margins: finite/inf = 0,
    # (+-inf)/finite keeps its sign, 0/0 and inf/inf are errors upstream.
    if b == 0:
        return math.inf if a > 0 else (-math.inf if a < 0 else math.nan)
    if math.isinf(b):
        return 0.0 if math.isfinite(a) else math.nan
    return a / b


@dataclass(frozen=True)
class LimitLaw:
    """A fully described jump-size distribution (used for xi(inf) and envelopes).

    mgf(w) = E exp(w xi) must be finite for 0 <= w < mgf_sup; sample(n, rng)
    returns n i.i.d. draws; cdf is optional but needed for dominance audits.
    """

    mean: float
    sample: Callable[[int, np.random.Generator], np.ndarray]
    mgf: Optional[Callable[[float], float]] = None
    mgf_sup: float = math.inf
    cdf: Optional[Callable[[np.ndarray], np.ndarray]] = None


@dataclass(frozen=True)
class Drift:
    """Drift field mu with its declared analytic structure.

    zeros lists the roots of mu inside the working interval (the set where the
    stationary law may carry atoms and where crossings are not counted).
    Limits use +-inf for divergence and None for "undeclared".
    """

    fn: Callable[[np.ndarray], np.ndarray]
    zeros: tuple[float, ...] = ()
    limit_pos: Optional[float] = None
    limit_neg: Optional[float] = None
    discontinuities: tuple[float, ...] = ()

    def __call__(self, x):
        return self.fn(x)


@dataclass(frozen=True)
class JumpRate:
    """Jump intensity lambda >= 0.

    local_bound(lo, hi) returns an upper bound for lambda on [lo, hi]; it must
    dominate the true supremum (thinning correctness depends on it).
    constant is set when lambda is globally constant, enabling the fast
    simulation path.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    limit_pos: Optional[float] = None
    local_bound: Optional[Callable[[float, float], float]] = None
    constant: Optional[float] = None

    def __call__(self, x):
        return self.fn(x)


@dataclass(frozen=True)
class JumpKernel:
    """Jump-size kernel J(x, dz) with moment metadata.

    sample(x, rng) draws one size; sample_block(n, rng) is available exactly
    when the kernel does not depend on the state. mean_pos/mean_neg evaluate
    m+(x) = int_0^inf z J(x,dz) and m-(x) = -int_(-inf)^0 z J(x,dz), both
    nonnegative. sign_support is one of "positive", "negative", "mixed".
    density(x, z) is used by quadrature-based audits when available.
    """

    sample: Callable[[float, np.random.Generator], float]
    sign_support: str
    state_dependent: bool = True
    sample_block: Optional[Callable[[int, np.random.Generator], np.ndarray]] = None
    mean_pos: Optional[Callable[[float], float]] = None
    mean_neg: Optional[Callable[[float], float]] = None
    mgf: Optional[Callable[[float, float], float]] = None
    density: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    limit_law: Optional[LimitLaw] = None


@dataclass(frozen=True)
class ClosedFlow:
    """Closed-form flow package used by the fast simulation and analysis paths.

    state(x, t): the flow q(x, t).
    time_to_level(x, y): smallest t >= 0 with q(x, t) = y, inf if unreachable.
    hazard(x, t): integrated intensity along the orbit.
    wait_from_mark(x, e): smallest t with hazard(x, t) = e.
    stepper: optional tight loop advancing a whole chunk of events at once,
        only meaningful for constant-rate models (waits precomputed).
    """

    state: Callable
    time_to_level: Callable
    hazard: Callable
    wait_from_mark: Callable
    stepper: Optional[Callable] = None


@dataclass(frozen=True)
class Model:
    """The assembled process specification."""

    drift: Drift
    rate: JumpRate
    kernel: JumpKernel
    working_interval: tuple[float, float]
    scenario_hint: Optional[str] = None
    closed_flow: Optional[ClosedFlow] = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def describe(self) -> dict:
        return {
            "name": self.name,
            "params": dict(self.params),
            "working_interval": list(self.working_interval),
            "scenario_hint": self.scenario_hint,
        }


# ---------------------------------------------------------------------------
# exponential jump families


def exp_jump_kernel(
    alpha: float, sign: int = 1, scale: float = 1.0, shift: float = 0.0
) -> JumpKernel:
    """Jump sizes z = shift + sign * scale * Y with Y ~ Exp(alpha).

    sign=+1 gives the positive family, sign=-1 the negative one; shift and
    scale cover the shifted/scaled variants admitted by the config format.
    """
    if alpha <= 0 or scale <= 0:
        raise ModelError("exponential jump family needs alpha > 0 and scale > 0")
    if sign not in (1, -1):
        raise ModelError("sign must be +1 or -1")
    beta = alpha / scale  # rate of the magnitude sign*(z - shift)
    mean = shift + sign / beta

    if sign > 0:
        if shift >= 0:
            m_plus, m_minus = mean, 0.0
        else:
            m_plus = math.exp(beta * shift) / beta
            m_minus = m_plus - mean
    else:
        if shift <= 0:
            m_plus, m_minus = 0.0, -mean
        else:
            m_minus = math.exp(-beta * shift) / beta
            m_plus = mean + m_minus

    if sign > 0 and shift >= 0:
        support = "positive"
    elif sign < 0 and shift <= 0:
        support = "negative"
    else:
        support = "mixed"

    mgf_sup = beta if sign > 0 else math.inf

    def mgf_value(w: float) -> float:
        if sign * w >= beta:
            raise ModelError(f"jump mgf undefined at w={w} (domain sup {mgf_sup})")
        return math.exp(w * shift) * beta / (beta - sign * w)

    def draw_block(n: int, rng: np.random.Generator) -> np.ndarray:
        return shift + sign * scale * rng.exponential(1.0 / alpha, size=n)

    def draw_one(x: float, rng: np.random.Generator) -> float:
        return shift + sign * scale * rng.exponential(1.0 / alpha)

    def dens(x: float, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        arg = sign * (z - shift)
        return np.where(arg > 0, beta * np.exp(-beta * np.maximum(arg, 0.0)), 0.0)

    def law_cdf(z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if sign > 0:
            return np.where(z > shift, 1.0 - np.exp(-beta * np.maximum(z - shift, 0)), 0.0)
        return np.where(z < shift, np.exp(-beta * np.maximum(shift - z, 0)), 1.0)

    law = LimitLaw(
        mean=mean,
        sample=lambda n, rng: draw_block(n, rng),
        mgf=mgf_value,
        mgf_sup=mgf_sup,
        cdf=law_cdf,
    )
    return JumpKernel(
        sample=draw_one,
        sign_support=support,
        state_dependent=False,
        sample_block=draw_block,
        mean_pos=lambda x: m_plus,
        mean_neg=lambda x: m_minus,
        mgf=lambda x, w: mgf_value(w),
        density=dens,
        limit_law=law,
    )


# ---------------------------------------------------------------------------
# catalog models (closed-form flow, hazard and crossing-time evaluators)


def _require_positive(**params: float) -> None:
    for k, v in params.items():
        if not (v > 0) or not math.isfinite(v):
            raise ModelError(f"parameter {k} must be positive and finite, got {v}")


def linear_shot_noise(c: float, lam0: float, alpha: float) -> Model:
    """mu(x) = -c x, lambda = lam0, positive Exp(alpha) jumps.

    Linear decay toward 0 refilled by positive shots; the stationary law is
    Gamma(lam0/c) in rate alpha, which several tests use as an oracle.
    """
    _require_positive(c=c, lam0=lam0, alpha=alpha)

    def state(x, t):
        return np.asarray(x, dtype=float) * np.exp(-c * np.asarray(t, dtype=float))

    def time_to_level(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        reach = (x * y > 0) & (np.abs(y) <= np.abs(x))
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.log(np.abs(x / y)) / c
        return np.where(reach, t, np.inf)

    def stepper(x: float, waits: np.ndarray, sizes: np.ndarray, out_pre: np.ndarray) -> float:
        decay = np.exp(-c * waits)
        for i in range(waits.shape[0]):
            x *= decay[i]
            out_pre[i] = x
            x += sizes[i]
        return x

    flow = ClosedFlow(
        state=state,
        time_to_level=time_to_level,
        hazard=lambda x, t: lam0 * np.asarray(t, dtype=float),
        wait_from_mark=lambda x, e: np.asarray(e, dtype=float) / lam0,
        stepper=stepper,
    )
    model = Model(
        drift=Drift(
            fn=lambda x: -c * np.asarray(x, dtype=float),
            zeros=(0.0,),
            limit_pos=-math.inf,
            limit_neg=math.inf,
        ),
        rate=JumpRate(
            fn=_const_fn(lam0),
            limit_pos=lam0,
            local_bound=lambda lo, hi: lam0,
            constant=lam0,
        ),
        kernel=exp_jump_kernel(alpha, sign=1),
        working_interval=(-60.0, 60.0),
        scenario_hint="S1",
        closed_flow=flow,
        name="linear_shot_noise",
        params={"c": c, "lam0": lam0, "alpha": alpha},
    )
    validate(model)
    return model


def tanh_drift(lam0: float, alpha: float) -> Model:
    """mu(x) = -tanh(x), lambda = lam0, positive Exp(alpha) jumps.

    The drift saturates at -1, so the upcrossing limit falls in the finite
    drift regime with rho = lam0 / alpha.
    """
    _require_positive(lam0=lam0, alpha=alpha)

    def state(x, t):
        return np.arcsinh(np.sinh(np.asarray(x, dtype=float)) * np.exp(-np.asarray(t, dtype=float)))

    def time_to_level(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        reach = (x * y > 0) & (np.abs(y) <= np.abs(x))
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.log(np.sinh(x) / np.sinh(y))
        return np.where(reach, t, np.inf)

    sinh, asinh = math.sinh, math.asinh

    def stepper(x: float, waits: np.ndarray, sizes: np.ndarray, out_pre: np.ndarray) -> float:
        decay = np.exp(-waits)
        for i in range(waits.shape[0]):
            x = asinh(sinh(x) * decay[i])
            out_pre[i] = x
            x += sizes[i]
        return x

    flow = ClosedFlow(
        state=state,
        time_to_level=time_to_level,
        hazard=lambda x, t: lam0 * np.asarray(t, dtype=float),
        wait_from_mark=lambda x, e: np.asarray(e, dtype=float) / lam0,
        stepper=stepper,
    )
    model = Model(
        drift=Drift(
            fn=lambda x: -np.tanh(np.asarray(x, dtype=float)),
            zeros=(0.0,),
            limit_pos=-1.0,
            limit_neg=1.0,
        ),
        rate=JumpRate(
            fn=_const_fn(lam0),
            limit_pos=lam0,
            local_bound=lambda lo, hi: lam0,
            constant=lam0,
        ),
        kernel=exp_jump_kernel(alpha, sign=1),
        working_interval=(-60.0, 60.0),
        scenario_hint="S3",
        closed_flow=flow,
        name="tanh_drift",
        params={"lam0": lam0, "alpha": alpha},
    )
    validate(model)
    return model


def _updrift_flow() -> tuple[Callable, Callable]:
    def state(x, t):
        return np.asarray(x, dtype=float) + np.asarray(t, dtype=float)

    def time_to_level(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.where(y >= x, y - x, np.inf)

    return state, time_to_level


def updrift_negjumps(lam0: float, alpha: float) -> Model:
    """mu = 1, lambda(x) = lam0 1{x >= 0}, negative Exp(alpha) jumps.

    Steady climb knocked down by negative shots firing only above 0. With
    lam0 > alpha the positive root of the crossing equation is w = lam0 -
    alpha, giving rho = alpha / lam0.
    """
    _require_positive(lam0=lam0, alpha=alpha)
    state, time_to_level = _updrift_flow()

    def hazard(x, t):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        return lam0 * np.maximum(0.0, t - np.maximum(0.0, -x))

    def wait_from_mark(x, e):
        x = np.asarray(x, dtype=float)
        return np.maximum(0.0, -x) + np.asarray(e, dtype=float) / lam0

    flow = ClosedFlow(state=state, time_to_level=time_to_level, hazard=hazard,
                      wait_from_mark=wait_from_mark)
    model = Model(
        drift=Drift(fn=_const_fn(1.0), zeros=(), limit_pos=1.0, limit_neg=1.0),
        rate=JumpRate(
            fn=lambda x: np.where(np.asarray(x, dtype=float) >= 0, lam0, 0.0),
            limit_pos=lam0,
            local_bound=lambda lo, hi: lam0 if hi >= 0 else 0.0,
        ),
        kernel=exp_jump_kernel(alpha, sign=-1),
        working_interval=(-80.0, 80.0),
        scenario_hint="S3",
        closed_flow=flow,
        name="updrift_negjumps",
        params={"lam0": lam0, "alpha": alpha},
    )
    validate(model)
    return model


def stress_release(beta: float, alpha: float) -> Model:
    """mu = 1, lambda(x) = exp(beta x), negative Exp(alpha) jumps."""
    _require_positive(beta=beta, alpha=alpha)
    state, time_to_level = _updrift_flow()

    def hazard(x, t):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        return np.exp(beta * x) * np.expm1(beta * t) / beta

    def wait_from_mark(x, e):
        # t = log1p(beta e exp(-beta x)) / beta, branch-stable for very
        # negative x where the inner exp overflows.
        x = np.asarray(x, dtype=float)
        e = np.asarray(e, dtype=float)
        log_arg = np.log(beta * e) - beta * x
        small = log_arg < 30.0
        with np.errstate(over="ignore"):
            t_small = np.log1p(np.exp(np.where(small, log_arg, 0.0))) / beta
        return np.where(small, t_small, log_arg / beta)

    flow = ClosedFlow(state=state, time_to_level=time_to_level, hazard=hazard,
                      wait_from_mark=wait_from_mark)
    model = Model(
        drift=Drift(fn=_const_fn(1.0), zeros=(), limit_pos=1.0, limit_neg=1.0),
        rate=JumpRate(
            fn=lambda x: np.exp(beta * np.asarray(x, dtype=float)),
            limit_pos=math.inf,
            local_bound=lambda lo, hi: math.exp(beta * hi),
        ),
        kernel=exp_jump_kernel(alpha, sign=-1),
        working_interval=(-100.0, 40.0),
        scenario_hint="S2",
        closed_flow=flow,
        name="stress_release",
        params={"beta": beta, "alpha": alpha},
    )
    validate(model)
    return model


CATALOG: dict[str, Callable[..., Model]] = {
    "linear_shot_noise": linear_shot_noise,
    "tanh_drift": tanh_drift,
    "updrift_negjumps": updrift_negjumps,
    "stress_release": stress_release,
}


def catalog(name: str, **params: float) -> Model:
    """Instantiate a catalog model by name."""
    try:
        factory = CATALOG[name]
    except KeyError:
        raise ModelError(
            f"unknown catalog model {name!r}; known: {sorted(CATALOG)}"
        ) from None
    return factory(**params)


# ---------------------------------------------------------------------------
# validation


def _probe_grid(lo: float, hi: float, n: int = 513) -> np.ndarray:
    return np.linspace(lo, hi, n)


def validate(model: Model, zero_tol: float = ZERO_TOL) -> None:
    """Reject structurally inconsistent models.

    Checks the declared zero set, right-continuity at marked points, rate
    nonnegativity, local_bound soundness, kernel sign consistency, and the
    two flow well-posedness hazards: undeclared drift discontinuities and
    discontinuities whose one-sided drifts point toward each other (no
    classical orbit exists through such a point).
    """
    lo, hi = model.working_interval
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ModelError(f"working interval must be finite with lo < hi, got {model.working_interval}")

    zs = model.drift.zeros
    if list(zs) != sorted(zs):
        raise ModelError("drift zeros must be sorted")
    for z in zs:
        if not (lo <= z <= hi):
            raise ModelError(f"drift zero {z} outside working interval")
        if abs(float(model.drift(z))) > zero_tol:
            raise ModelError(f"declared zero at {z} has mu({z}) = {model.drift(z)!r}")

    for p in tuple(zs) + tuple(model.drift.discontinuities):
        step = 1e-9 * max(1.0, abs(p))
        if abs(float(model.drift(p + step)) - float(model.drift(p))) > 1e-5 * (
            1.0 + abs(float(model.drift(p)))
        ):
            raise ModelError(f"drift not right-continuous at {p}")

    for d in model.drift.discontinuities:
        left = float(model.drift(d - 1e-7 * max(1.0, abs(d))))
        right = float(model.drift(d))
        if left > 0.0 > right:
            raise ModelError(
                f"drift discontinuity at {d} points inward (mu {left:+.3g} -> {right:+.3g}); "
                "orbits through it are not classical solutions"
            )

    grid = _probe_grid(lo, hi)
    lam = np.asarray(model.rate(grid), dtype=float)
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise ModelError("rate must be finite and nonnegative on the working interval")

    if model.rate.local_bound is not None:
        for a, b in [(lo, hi), (lo, 0.5 * (lo + hi)), (0.5 * (lo + hi), hi)]:
            sub = _probe_grid(a, b, 129)
            top = float(np.max(np.asarray(model.rate(sub), dtype=float)))
            if model.rate.local_bound(a, b) < top - 1e-9 * (1.0 + abs(top)):
                raise ModelError(f"local_bound underestimates the rate on [{a}, {b}]")

    mu = np.asarray(model.drift(grid), dtype=float)
    slopes = np.abs(np.diff(mu)) / np.diff(grid)
    marked = np.array(sorted(set(zs) | set(model.drift.discontinuities)), dtype=float)
    cell_width = grid[1] - grid[0]
    for i in range(1, len(slopes) - 1):
        neighbours = slopes[i - 1] + slopes[i + 1] + 1e-9
        if slopes[i] > 100.0 * neighbours:
            mid = 0.5 * (grid[i] + grid[i + 1])
            if marked.size and np.min(np.abs(marked - mid)) < 2 * cell_width:
                continue
            raise ModelError(
                f"drift appears discontinuous near x = {mid:.6g}; declare the "
                "discontinuity explicitly or smooth the model"
            )

    probe_rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(0x5EED)))
    for x in (lo + 0.25 * (hi - lo), 0.5 * (lo + hi), hi - 0.25 * (hi - lo)):
        draws = np.array([model.kernel.sample(float(x), probe_rng) for _ in range(64)])
        if np.any(draws == 0) or not np.all(np.isfinite(draws)):
            raise ModelError("jump sampler returned 0 or a non-finite size")
        if model.kernel.sign_support == "positive" and np.any(draws <= 0):
            raise ModelError("kernel declared positive but sampled a nonpositive jump")
        if model.kernel.sign_support == "negative" and np.any(draws >= 0):
            raise ModelError("kernel declared negative but sampled a nonnegative jump")
        for m in (model.kernel.mean_pos, model.kernel.mean_neg):
            if m is not None and m(float(x)) < 0:
                raise ModelError("jump moment evaluator returned a negative value")


# ---------------------------------------------------------------------------
# tail envelopes and scenario classification


@dataclass(frozen=True)
class TailEnvelope:
    """Bounds on the model characteristics above a threshold u0.

    xi_bar dominates every jump law J(x, .) for x >= u0 from above; xi_under
    (when present) bounds it from below. mu_bar, lambda_bar, lambda_under map
    u >= u0 to sup/inf of the respective characteristic on [u, inf).
    """

    u0: float
    xi_bar: LimitLaw
    mu_bar: Callable[[float], float]
    lambda_bar: Callable[[float], float]
    lambda_under: Callable[[float], float]
    xi_under: Optional[LimitLaw] = None


def _tail_extremum(fn: Callable, limit: Optional[float], kind: str) -> Callable[[float], float]:
    offsets = np.concatenate([[0.0], np.geomspace(1e-2, 1e4, 61)])

    def value(u: float) -> float:
        with np.errstate(over="ignore"):
            vals = np.asarray(fn(u + offsets), dtype=float)
        best = float(np.max(vals) if kind == "sup" else np.min(vals))
        if limit is not None:
            best = max(best, limit) if kind == "sup" else min(best, limit)
        return best

    return value


def tail_envelope(model: Model, u0: float) -> TailEnvelope:
    """Construct the domination envelope at threshold u0.

    Only available when the kernel does not depend on the state, in which
    case the kernel's own law dominates itself exactly (above and below).
    State-dependent kernels must bring a hand-built envelope.
    """
    lo, hi = model.working_interval
    if not (lo <= u0 <= hi):
        raise ModelError(f"u0 = {u0} outside working interval {model.working_interval}")
    if model.kernel.state_dependent or model.kernel.limit_law is None:
        raise ModelError(
            "no automatic envelope for state-dependent jump kernels; "
            "construct a TailEnvelope explicitly"
        )
    law = model.kernel.limit_law
    return TailEnvelope(
        u0=u0,
        xi_bar=law,
        xi_under=law,
        mu_bar=_tail_extremum(model.drift.fn, model.drift.limit_pos, "sup"),
        lambda_bar=_tail_extremum(model.rate.fn, model.rate.limit_pos, "sup"),
        lambda_under=_tail_extremum(model.rate.fn, model.rate.limit_pos, "inf"),
    )


@dataclass(frozen=True)
class ScenarioReport:
    scenario: str  # "S1" | "S2" | "S3" | "none"
    margin: float  # value of the matched negative-drift condition
    u0: float
    details: dict


def classify_scenario(model: Model, env: TailEnvelope) -> ScenarioReport:
    """Decide which asymptotic regime the model falls in.

    S1: drift diverging to -inf with strictly positive jumps above u0.
    S2: intensity diverging to +inf, positive drift above u0, and no jump
        ever landing at or above u0.
    S3: finite nonzero drift limit and finite intensity limit, with the jump
        sign matched to the drift sign at infinity.
    Each comes with its negative-drift margin; the first scenario whose
    structural clauses and margin both hold is returned.
    """
    u0 = env.u0
    details: dict[str, object] = {}
    drift_lim = model.drift.limit_pos
    rate_lim = model.rate.limit_pos
    if drift_lim is None:
        raise ModelError("drift limit at +infinity undeclared; classification needs it")
    if rate_lim is None:
        raise ModelError("rate limit at +infinity undeclared; classification needs it")
    support = model.kernel.sign_support

    margin1 = env.xi_bar.mean + _safe_div(env.mu_bar(u0), env.lambda_bar(u0))
    s1_structural = drift_lim == -math.inf and support == "positive"
    details["S1"] = {"structural": s1_structural, "margin": margin1}
    if s1_structural and margin1 < 0:
        return ScenarioReport("S1", margin1, u0, details)

    tail = np.concatenate([[0.0], np.geomspace(1e-2, 1e4, 61)]) + u0
    mu_tail_min = float(np.min(np.asarray(model.drift(tail), dtype=float)))
    margin2 = env.xi_bar.mean + _safe_div(env.mu_bar(u0), env.lambda_under(u0))
    s2_structural = (
        rate_lim == math.inf
        and mu_tail_min > 0
        and (drift_lim is None or drift_lim > 0)
        and support == "negative"
    )
    details["S2"] = {"structural": s2_structural, "margin": margin2}
    if s2_structural and margin2 < 0:
        return ScenarioReport("S2", margin2, u0, details)

    s3_structural = (
        math.isfinite(drift_lim)
        and drift_lim != 0
        and math.isfinite(rate_lim)
        and rate_lim >= 0
        and env.xi_under is not None
    )
    if s3_structural:
        if model.kernel.limit_law is None:
            raise ModelError("S3 classification needs the limiting jump law xi(inf)")
        law = model.kernel.limit_law
        if drift_lim < 0:
            s3_structural = support == "positive"
        else:
            s3_structural = support == "negative"
            if s3_structural and law.mgf is None:
                raise ModelError(
                    "S3 with positive drift limit needs the mgf of xi(inf) "
                    "(crossing-parameter equation)"
                )
        margin3 = law.mean + _safe_div(drift_lim, rate_lim)
        details["S3"] = {"structural": s3_structural, "margin": margin3}
        if s3_structural and margin3 < 0:
            return ScenarioReport("S3", margin3, u0, details)
    else:
        details["S3"] = {"structural": False, "margin": math.nan}

    return ScenarioReport("none", math.nan, u0, details)


# ---------------------------------------------------------------------------
# monotone state transforms


def transform_model(
    model: Model,
    g: Callable,
    g_prime: Callable,
    g_inverse: Callable,
    name: Optional[str] = None,
) -> Model:
    """Push the process through a strictly increasing C1 map y = g(x).

    The transformed triple is mu_g(y) = g'(g^-1(y)) mu(g^-1(y)), lambda_g(y) =
    lambda(g^-1(y)), and jumps z -> g(g^-1(y) + z) - y. Closed-form flow
    evaluators compose exactly. Limits at infinity and jump moments of the
    image are not derivable from the declared metadata, so they are left
    undeclared and downstream consumers will refuse to guess them.
    """
    lo, hi = model.working_interval
    xs = np.linspace(lo, hi, 33)
    gp = np.asarray(g_prime(xs), dtype=float)
    if np.any(gp <= 0):
        raise ModelError("transform requires g' > 0 on the working interval")
    ys = np.asarray(g(xs), dtype=float)
    back = np.asarray(g_inverse(ys), dtype=float)
    if np.max(np.abs(back - xs) / np.maximum(1.0, np.abs(xs))) > 1e-9:
        raise ModelError("g_inverse is not an inverse of g within 1e-9")

    def mu_g(y):
        x = g_inverse(np.asarray(y, dtype=float))
        return np.asarray(g_prime(x), dtype=float) * np.asarray(model.drift(x), dtype=float)

    def rate_g(y):
        return model.rate(g_inverse(np.asarray(y, dtype=float)))

    def sample_g(y: float, rng: np.random.Generator) -> float:
        x = float(g_inverse(y))
        return float(g(x + model.kernel.sample(x, rng))) - y

    bound = None
    if model.rate.local_bound is not None:
        bound = lambda a, b: model.rate.local_bound(float(g_inverse(a)), float(g_inverse(b)))

    cf = None
    if model.closed_flow is not None:
        base = model.closed_flow
        cf = ClosedFlow(
            state=lambda y, t: g(base.state(g_inverse(np.asarray(y, dtype=float)), t)),
            time_to_level=lambda y, v: base.time_to_level(
                g_inverse(np.asarray(y, dtype=float)), g_inverse(np.asarray(v, dtype=float))
            ),
            hazard=lambda y, t: base.hazard(g_inverse(np.asarray(y, dtype=float)), t),
            wait_from_mark=lambda y, e: base.wait_from_mark(
                g_inverse(np.asarray(y, dtype=float)), e
            ),
        )

    out = Model(
        drift=Drift(
            fn=mu_g,
            zeros=tuple(float(g(z)) for z in model.drift.zeros),
            discontinuities=tuple(float(g(d)) for d in model.drift.discontinuities),
        ),
        rate=JumpRate(fn=rate_g, local_bound=bound, constant=model.rate.constant),
        kernel=JumpKernel(
            sample=sample_g,
            sign_support=model.kernel.sign_support,
            state_dependent=True,
        ),
        working_interval=(float(g(lo)), float(g(hi))),
        closed_flow=cf,
        name=name or f"transform({model.name})",
        params=dict(model.params),
    )
    validate(out, zero_tol=1e-9)
    return out
