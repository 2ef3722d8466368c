"""Statistical estimators over simulated trajectories.

Everything here is a fold over the event log. Error bars are regenerative:
the path is cut into i.i.d. cycles at a base level's continuous crossings
and every estimator becomes a ratio of per-cycle sums, with the standard
error of stats.ratio_estimate. When no base level is available the fallback
batches contiguous stretches of path and applies the same ratio machinery
(plain CLT, correct up to residual block correlation).

The occupation-time density estimator is exact, not binned: the time an
orbit spends in a band is computed from closed-form (or numerically
refined) hit times of the band edges, segment by segment.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import stats
from .flow import hit_time
from .model import Model
from .simulate import (
    CycleData,
    Trajectory,
    _K_CUP,
    _K_CDOWN,
    _K_DUP,
    _K_DDOWN,
    crossing_arrays,
    cycle_counts,
)

__all__ = [
    "IntensityEstimate",
    "IntensityBundle",
    "DensityEstimate",
    "GammaEstimate",
    "CycleCountStats",
    "CyclePartition",
    "RiceReport",
    "TestFunction",
    "StationarityResidual",
    "cycle_partition",
    "burn_in_time",
    "default_bandwidth",
    "sample_states",
    "estimate_density",
    "density_sensitivity",
    "estimate_intensities",
    "pool_intensities",
    "rice_residual",
    "intensity_by_integral",
    "state_average_rate",
    "cycle_count_stats",
    "gamma_hat",
    "zero_cycle_residual",
    "stationarity_residual",
    "smooth_bump",
]


def _gen(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(rng)))


# ---------------------------------------------------------------------------
# cycle partition: the path cut at a base level, segments split at boundaries


@dataclass(frozen=True)
class CyclePartition:
    """Monotone path pieces labeled by regeneration cycle.

    piece_cycle is 0 for the head (before the first boundary), 1..n_cycles
    for complete cycles, n_cycles+1 for the tail. Pieces never straddle a
    boundary: segments containing one are split there, where the state is
    exactly the base level.
    """

    base: float
    boundaries: np.ndarray
    durations: np.ndarray  # complete cycle lengths
    piece_state: np.ndarray  # state at the start of each piece
    piece_t0: np.ndarray
    piece_dur: np.ndarray
    piece_cycle: np.ndarray

    @property
    def n_cycles(self) -> int:
        return int(self.durations.size)

    @property
    def span(self) -> float:
        return float(self.durations.sum())


def cycle_partition(traj: Trajectory, base: float) -> CyclePartition:
    times_u, kinds_u = crossing_arrays(traj, base)
    cmask = (kinds_u == _K_CUP) | (kinds_u == _K_CDOWN)
    boundaries = times_u[cmask]
    if boundaries.size < 2:
        raise ValueError(
            f"need at least 2 continuous crossings of base {base}, found {boundaries.size}"
        )
    starts, _, t0, _ = traj.segments
    m = boundaries.size

    all_t0 = np.concatenate([t0, boundaries])
    all_state = np.concatenate([starts, np.full(m, base)])
    is_boundary = np.concatenate([
        np.zeros(t0.size, dtype=np.int64), np.ones(m, dtype=np.int64),
    ])
    order = np.argsort(all_t0, kind="stable")
    piece_t0 = all_t0[order]
    piece_state = all_state[order]
    piece_cycle = np.cumsum(is_boundary[order])
    piece_dur = np.diff(np.append(piece_t0, traj.horizon))

    return CyclePartition(
        base=base,
        boundaries=boundaries,
        durations=np.diff(boundaries),
        piece_state=piece_state,
        piece_t0=piece_t0,
        piece_dur=piece_dur,
        piece_cycle=piece_cycle,
    )


def burn_in_time(traj: Trajectory, base: float) -> float:
    """Time of the first continuous crossing of the base level."""
    times_u, kinds_u = crossing_arrays(traj, base)
    cmask = (kinds_u == _K_CUP) | (kinds_u == _K_CDOWN)
    if not cmask.any():
        raise ValueError(f"path never crosses base level {base} continuously")
    return float(times_u[cmask][0])


def _pseudo_blocks(values: np.ndarray, lengths: np.ndarray, n_blocks: int = 100):
    """Contiguous block sums as pseudo-cycles for the no-base fallback."""
    n = values.size
    n_blocks = min(n_blocks, max(2, n // 2))
    edges = np.linspace(0, n, n_blocks + 1).astype(np.int64)
    y = np.add.reduceat(values, edges[:-1])
    ln = np.add.reduceat(lengths, edges[:-1])
    return y, ln


# ---------------------------------------------------------------------------
# occupation-time density


@dataclass(frozen=True)
class DensityEstimate:
    grid: np.ndarray
    h: float
    values: np.ndarray
    se: np.ndarray
    base: Optional[float]
    total_time: float

    def as_dict(self) -> dict:
        return {
            "grid": self.grid.tolist(), "h": self.h,
            "values": self.values.tolist(), "se": self.se.tolist(),
            "base": self.base, "total_time": self.total_time,
        }

    def to_csv(self, path) -> None:
        data = np.column_stack([self.grid, self.values, self.se])
        np.savetxt(path, data, delimiter=",", header="u,p_hat,stderr",
                   comments="", fmt="%.17g")


def _segment_ttl(model: Model, s: np.ndarray, level: float) -> np.ndarray:
    if model.closed_flow is not None:
        return np.asarray(model.closed_flow.time_to_level(s, level), dtype=float)
    return np.array([hit_time(model, float(x), level) for x in s])


def _piece_occupation(model: Model, s: np.ndarray, d: np.ndarray,
                      a: float, b: float) -> np.ndarray:
    """Exact time each monotone piece (start state s, duration d) spends in
    [a, b]. Uses hit times of the band edges; an orbit parked at a drift zero
    contributes its full duration iff the zero lies in the band."""
    mu = np.asarray(model.drift(s), dtype=float)
    ta = _segment_ttl(model, s, a)
    tb = _segment_ttl(model, s, b)
    occ = np.zeros_like(d)

    up = mu > 0
    if up.any():
        enter = np.where(s >= a, 0.0, np.minimum(ta, d))
        exit_ = np.minimum(tb, d)
        occ_up = np.clip(exit_ - enter, 0.0, None)
        occ_up[s > b] = 0.0
        occ[up] = occ_up[up]

    down = mu < 0
    if down.any():
        enter = np.where(s <= b, 0.0, np.minimum(tb, d))
        exit_ = np.minimum(ta, d)
        occ_dn = np.clip(exit_ - enter, 0.0, None)
        occ_dn[s < a] = 0.0
        occ[down] = occ_dn[down]

    flat = mu == 0
    if flat.any():
        occ[flat] = (d * ((s >= a) & (s <= b)))[flat]
    return occ


def default_bandwidth(traj: Trajectory, rng=0xBA5E, n: int = 10_000) -> float:
    """h = 0.02 * IQR of time-sampled states."""
    xs = sample_states(traj, n, rng)
    q1, q3 = np.percentile(xs, [25, 75])
    h = 0.02 * (q3 - q1)
    if h <= 0:
        raise ValueError("degenerate state sample; supply a bandwidth explicitly")
    return float(h)


def estimate_density(
    traj: Trajectory,
    grid: Sequence[float],
    h: float,
    base: Optional[float] = None,
    partition: Optional[CyclePartition] = None,
) -> DensityEstimate:
    """Occupation-time density p_hat(u) = time in [u-h, u+h] / (2h T).

    With a base level (or a prebuilt partition) T is the complete-cycle span
    and errors are regenerative; otherwise the whole path is used with block
    errors. Grid points within h of a drift zero are rejected: the stationary
    law may carry an atom there and the band estimate would smear it.
    """
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    grid = np.asarray(grid, dtype=float)
    zeros = np.asarray(traj.model.drift.zeros, dtype=float)
    if zeros.size:
        gaps = np.min(np.abs(grid[:, None] - zeros[None, :]), axis=1)
        if np.any(gaps <= h):
            bad = grid[gaps <= h]
            raise ValueError(
                f"grid points {bad.tolist()} are within h={h} of a drift zero; "
                "the density is estimated away from possible atoms"
            )

    if partition is None and base is not None:
        partition = cycle_partition(traj, base)

    if partition is not None:
        s, d = partition.piece_state, partition.piece_dur
        cyc = partition.piece_cycle
        m = partition.n_cycles
        lengths = partition.durations
        total = partition.span
        values = np.empty(grid.size)
        ses = np.empty(grid.size)
        for i, u in enumerate(grid):
            occ = _piece_occupation(traj.model, s, d, u - h, u + h)
            per_cycle = np.bincount(cyc, weights=occ, minlength=m + 2)[1:m + 1]
            r, se = stats.ratio_estimate(per_cycle, lengths)
            values[i] = r / (2 * h)
            ses[i] = se / (2 * h)
        return DensityEstimate(grid=grid, h=h, values=values, se=ses,
                               base=partition.base, total_time=total)

    starts, _, t0, t1 = traj.segments
    d = t1 - t0
    values = np.empty(grid.size)
    ses = np.empty(grid.size)
    for i, u in enumerate(grid):
        occ = _piece_occupation(traj.model, starts, d, u - h, u + h)
        y, ln = _pseudo_blocks(occ, d)
        r, se = stats.ratio_estimate(y, ln)
        values[i] = r / (2 * h)
        ses[i] = se / (2 * h)
    return DensityEstimate(grid=grid, h=h, values=values, se=ses,
                           base=None, total_time=float(traj.horizon))


def density_sensitivity(traj, grid, h, **kw) -> dict:
    """The acceptance suite requires the halved/doubled bandwidth report."""
    return {
        "half": estimate_density(traj, grid, h / 2, **kw),
        "base": estimate_density(traj, grid, h, **kw),
        "double": estimate_density(traj, grid, 2 * h, **kw),
    }


# ---------------------------------------------------------------------------
# crossing intensities


@dataclass(frozen=True)
class IntensityEstimate:
    """Events per unit time for one crossing family at one level.

    For counting estimates value = count / time holds exactly; integral-route
    estimates (intensity_by_integral) carry time = nan since they average
    over states rather than clock time.
    """

    level: float
    kind: str  # "nu" | "nu_plus_d" | "nu_minus_d" | "nu_plus"
    value: float
    se: float
    count: int
    time: float

    def as_dict(self) -> dict:
        return {"level": self.level, "kind": self.kind, "value": self.value,
                "se": self.se, "count": self.count, "time": self.time}


@dataclass(frozen=True)
class IntensityBundle:
    level: float
    nu: IntensityEstimate
    nu_plus_d: IntensityEstimate
    nu_minus_d: IntensityEstimate
    nu_plus: IntensityEstimate

    def __iter__(self):
        return iter((self.nu, self.nu_plus_d, self.nu_minus_d, self.nu_plus))


def estimate_intensities(
    traj: Trajectory,
    u: float,
    base: Optional[float] = None,
    partition: Optional[CyclePartition] = None,
) -> IntensityBundle:
    """nu, nu_{+,d}, nu_{-,d} and nu_+ at level u.

    nu counts continuous crossings; nu_+ = 1{mu(u)>0} nu + nu_{+,d} per the
    upcrossing decomposition. Per-cycle counts share one ratio estimator per
    kind, so standard errors carry the within-cycle covariance.
    """
    times, kinds = crossing_arrays(traj, u)
    if partition is None and base is not None:
        partition = cycle_partition(traj, base)

    up_weight = 1.0 if float(traj.model.drift(u)) > 0 else 0.0
    masks = {
        "nu": (kinds == _K_CUP) | (kinds == _K_CDOWN),
        "nu_plus_d": kinds == _K_DUP,
        "nu_minus_d": kinds == _K_DDOWN,
    }

    if partition is not None:
        bnd = partition.boundaries
        m = partition.n_cycles
        lengths = partition.durations
        window = partition.span
        per_kind = {}
        for name, mask in masks.items():
            posn = np.searchsorted(bnd, times[mask], side="left")
            inner = (posn >= 1) & (posn <= m)
            per_kind[name] = np.bincount(posn[inner] - 1, minlength=m).astype(float)
        per_kind["nu_plus"] = up_weight * per_kind["nu"] + per_kind["nu_plus_d"]

        out = {}
        for name, y in per_kind.items():
            r, se = stats.ratio_estimate(y, lengths)
            out[name] = IntensityEstimate(
                level=u, kind=name, value=r, se=se,
                count=int(round(y.sum())), time=window,
            )
        return IntensityBundle(level=u, **out)

    # no base level: contiguous time blocks as pseudo-cycles
    T = float(traj.horizon)
    n_blocks = 100 if times.size >= 200 else max(2, int(times.size) // 2 or 2)
    edges = np.linspace(0.0, T, n_blocks + 1)
    lengths = np.diff(edges)
    out = {}
    counts = {}
    for name, mask in masks.items():
        idx = np.clip(np.searchsorted(edges, times[mask], side="right") - 1, 0, n_blocks - 1)
        counts[name] = np.bincount(idx, minlength=n_blocks).astype(float)
    counts["nu_plus"] = up_weight * counts["nu"] + counts["nu_plus_d"]
    for name, y in counts.items():
        r, se = stats.ratio_estimate(y, lengths)
        out[name] = IntensityEstimate(level=u, kind=name, value=r, se=se,
                                      count=int(round(y.sum())), time=T)
    return IntensityBundle(level=u, **out)


def pool_intensities(parts: Sequence[IntensityEstimate]) -> IntensityEstimate:
    """Merge disjoint-run estimates: pooled counts over pooled time.

    The point estimate is exactly the concatenated-data estimate; the pooled
    standard error combines the parts time-weighted.
    """
    if not parts:
        raise ValueError("nothing to pool")
    kinds = {p.kind for p in parts}
    levels = {p.level for p in parts}
    if len(kinds) != 1 or len(levels) != 1:
        raise ValueError("can only pool estimates of one kind at one level")
    total_t = sum(p.time for p in parts)
    total_c = sum(p.count for p in parts)
    var = sum((p.se * p.time) ** 2 for p in parts) / total_t**2
    return IntensityEstimate(
        level=parts[0].level, kind=parts[0].kind,
        value=total_c / total_t, se=math.sqrt(var),
        count=total_c, time=total_t,
    )


# ---------------------------------------------------------------------------
# Rice residuals


@dataclass(frozen=True)
class RiceReport:
    grid: np.ndarray
    mu: np.ndarray
    nu_hat: np.ndarray
    p_hat: np.ndarray
    residual: np.ndarray  # (nu - |mu| p) / pooled se
    balance_residual: np.ndarray  # (nu_minus_d - nu_plus_d - mu p) / pooled se
    rel_error: np.ndarray  # |nu - |mu| p| / nu

    def max_abs_residual(self) -> float:
        return float(np.max(np.abs(self.residual)))


def rice_residual(
    density: DensityEstimate,
    intensities: Sequence[IntensityBundle],
    model: Model,
) -> RiceReport:
    """Standardized residuals of nu(u) = |mu(u)| p(u) on the density grid,
    plus the balance form nu_{-,d} - nu_{+,d} = mu p.

    Pooled errors add the two routes in quadrature; the routes share the
    path, and their errors are positively correlated, so pooling is mildly
    conservative.
    """
    if len(intensities) != density.grid.size:
        raise ValueError("one intensity bundle per grid point required")
    levels = np.array([b.level for b in intensities])
    if not np.allclose(levels, density.grid, rtol=0, atol=1e-12):
        raise ValueError("intensity levels do not match the density grid")

    mu = np.asarray(model.drift(density.grid), dtype=float)
    nu = np.array([b.nu.value for b in intensities])
    nu_se = np.array([b.nu.se for b in intensities])
    dplus = np.array([b.nu_plus_d.value for b in intensities])
    dplus_se = np.array([b.nu_plus_d.se for b in intensities])
    dminus = np.array([b.nu_minus_d.value for b in intensities])
    dminus_se = np.array([b.nu_minus_d.se for b in intensities])

    pooled = np.sqrt(nu_se**2 + (mu * density.se) ** 2)
    resid = (nu - np.abs(mu) * density.values) / pooled
    pooled_bal = np.sqrt(dminus_se**2 + dplus_se**2 + (mu * density.se) ** 2)
    resid_bal = (dminus - dplus - mu * density.values) / pooled_bal
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.abs(nu - np.abs(mu) * density.values) / nu
    return RiceReport(
        grid=density.grid, mu=mu, nu_hat=nu, p_hat=density.values,
        residual=resid, balance_residual=resid_bal, rel_error=rel,
    )


# ---------------------------------------------------------------------------
# integral-route intensities and the state-average rate


def sample_states(traj: Trajectory, n: int, rng, t_min: float = 0.0) -> np.ndarray:
    """States at n uniform times in [t_min, horizon], time-ordered."""
    g = _gen(rng)
    ts = np.sort(g.uniform(t_min, traj.horizon, size=n))
    return np.asarray(traj.state_at(ts), dtype=float)


def intensity_by_integral(
    model: Model,
    states: np.ndarray,
    u: float,
    rng,
) -> tuple[IntensityEstimate, IntensityEstimate]:
    """Monte Carlo of the jump-route intensities as stationary integrals:
    nu_{+,d}(u) = E_pi[lambda(X) J(X, [u - X, inf))] via one kernel draw per
    sampled state, and the mirror image for nu_{-,d}.

    States come from time-sampling one long run, so errors are block-based.
    """
    g = _gen(rng)
    states = np.asarray(states, dtype=float)
    n = states.size
    kern = model.kernel
    if kern.sample_block is not None:
        z = kern.sample_block(n, g)
    else:
        z = np.array([kern.sample(float(x), g) for x in states])
    lam = np.asarray(model.rate(states), dtype=float)
    land = states + z
    up = lam * ((states < u) & (land >= u))
    down = lam * ((states >= u) & (land < u))

    est = []
    for name, vals, fires in (
        ("nu_plus_d", up, int(np.count_nonzero(up))),
        ("nu_minus_d", down, int(np.count_nonzero(down))),
    ):
        mean, se = stats.block_estimate(vals)
        est.append(IntensityEstimate(level=u, kind=name, value=mean, se=se,
                                     count=fires, time=math.nan))
    return est[0], est[1]


def state_average_rate(model: Model, states: np.ndarray) -> tuple[float, float]:
    """mean lambda over sampled states with block standard error; matches the
    event-count rate (jumps per unit time) on a stationary stretch."""
    lam = np.asarray(model.rate(np.asarray(states, dtype=float)), dtype=float)
    return stats.block_estimate(lam)


# ---------------------------------------------------------------------------
# per-cycle count laws


@dataclass(frozen=True)
class CycleCountStats:
    """Histogram of per-cycle N^b over complete cycles."""

    base: float
    level: float
    histogram: np.ndarray  # histogram[k] = number of cycles with count k
    total_cycles: int
    mean: float


def cycle_count_stats(data: CycleData, b: float, which: str = "cont") -> CycleCountStats:
    """Histogram of per-cycle counts at target b.

    which selects the counter: "cont" (continuous crossings, the subject of
    the regenerative law), "up" (arrivals into the upper set), or "total".
    """
    tc = data.targets[b]
    if which not in ("cont", "up", "total"):
        raise ValueError(f"unknown counter {which!r}")
    counts = getattr(tc, which)
    hist = np.bincount(counts)
    return CycleCountStats(
        base=data.base, level=b, histogram=hist,
        total_cycles=int(counts.size), mean=float(counts.mean()),
    )


@dataclass(frozen=True)
class GammaEstimate:
    base: float
    level: float
    gamma: float
    se: float
    positive_cycles: int


def gamma_hat(cycles: Sequence[CycleCountStats]) -> GammaEstimate:
    """MLE of the cycle-count tail parameter from pooled histograms.

    Positive per-cycle counts are zero-truncated geometric with success
    probability 1 - gamma, so gamma_hat = 1 - m/S for m positive cycles with
    total count S; the standard error is the inverse Fisher information
    sqrt(gamma (1-gamma)^2 / m).
    """
    if not cycles:
        raise ValueError("no cycle statistics supplied")
    bases = {c.base for c in cycles}
    levels = {c.level for c in cycles}
    if len(bases) != 1 or len(levels) != 1:
        raise ValueError("cycle statistics mix bases or targets")
    kmax = max(c.histogram.size for c in cycles)
    hist = np.zeros(kmax, dtype=np.int64)
    for c in cycles:
        hist[: c.histogram.size] += c.histogram
    ks = np.arange(kmax)
    m = int(hist[1:].sum())
    if m == 0:
        raise ValueError("no cycles with a positive count; cannot fit the tail")
    if m < 30:
        raise ValueError(f"need at least 30 positive cycles, got {m}")
    s = int((ks * hist).sum())
    gamma = 1.0 - m / s
    se = math.sqrt(gamma * (1.0 - gamma) ** 2 / m)
    return GammaEstimate(base=next(iter(bases)), level=next(iter(levels)),
                         gamma=gamma, se=se, positive_cycles=m)


def zero_cycle_residual(
    stats_b: CycleCountStats,
    gamma: GammaEstimate,
    nu_base: IntensityEstimate,
    nu_target: IntensityEstimate,
) -> float:
    """Standardized residual of the zero-count cycle fraction against
    1 - (nu(b)/nu(u)) (1 - gamma)."""
    n = stats_b.total_cycles
    n0 = int(stats_b.histogram[0]) if stats_b.histogram.size else 0
    f_obs = n0 / n
    ratio = nu_target.value / nu_base.value
    pred = 1.0 - ratio * (1.0 - gamma.gamma)
    var_f = f_obs * (1.0 - f_obs) / n
    var_ratio = ratio**2 * ((nu_target.se / nu_target.value) ** 2
                            + (nu_base.se / nu_base.value) ** 2)
    var_pred = (1.0 - gamma.gamma) ** 2 * var_ratio + ratio**2 * gamma.se**2
    return float((f_obs - pred) / math.sqrt(var_f + var_pred))


# ---------------------------------------------------------------------------
# stationarity equation


@dataclass(frozen=True)
class TestFunction:
    """Bounded f with continuous compactly supported derivative."""

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    f_prime: Callable[[np.ndarray], np.ndarray]


def smooth_bump(center: float, halfwidth: float, name: Optional[str] = None) -> TestFunction:
    """f' is the quartic bump (1-s^2)^2 on |s| <= 1, s = (x-center)/halfwidth;
    f is its C1 antiderivative, constant outside the support."""
    hw = float(halfwidth)

    def fp(x):
        s = (np.asarray(x, dtype=float) - center) / hw
        inside = np.abs(s) <= 1.0
        return np.where(inside, (1.0 - s**2) ** 2, 0.0)

    def f(x):
        s = np.clip((np.asarray(x, dtype=float) - center) / hw, -1.0, 1.0)
        g = s - 2.0 * s**3 / 3.0 + s**5 / 5.0
        return hw * (g + 8.0 / 15.0)

    return TestFunction(name=name or f"bump[{center - hw},{center + hw}]", f=f, f_prime=fp)


@dataclass(frozen=True)
class StationarityResidual:
    name: str
    lhs: float  # E[f'(X) mu(X)]
    rhs: float  # E[lambda(X) (f(X) - f(X+Z))]
    se: float  # block se of the paired difference
    residual: float


def stationarity_residual(
    traj: Trajectory,
    f_family: Sequence[TestFunction],
    n_states: int = 100_000,
    rng=0x57A7,
    burn: float = 0.0,
) -> list:
    """Monte Carlo residuals of the stationarity identity
    int f' mu dpi = int int lambda(x)(f(x) - f(x+z)) J(x,dz) pi(dx),
    one per test function. Both sides share the sampled states, so the
    difference is estimated directly with block errors.
    """
    g = _gen(rng)
    xs = sample_states(traj, n_states, g, t_min=burn)
    kern = traj.model.kernel
    if kern.sample_block is not None:
        z = kern.sample_block(xs.size, g)
    else:
        z = np.array([kern.sample(float(x), g) for x in xs])
    lam = np.asarray(traj.model.rate(xs), dtype=float)
    mu = np.asarray(traj.model.drift(xs), dtype=float)

    out = []
    for tf in f_family:
        lhs = np.asarray(tf.f_prime(xs), dtype=float) * mu
        rhs = lam * (np.asarray(tf.f(xs), dtype=float)
                     - np.asarray(tf.f(xs + z), dtype=float))
        diff, se = stats.block_estimate(lhs - rhs)
        out.append(StationarityResidual(
            name=tf.name, lhs=float(lhs.mean()), rhs=float(rhs.mean()),
            se=se, residual=float(diff / se) if se > 0 else 0.0,
        ))
    return out
