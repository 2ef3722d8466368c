"""Exact trajectory simulation and pathwise event extraction.

Waits are drawn by inverting the integrated hazard at i.i.d. Exp(1) marks,
which is exact in distribution; thinning against RateFn.local_bound is kept
as an independent cross-check mode. The generator is counter-based (Philox),
keyed by (seed, stream, substream) with three fixed substreams: 0 for the
exponential marks, 1 for jump sizes, 2 for auxiliary draws (thinning
acceptance). Changing one consumer therefore never perturbs the others, and
identical (seed, stream) reproduces a bit-identical event log regardless of
the internal chunk size.

Crossing detection leans on one structural fact: an orbit never crosses a
zero of the drift, so every inter-jump segment is monotone and a level is
crossed continuously in a segment iff it lies strictly between the segment
endpoints. That reduces all pathwise counting to vectorized comparisons on
the event log.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .flow import FlowError, T_CAP, flow, hit_time
from .model import Model

__all__ = [
    "RngConfig",
    "Horizon",
    "EventCount",
    "CycleCount",
    "FirstPassage",
    "Trajectory",
    "CrossingEvent",
    "CycleRecord",
    "CycleData",
    "TargetCounts",
    "CycleDecomposition",
    "FirstPassageSample",
    "simulate",
    "detect_crossings",
    "crossing_arrays",
    "crossing_counts",
    "crossing_balance",
    "cycle_counts",
    "cycle_decompose",
    "first_passages",
    "first_passage_sample",
    "CONTINUOUS_UP",
    "CONTINUOUS_DOWN",
    "DISCONTINUOUS_UP",
    "DISCONTINUOUS_DOWN",
    "KIND_NAMES",
]


@dataclass(frozen=True)
class RngConfig:
    """Reproducibility key. algorithm is fixed; the field exists so manifests
    are self-describing."""

    seed: int
    stream: int = 0
    algorithm: str = "philox"


def _rng(cfg: RngConfig, substream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(cfg.seed, spawn_key=(cfg.stream, substream))
    return np.random.Generator(np.random.Philox(ss))


# stop rules


@dataclass(frozen=True)
class Horizon:
    t: float


@dataclass(frozen=True)
class EventCount:
    n: int


@dataclass(frozen=True)
class CycleCount:
    """Stop at the (n+1)-th continuous crossing of `level`, leaving exactly
    n complete regeneration cycles between the first and last crossing."""

    n: int
    level: float


@dataclass(frozen=True)
class FirstPassage:
    """Stop at T(b) = inf{t : X_t >= b}. Not part of the core stop-rule trio
    but first-passage replications need the path truncated exactly there."""

    level: float


StopRule = Union[Horizon, EventCount, CycleCount, FirstPassage]


def _stop_dict(stop: StopRule) -> dict:
    d = {"kind": type(stop).__name__.lower()}
    for k, v in stop.__dict__.items():
        d[k] = v
    return d


# crossing kind codes (array form); names are the public vocabulary
CONTINUOUS_UP = "continuous_up"
CONTINUOUS_DOWN = "continuous_down"
DISCONTINUOUS_UP = "discontinuous_up"
DISCONTINUOUS_DOWN = "discontinuous_down"
KIND_NAMES = (CONTINUOUS_UP, CONTINUOUS_DOWN, DISCONTINUOUS_UP, DISCONTINUOUS_DOWN)
_KIND_NAMES = KIND_NAMES  # internal alias
_K_CUP, _K_CDOWN, _K_DUP, _K_DDOWN = 0, 1, 2, 3


class CrossingEvent(NamedTuple):
    level: float
    time: float
    kind: str


@dataclass
class Trajectory:
    """Ordered event log plus flow descriptors between jumps.

    times[i] is T_{i+1}; pre/size/post are X_{T-}, Z, X_T; waits holds the
    exact inter-jump durations as drawn (diff(times) reproduces them only up
    to accumulated rounding of the running clock). The log ends at `horizon`
    with state `end_state` (mid-segment for horizon/cycle/passage stops).
    """

    model: Model
    x0: float
    times: np.ndarray
    waits: np.ndarray
    pre: np.ndarray
    size: np.ndarray
    post: np.ndarray
    horizon: float
    end_state: float
    rng: RngConfig
    stop: StopRule
    method: str = "inversion"

    @property
    def n_jumps(self) -> int:
        return int(self.times.size)

    @cached_property
    def segments(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(starts, ends, t0, t1) for the n+1 monotone segments, including
        the initial stretch from x0 and the tail up to the horizon."""
        n = self.times.size
        starts = np.empty(n + 1)
        starts[0] = self.x0
        starts[1:] = self.post
        ends = np.empty(n + 1)
        ends[:n] = self.pre
        ends[n] = self.end_state
        t0 = np.empty(n + 1)
        t0[0] = 0.0
        t0[1:] = self.times
        t1 = np.empty(n + 1)
        t1[:n] = self.times
        t1[n] = self.horizon
        return starts, ends, t0, t1

    def state_at(self, t) -> np.ndarray:
        """X_t for t in [0, horizon], vectorized (right-continuous version)."""
        t = np.asarray(t, dtype=float)
        if np.any((t < 0) | (t > self.horizon)):
            raise ValueError("query times must lie in [0, horizon]")
        idx = np.searchsorted(self.times, t, side="right") - 1
        start = np.where(idx >= 0, self.post[np.maximum(idx, 0)] if self.post.size else 0.0, self.x0)
        t_from = np.where(idx >= 0, self.times[np.maximum(idx, 0)] if self.times.size else 0.0, 0.0)
        dt = t - t_from
        if self.model.closed_flow is not None:
            return np.asarray(self.model.closed_flow.state(start, dt), dtype=float)
        out = np.empty_like(np.atleast_1d(dt))
        for i, (s, d) in enumerate(zip(np.atleast_1d(start), np.atleast_1d(dt))):
            out[i] = flow(self.model, float(s), float(d))
        return out.reshape(np.shape(t))

    def verify_flow(self) -> float:
        """Max relative residual of X_{T_n-} = q(X_{T_{n-1}}, wait_n).

        Uses the exact stored waits; with a closed flow the jump-segment
        reconstruction is bit-identical to the generation loop. The final
        stretch re-derives its duration from the running clock, so paths cut
        mid-segment carry a residual at rounding scale there; anything above
        ~1e-9 flags real log corruption.
        """
        starts, ends, t0, t1 = self.segments
        n = self.times.size
        dts = np.empty(n + 1)
        dts[:n] = self.waits
        dts[n] = self.horizon - (self.times[-1] if n else 0.0)
        if self.model.closed_flow is not None:
            q = np.asarray(self.model.closed_flow.state(starts, dts), dtype=float)
        else:
            q = np.array([flow(self.model, float(s), float(d)) for s, d in zip(starts, dts)])
        return float(np.max(np.abs(q - ends) / np.maximum(1.0, np.abs(ends))))

    def to_csv(self, path) -> None:
        n = self.times.size
        data = np.column_stack([
            np.arange(1, n + 1, dtype=float), self.times, self.pre, self.size, self.post,
        ])
        np.savetxt(path, data, delimiter=",", header="n,T_n,X_pre,Z_n,X_post",
                   comments="", fmt="%.17g")

    def manifest(self) -> dict:
        return {
            "model": self.model.describe(),
            "x0": self.x0,
            "rng": {"seed": self.rng.seed, "stream": self.rng.stream,
                    "algorithm": self.rng.algorithm},
            "stop": _stop_dict(self.stop),
            "method": self.method,
            "n_events": self.n_jumps,
            "horizon": self.horizon,
            "end_state": self.end_state,
        }

    def save_manifest(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.manifest(), fh, indent=2, sort_keys=True)
            fh.write("\n")


# ---------------------------------------------------------------------------
# the engine


def _draw_waits_inversion(model: Model, x: float, marks: np.ndarray,
                          sizes_rng: np.random.Generator,
                          pre: np.ndarray, waits: np.ndarray, post: np.ndarray) -> float:
    """Advance one chunk of events from state x. Fills pre/waits/post in
    place, returns the state after the last jump. Fast paths in order:
    constant rate + closed stepper, closed hazard inversion, numeric."""
    n = marks.shape[0]
    kern = model.kernel
    cf = model.closed_flow

    if model.rate.constant is not None and cf is not None and cf.stepper is not None:
        lam0 = model.rate.constant
        np.divide(marks, lam0, out=waits)
        if kern.sample_block is not None:
            sizes = kern.sample_block(n, sizes_rng)
        else:  # constant-rate stepper models ship block samplers; keep a slow path anyway
            sizes = np.array([kern.sample(0.0, sizes_rng) for _ in range(n)])
        x = cf.stepper(x, waits, sizes, pre)
        np.add(pre, sizes, out=post)
        return x

    if cf is not None:
        wfm, state = cf.wait_from_mark, cf.state
        block = kern.sample_block(n, sizes_rng) if kern.sample_block is not None else None
        for i in range(n):
            w = float(wfm(x, marks[i]))
            if not math.isfinite(w):
                raise FlowError(f"hazard ceiling from state {x:.6g}")
            q = float(state(x, w))
            z = block[i] if block is not None else kern.sample(q, sizes_rng)
            waits[i] = w
            pre[i] = q
            post[i] = q + z
            x = q + z
        return x

    from .flow import invert_hazard  # numeric fallback, scalar per event

    block = kern.sample_block(n, sizes_rng) if kern.sample_block is not None else None
    for i in range(n):
        w = invert_hazard(model, x, float(marks[i]))
        q = flow(model, x, w)
        z = block[i] if block is not None else kern.sample(q, sizes_rng)
        waits[i] = w
        pre[i] = q
        post[i] = q + z
        x = q + z
    return x


def _thinning_wait(model: Model, x: float, marks_rng: np.random.Generator,
                   aux_rng: np.random.Generator, window: float = 1.0) -> float:
    """One inter-jump wait by window thinning against local_bound."""
    bound = model.rate.local_bound
    if bound is None:
        raise FlowError("thinning needs RateFn.local_bound")
    rate = model.rate
    t_off = 0.0
    while t_off < T_CAP:
        q0 = flow(model, x, t_off)
        q1 = flow(model, x, t_off + window)
        lam_star = float(bound(min(q0, q1), max(q0, q1)))
        if lam_star <= 0.0:
            t_off += window
            continue
        s = float(marks_rng.standard_exponential()) / lam_star
        if s >= window:
            t_off += window
            continue
        t_cand = t_off + s
        lam_here = float(rate(flow(model, x, t_cand)))
        if float(aux_rng.uniform()) * lam_star <= lam_here:
            return t_cand
        t_off = t_cand
    raise FlowError(f"thinning exceeded the {T_CAP:g} time cap from state {x:.6g}")


def _first_true(mask: np.ndarray) -> int:
    return int(np.argmax(mask)) if mask.any() else -1


def simulate(
    model: Model,
    x0: float,
    stop: StopRule,
    rng: Union[RngConfig, int],
    *,
    method: str = "inversion",
    chunk: int = 1 << 16,
    max_events: Optional[int] = 100_000_000,
) -> Trajectory:
    """Generate one exact trajectory under the given stop rule.

    method: "inversion" (default, exact hazard inversion) or "thinning"
    (cross-check; same law, different draw sequence).
    """
    if isinstance(rng, int):
        rng = RngConfig(seed=rng)
    lo, hi = model.working_interval
    if not (lo <= x0 <= hi):
        raise ValueError(f"x0 = {x0} outside working interval {model.working_interval}")
    if method not in ("inversion", "thinning"):
        raise ValueError(f"unknown method {method!r}")

    marks_rng = _rng(rng, 0)
    sizes_rng = _rng(rng, 1)
    aux_rng = _rng(rng, 2)

    cf = model.closed_flow
    kern = model.kernel

    def seg_level_time(x_from: float, level: float) -> float:
        if cf is not None:
            return float(cf.time_to_level(x_from, level))
        return hit_time(model, x_from, level)

    # degenerate immediate stops
    if isinstance(stop, FirstPassage) and x0 >= stop.level:
        empty = np.empty(0)
        return Trajectory(model, float(x0), empty, empty.copy(), empty.copy(),
                          empty.copy(), empty.copy(), 0.0, float(x0), rng, stop, method)
    if isinstance(stop, Horizon) and stop.t == 0.0:
        empty = np.empty(0)
        return Trajectory(model, float(x0), empty, empty.copy(), empty.copy(),
                          empty.copy(), empty.copy(), 0.0, float(x0), rng, stop, method)

    chunks_t, chunks_w, chunks_pre, chunks_z, chunks_post = [], [], [], [], []
    x_cur = float(x0)
    t_base = 0.0
    n_total = 0
    n_cross = 0  # CycleCount progress
    done = False
    horizon = math.nan
    end_state = math.nan

    while not done:
        if max_events is not None and n_total >= max_events:
            raise FlowError(
                f"stop rule {stop!r} not reached after {n_total} events"
            )
        if method == "inversion":
            marks = marks_rng.standard_exponential(chunk)
            pre = np.empty(chunk)
            waits = np.empty(chunk)
            post = np.empty(chunk)
            x_next = _draw_waits_inversion(model, x_cur, marks, sizes_rng, pre, waits, post)
        else:
            pre = np.empty(chunk)
            waits = np.empty(chunk)
            post = np.empty(chunk)
            x_next = x_cur
            block = kern.sample_block(chunk, sizes_rng) if kern.sample_block is not None else None
            for i in range(chunk):
                w = _thinning_wait(model, x_next, marks_rng, aux_rng)
                q = flow(model, x_next, w)
                z = block[i] if block is not None else kern.sample(q, sizes_rng)
                waits[i] = w
                pre[i] = q
                post[i] = q + z
                x_next = q + z

        times = t_base + np.cumsum(waits)
        sizes = post - pre
        keep = chunk

        if isinstance(stop, Horizon):
            if times[-1] >= stop.t:
                keep = int(np.searchsorted(times, stop.t, side="right"))
                last_post = post[keep - 1] if keep else x_cur
                last_t = times[keep - 1] if keep else t_base
                gap = stop.t - last_t
                end_state = (float(cf.state(last_post, gap)) if cf is not None
                             else flow(model, float(last_post), float(gap)))
                horizon = stop.t
                done = True
        elif isinstance(stop, EventCount):
            if n_total + chunk >= stop.n:
                keep = stop.n - n_total
                horizon = float(times[keep - 1]) if keep else t_base
                end_state = float(post[keep - 1]) if keep else x_cur
                done = True
        elif isinstance(stop, CycleCount):
            u = stop.level
            seg_start = np.empty(chunk)
            seg_start[0] = x_cur
            seg_start[1:] = post[:-1]
            crossed = (seg_start - u) * (pre - u) < 0.0
            csum = n_cross + np.cumsum(crossed)
            if csum[-1] >= stop.n + 1:
                j = _first_true(csum >= stop.n + 1)
                t_seg = times[j - 1] if j > 0 else t_base
                ttl = seg_level_time(float(seg_start[j]), u)
                keep = j
                horizon = float(t_seg + ttl)
                end_state = u
                done = True
            else:
                n_cross = int(csum[-1])
        elif isinstance(stop, FirstPassage):
            b = stop.level
            seg_start = np.empty(chunk)
            seg_start[0] = x_cur
            seg_start[1:] = post[:-1]
            icont = _first_true((seg_start < b) & (pre >= b))
            ijump = _first_true(post >= b)
            if icont >= 0 and (ijump < 0 or icont <= ijump):
                j = icont
                t_seg = times[j - 1] if j > 0 else t_base
                ttl = seg_level_time(float(seg_start[j]), b)
                keep = j
                horizon = float(t_seg + ttl)
                end_state = b
                done = True
            elif ijump >= 0:
                keep = ijump + 1
                horizon = float(times[ijump])
                end_state = float(post[ijump])
                done = True
        else:
            raise TypeError(f"unknown stop rule {stop!r}")

        if keep:
            kp_pre, kp_post = pre[:keep], post[:keep]
            bad = (kp_pre < lo) | (kp_pre > hi) | (kp_post < lo) | (kp_post > hi)
            if bad.any():
                k = _first_true(bad)
                raise FlowError(
                    f"state exits working interval at t = {times[k]:.6g} "
                    f"(pre={kp_pre[k]:.6g}, post={kp_post[k]:.6g})"
                )
            chunks_t.append(times[:keep].copy())
            chunks_w.append(waits[:keep].copy())
            chunks_pre.append(kp_pre.copy())
            chunks_z.append(sizes[:keep].copy())
            chunks_post.append(kp_post.copy())
            n_total += keep

        if not done:
            x_cur = float(post[-1])
            t_base = float(times[-1])

    cat = (lambda chs: np.concatenate(chs) if chs else np.empty(0))
    return Trajectory(
        model=model, x0=float(x0),
        times=cat(chunks_t), waits=cat(chunks_w), pre=cat(chunks_pre),
        size=cat(chunks_z), post=cat(chunks_post),
        horizon=float(horizon), end_state=float(end_state),
        rng=rng, stop=stop, method=method,
    )


# ---------------------------------------------------------------------------
# crossing detection


def _check_level(traj: Trajectory, u: float) -> None:
    lo, hi = traj.model.working_interval
    if not (lo <= u <= hi):
        raise ValueError(f"level {u} outside working interval")
    zs = np.asarray(traj.model.drift.zeros, dtype=float)
    if (zs.size and float(np.min(np.abs(zs - u))) <= 1e-12) or float(traj.model.drift(u)) == 0.0:
        raise ValueError(
            f"level u = {u} is a zero of the drift; continuous-crossing times "
            "are ill-posed there and the level is excluded from crossing theory"
        )


def crossing_arrays(traj: Trajectory, u: float) -> tuple[np.ndarray, np.ndarray]:
    """All crossings of u, time-sorted, as (times, kind codes 0..3).

    Continuous: level strictly between the endpoints of a monotone segment
    (kind decided by the sign of mu(u)), or attained exactly at the horizon.
    Discontinuous: X_s >= u > X_{s-} (up), X_{s-} >= u > X_s (down); a jump
    landing exactly on u counts as an upcrossing per that tie rule.
    """
    _check_level(traj, u)
    starts, ends, t0, _ = traj.segments
    cont_kind = _K_CUP if float(traj.model.drift(u)) > 0 else _K_CDOWN

    cmask = (starts - u) * (ends - u) < 0.0
    # path stopped exactly on the level: the final instant is a crossing
    # (X_{s-} = X_s = u with the orbit strictly one-sided before it); the
    # strict product is 0 there, so it needs adding back with its exact time
    terminal = ends[-1] == u and starts[-1] != u
    idx = np.nonzero(cmask)[0]
    if idx.size:
        xs = starts[idx]
        cf = traj.model.closed_flow
        if cf is not None:
            ttl = np.asarray(cf.time_to_level(xs, u), dtype=float)
        else:
            ttl = np.array([hit_time(traj.model, float(x), u) for x in xs])
        ctimes = t0[idx] + ttl
    else:
        ctimes = np.empty(0)
    if terminal:
        ctimes = np.append(ctimes, traj.horizon)

    up = (traj.pre < u) & (traj.post >= u)
    down = (traj.pre >= u) & (traj.post < u)
    jtimes = np.concatenate([traj.times[up], traj.times[down]])
    jkinds = np.concatenate([
        np.full(int(up.sum()), _K_DUP, dtype=np.int8),
        np.full(int(down.sum()), _K_DDOWN, dtype=np.int8),
    ])

    all_times = np.concatenate([ctimes, jtimes])
    all_kinds = np.concatenate([np.full(ctimes.size, cont_kind, dtype=np.int8), jkinds])
    order = np.argsort(all_times, kind="stable")
    return all_times[order], all_kinds[order]


def detect_crossings(traj: Trajectory, u: float) -> list[CrossingEvent]:
    times, kinds = crossing_arrays(traj, u)
    return [CrossingEvent(u, float(t), _KIND_NAMES[k]) for t, k in zip(times, kinds)]


def crossing_counts(traj: Trajectory, u: float) -> dict[str, int]:
    _, kinds = crossing_arrays(traj, u)
    counts = np.bincount(kinds, minlength=4)
    return {name: int(counts[i]) for i, name in enumerate(_KIND_NAMES)}


def crossing_balance(traj: Trajectory, u: float) -> int:
    """Signed pathwise balance at u: discontinuous arrivals into {>= u} minus
    departures. Bounded by 1 in absolute value on every finite path."""
    c = crossing_counts(traj, u)
    if float(traj.model.drift(u)) < 0:
        return c[DISCONTINUOUS_UP] - (c[DISCONTINUOUS_DOWN] + c[CONTINUOUS_DOWN])
    return c[DISCONTINUOUS_DOWN] - (c[DISCONTINUOUS_UP] + c[CONTINUOUS_UP])


# ---------------------------------------------------------------------------
# regeneration cycles


@dataclass(frozen=True)
class TargetCounts:
    """Per-complete-cycle crossing counts of one target level.

    cont is the continuous-crossing counter (the regenerative law and the
    equilibrium identity are statements about it); up collects arrivals
    into {>= level} of either kind, which drives the upcrossing process.
    """

    level: float
    total: np.ndarray  # all crossings, any kind
    cont: np.ndarray  # continuous crossings only
    up: np.ndarray  # continuous_up + discontinuous_up
    up_times: np.ndarray  # upcrossing times inside complete cycles, sorted
    up_cycle: np.ndarray  # complete-cycle index (0-based) of each up_time
    head_total: int
    head_up: int
    tail_total: int
    tail_up: int


@dataclass(frozen=True)
class CycleData:
    """Array form of a cycle decomposition at a base level."""

    base: float
    boundaries: np.ndarray  # m >= 2 continuous-crossing times of the base
    durations: np.ndarray  # m - 1 complete cycle lengths
    targets: dict

    @property
    def n_cycles(self) -> int:
        return int(self.durations.size)


@dataclass(frozen=True)
class CycleRecord:
    base: float
    index: int
    start: float
    end: float
    counts: dict  # level -> (total, up, up_times)


@dataclass(frozen=True)
class CycleDecomposition:
    records: list
    head: dict
    tail: dict
    data: CycleData


def cycle_counts(traj: Trajectory, u: float, targets: Sequence[float]) -> CycleData:
    """Split the path at continuous crossings of u and count target-level
    crossings per complete cycle. Cycle k covers (b_{k-1}, b_k]; the open
    head and tail are tallied separately."""
    times_u, kinds_u = crossing_arrays(traj, u)
    cmask = (kinds_u == _K_CUP) | (kinds_u == _K_CDOWN)
    boundaries = times_u[cmask]
    if boundaries.size < 2:
        raise ValueError(
            f"need at least 2 continuous crossings of {u} for cycles, "
            f"found {boundaries.size}"
        )
    m = boundaries.size
    durations = np.diff(boundaries)

    out: dict[float, TargetCounts] = {}
    for b in targets:
        tb, kb = (times_u, kinds_u) if b == u else crossing_arrays(traj, b)
        posn = np.searchsorted(boundaries, tb, side="left")
        upmask = (kb == _K_CUP) | (kb == _K_DUP)
        contmask = (kb == _K_CUP) | (kb == _K_CDOWN)
        tot = np.bincount(posn, minlength=m + 1)
        cont = np.bincount(posn[contmask], minlength=m + 1)
        ups = np.bincount(posn[upmask], minlength=m + 1)
        inner = upmask & (posn >= 1) & (posn <= m - 1)
        out[b] = TargetCounts(
            level=b,
            total=tot[1:m].astype(np.int64),
            cont=cont[1:m].astype(np.int64),
            up=ups[1:m].astype(np.int64),
            up_times=tb[inner],
            up_cycle=(posn[inner] - 1).astype(np.int64),
            head_total=int(tot[0]), head_up=int(ups[0]),
            tail_total=int(tot[m]), tail_up=int(ups[m]),
        )
    return CycleData(base=u, boundaries=boundaries, durations=durations, targets=out)


def cycle_decompose(traj: Trajectory, u: float, targets: Sequence[float]) -> CycleDecomposition:
    data = cycle_counts(traj, u, targets)
    m = data.boundaries.size
    records = []
    for k in range(m - 1):
        counts = {}
        for b, tc in data.targets.items():
            tmask = tc.up_cycle == k
            counts[b] = (int(tc.total[k]), int(tc.up[k]), tc.up_times[tmask])
        records.append(CycleRecord(
            base=u, index=k + 1,
            start=float(data.boundaries[k]), end=float(data.boundaries[k + 1]),
            counts=counts,
        ))
    head = {b: {"total": tc.head_total, "up": tc.head_up} for b, tc in data.targets.items()}
    tail = {b: {"total": tc.tail_total, "up": tc.tail_up} for b, tc in data.targets.items()}
    return CycleDecomposition(records=records, head=head, tail=tail, data=data)


# ---------------------------------------------------------------------------
# first passages


@dataclass(frozen=True)
class FirstPassageSample:
    level: float
    times: np.ndarray
    truncated: bool


def first_passages(traj: Trajectory, b: float, n: int) -> FirstPassageSample:
    """Successive passage times of level b.

    T_1 = inf{t : X_t >= b}; after each passage the process must drop below b
    before the next one counts. On a monotone-segment path those are exactly
    the successive upcrossing event times, with T_1 = 0 when X_0 >= b.
    """
    times, kinds = crossing_arrays(traj, b)
    upmask = (kinds == _K_CUP) | (kinds == _K_DUP)
    up = times[upmask]
    if traj.x0 >= b:
        up = np.concatenate([[0.0], up])
    if up.size >= n:
        return FirstPassageSample(level=b, times=up[:n].copy(), truncated=False)
    return FirstPassageSample(level=b, times=up, truncated=True)


# parallel first-passage replication: models hold closures, so workers
# inherit the task through fork instead of pickling
_FP_TASK = None


def _fp_worker(stream: int) -> float:
    model, x0, b, seed, method, chunk = _FP_TASK
    traj = simulate(model, x0, FirstPassage(b), RngConfig(seed=seed, stream=stream),
                    method=method, chunk=chunk)
    return traj.horizon


def first_passage_sample(
    model: Model,
    x0: float,
    b: float,
    n_reps: int,
    seed: int,
    *,
    first_stream: int = 0,
    workers: int = 1,
    method: str = "inversion",
    chunk: int = 1 << 16,
) -> np.ndarray:
    """n_reps independent draws of T(b), one stream per replication.

    Deterministic in (seed, first_stream) and independent of the worker
    count and of chunk; results are ordered by stream.
    """
    global _FP_TASK
    streams = range(first_stream, first_stream + n_reps)
    _FP_TASK = (model, x0, b, seed, method, chunk)
    try:
        if workers <= 1:
            return np.array([_fp_worker(s) for s in streams])
        import multiprocessing as mp

        ctx = mp.get_context("fork")
        with ctx.Pool(processes=workers) as pool:
            out = pool.map(_fp_worker, streams, chunksize=max(1, n_reps // (8 * workers)))
        return np.array(out)
    finally:
        _FP_TASK = None
