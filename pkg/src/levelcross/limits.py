"""The compound-Poisson limit side.

High upcrossings thin out into a geometrically compound Poisson process: a
ground Poisson process of intensity 1-rho whose points carry i.i.d.
multiplicities P(k) = (1-rho) rho^(k-1). This module computes rho (and the
crossing-equation root w when the drift limit is positive) from the model's
tail characteristics, simulates the limit process, evaluates its closed-form
laws, and runs the statistical comparisons between scaled upcrossings and
the limit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import stats
from .estimate import IntensityEstimate, CycleCountStats, GammaEstimate
from .model import Model, ModelError, classify_scenario, tail_envelope
from .simulate import Trajectory, _K_CUP, _K_DUP, crossing_arrays

__all__ = [
    "CompoundPoissonParams",
    "GeomCPPath",
    "ScaledUpcrossings",
    "compute_rho",
    "simulate_geom_cpp",
    "window_masses",
    "laplace_count",
    "gamma_law_cdf",
    "GammaLawValue",
    "scale_upcrossings",
    "split_batches",
    "test_exponential_first_passage",
    "test_geometric_cycles",
    "laplace_functional_distance",
    "LaplaceGapReport",
]


def _gen(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(rng)))


# ---------------------------------------------------------------------------
# rho and w


@dataclass(frozen=True)
class CompoundPoissonParams:
    rho: float
    scenario: str
    margin: float
    w: Optional[float] = None
    w_residual: Optional[float] = None


def compute_rho(model: Model, u0: Optional[float] = None) -> CompoundPoissonParams:
    """The multiplicity parameter of the upcrossing limit.

    Diverging drift or diverging intensity give rho = 0 (single upcrossing
    per excursion in the limit). With finite limits mu(inf) != 0 and
    lambda(inf): rho = -(lambda/mu) E xi for mu(inf) < 0; for mu(inf) > 0,
    rho = 1 - w mu/lambda where w > 0 uniquely solves
    E exp(w xi) = 1 - w mu/lambda, found by bracketed root refinement and
    verified to residual 1e-10.
    """
    if u0 is not None:
        candidates = [float(u0)]
    else:
        anchor = max([0.0, *model.drift.zeros, *model.drift.discontinuities])
        candidates = [anchor + off for off in (1.0, 2.0, 5.0, 10.0)]

    report = None
    for c in candidates:
        env = tail_envelope(model, c)
        report = classify_scenario(model, env)
        if report.scenario != "none":
            break
    if report is None or report.scenario == "none":
        raise ModelError(
            "no asymptotic scenario certified (negative-drift margin must be "
            f"strictly negative); thresholds tried: {candidates}, "
            f"details: {report.details if report else {}}"
        )

    if report.scenario in ("S1", "S2"):
        return CompoundPoissonParams(rho=0.0, scenario=report.scenario,
                                     margin=report.margin)

    mu_inf = float(model.drift.limit_pos)
    lam_inf = float(model.rate.limit_pos)
    law = model.kernel.limit_law
    if mu_inf < 0:
        rho = -(lam_inf / mu_inf) * law.mean
        if not 0.0 <= rho < 1.0:
            raise ModelError(f"computed rho = {rho} outside [0, 1)")
        return CompoundPoissonParams(rho=rho, scenario="S3", margin=report.margin)

    # mu(inf) > 0: solve phi(w) = mgf(w) - 1 + w mu/lambda = 0 on (0, w_hi].
    # phi(0) = 0 with phi'(0) = E xi + mu/lambda < 0 by the margin, and
    # phi(lambda/mu) = mgf(lambda/mu) > 0, so the positive root is interior.
    def phi(w: float) -> float:
        return law.mgf(w) - 1.0 + w * mu_inf / lam_inf

    w_hi = lam_inf / mu_inf
    if math.isfinite(law.mgf_sup):
        w_hi = min(w_hi, law.mgf_sup - 1e-9)
    if w_hi <= 2e-6:
        raise ModelError(
            f"crossing-equation scan range (1e-06, {w_hi:.3g}) is degenerate"
        )
    grid = np.geomspace(1e-6, w_hi, 256)
    vals = np.array([phi(float(w)) for w in grid])
    pos = np.nonzero(vals > 0)[0]
    neg = np.nonzero(vals < 0)[0]
    if pos.size == 0 or neg.size == 0 or pos[0] == 0:
        raise ModelError(
            "no sign change of the crossing equation in the scanned bracket "
            f"(1e-06, {w_hi:.6g}); endpoint values {vals[0]:.3e}, {vals[-1]:.3e}"
        )
    i = int(pos[0])
    w = float(brentq(phi, float(grid[i - 1]), float(grid[i]),
                     xtol=1e-15, rtol=4 * np.finfo(float).eps))
    residual = abs(law.mgf(w) - (1.0 - w * mu_inf / lam_inf))
    if residual > 1e-10:
        raise ModelError(f"crossing-equation root failed to verify: residual {residual:.3e}")
    rho = 1.0 - w * mu_inf / lam_inf
    if not 0.0 <= rho < 1.0:
        raise ModelError(f"computed rho = {rho} outside [0, 1)")
    return CompoundPoissonParams(rho=rho, scenario="S3", margin=report.margin,
                                 w=w, w_residual=residual)


# ---------------------------------------------------------------------------
# the limit process and its closed-form laws


@dataclass(frozen=True)
class GeomCPPath:
    """One realization of the limit process on [0, horizon]."""

    rho: float
    horizon: float
    times: np.ndarray
    multiplicities: np.ndarray

    @property
    def total_mass(self) -> int:
        return int(self.multiplicities.sum())

    def count(self, a: float, b: float) -> int:
        mask = (self.times >= a) & (self.times < b)
        return int(self.multiplicities[mask].sum())


def simulate_geom_cpp(rho: float, horizon: float, rng) -> GeomCPPath:
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must be in [0, 1), got {rho}")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    g = _gen(rng)
    n = int(g.poisson((1.0 - rho) * horizon))
    times = np.sort(g.uniform(0.0, horizon, size=n))
    mult = g.geometric(1.0 - rho, size=n).astype(np.int64)
    return GeomCPPath(rho=rho, horizon=horizon, times=times, multiplicities=mult)


def window_masses(path: GeomCPPath, window: float = 1.0) -> np.ndarray:
    """Masses over the complete windows [k w, (k+1) w); independent by the
    independent-increment property."""
    n_win = int(path.horizon // window)
    idx = (path.times // window).astype(np.int64)
    keep = idx < n_win
    return np.bincount(idx[keep], weights=path.multiplicities[keep],
                       minlength=n_win).astype(np.int64)


def laplace_count(rho: float, b_len: float, z) -> np.ndarray:
    """E exp(-z Pi_rho(B)) for |B| = b_len:
    exp[-|B| (1-rho) (1 - (1-rho)/(e^z - rho))]."""
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must be in [0, 1), got {rho}")
    if b_len < 0:
        raise ValueError("|B| must be nonnegative")
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("z must be nonnegative")
    return np.exp(-b_len * (1.0 - rho) * (1.0 - (1.0 - rho) / (np.exp(z) - rho)))


def levy_masses(rho: float, b_len: float, kmax: int) -> np.ndarray:
    """Levy measure of the infinitely divisible count over a window of
    length b_len: mass |B| (1-rho)^2 rho^(k-1) on the atom k, k = 1..kmax.

    Index 0 of the returned array is the atom k=1 (ground points arrive at
    rate (1-rho) and carry geometric multiplicities)."""
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must be in [0, 1), got {rho}")
    if b_len < 0:
        raise ValueError("|B| must be nonnegative")
    if kmax < 1:
        raise ValueError("kmax must be at least 1")
    k = np.arange(1, kmax + 1)
    return b_len * (1.0 - rho) ** 2 * rho ** (k - 1.0)


@dataclass(frozen=True)
class GammaLawValue:
    value: float
    se: float  # 0 for closed forms
    n: int  # passage index


def gamma_law_cdf(rho: float, n: int, s: float, n_mc: int = 1_000_000,
                  rng=0x6A44) -> GammaLawValue:
    """P(Pi_rho((1-rho)^{-1} s) <= n-1): the limit law of the scaled n-th
    passage time (1-rho) nu(b) T_n(b).

    The ground count over an interval of length (1-rho)^{-1} s is
    Poisson(s); expanding exp[s(g(v)-1)] with the geometric pgf g gives the
    closed forms for n <= 3. (The quadratic coefficient is (1-rho)^2/2: the
    two-point term P(ground=2) P(both multiplicities=1).) Larger n falls
    back to Monte Carlo on the construction with a reported standard error.
    """
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must be in [0, 1), got {rho}")
    if s < 0:
        raise ValueError("s must be nonnegative")
    if n < 1:
        raise ValueError("n must be a positive passage index")
    q = 1.0 - rho
    if n == 1:
        return GammaLawValue(math.exp(-s), 0.0, n)
    if n == 2:
        return GammaLawValue(math.exp(-s) * (1.0 + q * s), 0.0, n)
    if n == 3:
        val = math.exp(-s) * (1.0 + (1.0 - rho**2) * s + q**2 * s**2 / 2.0)
        return GammaLawValue(val, 0.0, n)
    g = _gen(rng)
    ground = g.poisson(s, size=n_mc)
    total = ground.copy()
    haspts = ground > 0
    if rho > 0 and haspts.any():
        # geometric(k) summed = k + NB(k, 1-rho) failures
        total[haspts] += g.negative_binomial(ground[haspts], q)
    p = float(np.mean(total <= n - 1))
    se = math.sqrt(max(p * (1.0 - p), 1e-300) / n_mc)
    return GammaLawValue(p, se, n)


# ---------------------------------------------------------------------------
# scaled upcrossings and the statistical comparisons


@dataclass(frozen=True)
class ScaledUpcrossings:
    level: float
    intensity: IntensityEstimate  # the nu_+(b) estimate used for the scaling
    times: np.ndarray  # nu_+(b) * upcrossing times
    span: float  # nu_+(b) * horizon

    @property
    def count(self) -> int:
        return int(self.times.size)


def scale_upcrossings(traj: Trajectory, b: float,
                      nu_plus: IntensityEstimate) -> ScaledUpcrossings:
    if not nu_plus.value > 0:
        raise ValueError(f"estimated intensity at {b} is not positive")
    times, kinds = crossing_arrays(traj, b)
    upmask = (kinds == _K_CUP) | (kinds == _K_DUP)
    return ScaledUpcrossings(
        level=b, intensity=nu_plus,
        times=times[upmask] * nu_plus.value,
        span=float(traj.horizon) * nu_plus.value,
    )


def split_batches(scaled: ScaledUpcrossings, length: float = 1.0) -> list:
    """Chop the scaled axis into complete windows of the given length and
    return per-window time arrays with the origin reset to the window start."""
    n = int(scaled.span // length)
    edges = np.arange(n + 1) * length
    cuts = np.searchsorted(scaled.times, edges)
    return [scaled.times[cuts[k]:cuts[k + 1]] - edges[k] for k in range(n)]


def test_exponential_first_passage(samples: np.ndarray, rho: float,
                                   nu_b: float) -> stats.KSReport:
    """KS test of (1-rho) nu(b) T(b) against Exp(1)."""
    samples = np.asarray(samples, dtype=float)
    if samples.size < 200:
        raise ValueError(f"need at least 200 first-passage replications, got {samples.size}")
    scaled = (1.0 - rho) * nu_b * samples
    return stats.ks_test(scaled, lambda t: 1.0 - np.exp(-np.maximum(t, 0.0)))


def test_geometric_cycles(counts: CycleCountStats, gamma) -> stats.Chi2Report:
    """Chi-square fit of positive per-cycle counts against the
    zero-truncated geometric with ratio gamma; df = bins - 2 for the
    estimated parameter. A degenerate fit (all counts 1, gamma = 0) is
    perfect by convention."""
    g = gamma.gamma if isinstance(gamma, GammaEstimate) else float(gamma)
    hist = counts.histogram
    obs = hist[1:].astype(float) if hist.size > 1 else np.zeros(0)
    m = float(obs.sum())
    if m < 100:
        raise ValueError(f"need at least 100 positive cycles, got {int(m)}")
    kmax = obs.size
    ks = np.arange(1, kmax + 1)
    expected = m * (1.0 - g) * g ** (ks - 1.0)
    # absorb the geometric tail beyond kmax into an extra empty bin
    obs = np.append(obs, 0.0)
    expected = np.append(expected, m * g**kmax)
    obs_p, exp_p = stats.pool_bins(obs, expected)
    if obs_p.size < 3:
        # everything pooled into <= 2 bins: no dispersion left to test
        return stats.Chi2Report(statistic=0.0, pvalue=1.0, df=0, n_bins=int(obs_p.size))
    return stats.chi2_test(obs_p, exp_p, ddof=1)


@dataclass(frozen=True)
class LaplaceGapReport:
    rho: float
    z_grid: np.ndarray
    windows: tuple  # (a, b) pairs
    empirical: np.ndarray  # shape (n_z, n_windows)
    theoretical: np.ndarray
    se: np.ndarray
    gaps: np.ndarray
    n_batches: int

    def max_abs_gap(self) -> float:
        return float(np.max(np.abs(self.gaps)))


def laplace_functional_distance(
    batches: Sequence[np.ndarray],
    rho: float,
    z_grid: Sequence[float] = (0.5, 1.0, 2.0),
    windows: Sequence[tuple] = ((0.0, 1.0),),
) -> LaplaceGapReport:
    """Batch-replicated Laplace functional of the scaled upcrossings against
    the closed form, for step functions f = z 1_B.

    E exp[-int f dM] reduces to E exp[-z count(B)] per batch; the gap is
    (batch mean - closed form) / batch standard error.
    """
    if len(batches) < 100:
        raise ValueError(f"need at least 100 batches, got {len(batches)}")
    z_grid = np.asarray(z_grid, dtype=float)
    nb = len(batches)
    emp = np.empty((z_grid.size, len(windows)))
    ses = np.empty_like(emp)
    theo = np.empty_like(emp)
    for j, (a, b) in enumerate(windows):
        cnt = np.array([np.count_nonzero((t >= a) & (t < b)) for t in batches], dtype=float)
        for i, z in enumerate(z_grid):
            vals = np.exp(-z * cnt)
            emp[i, j] = vals.mean()
            ses[i, j] = vals.std(ddof=1) / math.sqrt(nb)
            theo[i, j] = float(laplace_count(rho, b - a, z))
    with np.errstate(divide="ignore", invalid="ignore"):
        gaps = np.where(ses > 0, (emp - theo) / ses,
                        np.where(emp == theo, 0.0, np.inf))
    return LaplaceGapReport(rho=rho, z_grid=z_grid, windows=tuple(windows),
                            empirical=emp, theoretical=theo, se=ses, gaps=gaps,
                            n_batches=nb)
