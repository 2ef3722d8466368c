"""Shared fixtures.

Every trajectory simulated anywhere in the suite goes through
simulate_checked, which hard-asserts the pathwise crossing balance
|N_{+,d} - N_{-,d} - N| <= 1 at a handful of probe levels before handing the
path to the test. The acceptance module reports how many paths were screened.
"""
import numpy as np
import pytest

import levelcross as lc

# probe levels per catalog model, chosen inside the visited range and off D_mu
BALANCE_PROBES = {
    "linear_shot_noise": (0.25, 0.5, 1.0, 2.0, 4.0),
    "tanh_drift": (-1.0, 0.5, 2.0, 4.0, 6.0),
    "updrift_negjumps": (-2.0, 0.0, 1.0, 3.0),
    "stress_release": (-3.0, -1.0, 0.0, 1.0),
}

BALANCE_CHECKED = {"paths": 0, "levels": 0}


def simulate_checked(model, x0, stop, rng, probes=None, **kw):
    traj = lc.simulate(model, x0, stop, rng, **kw)
    if probes is None:
        probes = BALANCE_PROBES.get(model.name, ())
    for u in probes:
        bal = lc.crossing_balance(traj, u)
        assert abs(bal) <= 1, (
            f"crossing balance violated: model {model.name}, level {u}, "
            f"balance {bal}"
        )
        BALANCE_CHECKED["levels"] += 1
    BALANCE_CHECKED["paths"] += 1
    return traj


def flat_traj(model, x0, times, sizes, horizon, end_state):
    """Assemble the event log of a path we can write down by hand."""
    from levelcross.simulate import Trajectory

    times = np.asarray(times, dtype=float)
    sizes = np.asarray(sizes, dtype=float)
    waits = np.diff(np.concatenate([[0.0], times]))
    pre = np.empty_like(times)
    post = np.empty_like(times)
    x = float(x0)
    for i, (w, z) in enumerate(zip(waits, sizes)):
        q = lc.flow(model, x, float(w))
        pre[i] = q
        post[i] = q + z
        x = q + z
    return Trajectory(model=model, x0=float(x0), times=times, waits=waits,
                      pre=pre, size=sizes, post=post, horizon=float(horizon),
                      end_state=float(end_state), rng=lc.RngConfig(seed=0),
                      stop=lc.Horizon(float(horizon)))


@pytest.fixture(scope="session")
def lsn():
    return lc.catalog("linear_shot_noise", c=1.0, lam0=1.0, alpha=2.0)


@pytest.fixture(scope="session")
def tanh_model():
    return lc.catalog("tanh_drift", lam0=1.0, alpha=2.0)


@pytest.fixture(scope="session")
def updrift():
    return lc.catalog("updrift_negjumps", lam0=2.0, alpha=1.0)


@pytest.fixture(scope="session")
def stress():
    return lc.catalog("stress_release", beta=1.0, alpha=1.0)


@pytest.fixture(scope="session")
def lsn_run(lsn):
    # 20k cycles: enough for sub-percent intensity estimates in the unit tests
    return simulate_checked(lsn, 1.0, lc.CycleCount(20_000, 0.5), 0xA11CE)


@pytest.fixture(scope="session")
def tanh_run(tanh_model):
    return simulate_checked(tanh_model, 2.0, lc.CycleCount(30_000, 2.0), 0xA11CE)


def pure_flow_model(mu_const, lo=-100.0, hi=100.0):
    """Jump-free auxiliary model (lambda = 0, constant drift)."""
    return lc.Model(
        drift=lc.Drift(fn=lambda x: np.full_like(np.asarray(x, dtype=float), mu_const)),
        rate=lc.JumpRate(fn=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                         local_bound=lambda a, b: 0.0, constant=0.0),
        kernel=lc.exp_jump_kernel(1.0),
        working_interval=(lo, hi),
        name="pure_flow",
    )


# acceptance reporting: one line per criterion, shown after the run summary

ACCEPTANCE_LINES = []


def record_criterion(number, ok, detail):
    tag = "PASS" if ok else "FAIL"
    ACCEPTANCE_LINES.append(f"[C{number:02d}] {tag}  {detail}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.line(line)
