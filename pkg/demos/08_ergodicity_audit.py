"""Checking the standing assumptions before trusting any estimate.

Everything upstream assumes the model has a stationary law with a
finite crossing budget. audit_model probes the generator numerically:
moment growth of the jump kernel, sign and decay of the drift of |x| at
large states, tail mass floors. Verdicts come per condition and per
probe point, with an explicit "undeclared-limit" verdict when the probe
grid cannot tell (better honest than green).
"""
import levelcross as lc
from levelcross import model

lsn = model.catalog("linear_shot_noise", c=1.0, lam0=1.0, alpha=2.0)
report = lc.audit_model(lsn)
print(report.table())

# the same report serializes to JSON for pipelines; non-finite probe
# values survive the round trip as strings
text = report.to_json()
print(f"JSON report: {len(text)} bytes, "
      f"verdicts {sorted(set(c.verdict for c in report.checks))}")

# a deliberately heavy-tailed kernel fails the moment conditions: with
# Pareto(3/2) jumps the truncated-moment ratio grows like p^{-1/2}
# instead of staying bounded
import dataclasses

def _pareto_density(x, z):
    import numpy as np
    z = np.asarray(z, dtype=float)
    body = 1.5 * np.power(np.maximum(z, 1.0), -2.5)
    return np.where(z >= 1.0, body, 0.0)

heavy_kernel = model.JumpKernel(
    sample=lambda x, rng: 1.0 + rng.pareto(1.5),
    sign_support="positive", state_dependent=False,
    density=_pareto_density)
heavy = dataclasses.replace(lsn, name="pareto_shots", kernel=heavy_kernel)
rep2 = lc.check_moment_conditions(heavy)
for c in rep2.checks:
    print(f"{heavy.name} {c.name} ({c.side}): {c.verdict}")
