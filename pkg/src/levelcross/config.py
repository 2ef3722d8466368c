"""Run configuration: one TOML document drives every CLI pipeline.

A run is a pure function of its config file.  The loader hashes the raw
bytes (sha256) so that every output can embed the exact configuration it
came from; command-line overrides (seed, workers, output directory) are
recorded next to the hash rather than folded into it.

Model block, either by catalog name

    [model]
    catalog = "linear_shot_noise"
    [model.params]
    c = 1.0
    lam0 = 1.0
    alpha = 2.0

or by expressions in x with a jump family block

    [model]
    mu = "-tanh(x)"
    rate = "1.0"
    interval = [-60.0, 60.0]
    mu_zeros = [0.0]
    [model.jump]
    family = "exp"
    alpha = 2.0
    sign = 1

Expressions evaluate in a closed namespace of numpy functions; anything
else is a config error, not code execution.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from .model import Drift, JumpKernel, JumpRate, Model, exp_jump_kernel, CATALOG, catalog
from .simulate import CycleCount, EventCount, FirstPassage, Horizon, StopRule

__all__ = ["ConfigError", "AnalysisConfig", "RunConfig", "load_config", "DEFAULT_SEED"]

SCHEMA_VERSION = 1
DEFAULT_SEED = 0x5EED

_EXPR_NS = {
    name: getattr(np, name)
    for name in (
        "exp", "log", "log1p", "expm1", "sqrt", "sin", "cos", "tan",
        "sinh", "cosh", "tanh", "arcsinh", "arctan", "sign", "where",
        "minimum", "maximum", "clip",
    )
}
_EXPR_NS.update({"abs": np.abs, "pi": math.pi, "e": math.e, "inf": math.inf})


class ConfigError(ValueError):
    """Malformed or incomplete configuration; the message names the field."""


def _get(block: dict, key: str, kind, where: str, default=_EXPR_NS):
    # default sentinel reuse: _EXPR_NS is never a legal value
    dotted = f"{where}.{key}" if where else key
    if key not in block:
        if default is not _EXPR_NS:
            return default
        raise ConfigError(f"missing required field '{dotted}'")
    val = block[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind) or (kind is int and isinstance(val, bool)):
        raise ConfigError(
            f"field '{dotted}' must be {getattr(kind, '__name__', kind)}, "
            f"got {type(val).__name__}"
        )
    return val


def _floats(block: dict, key: str, where: str, default=()):
    raw = block.get(key)
    if raw is None:
        return tuple(default)
    if not isinstance(raw, list):
        raise ConfigError(f"field '{where}.{key}' must be an array of numbers")
    try:
        return tuple(float(v) for v in raw)
    except (TypeError, ValueError):
        raise ConfigError(f"field '{where}.{key}' must be an array of numbers") from None


def compile_expression(text: str, variables: tuple[str, ...], where: str):
    """Compile a numeric expression over the closed numpy namespace.

    Unknown names are rejected up front, so a typo surfaces as a config
    error naming the field instead of a NameError mid-run.
    """
    try:
        code = compile(text, f"<{where}>", "eval")
    except SyntaxError as err:
        raise ConfigError(f"{where}: cannot parse expression {text!r}: {err.msg}") from None
    for name in code.co_names:
        if name not in _EXPR_NS and name not in variables:
            raise ConfigError(f"{where}: unknown name '{name}' in expression {text!r}")

    def fn(*args):
        ns = dict(_EXPR_NS)
        arrs = [np.asarray(a, dtype=float) for a in args]
        ns.update(zip(variables, arrs))
        with np.errstate(over="ignore", divide="ignore"):
            out = eval(code, {"__builtins__": {}}, ns)  # noqa: S307 (closed namespace)
        return np.asarray(out, dtype=float) + 0.0 * arrs[0]

    probe = np.array([0.0, 1.0, -1.0])
    try:
        fn(*[probe] * len(variables))
    except ConfigError:
        raise
    except Exception as err:
        raise ConfigError(f"{where}: expression {text!r} failed to evaluate: {err}") from None
    return fn


def _build_kernel(block: dict, where: str = "model.jump") -> JumpKernel:
    family = _get(block, "family", str, where)
    if family != "exp":
        raise ConfigError(f"{where}.family: unknown jump family {family!r} (supported: 'exp')")
    return exp_jump_kernel(
        alpha=_get(block, "alpha", float, where),
        sign=_get(block, "sign", int, where, default=1),
        scale=_get(block, "scale", float, where, default=1.0),
        shift=_get(block, "shift", float, where, default=0.0),
    )


def _build_model(block: dict) -> Model:
    if "catalog" in block:
        name = _get(block, "catalog", str, "model")
        if name not in CATALOG:
            raise ConfigError(
                f"model.catalog: unknown model {name!r} (available: {sorted(CATALOG)})"
            )
        params = _get(block, "params", dict, "model", default={})
        try:
            return catalog(name, **params)
        except TypeError as err:
            raise ConfigError(f"model.params for catalog {name!r}: {err}") from None

    mu_text = _get(block, "mu", str, "model")
    rate_text = _get(block, "rate", str, "model")
    interval = _floats(block, "interval", "model", default=None)
    if interval is None or len(interval) != 2:
        raise ConfigError("field 'model.interval' must be a two-element array [lo, hi]")
    jump = _get(block, "jump", dict, "model")

    mu_fn = compile_expression(mu_text, ("x",), "model.mu")
    rate_fn = compile_expression(rate_text, ("x",), "model.rate")

    bound = None
    if "rate_bound" in block:
        bfn = compile_expression(_get(block, "rate_bound", str, "model"), ("lo", "hi"), "model.rate_bound")
        bound = lambda lo, hi: float(bfn(lo, hi))
    constant = block.get("rate_constant")
    if constant is not None:
        constant = float(constant)
        if bound is None:
            bound = lambda lo, hi: constant

    return Model(
        drift=Drift(
            fn=mu_fn,
            zeros=_floats(block, "mu_zeros", "model"),
            limit_pos=None if "mu_limit_pos" not in block else float(block["mu_limit_pos"]),
            limit_neg=None if "mu_limit_neg" not in block else float(block["mu_limit_neg"]),
            discontinuities=_floats(block, "mu_discontinuities", "model"),
        ),
        rate=JumpRate(
            fn=rate_fn,
            limit_pos=None if "rate_limit_pos" not in block else float(block["rate_limit_pos"]),
            local_bound=bound,
            constant=constant,
        ),
        kernel=_build_kernel(jump),
        working_interval=(interval[0], interval[1]),
        scenario_hint=block.get("scenario_hint"),
        name=_get(block, "name", str, "model", default="custom"),
        params={"mu": mu_text, "rate": rate_text},
    )


def _build_stop(block: dict) -> StopRule:
    kind = _get(block, "kind", str, "run.stop")
    if kind == "horizon":
        return Horizon(t=_get(block, "t", float, "run.stop"))
    if kind == "event_count":
        return EventCount(n=_get(block, "n", int, "run.stop"))
    if kind == "cycle_count":
        return CycleCount(
            n=_get(block, "n", int, "run.stop"),
            level=_get(block, "level", float, "run.stop"),
        )
    if kind == "first_passage":
        return FirstPassage(level=_get(block, "level", float, "run.stop"))
    raise ConfigError(
        f"run.stop.kind: unknown stop rule {kind!r} "
        "(horizon | event_count | cycle_count | first_passage)"
    )


@dataclass(frozen=True)
class AnalysisConfig:
    """Analysis-stage knobs; every command reads the subset it needs."""

    base_level: Optional[float] = None
    levels: tuple = ()
    targets: tuple = ()
    bandwidth: Optional[float] = None
    u0: Optional[float] = None
    z_grid: tuple = (0.5, 1.0, 2.0)
    window: float = 1.0
    batch_length: float = 1.0
    n_passages: int = 2000
    n_states: int = 100_000
    rho: Optional[float] = None
    cpp_horizon: float = 10_000.0
    small_sets: Optional[str] = None


@dataclass
class RunConfig:
    """Everything a command needs, already validated and built."""

    path: Path
    sha256: str
    model: Model
    x0: float
    seed: int
    stream: int
    method: str
    stop: StopRule
    workers: int
    analysis: AnalysisConfig
    out_dir: Path
    overrides: dict = field(default_factory=dict)

    def stamp(self) -> dict:
        """Provenance block embedded in every output file."""
        return {
            "config": str(self.path),
            "config_sha256": self.sha256,
            "seed": self.seed,
            "stream": self.stream,
            "schema": SCHEMA_VERSION,
            "overrides": dict(self.overrides),
        }


def load_config(
    path,
    *,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
    out_dir=None,
) -> RunConfig:
    """Parse, validate, and build. Raises ConfigError for structural
    problems and lets ModelError (semantic model failures) propagate."""
    path = Path(path)
    try:
        raw_bytes = path.read_bytes()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    digest = hashlib.sha256(raw_bytes).hexdigest()
    try:
        doc = tomllib.loads(raw_bytes.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as err:
        raise ConfigError(f"config {path} is not valid TOML: {err}") from None

    schema = _get(doc, "schema", int, "", default=SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"schema {schema} unsupported (this build reads {SCHEMA_VERSION})")

    model = _build_model(_get(doc, "model", dict, ""))
    run = _get(doc, "run", dict, "", default={})
    stop = _build_stop(_get(run, "stop", dict, "run"))
    method = _get(run, "method", str, "run", default="inversion")
    if method not in ("inversion", "thinning"):
        raise ConfigError(f"run.method: unknown method {method!r}")

    ab = _get(doc, "analysis", dict, "", default={})
    analysis = AnalysisConfig(
        base_level=None if "base_level" not in ab else float(ab["base_level"]),
        levels=_floats(ab, "levels", "analysis"),
        targets=_floats(ab, "targets", "analysis"),
        bandwidth=None if "bandwidth" not in ab else float(ab["bandwidth"]),
        u0=None if "u0" not in ab else float(ab["u0"]),
        z_grid=_floats(ab, "z_grid", "analysis", default=(0.5, 1.0, 2.0)),
        window=_get(ab, "window", float, "analysis", default=1.0),
        batch_length=_get(ab, "batch_length", float, "analysis", default=1.0),
        n_passages=_get(ab, "n_passages", int, "analysis", default=2000),
        n_states=_get(ab, "n_states", int, "analysis", default=100_000),
        rho=None if "rho" not in ab else float(ab["rho"]),
        cpp_horizon=_get(ab, "cpp_horizon", float, "analysis", default=10_000.0),
        small_sets=ab.get("small_sets"),
    )

    out = _get(doc, "output", dict, "", default={})
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if workers is not None:
        overrides["workers"] = workers
    if out_dir is not None:
        overrides["out_dir"] = str(out_dir)

    return RunConfig(
        path=path,
        sha256=digest,
        model=model,
        x0=_get(run, "x0", float, "run"),
        seed=seed if seed is not None else _get(run, "seed", int, "run", default=DEFAULT_SEED),
        stream=_get(run, "stream", int, "run", default=0),
        method=method,
        stop=stop,
        workers=workers if workers is not None else _get(run, "workers", int, "run", default=1),
        analysis=analysis,
        out_dir=Path(out_dir) if out_dir is not None else Path(_get(out, "dir", str, "output", default="out")),
        overrides=overrides,
    )
