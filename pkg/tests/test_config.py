"""Config loading: TOML -> validated run objects, hashes, and field errors."""
import hashlib
from pathlib import Path

import numpy as np
import pytest

from levelcross.config import (
    DEFAULT_SEED,
    AnalysisConfig,
    ConfigError,
    compile_expression,
    load_config,
)
from levelcross.simulate import CycleCount, EventCount, FirstPassage, Horizon

BASE = """
[model]
catalog = "linear_shot_noise"
[model.params]
c = 1.0
lam0 = 1.0
alpha = 2.0

[run]
x0 = 0.5
{run_extra}
[run.stop]
{stop}
"""


def write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def lsn_config(tmp_path, stop='kind = "event_count"\nn = 100', run_extra="", extra=""):
    return write(tmp_path, BASE.format(run_extra=run_extra, stop=stop) + extra)


def test_catalog_round_trip(tmp_path):
    p = lsn_config(
        tmp_path,
        stop='kind = "cycle_count"\nn = 2000\nlevel = 0.5',
        run_extra='seed = 99\nstream = 3\nmethod = "thinning"\nworkers = 2\n',
        extra="""
[analysis]
base_level = 0.5
levels = [0.5, 1.0]
targets = [1.0, 2.0]
bandwidth = 0.05
z_grid = [0.5, 1.0]
n_passages = 500

[output]
dir = "results"
""",
    )
    cfg = load_config(p)
    assert cfg.model.name == "linear_shot_noise"
    assert cfg.model.params == {"c": 1.0, "lam0": 1.0, "alpha": 2.0}
    assert (cfg.x0, cfg.seed, cfg.stream) == (0.5, 99, 3)
    assert (cfg.method, cfg.workers) == ("thinning", 2)
    assert cfg.stop == CycleCount(n=2000, level=0.5)
    assert cfg.out_dir == Path("results")
    a = cfg.analysis
    assert a.base_level == 0.5
    assert a.levels == (0.5, 1.0)
    assert a.targets == (1.0, 2.0)
    assert a.bandwidth == 0.05
    assert a.z_grid == (0.5, 1.0)
    assert a.n_passages == 500
    assert cfg.sha256 == hashlib.sha256(p.read_bytes()).hexdigest()
    assert cfg.overrides == {}
    stamp = cfg.stamp()
    assert stamp["config_sha256"] == cfg.sha256
    assert stamp["schema"] == 1
    assert stamp["seed"] == 99


def test_defaults(tmp_path):
    cfg = load_config(lsn_config(tmp_path))
    assert cfg.seed == DEFAULT_SEED
    assert cfg.stream == 0
    assert cfg.method == "inversion"
    assert cfg.workers == 1
    assert cfg.out_dir == Path("out")
    assert cfg.stop == EventCount(n=100)
    assert cfg.analysis == AnalysisConfig()


def test_hash_tracks_bytes_not_semantics(tmp_path):
    p1 = lsn_config(tmp_path)
    p2 = write(tmp_path, p1.read_text() + "\n# trailing comment\n", name="run2.toml")
    c1, c2 = load_config(p1), load_config(p2)
    assert c1.sha256 != c2.sha256
    assert c1.model.params == c2.model.params


def test_overrides_recorded(tmp_path):
    p = lsn_config(tmp_path, run_extra="seed = 1\nworkers = 1\n")
    cfg = load_config(p, seed=7, workers=3, out_dir=tmp_path / "alt")
    assert (cfg.seed, cfg.workers) == (7, 3)
    assert cfg.out_dir == tmp_path / "alt"
    assert cfg.overrides == {"seed": 7, "workers": 3, "out_dir": str(tmp_path / "alt")}
    assert cfg.stamp()["overrides"]["seed"] == 7


EXPR = """
[model]
mu = "-tanh(x)"
rate = "exp(0.5*x)"
interval = [-60.0, 40.0]
mu_zeros = [0.0]
{model_extra}
[model.jump]
family = "exp"
alpha = 2.0
sign = -1

[run]
x0 = 0.0
[run.stop]
kind = "horizon"
t = 10.0
"""


def test_expression_model(tmp_path):
    cfg = load_config(write(tmp_path, EXPR.format(model_extra="")))
    m = cfg.model
    xs = np.array([-1.0, 0.0, 2.0])
    assert np.allclose(m.drift(xs), -np.tanh(xs), rtol=0, atol=1e-15)
    assert np.allclose(m.rate(xs), np.exp(0.5 * xs), rtol=0, atol=1e-15)
    assert m.kernel.sign_support == "negative"
    assert m.working_interval == (-60.0, 40.0)
    assert m.drift.zeros == (0.0,)
    assert m.name == "custom"
    assert m.params == {"mu": "-tanh(x)", "rate": "exp(0.5*x)"}


def test_expression_rate_bound_and_constant(tmp_path):
    cfg = load_config(write(tmp_path, EXPR.format(
        model_extra='rate_bound = "exp(0.5*hi)"\n')))
    assert cfg.model.rate.local_bound(0.0, 2.0) == pytest.approx(np.e)
    cfg2 = load_config(write(tmp_path, EXPR.format(
        model_extra="rate_constant = 2.0\n"), name="c.toml"))
    assert cfg2.model.rate.constant == 2.0
    assert cfg2.model.rate.local_bound(-5.0, 5.0) == 2.0


def test_expression_rejects_unknown_names():
    with pytest.raises(ConfigError, match="unknown name 'shutil'"):
        compile_expression("shutil.rmtree(x)", ("x",), "model.mu")
    with pytest.raises(ConfigError, match="unknown name '__import__'"):
        compile_expression("__import__('os')", ("x",), "model.mu")
    with pytest.raises(ConfigError, match="cannot parse"):
        compile_expression("1.0 +", ("x",), "model.mu")
    with pytest.raises(ConfigError, match="failed to evaluate"):
        compile_expression("x[10]", ("x",), "model.mu")


def test_expression_vectorizes_and_broadcasts():
    fn = compile_expression("2*x + 1", ("x",), "t")
    assert np.array_equal(fn(np.array([0.0, 1.0, 2.0])), [1.0, 3.0, 5.0])
    const = compile_expression("3.5", ("x",), "t")
    assert np.array_equal(const(np.zeros(4)), np.full(4, 3.5))


@pytest.mark.parametrize(
    "mutate, field",
    [
        (lambda d: d.replace('[model]\ncatalog = "linear_shot_noise"', "[model]"),
         "model.mu"),
        (lambda d: d.replace("x0 = 0.5\n", ""), "run.x0"),
        (lambda d: d.replace('kind = "event_count"\nn = 100', 'kind = "event_count"'),
         "run.stop.n"),
        (lambda d: d.replace('kind = "event_count"\nn = 100',
                             'kind = "cycle_count"\nn = 5'), "run.stop.level"),
    ],
)
def test_missing_fields_name_the_dotted_path(tmp_path, mutate, field):
    doc = mutate(BASE.format(run_extra="", stop='kind = "event_count"\nn = 100'))
    with pytest.raises(ConfigError, match=rf"missing required field '{field}'"):
        load_config(write(tmp_path, doc))


def test_missing_stop_block(tmp_path):
    doc = """
[model]
catalog = "linear_shot_noise"
[model.params]
c = 1.0
lam0 = 1.0
alpha = 2.0

[run]
x0 = 0.5
"""
    with pytest.raises(ConfigError, match="missing required field 'run.stop'"):
        load_config(write(tmp_path, doc))


def test_type_errors_name_the_field(tmp_path):
    p = lsn_config(tmp_path, run_extra='seed = "abc"\n')
    with pytest.raises(ConfigError, match="'run.seed' must be int, got str"):
        load_config(p)
    p = lsn_config(tmp_path, run_extra="seed = true\n")
    with pytest.raises(ConfigError, match="'run.seed' must be int, got bool"):
        load_config(p)
    p = lsn_config(tmp_path, extra='[analysis]\nlevels = ["a"]\n')
    with pytest.raises(ConfigError, match="'analysis.levels' must be an array of numbers"):
        load_config(p)


def test_all_stop_rules(tmp_path):
    cases = {
        'kind = "horizon"\nt = 50.0': Horizon(t=50.0),
        'kind = "event_count"\nn = 10': EventCount(n=10),
        'kind = "cycle_count"\nn = 10\nlevel = 0.5': CycleCount(n=10, level=0.5),
        'kind = "first_passage"\nlevel = 2.0': FirstPassage(level=2.0),
    }
    for stop_text, want in cases.items():
        assert load_config(lsn_config(tmp_path, stop=stop_text)).stop == want
    with pytest.raises(ConfigError, match="unknown stop rule 'until_bored'"):
        load_config(lsn_config(tmp_path, stop='kind = "until_bored"'))


def test_unknown_catalog_lists_choices(tmp_path):
    doc = '[model]\ncatalog = "nope"\n\n[run]\nx0 = 0.0\n[run.stop]\nkind = "horizon"\nt = 1.0\n'
    with pytest.raises(ConfigError, match="unknown model 'nope'.*linear_shot_noise"):
        load_config(write(tmp_path, doc))


def test_bad_catalog_params(tmp_path):
    doc = BASE.format(run_extra="", stop='kind = "event_count"\nn = 2').replace(
        "alpha = 2.0", "alpha = 2.0\nbogus = 1.0")
    with pytest.raises(ConfigError, match="model.params for catalog 'linear_shot_noise'"):
        load_config(write(tmp_path, doc))


def test_unknown_jump_family(tmp_path):
    doc = EXPR.format(model_extra="").replace('family = "exp"', 'family = "cauchy"')
    with pytest.raises(ConfigError, match="unknown jump family 'cauchy'"):
        load_config(write(tmp_path, doc))


def test_bad_interval_and_method(tmp_path):
    doc = EXPR.format(model_extra="").replace("interval = [-60.0, 40.0]",
                                              "interval = [-60.0]")
    with pytest.raises(ConfigError, match="two-element array"):
        load_config(write(tmp_path, doc))
    p = lsn_config(tmp_path, run_extra='method = "leapfrog"\n')
    with pytest.raises(ConfigError, match="run.method: unknown method 'leapfrog'"):
        load_config(p)


def test_schema_gate(tmp_path):
    doc = "schema = 2\n" + BASE.format(run_extra="", stop='kind = "event_count"\nn = 2')
    with pytest.raises(ConfigError, match="schema 2 unsupported"):
        load_config(write(tmp_path, doc))


def test_unreadable_and_invalid_toml(tmp_path):
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config(tmp_path / "absent.toml")
    with pytest.raises(ConfigError, match="not valid TOML"):
        load_config(write(tmp_path, "= nope"))
