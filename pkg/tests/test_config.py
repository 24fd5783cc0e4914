import pytest

from overcrane.config import (
    BUNDLED,
    RunConfig,
    StabilitySettings,
    bundled_text,
    load_config,
    parse_config,
    serialize_config,
)
from overcrane.errors import ConfigError
from overcrane.simulate import reference_scenario
from overcrane.synthesis import REF_POLES6

MINIMAL = """\
[scenario]
model = constant4
start = 0, 0, 0, 0
target = 10, 0, 0, 0

[poles]
values = -0.2, -0.25, -0.3, -0.35
"""


def test_bundled_configs_match_scenarios():
    cfg = load_config("bundled:varying")
    sc = cfg.scenario
    ref = reference_scenario("varying6")
    assert (sc.model, sc.start, sc.target, sc.params) == (ref.model, ref.start, ref.target, ref.params)
    assert sorted(sc.poles) == sorted(REF_POLES6)
    assert sc.assignment.pairs() == ((-0.3, -0.35), (-0.15, -0.2), (-0.1, -0.25))
    assert cfg.stability == StabilitySettings()
    sc4 = load_config("bundled:constant").scenario
    assert sc4 == reference_scenario("constant4")


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert isinstance(cfg, RunConfig)
    assert cfg.scenario == reference_scenario("constant4")
    assert cfg.stability.dynamics == "nonlinear"


@pytest.mark.parametrize("name", sorted(BUNDLED))
def test_round_trip(name):
    cfg = parse_config(bundled_text(name))
    again = parse_config(serialize_config(cfg))
    assert again == cfg
    assert serialize_config(again) == serialize_config(cfg)


def test_round_trip_adaptive_linear():
    text = MINIMAL + "\n[integration]\nmethod = adaptive\nrtol = 1e-9\n\n[stability]\ndynamics = linear\nseed = 5\n"
    cfg = parse_config(text)
    assert cfg.scenario.adaptive and cfg.scenario.rtol == 1e-9
    assert cfg.stability.dynamics == "linear" and cfg.stability.seed == 5
    assert parse_config(serialize_config(cfg)) == cfg


def _error(text):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    return info.value


def test_unknown_key_reports_line():
    err = _error(MINIMAL + "\n[stability]\nbogus = 1\n")
    assert err.lineno == 10
    assert "bogus" in str(err) and str(err).startswith("line 10:")


def test_unknown_section_reports_line():
    err = _error("[extra]\nx = 1\n" + MINIMAL)
    assert err.lineno == 1 and "extra" in str(err)


def test_positive_pole_named():
    err = _error(MINIMAL.replace("-0.35", "0.35"))
    assert "0.35" in str(err) and err.lineno == 7


@pytest.mark.parametrize(
    "text, fragment",
    [
        (MINIMAL.replace("start = 0, 0, 0, 0", "start = 0, x, 0, 0"), "start"),
        (MINIMAL.replace("start = 0, 0, 0, 0", "start = 0, 0, 0"), "4-component"),
        (MINIMAL.replace("model = constant4", "model = triple"), "model"),
        (MINIMAL + "\n[integration]\nmethod = euler\n", "method"),
        (MINIMAL + "\n[integration]\nstep = fast\n", "step"),
        (MINIMAL + "\n[stability]\nsamples = 10\n", "samples"),
        (MINIMAL + "\n[stability]\ndynamics = quadratic\n", "dynamics"),
        (MINIMAL + "\n[params]\npayload_mass = -1\n", "params"),
        (MINIMAL + "\nz = -0.2, -0.25\n", "varying6"),
        ("start = 1\n" + MINIMAL, "section"),
        ("[scenario]\nmodel = constant4\n", "missing"),
        (MINIMAL + "[poles]\n", "line"),
        ("[scenario\n", "line"),
    ],
)
def test_errors(text, fragment):
    err = _error(text)
    assert fragment in str(err)


def test_errors_carry_line_numbers_when_located():
    for text in (
        MINIMAL.replace("start = 0, 0, 0, 0", "start = 0, x, 0, 0"),
        MINIMAL + "\n[integration]\nmethod = euler\n",
        MINIMAL + "\n[stability]\nsamples = 10\n",
    ):
        assert _error(text).lineno is not None


def test_varying_pairs_must_be_complete():
    text = bundled_text("varying").replace("theta = -0.1, -0.25\n", "")
    assert "theta" in str(_error(text))


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.ini")
    with pytest.raises(ConfigError, match="no bundled config"):
        load_config("bundled:other")


def test_load_from_file(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text(MINIMAL, encoding="utf-8")
    assert load_config(path).scenario == reference_scenario("constant4")
