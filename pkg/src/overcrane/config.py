"""Scenario configuration files.

An INI document with the sections ``[params]``, ``[scenario]``, ``[poles]``,
``[integration]`` and ``[stability]``. Vectors are comma separated::

    [scenario]
    model = varying6
    start = 0, 3, 0, 0, -0.5, 0

Unknown sections or keys are errors. Every error carries the line number
of the offending entry when one exists.
"""

import configparser
import re
from dataclasses import dataclass, fields
from importlib import resources

from .errors import ConfigError
from .model import CraneParams
from .simulate import Scenario
from .synthesis import ChannelAssignment


@dataclass(frozen=True)
class StabilitySettings:
    q_scale: float = 1.0
    r_max: float = 1.0
    samples: int = 1000
    seed: int = 0
    dynamics: str = "nonlinear"


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario
    stability: StabilitySettings = StabilitySettings()


_PARAM_KEYS = {f.name for f in fields(CraneParams)}
_SCHEMA = {
    "params": _PARAM_KEYS,
    "scenario": {"model", "start", "target", "settle_fraction"},
    "poles": {"values", "z", "l", "theta"},
    "integration": {"horizon", "step", "method", "rtol", "atol"},
    "stability": {"q_scale", "r_max", "samples", "seed", "dynamics"},
}
_REQUIRED = {"scenario": {"model", "start", "target"}, "poles": {"values"}}

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#\s][^=:]*?)\s*[=:]")


def _line_index(text):
    """Map ``(section, key)`` and ``(section, None)`` to 1-based line numbers."""
    index = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.lstrip().startswith("#"):
            continue
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            index.setdefault((section, None), lineno)
            continue
        m = _KEY_RE.match(line)
        if m and section is not None and not line[:1].isspace():
            index.setdefault((section, m.group(1).strip().lower()), lineno)
    return index


class _Reader:
    def __init__(self, parser, index):
        self.parser = parser
        self.index = index

    def error(self, section, key, message):
        lineno = self.index.get((section, key), self.index.get((section, None)))
        return ConfigError(f"[{section}] {key}: {message}" if key else f"[{section}] {message}", lineno)

    def raw(self, section, key, default=None):
        if self.parser.has_option(section, key):
            return self.parser.get(section, key).strip()
        return default

    def number(self, section, key, default=None, kind=float):
        raw = self.raw(section, key)
        if raw is None:
            if default is None:
                raise self.error(section, key, "missing required value")
            return default
        try:
            return kind(raw)
        except ValueError:
            raise self.error(section, key, f"not a valid {kind.__name__}: {raw!r}") from None

    def vector(self, section, key, required=True):
        raw = self.raw(section, key)
        if raw is None:
            if required:
                raise self.error(section, key, "missing required value")
            return None
        try:
            return tuple(float(v) for v in raw.split(",") if v.strip())
        except ValueError:
            raise self.error(section, key, f"not a list of numbers: {raw!r}") from None


def parse_config(text):
    """Parse configuration text into a :class:`RunConfig`."""
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#",), comment_prefixes=("#",), default_section="__none__"
    )
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("entry before any [section] header", exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError(f"syntax error: {exc.errors[0][1].strip() if exc.errors else exc}", lineno) from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ConfigError(exc.message.split(": ", 1)[-1], exc.lineno) from None

    index = _line_index(text)
    rd = _Reader(parser, index)
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", index.get((section, None)))
        for key in parser.options(section):
            if key not in _SCHEMA[section]:
                raise rd.error(section, key, "unknown key")
    for section, keys in _REQUIRED.items():
        if not parser.has_section(section):
            raise ConfigError(f"missing section [{section}]")
        for key in keys:
            if not parser.has_option(section, key):
                raise rd.error(section, None, f"missing key {key!r}")

    param_values = {}
    for key in sorted(_PARAM_KEYS):
        if parser.has_option("params", key):
            param_values[key] = rd.number("params", key)
    try:
        params = CraneParams(**param_values)
    except ValueError as exc:
        raise rd.error("params", None, str(exc)) from None

    model = rd.raw("scenario", "model")
    poles = rd.vector("poles", "values")
    for v in poles:
        if not v < 0:
            raise rd.error("poles", "values", f"pole {v:g} is not strictly negative")
    pairs = {ch: rd.vector("poles", ch, required=False) for ch in ("z", "l", "theta")}
    assignment = None
    if any(v is not None for v in pairs.values()):
        if model != "varying6":
            raise rd.error("poles", next(k for k, v in pairs.items() if v is not None),
                           "channel pairs only apply to model varying6")
        for ch, pair in pairs.items():
            if pair is None or len(pair) != 2:
                raise rd.error("poles", ch, "each of z, l, theta needs exactly two poles")
        assignment = ChannelAssignment(pairs["z"], pairs["l"], pairs["theta"])

    method = rd.raw("integration", "method", "rk4")
    if method not in ("rk4", "adaptive"):
        raise rd.error("integration", "method", f"expected rk4 or adaptive, got {method!r}")

    try:
        scenario = Scenario(
            model=model,
            params=params,
            start=rd.vector("scenario", "start"),
            target=rd.vector("scenario", "target"),
            poles=poles,
            assignment=assignment,
            horizon=rd.number("integration", "horizon", 100.0),
            step=rd.number("integration", "step", 0.01),
            adaptive=method == "adaptive",
            rtol=rd.number("integration", "rtol", 1e-8),
            atol=rd.number("integration", "atol", 1e-8),
            settle_fraction=rd.number("scenario", "settle_fraction", 0.02),
        )
    except ValueError as exc:
        raise rd.error("scenario", None, str(exc)) from None

    dynamics = rd.raw("stability", "dynamics", "nonlinear")
    if dynamics not in ("nonlinear", "linear"):
        raise rd.error("stability", "dynamics", f"expected nonlinear or linear, got {dynamics!r}")
    stability = StabilitySettings(
        q_scale=rd.number("stability", "q_scale", 1.0),
        r_max=rd.number("stability", "r_max", 1.0),
        samples=rd.number("stability", "samples", 1000, int),
        seed=rd.number("stability", "seed", 0, int),
        dynamics=dynamics,
    )
    if stability.q_scale <= 0 or stability.r_max <= 0:
        raise rd.error("stability", None, "q_scale and r_max must be positive")
    if stability.samples < 1000:
        raise rd.error("stability", "samples", "need at least 1000 samples")
    return RunConfig(scenario, stability)


def load_config(path):
    """Read a config file; ``bundled:<name>`` selects a shipped configuration."""
    path = str(path)
    if path.startswith("bundled:"):
        return parse_config(bundled_text(path.split(":", 1)[1]))
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


BUNDLED = {"varying": "reference_varying.ini", "constant": "reference_constant.ini"}


def bundled_text(name):
    if name not in BUNDLED:
        raise ConfigError(f"no bundled config {name!r}; choose from {sorted(BUNDLED)}")
    return resources.files("overcrane").joinpath("data").joinpath(BUNDLED[name]).read_text(encoding="utf-8")


def _fmt(v):
    return repr(float(v))


def _vec(values):
    return ", ".join(_fmt(v) for v in values)


def serialize_config(cfg):
    """Render a :class:`RunConfig` as text that :func:`parse_config` reads back."""
    sc, st = cfg.scenario, cfg.stability
    lines = ["[params]"]
    lines += [f"{f.name} = {_fmt(getattr(sc.params, f.name))}" for f in fields(CraneParams)]
    lines += [
        "",
        "[scenario]",
        f"model = {sc.model}",
        f"start = {_vec(sc.start)}",
        f"target = {_vec(sc.target)}",
        f"settle_fraction = {_fmt(sc.settle_fraction)}",
        "",
        "[poles]",
        f"values = {_vec(sc.poles)}",
    ]
    if sc.assignment is not None:
        lines += [f"z = {_vec(sc.assignment.z)}", f"l = {_vec(sc.assignment.l)}", f"theta = {_vec(sc.assignment.theta)}"]
    lines += [
        "",
        "[integration]",
        f"horizon = {_fmt(sc.horizon)}",
        f"step = {_fmt(sc.step)}",
        f"method = {'adaptive' if sc.adaptive else 'rk4'}",
        f"rtol = {_fmt(sc.rtol)}",
        f"atol = {_fmt(sc.atol)}",
        "",
        "[stability]",
        f"q_scale = {_fmt(st.q_scale)}",
        f"r_max = {_fmt(st.r_max)}",
        f"samples = {st.samples}",
        f"seed = {st.seed}",
        f"dynamics = {st.dynamics}",
        "",
    ]
    return "\n".join(lines)
