"""Reading model configurations from INI-style text files.

A file holds one base model and, optionally, named cases that override
individual factor parameters::

    [market]
    rate = 0.0
    price = 100            ; flat curve, or
    curve = 0.5:100, 1.0:101

    [factor.1]
    lambda = 2.0
    kappa = 0.8
    sigma = 1.2
    rho = -0.25
    v0 = 0.10
    pattern = sinusoid
    a = 0.25
    b = 0.15
    t0 = 0.5833333333333333

    [mc]
    paths = 1000000
    steps_per_year = 400
    seed = 2024
    antithetic = true

    [cases.case2]
    factor.1.b = 0.15
"""

from __future__ import annotations

import configparser
import warnings
from dataclasses import dataclass, field

from .model import FellerWarning, ModelConfig, VolFactor
from .montecarlo import McSettings
from .seasonality import SeasonalitySpec

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config"]

_FACTOR_KEYS = {"lambda": "lam", "kappa": "kappa", "sigma": "sigma", "rho": "rho", "v0": "v0"}
_SEASON_KEYS = {"pattern", "a", "b", "t0", "strict"}


class ConfigError(ValueError):
    """The configuration file is malformed or describes an invalid model."""


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig
    cases: dict = field(default_factory=dict)  # name -> ModelConfig, in file order
    mc: McSettings = McSettings()


def _number(section, key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected a number, got {raw!r}") from None


def _boolean(section, key, raw):
    value = raw.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"[{section}] {key}: expected true/false, got {raw!r}")


def _factor_fields(section, items):
    params, season = {}, {}
    for key, raw in items:
        if key in _FACTOR_KEYS:
            params[_FACTOR_KEYS[key]] = _number(section, key, raw)
        elif key == "pattern":
            season["pattern"] = raw.strip()
        elif key == "strict":
            season["strict"] = _boolean(section, key, raw)
        elif key in _SEASON_KEYS:
            season[key] = _number(section, key, raw)
        else:
            raise ConfigError(f"[{section}] {key}: unknown factor parameter")
    return params, season


def _build_factor(section, params, season):
    missing = [k for k, v in _FACTOR_KEYS.items() if v not in params]
    if missing:
        raise ConfigError(f"[{section}] {missing[0]}: missing")
    if "pattern" not in season or "a" not in season:
        raise ConfigError(f"[{section}] {'pattern' if 'pattern' not in season else 'a'}: missing")
    try:
        spec = SeasonalitySpec(**season)
        return VolFactor(seasonality=spec, **params)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def _curve(parser):
    if not parser.has_section("market"):
        return 0.0, ((1.0, 100.0),)
    sec = parser["market"]
    rate = _number("market", "rate", sec.get("rate", "0"))
    if "curve" in sec:
        points = []
        for item in sec["curve"].split(","):
            try:
                mat, price = item.split(":")
            except ValueError:
                raise ConfigError(f"[market] curve: expected 'maturity:price' pairs, got {item.strip()!r}") from None
            points.append((_number("market", "curve", mat), _number("market", "curve", price)))
        return rate, tuple(points)
    return rate, ((1.0, _number("market", "price", sec.get("price", "100"))),)


def _mc(parser, seed=None, threads=None):
    sec = parser["mc"] if parser.has_section("mc") else {}
    kw = {}
    for key in ("paths", "steps_per_year", "seed", "threads"):
        if key in sec:
            try:
                kw[key] = int(sec[key])
            except ValueError:
                raise ConfigError(f"[mc] {key}: expected an integer, got {sec[key]!r}") from None
    if "antithetic" in sec:
        kw["antithetic"] = _boolean("mc", "antithetic", sec["antithetic"])
    if seed is not None:
        kw["seed"] = seed
    if threads is not None:
        kw["threads"] = threads
    try:
        return McSettings(**kw)
    except ValueError as exc:
        raise ConfigError(f"[mc] {exc}") from None


def parse_config(text: str, seed=None, threads=None) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from None
    factor_sections = sorted(
        (s for s in parser.sections() if s.startswith("factor.")),
        key=lambda s: int(s.split(".", 1)[1]) if s.split(".", 1)[1].isdigit() else -1,
    )
    if not factor_sections:
        raise ConfigError("[factor.1]: at least one factor section is required")
    for expected, name in enumerate(factor_sections, start=1):
        if name != f"factor.{expected}":
            raise ConfigError(f"[{name}]: factor sections must be numbered 1, 2, ... without gaps")
    base = [_factor_fields(s, parser.items(s)) for s in factor_sections]
    rate, curve = _curve(parser)

    def model(fields):
        factors = [_build_factor(s, p, q) for s, (p, q) in zip(factor_sections, fields)]
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", FellerWarning)
                return ModelConfig(tuple(factors), rate, curve)
        except ValueError as exc:
            raise ConfigError(f"[market] {exc}") from None

    cases = {}
    for section in parser.sections():
        if not section.startswith("cases."):
            continue
        name = section.split(".", 1)[1]
        fields = [(dict(p), dict(q)) for p, q in base]
        for key, raw in parser.items(section):
            parts = key.split(".")
            if len(parts) != 3 or parts[0] != "factor" or not parts[1].isdigit():
                raise ConfigError(f"[{section}] {key}: expected 'factor.N.parameter'")
            idx = int(parts[1]) - 1
            if not 0 <= idx < len(fields):
                raise ConfigError(f"[{section}] {key}: no factor {parts[1]}")
            p, q = _factor_fields(section, [(parts[2], raw)])
            fields[idx][0].update(p)
            fields[idx][1].update(q)
        cases[name] = model(fields)
    return RunConfig(model(base), cases, _mc(parser, seed, threads))


def load_config(path, seed=None, threads=None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, seed, threads)

