"""Run configuration: flat ``section.key = value`` files.

Unknown keys are rejected, and every violation is reported with its line
number rather than stopping at the first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .driver import IterationConfig
from .errors import InvalidProfile, ParseError, ValidationError
from .gas import GasParams, background
from .inlet import InletProfile, build_profiles, profiles_from_tables, read_table

_FLOAT, _INT, _STR, _LIST = "float", "int", "str", "list"

SCHEMA = {
    "gas.gamma": _FLOAT, "gas.rho_plus": _FLOAT, "gas.rho_minus": _FLOAT,
    "gas.p0": _FLOAT, "gas.u0": _FLOAT,
    "inlet.a_S": _FLOAT, "inlet.a_v": _FLOAT, "inlet.epsilon": _FLOAT,
    "inlet.alpha": _FLOAT, "inlet.s_table": _STR, "inlet.v_table": _STR,
    "domain.L": _FLOAT, "domain.L_list": _LIST, "domain.nx": _INT, "domain.ny": _INT,
    "iteration.tol_inner": _FLOAT, "iteration.tol_middle": _FLOAT,
    "iteration.tol_outer": _FLOAT, "iteration.max_inner": _INT,
    "iteration.max_middle": _INT, "iteration.max_outer": _INT, "iteration.theta": _FLOAT,
    "output.directory": _STR, "output.artifacts": _STR,
}

REQUIRED = ("gas.gamma", "gas.rho_plus", "gas.rho_minus", "gas.p0", "gas.u0")

DEFAULTS = {
    "inlet.a_S": 0.0, "inlet.a_v": 0.0, "inlet.epsilon": 0.05, "inlet.alpha": 0.5,
    "domain.L": 20.0, "domain.nx": 256, "domain.ny": 64,
    "iteration.tol_inner": 1e-8, "iteration.tol_middle": 1e-8, "iteration.tol_outer": 1e-8,
    "iteration.max_inner": 50, "iteration.max_middle": 50, "iteration.max_outer": 30,
    "iteration.theta": 1.0,
    "output.artifacts": "solution,boundary,report",
}


@dataclass
class RunConfig:
    values: dict
    lines: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    @property
    def params(self) -> GasParams:
        v = self.values
        return GasParams(v["gas.gamma"], v["gas.rho_plus"], v["gas.rho_minus"],
                         v["gas.p0"], v["gas.u0"])

    @property
    def iteration(self) -> IterationConfig:
        v = self.values
        return IterationConfig(v["iteration.tol_inner"], v["iteration.tol_middle"],
                               v["iteration.tol_outer"], v["iteration.max_inner"],
                               v["iteration.max_middle"], v["iteration.max_outer"],
                               v["iteration.theta"])

    @property
    def L_list(self) -> Optional[list]:
        return self.values.get("domain.L_list")

    def profile(self) -> InletProfile:
        v = self.values
        S0 = background(self.params).S0_plus
        eps, alpha = v["inlet.epsilon"], v["inlet.alpha"]
        if "inlet.s_table" in v or "inlet.v_table" in v:
            s_tab = (read_table(self.base_dir / v["inlet.s_table"]) if "inlet.s_table" in v
                     else ((0.0, 1.0), (S0, S0)))
            v_tab = read_table(self.base_dir / v["inlet.v_table"]) if "inlet.v_table" in v else None
            return profiles_from_tables(S0, s_tab, v_tab, eps, alpha)
        return build_profiles(S0, v["inlet.a_S"], v["inlet.a_v"], eps, alpha)

    def echo(self) -> list[tuple[str, str]]:
        """Effective settings in schema order, for output headers."""
        out = []
        for key in SCHEMA:
            if key in self.values:
                val = self.values[key]
                if isinstance(val, list):
                    val = ",".join(repr(x) for x in val)
                elif isinstance(val, float):
                    val = repr(val)
                elif key.endswith("_table"):
                    val = str((self.base_dir / val).resolve())
                out.append((key, str(val)))
        return out


def _convert(kind: str, text: str):
    if kind == _FLOAT:
        return float(text)
    if kind == _INT:
        return int(text)
    if kind == _LIST:
        items = [float(t) for t in text.split(",") if t.strip()]
        if not items:
            raise ValueError("empty list")
        return items
    return text


def parse_text(text: str, base_dir: Path = Path(".")) -> RunConfig:
    values, lines, problems = {}, {}, []
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {n}: expected 'section.key = value'")
        key, _, val = (s.strip() for s in line.partition("="))
        if "." not in key or not val:
            raise ParseError(f"line {n}: expected 'section.key = value'")
        if key in lines:
            raise ParseError(f"line {n}: duplicate key {key} (first on line {lines[key]})")
        lines[key] = n
        if key not in SCHEMA:
            problems.append(f"line {n}: unknown key {key}")
            continue
        try:
            values[key] = _convert(SCHEMA[key], val)
        except ValueError:
            problems.append(f"line {n}: {key} expects {SCHEMA[key]}, got {val!r}")
    for key in REQUIRED:
        if key not in lines:
            problems.append(f"missing required key {key}")
    for key, val in DEFAULTS.items():
        values.setdefault(key, val)
    cfg = RunConfig(values, lines, base_dir)
    problems.extend(_validate(cfg))
    if problems:
        raise ValidationError(problems)
    return cfg


def _where(cfg: RunConfig, key: str) -> str:
    return f"line {cfg.lines[key]}: " if key in cfg.lines else ""


def _validate(cfg: RunConfig) -> list[str]:
    v, out = cfg.values, []
    gas = [k for k in REQUIRED if k in v]
    if len(gas) == len(REQUIRED):
        probe = object.__new__(GasParams)
        for k in gas:
            object.__setattr__(probe, k.split(".")[1], v[k])
        for msg in probe.violations():
            key = "gas." + msg.split()[0] if msg.split()[0] != "background" else "gas.u0"
            out.append(f"{_where(cfg, key)}{msg}")
    if not 0 < v["inlet.epsilon"] < 0.1:
        out.append(f"{_where(cfg, 'inlet.epsilon')}epsilon must lie in (0, 1/10)")
    if not 0 < v["inlet.alpha"] < 1:
        out.append(f"{_where(cfg, 'inlet.alpha')}alpha must lie in (0, 1)")
    if not v["domain.L"] > 0:
        out.append(f"{_where(cfg, 'domain.L')}L must be > 0")
    for key in ("domain.nx", "domain.ny"):
        if v[key] < 8:
            out.append(f"{_where(cfg, key)}{key.split('.')[1]} must be >= 8")
    if "domain.L_list" in v:
        Ls = v["domain.L_list"]
        if any(not L > 0 for L in Ls) or sorted(Ls) != Ls or len(set(Ls)) != len(Ls):
            out.append(f"{_where(cfg, 'domain.L_list')}L_list must be positive and strictly increasing")
    it = object.__new__(IterationConfig)
    for name in ("tol_inner", "tol_middle", "tol_outer", "max_inner", "max_middle",
                 "max_outer", "theta"):
        object.__setattr__(it, name, v["iteration." + name])
    for msg in it.violations():
        out.append(f"{_where(cfg, 'iteration.' + msg.split()[0])}{msg}")
    if not out and len(gas) == len(REQUIRED):
        try:
            cfg.profile()
        except (InvalidProfile, OSError) as exc:
            key = next((k for k in ("inlet.s_table", "inlet.v_table", "inlet.a_S") if k in cfg.lines),
                       "inlet.a_S")
            out.append(f"{_where(cfg, key)}{exc}")
    return out


def parse_config(path) -> RunConfig:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_text(text, path.parent)
