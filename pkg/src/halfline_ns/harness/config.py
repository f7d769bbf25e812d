"""Scenario documents: INI-style sections [gas] [shock] [grid] [time] [perturbation] [output]."""
from __future__ import annotations

import configparser
import copy
from dataclasses import dataclass, asdict

from ..gas_model import GasLaw
from ..halfline_solver import Perturbation, Problem, SolverConfig, make_problem
from ..shift_weight import ShiftForm
from ..shock_profile import IMPERMEABLE, INFLOW, EndStates, shock_curve_inflow, solve_left_state_impermeable


class ConfigError(ValueError):
    """Schema violation; the message names the offending key path."""


class ValidationError(ValueError):
    """The document parses but describes a physically invalid scenario."""


# section -> key -> (type, default); None default means "required" or "derived"
SCHEMA = {
    "gas": {"gamma": (float, 2.0)},
    "shock": {
        "kind": (str, IMPERMEABLE),
        "v_plus": (float, 1.0),
        "u_plus": (float, None),
        "v_minus": (float, None),
        "u_minus": (float, None),
        "beta_factor": (float, 60.0),
        "beta": (float, None),
        "shift_form": (str, ShiftForm.VELOCITY.value),
    },
    "grid": {
        "dx": (float, 0.05),
        "length": (float, None),
        "tail_factor": (float, 80.0),
    },
    "time": {
        "cfl": (float, 0.4),
        "t_end": (float, 200.0),
        "output_stride": (int, 2000),
        "t_floor": (float, 1.0),
        "transient": (float, 20.0),
    },
    "perturbation": {
        "amplitude": (float, 0.01),
        "center_offset": (float, 0.0),
        "half_width": (float, 5.0),
        "v_weight": (float, 1.0),
        "u_weight": (float, 1.0),
        "seed": (int, None),
    },
    "output": {
        "dir": (str, "runs"),
        "state_every": (int, 50),
        "b_constant": (float, 1.0),
        "p_stride": (int, 20),
    },
}

OUTPUT_ENV = "HALFLINE_NS_OUT"


def _bool_free_cast(typ, raw, path):
    try:
        if typ is int:
            f = float(raw)
            if f != int(f):
                raise ValueError
            return int(f)
        return typ(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: cannot read {raw!r} as {typ.__name__}") from None


@dataclass(frozen=True)
class Scenario:
    name: str
    gamma: float
    kind: str
    v_plus: float
    u_plus: float | None
    v_minus: float | None
    u_minus: float | None
    beta_factor: float
    beta: float | None
    shift_form: str
    dx: float
    length: float | None
    tail_factor: float
    cfl: float
    t_end: float
    output_stride: int
    t_floor: float
    transient: float
    amplitude: float
    center_offset: float
    half_width: float
    v_weight: float
    u_weight: float
    seed: int | None
    out_dir: str
    state_every: int
    b_constant: float
    p_stride: int

    # -- derived objects --------------------------------------------------
    def end_states(self) -> EndStates:
        law = GasLaw(self.gamma)
        if self.kind == IMPERMEABLE:
            return solve_left_state_impermeable(self.v_plus, self.u_plus, law)
        return shock_curve_inflow(self.v_minus, self.u_minus, self.v_plus, law)

    def resolved_beta(self, end: EndStates | None = None) -> float:
        if self.beta is not None:
            return self.beta
        end = end or self.end_states()
        return self.beta_factor / end.delta

    def problem(self) -> Problem:
        end = self.end_states()
        beta = self.resolved_beta(end)
        length = self.length
        if length is None:
            length = beta + end.front_speed * self.t_end + self.tail_factor / end.delta
        return make_problem(end, beta, self.dx, self.t_end, length)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(self.cfl, self.t_end, self.output_stride)

    def perturbation(self) -> Perturbation:
        if self.seed is not None:
            return Perturbation.randomized(self.amplitude, self.seed, self.half_width)
        return Perturbation(self.amplitude, self.center_offset, self.half_width, self.v_weight, self.u_weight)

    def form(self) -> ShiftForm:
        return ShiftForm(self.shift_form)

    def to_sections(self) -> dict:
        d = asdict(self)
        out = {"name": self.name}
        for sec, keys in SCHEMA.items():
            out[sec] = {}
            for k in keys:
                attr = "out_dir" if k == "dir" else k
                out[sec][k] = d[attr]
        return out


def _validate(sc: Scenario) -> Scenario:
    if not sc.gamma > 1:
        raise ValidationError("gas.gamma: adiabatic exponent must exceed 1")
    if sc.kind not in (IMPERMEABLE, INFLOW):
        raise ValidationError(f"shock.kind: expected '{IMPERMEABLE}' or '{INFLOW}'")
    if sc.kind == IMPERMEABLE:
        if sc.u_plus is None:
            raise ValidationError("shock.u_plus is required for the impermeable problem")
        if sc.v_minus is not None or sc.u_minus is not None:
            raise ValidationError("shock.v_minus/u_minus are determined by the wall closure; remove them")
        if not sc.u_plus < 0:
            raise ValidationError("shock.u_plus: entropy condition u_minus = 0 > u_plus requires u_plus < 0")
    else:
        if sc.v_minus is None or sc.u_minus is None:
            raise ValidationError("shock.v_minus and shock.u_minus are required for the inflow problem")
        if sc.u_plus is not None:
            raise ValidationError("shock.u_plus is determined by the shock curve for inflow; remove it")
        if not sc.v_plus > sc.v_minus:
            raise ValidationError("shock.v_plus: entropy condition requires v_plus > v_minus")
        if not sc.u_minus > 0:
            raise ValidationError("shock.u_minus: inflow requires u_minus > 0")
    if sc.shift_form not in {f.value for f in ShiftForm}:
        raise ValidationError(f"shock.shift_form: unknown form {sc.shift_form!r}")
    for path, val in (("grid.dx", sc.dx), ("time.cfl", sc.cfl), ("perturbation.half_width", sc.half_width),
                      ("shock.beta_factor", sc.beta_factor), ("grid.tail_factor", sc.tail_factor)):
        if not val > 0:
            raise ValidationError(f"{path} must be positive")
    if sc.cfl > 1:
        raise ValidationError("time.cfl must not exceed 1")
    if sc.t_end < 0:
        raise ValidationError("time.t_end must be nonnegative")
    if sc.amplitude < 0:
        raise ValidationError("perturbation.amplitude must be nonnegative")
    if sc.output_stride < 1 or sc.state_every < 1 or sc.p_stride < 1:
        raise ValidationError("strides must be positive integers")
    try:
        sc.end_states()
    except ValueError as err:
        raise ValidationError(f"shock: {err}") from None
    return sc


def scenario_from_sections(sections: dict, name: str = "custom") -> Scenario:
    values = {}
    for sec, body in sections.items():
        if sec == "name":
            continue
        if sec not in SCHEMA:
            raise ConfigError(f"[{sec}]: unknown section")
        for key, raw in body.items():
            if key not in SCHEMA[sec]:
                raise ConfigError(f"{sec}.{key}: unknown key")
            typ = SCHEMA[sec][key][0]
            if raw is None or (isinstance(raw, str) and raw.strip().lower() in ("", "none")):
                values[(sec, key)] = None
            else:
                values[(sec, key)] = _bool_free_cast(typ, raw, f"{sec}.{key}")
    kw = {}
    for sec, keys in SCHEMA.items():
        for key, (_, default) in keys.items():
            attr = "out_dir" if key == "dir" else key
            kw[attr] = values.get((sec, key), default)
    return _validate(Scenario(name=sections.get("name", name), **kw))


def parse_config(text: str, name: str = "custom") -> Scenario:
    cp = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as err:
        raise ConfigError(f"malformed document: {err}") from None
    sections = {sec: dict(cp[sec]) for sec in cp.sections()}
    return scenario_from_sections(sections, name)


def apply_overrides(sections: dict, overrides: dict) -> dict:
    """Return a copy with 'section.key' -> value overrides applied."""
    out = copy.deepcopy(sections)
    for path, val in overrides.items():
        if "." not in path:
            raise ConfigError(f"{path}: override keys look like section.key")
        sec, key = path.split(".", 1)
        out.setdefault(sec, {})[key] = val
    return out


# pinned presets; v_plus of the inflow preset gives delta = 0.1 on the shock curve
PRESETS = {
    "impermeable-weak-shock": {
        "gas": {"gamma": 2.0},
        "shock": {"kind": IMPERMEABLE, "v_plus": 1.0, "u_plus": -0.1, "beta_factor": 60.0},
        "time": {"t_end": 200.0},
        "perturbation": {"amplitude": 0.01},
    },
    "inflow-weak-shock": {
        "gas": {"gamma": 2.0},
        "shock": {"kind": INFLOW, "v_minus": 1.0, "u_minus": 0.1, "v_plus": 1.0746073927700333,
                  "beta_factor": 60.0},
        "time": {"t_end": 200.0},
        "perturbation": {"amplitude": 0.01},
    },
    "traveling-wave-oracle": {
        "gas": {"gamma": 2.0},
        "shock": {"kind": IMPERMEABLE, "v_plus": 1.0, "u_plus": -0.1, "beta_factor": 60.0},
        "time": {"t_end": 50.0},
        "perturbation": {"amplitude": 0.0},
    },
    "impermeable-large-delta": {
        "gas": {"gamma": 2.0},
        "shock": {"kind": IMPERMEABLE, "v_plus": 1.0, "u_plus": -0.5, "beta_factor": 60.0},
        "time": {"t_end": 100.0},
        "perturbation": {"amplitude": 0.01},
    },
}

# max-norm budget of the traveling-wave oracle, in units of dx^2
TRAVELING_WAVE_BUDGET = 5.0


def preset_sections(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    sec = copy.deepcopy(PRESETS[name])
    sec["name"] = name
    sec.setdefault("output", {})["dir"] = f"runs/{name}"
    return sec


def load_preset(name: str) -> Scenario:
    return scenario_from_sections(preset_sections(name), name)
